"""Label propagation schemes and the adaptive attention propagator.

Covers plain power iteration, the personalized-PageRank recurrence, and the
learned propagator that mixes propagation depths per node through a small
attention mechanism, together with the exact gradient of that propagator
with respect to its parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import CsrMatrix, spmm

# Rows whose combined label mass falls below this are treated as unreachable.
MASS_TAU = 1e-8


@dataclass(frozen=True)
class PropagationTrace:
    """All intermediate label matrices of a K-step propagation.

    ``steps`` has shape (k_max + 1, n, c); steps[0] is the seed matrix and
    steps[k + 1] = T @ steps[k].
    """

    steps: np.ndarray
    k_max: int

    @property
    def n(self) -> int:
        return self.steps.shape[1]

    @property
    def n_classes(self) -> int:
        return self.steps.shape[2]


@dataclass
class PropagatorParams:
    """Attention vector (length c) and mixing weight matrix (c x c)."""

    attn: np.ndarray
    weight: np.ndarray

    def copy(self) -> "PropagatorParams":
        return PropagatorParams(self.attn.copy(), self.weight.copy())


@dataclass(frozen=True)
class PprConfig:
    alpha: float
    k_max: int

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


def init_propagator_params(c: int, rng: np.random.Generator) -> PropagatorParams:
    """Near-uniform initial attention; identity-plus-noise mixing weights."""
    attn = rng.uniform(-0.01, 0.01, size=c)
    weight = np.eye(c) + rng.uniform(-0.01, 0.01, size=(c, c))
    return PropagatorParams(attn, weight)


def seed_labels(labels: dict[int, int], split, n: int, c: int) -> np.ndarray:
    """One-hot rows for training-labeled nodes; all other rows zero.

    Validation and test labels never enter the seed matrix, so propagation
    cannot leak them.
    """
    y0 = np.zeros((n, c))
    for node in split.train:
        cls = labels[node]
        if not 0 <= cls < c:
            raise ValueError(f"node {node} has class {cls} outside [0, {c})")
        y0[node, cls] = 1.0
    return y0


def power_iterate(t: CsrMatrix, y0: np.ndarray, k_max: int) -> PropagationTrace:
    """Trace of steps[k] = T^k @ Y0 for k = 0..k_max."""
    if t.n_cols != y0.shape[0]:
        raise ValueError("transition matrix and seed labels disagree on n")
    steps = np.empty((k_max + 1,) + y0.shape)
    steps[0] = y0
    for k in range(k_max):
        steps[k + 1] = spmm(t, steps[k])
    return PropagationTrace(steps, k_max)


def ppr_iterate(t: CsrMatrix, y0: np.ndarray, cfg: PprConfig) -> np.ndarray:
    """K iterations of Y <- (1 - alpha) T Y + alpha Y0."""
    y = y0.copy()
    for _ in range(cfg.k_max):
        y = (1.0 - cfg.alpha) * spmm(t, y) + cfg.alpha * y0
    return y


def _attention_all(params: PropagatorParams, steps: np.ndarray) -> np.ndarray:
    """Per-node softmax attention over depths; shape (k_max + 1, n)."""
    pre = np.einsum("dc,knc->knd", params.weight, steps)
    scores = np.einsum("knd,d->kn", np.maximum(pre, 0.0), params.attn)
    scores -= scores.max(axis=0, keepdims=True)
    e = np.exp(scores)
    return e / e.sum(axis=0, keepdims=True)


def attention_weights(params: PropagatorParams, trace: PropagationTrace,
                      node: int) -> np.ndarray:
    """Depth-mixing weights for one node; positive and summing to 1."""
    return _attention_all(params, trace.steps[:, node:node + 1, :])[:, 0]


def adaptive_propagate(params: PropagatorParams, trace: PropagationTrace,
                       nodes) -> tuple[np.ndarray, np.ndarray]:
    """Attention-mixed soft labels for the requested nodes.

    Each row is the gamma-weighted combination of the node's rows across all
    propagation depths, renormalized to sum 1. Returns (rows, reachable);
    rows with pre-normalization mass below MASS_TAU are flagged unreachable
    (reachable[j] = False) and left as zeros — callers must exclude them.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    y = trace.steps[:, nodes, :]
    gam = _attention_all(params, y)
    raw = np.einsum("kn,knc->nc", gam, y)
    mass = raw.sum(axis=1)
    reachable = mass >= MASS_TAU
    out = np.zeros_like(raw)
    out[reachable] = raw[reachable] / mass[reachable, None]
    return out, reachable


def reachable_nodes(trace: PropagationTrace, tau: float = MASS_TAU) -> np.ndarray:
    """Nodes that receive any label mass within k_max steps."""
    total = trace.steps.sum(axis=(0, 2))
    return np.flatnonzero(total >= tau)


def propagator_grad(params: PropagatorParams, trace: PropagationTrace, nodes,
                    cotangent: np.ndarray) -> PropagatorParams:
    """Exact gradient of the propagator output contracted with a cotangent.

    ``cotangent`` holds dJ/dY_hat rows for the given nodes. The chain rule
    runs through the row renormalization, the softmax over depths, and the
    ReLU (subgradient 0 at the kink). Unreachable rows contribute nothing.
    Returns the gradient packed as a PropagatorParams.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    y = trace.steps[:, nodes, :]  # (K+1, B, c)
    pre = np.einsum("dc,kbc->kbd", params.weight, y)
    h = np.maximum(pre, 0.0)
    scores = np.einsum("kbd,d->kb", h, params.attn)
    scores -= scores.max(axis=0, keepdims=True)
    e = np.exp(scores)
    gam = e / e.sum(axis=0, keepdims=True)

    raw = np.einsum("kb,kbc->bc", gam, y)
    mass = raw.sum(axis=1)
    reachable = mass >= MASS_TAU
    safe_mass = np.where(reachable, mass, 1.0)
    out = raw / safe_mass[:, None]

    g = np.asarray(cotangent, dtype=np.float64)
    # d/d raw of g . (raw / sum(raw))
    d_raw = (g - (g * out).sum(axis=1, keepdims=True)) / safe_mass[:, None]
    d_raw[~reachable] = 0.0

    u = np.einsum("bc,kbc->kb", d_raw, y)  # dJ/d gamma
    ds = gam * (u - (gam * u).sum(axis=0, keepdims=True))  # softmax backward

    grad_attn = np.einsum("kb,kbd->d", ds, h)
    relu_mask = (pre > 0.0).astype(np.float64)
    a_masked = params.attn[None, None, :] * relu_mask  # dS/dW row factor
    grad_weight = np.einsum("kb,kbd,kbc->dc", ds, a_masked, y)
    return PropagatorParams(grad_attn, grad_weight)
