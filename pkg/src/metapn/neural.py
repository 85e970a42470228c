"""The feature-label transformer: a small MLP with manual backprop and Adam.

No autodiff framework; gradients are hand-derived and verified against
central finite differences in the test suite. Cross-entropy accepts soft
target rows, and the backward pass handles targets whose rows do not sum
to 1 (the gradient of -sum t_k log softmax(z)_k is p * sum(t) - t).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOG_CLAMP = 1e-12


@dataclass
class MlpParams:
    """Per-layer weight matrices (in_dim x out_dim) and bias vectors."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases])

    def flat(self) -> list[np.ndarray]:
        return list(self.weights) + list(self.biases)


@dataclass
class DropoutMask:
    """Inverted-dropout masks, one per layer input; entries 0 or 1/(1-rate)."""

    seed: int
    keep_masks: list[np.ndarray]


@dataclass
class ForwardCache:
    """Activation record for backward(); holds post-dropout inputs and
    pre-activations of every layer plus the softmax output."""

    inputs: list[np.ndarray]
    pre_acts: list[np.ndarray]
    probs: np.ndarray
    mask: DropoutMask | None


def init_mlp(dims: list[int], rng: np.random.Generator) -> MlpParams:
    """Glorot-uniform weights, zero biases. dims = [in, hidden..., out]."""
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def make_dropout_mask(params: MlpParams, batch: int, rate: float,
                      seed: int) -> DropoutMask:
    """Fresh masks for the input of every layer."""
    rng = np.random.Generator(np.random.PCG64(seed))
    keep = []
    for w in params.weights:
        m = (rng.random((batch, w.shape[0])) >= rate).astype(np.float64)
        keep.append(m / (1.0 - rate))
    return DropoutMask(seed, keep)


def forward(params: MlpParams, x_rows: np.ndarray,
            mask: DropoutMask | None = None) -> tuple[np.ndarray, ForwardCache]:
    """Softmax class probabilities for each input row.

    mask=None is evaluation mode (no dropout, deterministic).
    """
    h = np.asarray(x_rows, dtype=np.float64)
    if h.shape[1] != params.weights[0].shape[0]:
        raise ValueError(
            f"input dim {h.shape[1]} != first layer {params.weights[0].shape[0]}")
    inputs, pre_acts = [], []
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        if mask is not None:
            h = h * mask.keep_masks[i]
        inputs.append(h)
        z = h @ w + b
        pre_acts.append(z)
        h = np.maximum(z, 0.0) if i < params.n_layers - 1 else z
    z = pre_acts[-1]
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs, ForwardCache(inputs, pre_acts, probs, mask)


def soft_cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean over rows of -sum_k target_k * log(max(prob_k, 1e-12))."""
    if probs.shape != targets.shape:
        raise ValueError(f"shape mismatch {probs.shape} vs {targets.shape}")
    logp = np.log(np.maximum(probs, LOG_CLAMP))
    return float(-(targets * logp).sum(axis=1).mean())


def backward(cache: ForwardCache, targets: np.ndarray,
             l2_lambda: float = 0.0, params: MlpParams | None = None
             ) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradient of soft_cross_entropy (+ L2 on the first weight matrix).

    Returns (weight_grads, bias_grads) mirroring MlpParams. When l2_lambda
    is nonzero, params must be supplied to read the first-layer weights.
    """
    if targets.shape != cache.probs.shape:
        raise ValueError("targets shape does not match cached probabilities")
    n_layers = len(cache.pre_acts)
    batch = targets.shape[0]
    t_sum = targets.sum(axis=1, keepdims=True)
    dz = (cache.probs * t_sum - targets) / batch
    w_grads: list = [None] * n_layers
    b_grads: list = [None] * n_layers
    need_params = params if params is not None else None
    for i in reversed(range(n_layers)):
        w_grads[i] = cache.inputs[i].T @ dz
        b_grads[i] = dz.sum(axis=0)
        if i > 0:
            if need_params is not None:
                w = need_params.weights[i]
            else:
                raise ValueError("params required to backprop through layers")
            dh = dz @ w.T
            dh = dh * (cache.pre_acts[i - 1] > 0.0)
            if cache.mask is not None:
                dh = dh * cache.mask.keep_masks[i]
            dz = dh
    if l2_lambda != 0.0:
        if params is None:
            raise ValueError("params required for L2 gradient")
        w_grads[0] = w_grads[0] + l2_lambda * params.weights[0]
    return w_grads, b_grads


def l2_penalty(params: MlpParams, l2_lambda: float) -> float:
    """(lambda / 2) * squared Frobenius norm of the first weight matrix."""
    return 0.5 * l2_lambda * float((params.weights[0] ** 2).sum())


def accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Argmax accuracy; ties break to the lowest class index."""
    return float((probs.argmax(axis=1) == labels).mean())


@dataclass
class AdamState:
    """Bias-corrected Adam over a flat list of parameter arrays."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step_count: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(arrays: list[np.ndarray], lr: float) -> AdamState:
    return AdamState([np.zeros_like(a) for a in arrays],
                     [np.zeros_like(a) for a in arrays], 0, lr)


def adam_step(state: AdamState, arrays: list[np.ndarray],
              grads: list[np.ndarray]) -> list[np.ndarray]:
    """One Adam update; returns new arrays and advances the state in place."""
    if len(arrays) != len(state.m) or len(arrays) != len(grads):
        raise ValueError("parameter / moment / gradient count mismatch")
    state.step_count += 1
    t = state.step_count
    out = []
    for i, (a, g) in enumerate(zip(arrays, grads)):
        if a.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != param {a.shape}")
        state.m[i] = state.beta1 * state.m[i] + (1 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1 - state.beta2) * g * g
        m_hat = state.m[i] / (1 - state.beta1 ** t)
        v_hat = state.v[i] / (1 - state.beta2 ** t)
        out.append(a - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out
