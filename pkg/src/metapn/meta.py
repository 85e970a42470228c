"""The alternating bi-level training loop.

Each epoch: sample a batch of unlabeled nodes, pseudo-label it with the
adaptive propagator, take an inner Adam step on the MLP, then update the
propagator parameters with the finite-difference hypergradient of the
gold-label loss. Early stopping tracks validation accuracy and loss; after
the loop the MLP is fine-tuned on the gold labels alone.

The hypergradient follows the one-step-SGD model of the inner update:
theta' = theta - eta_theta * grad J_pseudo. The bracket scaling is
eta_theta / (2 eps); the actual parameter updates use Adam.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import neural
from .neural import (AdamState, MlpParams, adam_init, adam_step, backward,
                     forward, l2_penalty, make_dropout_mask, soft_cross_entropy)
from .propagation import (PropagationTrace, PropagatorParams,
                          adaptive_propagate, init_propagator_params,
                          power_iterate, propagator_grad, reachable_nodes,
                          seed_labels)
from .sparse import CsrMatrix, sym_normalize_with_self_loops


@dataclass
class TrainConfig:
    eta_theta: float = 0.01
    eta_phi: float = 0.01
    epsilon_scale: float = 1e-4  # eps = epsilon_scale / ||grad J_gold||
    batch_size: int = 1024
    k_max: int = 10
    l2_lambda: float = 0.005
    dropout: float = 0.3
    hidden_dim: int = 64
    patience: int = 100
    max_epochs: int = 10000
    finetune_epochs: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if self.eta_theta <= 0 or self.eta_phi <= 0:
            raise ValueError("learning rates must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class MetaState:
    theta: MlpParams
    phi: PropagatorParams
    adam_theta: AdamState
    adam_phi: AdamState
    best_val_metric: float = -np.inf
    epochs_since_improve: int = 0


def one_hot(labels: np.ndarray, c: int) -> np.ndarray:
    return np.eye(c)[np.asarray(labels, dtype=np.int64)]


def sample_unlabeled_batch(split, reachable: np.ndarray, b: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Uniform sample without replacement from unlabeled-and-reachable nodes.

    The unlabeled pool is every node outside the labeled training set.
    """
    pool = np.setdiff1d(np.asarray(reachable), split.train)
    if len(pool) == 0:
        raise ValueError("no reachable unlabeled nodes: the unlabeled set is "
                         "disconnected from all labeled nodes")
    size = min(b, len(pool))
    return rng.choice(pool, size=size, replace=False)


def inner_update(theta: MlpParams, adam_theta: AdamState, phi: PropagatorParams,
                 batch: np.ndarray, trace: PropagationTrace,
                 features: np.ndarray, cfg: TrainConfig,
                 mask=None):
    """One Adam step of the MLP on pseudo-labeled batch rows.

    Returns (new_theta, j_pseudo, theta_grads) where theta_grads is the raw
    gradient list used for the plain-SGD model inside the hypergradient.
    """
    targets, reach = adaptive_propagate(phi, trace, batch)
    if not reach.all():
        bad = batch[~reach][0]
        raise ValueError(f"unreachable node {bad} in batch; filter first")
    probs, cache = forward(theta, features[batch], mask)
    j_pseudo = soft_cross_entropy(probs, targets) + l2_penalty(theta, cfg.l2_lambda)
    w_grads, b_grads = backward(cache, targets, cfg.l2_lambda, theta)
    grads = w_grads + b_grads
    new_flat = adam_step(adam_theta, theta.flat(), grads)
    n_layers = theta.n_layers
    new_theta = MlpParams(new_flat[:n_layers], new_flat[n_layers:])
    return new_theta, j_pseudo, grads


def _sgd_offset(theta: MlpParams, direction: list[np.ndarray],
                scale: float) -> MlpParams:
    flat = theta.flat()
    moved = [p + scale * d for p, d in zip(flat, direction)]
    n = theta.n_layers
    return MlpParams(moved[:n], moved[n:])


def _grad_norm(grads: list[np.ndarray]) -> float:
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads)))


def _phi_cotangent(theta: MlpParams, features: np.ndarray, batch: np.ndarray,
                   mask) -> np.ndarray:
    """d J_pseudo / d targets = -log(clamped probs) / batch_size."""
    probs, _ = forward(theta, features[batch], mask)
    return -np.log(np.maximum(probs, neural.LOG_CLAMP)) / len(batch)


def hypergradient(theta: MlpParams, phi: PropagatorParams, batch: np.ndarray,
                  trace: PropagationTrace, features: np.ndarray,
                  gold_nodes: np.ndarray, gold_targets: np.ndarray,
                  cfg: TrainConfig, mask=None,
                  theta_grads: list[np.ndarray] | None = None
                  ) -> PropagatorParams:
    """Finite-difference approximation of the gradient of the gold loss
    with respect to the propagator parameters.

    theta' = theta - eta_theta * grad_theta J_pseudo, the gold gradient is
    taken at theta', and the propagator gradient of J_pseudo is evaluated at
    theta +- eps * grad J_gold with one shared dropout mask so the difference
    is coherent. The gold loss itself uses no dropout and no L2.
    """
    if theta_grads is None:
        targets, _ = adaptive_propagate(phi, trace, batch)
        _, cache = forward(theta, features[batch], mask)
        w_g, b_g = backward(cache, targets, cfg.l2_lambda, theta)
        theta_grads = w_g + b_g

    theta_prime = _sgd_offset(theta, theta_grads, -cfg.eta_theta)
    _, cache_gold = forward(theta_prime, features[gold_nodes], None)
    gw, gb = backward(cache_gold, gold_targets, 0.0, theta_prime)
    gold_grads = gw + gb
    gnorm = _grad_norm(gold_grads)
    if gnorm == 0.0:
        return PropagatorParams(np.zeros_like(phi.attn),
                                np.zeros_like(phi.weight))
    eps = cfg.epsilon_scale / (gnorm + 1e-12)

    theta_plus = _sgd_offset(theta, gold_grads, eps)
    theta_minus = _sgd_offset(theta, gold_grads, -eps)
    cot_plus = _phi_cotangent(theta_plus, features, batch, mask)
    cot_minus = _phi_cotangent(theta_minus, features, batch, mask)
    g_plus = propagator_grad(phi, trace, batch, cot_plus)
    g_minus = propagator_grad(phi, trace, batch, cot_minus)

    scale = -cfg.eta_theta / (2.0 * eps)
    return PropagatorParams(scale * (g_plus.attn - g_minus.attn),
                            scale * (g_plus.weight - g_minus.weight))


def outer_update(phi: PropagatorParams, adam_phi: AdamState,
                 hypergrad: PropagatorParams) -> PropagatorParams:
    new = adam_step(adam_phi, [phi.attn, phi.weight],
                    [hypergrad.attn, hypergrad.weight])
    return PropagatorParams(new[0], new[1])


def evaluate(theta: MlpParams, features: np.ndarray, nodes: np.ndarray,
             labels: np.ndarray) -> tuple[float, float]:
    """(accuracy, hard cross-entropy loss) on the given nodes, eval mode."""
    probs, _ = forward(theta, features[nodes], None)
    y = np.asarray(labels)[nodes]
    acc = neural.accuracy(probs, y)
    loss = soft_cross_entropy(probs, one_hot(y, probs.shape[1]))
    return acc, loss


@dataclass
class _Tracker:
    """Early stopping per the accuracy-or-loss patience rule, plus the
    best-accuracy checkpoint (ties keep the earliest epoch)."""

    patience: int
    best_acc: float = -np.inf
    best_loss: float = np.inf
    best_ckpt_acc: float = -np.inf
    since_improve: int = 0
    checkpoint: tuple | None = None

    def update(self, acc: float, loss: float, snapshot) -> bool:
        """Record one epoch; returns True when training should stop."""
        improved = False
        if acc > self.best_acc:
            self.best_acc = acc
            improved = True
        if loss < self.best_loss:
            self.best_loss = loss
            improved = True
        if acc > self.best_ckpt_acc:
            self.best_ckpt_acc = acc
            self.checkpoint = snapshot()
        self.since_improve = 0 if improved else self.since_improve + 1
        return self.since_improve >= self.patience


def train(graph: CsrMatrix, features: np.ndarray, labels: np.ndarray,
          split, cfg: TrainConfig):
    """Full alternating training plus gold-label fine-tuning.

    Returns (MetaState, log) where log is a list of per-epoch dicts with
    keys epoch, j_pseudo, j_gold, val_acc, val_loss, phi_grad_norm. The
    returned state holds the best-validation checkpoint.
    """
    labels = np.asarray(labels, dtype=np.int64)
    c = int(labels.max()) + 1
    for cls in range(c):
        if not np.any(labels[split.train] == cls):
            raise ValueError(f"no training label for class {cls}")

    rng = np.random.Generator(np.random.PCG64(cfg.rng_seed))
    t = sym_normalize_with_self_loops(graph)
    y0 = seed_labels(labels, split, graph.n_rows, c)
    trace = power_iterate(t, y0, cfg.k_max)
    reachable = reachable_nodes(trace)

    in_dim = features.shape[1]
    theta = neural.init_mlp([in_dim, cfg.hidden_dim, c], rng)
    phi = init_propagator_params(c, rng)
    adam_theta = adam_init(theta.flat(), cfg.eta_theta)
    adam_phi = adam_init([phi.attn, phi.weight], cfg.eta_phi)

    gold_nodes = np.asarray(split.train)
    gold_targets = one_hot(labels[gold_nodes], c)
    val_nodes = np.asarray(split.val)

    tracker = _Tracker(cfg.patience)
    log: list[dict] = []

    for epoch in range(cfg.max_epochs):
        batch = sample_unlabeled_batch(split, reachable, cfg.batch_size, rng)
        mask_seed = int(rng.integers(2 ** 31))
        mask = (make_dropout_mask(theta, len(batch), cfg.dropout, mask_seed)
                if cfg.dropout > 0 else None)

        new_theta, j_pseudo, theta_grads = inner_update(
            theta, adam_theta, phi, batch, trace, features, cfg, mask)

        theta_prime = _sgd_offset(theta, theta_grads, -cfg.eta_theta)
        probs_gold, _ = forward(theta_prime, features[gold_nodes], None)
        j_gold = soft_cross_entropy(probs_gold, gold_targets)

        hyper = hypergradient(theta, phi, batch, trace, features, gold_nodes,
                              gold_targets, cfg, mask, theta_grads)
        phi = outer_update(phi, adam_phi, hyper)
        theta = new_theta

        val_acc, val_loss = evaluate(theta, features, val_nodes, labels)
        phi_norm = _grad_norm([hyper.attn, hyper.weight])
        log.append({"epoch": epoch, "j_pseudo": j_pseudo, "j_gold": j_gold,
                    "val_acc": val_acc, "val_loss": val_loss,
                    "phi_grad_norm": phi_norm})
        snap_theta, snap_phi = theta, phi
        if tracker.update(val_acc, val_loss,
                          lambda: (snap_theta.copy(), snap_phi.copy())):
            break

    theta, phi = tracker.checkpoint

    # Fine-tune the MLP on the gold labels alone.
    ft_adam = adam_init(theta.flat(), cfg.eta_theta)
    ft = _Tracker(cfg.patience)
    acc0, loss0 = evaluate(theta, features, val_nodes, labels)
    ft.update(acc0, loss0, lambda: theta.copy())
    for _ in range(cfg.finetune_epochs):
        mask_seed = int(rng.integers(2 ** 31))
        mask = (make_dropout_mask(theta, len(gold_nodes), cfg.dropout,
                                  mask_seed) if cfg.dropout > 0 else None)
        probs, cache = forward(theta, features[gold_nodes], mask)
        w_g, b_g = backward(cache, gold_targets, cfg.l2_lambda, theta)
        flat = adam_step(ft_adam, theta.flat(), w_g + b_g)
        theta = MlpParams(flat[:theta.n_layers], flat[theta.n_layers:])
        acc, loss = evaluate(theta, features, val_nodes, labels)
        snap = theta
        if ft.update(acc, loss, lambda: snap.copy()):
            break
    theta = ft.checkpoint

    state = MetaState(theta, phi, adam_theta, adam_phi,
                      best_val_metric=ft.best_ckpt_acc,
                      epochs_since_improve=tracker.since_improve)
    return state, log


def write_log(path, log: list[dict]) -> None:
    """One JSON object per epoch, one per line."""
    with open(path, "w") as fh:
        for row in log:
            fh.write(json.dumps(row) + "\n")
