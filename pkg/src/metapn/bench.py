"""Benchmark harness: baselines, multi-seed experiments, and the K-sweep.

Baselines are deliberately simple: plain label propagation (argmax of the
K-step propagated seed labels), an MLP trained on the labeled nodes only,
and Static-LP (fixed-teleport PPR pseudo-labels feeding the same MLP
training loop, no meta updates).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import neural
from .data import GraphBundle, SplitSpec, load_bundle, sample_kshot_split
from .meta import (TrainConfig, _Tracker, evaluate, one_hot,
                   sample_unlabeled_batch, train)
from .neural import (adam_init, adam_step, backward, forward,
                     make_dropout_mask, MlpParams, soft_cross_entropy)
from .propagation import (MASS_TAU, PprConfig, power_iterate, ppr_iterate,
                          seed_labels)
from .sparse import from_edge_list, sym_normalize_with_self_loops


@dataclass
class ExperimentConfig:
    bundle: str
    method: str  # meta-pn | lp | mlp | static-lp
    shots: int
    k_max: int = 10
    alpha: float = 0.1
    runs: int = 10
    seeds: list[int] | None = None
    val_per_class: int = 30
    out_dir: str = "."
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.seeds is None:
            self.seeds = list(range(self.runs))
        elif len(self.seeds) != self.runs:
            raise ValueError("runs must equal len(seeds) when seeds are given")


@dataclass
class RunResult:
    method: str
    shots: int
    k_max: int
    accuracies: list[float]  # percent, per seed
    mean: float
    ci95: float


def _aggregate(method: str, shots: int, k_max: int,
               accs: list[float]) -> RunResult:
    a = np.asarray(accs)
    mean = float(a.mean())
    if len(a) > 1:
        ci = float(1.96 * a.std(ddof=1) / np.sqrt(len(a)))
    else:
        ci = 0.0
    return RunResult(method, shots, k_max, [float(x) for x in a], mean, ci)


def _transition(bundle: GraphBundle):
    adj = from_edge_list(bundle.n, bundle.edges)
    return sym_normalize_with_self_loops(adj)


def run_lp_baseline(bundle: GraphBundle, split: SplitSpec, k_max: int) -> float:
    """Argmax of K-step propagated seed labels; unreachable test nodes fall
    back to the most frequent training class."""
    t = _transition(bundle)
    y0 = seed_labels(bundle.labels, split, bundle.n, bundle.c)
    y = power_iterate(t, y0, k_max).steps[-1]
    counts = np.bincount(bundle.labels[split.train], minlength=bundle.c)
    majority = int(counts.argmax())
    pred = y.argmax(axis=1)
    pred[y.sum(axis=1) < MASS_TAU] = majority
    return float((pred[split.test] == bundle.labels[split.test]).mean())


def _fit_on_targets(bundle: GraphBundle, split: SplitSpec, cfg: TrainConfig,
                    pool: np.ndarray, targets: np.ndarray,
                    rng: np.random.Generator,
                    theta: MlpParams | None = None,
                    max_epochs: int | None = None) -> MlpParams:
    """Batched Adam training of the MLP against fixed per-node target rows,
    early-stopped on validation accuracy/loss; returns the best checkpoint."""
    if theta is None:
        theta = neural.init_mlp([bundle.f, cfg.hidden_dim, bundle.c], rng)
    adam = adam_init(theta.flat(), cfg.eta_theta)
    tracker = _Tracker(cfg.patience)
    epochs = cfg.max_epochs if max_epochs is None else max_epochs
    for _ in range(epochs):
        if len(pool) > cfg.batch_size:
            batch = rng.choice(pool, size=cfg.batch_size, replace=False)
        else:
            batch = pool
        mask_seed = int(rng.integers(2 ** 31))
        mask = (make_dropout_mask(theta, len(batch), cfg.dropout, mask_seed)
                if cfg.dropout > 0 else None)
        _, cache = forward(theta, bundle.features[batch], mask)
        w_g, b_g = backward(cache, targets[batch], cfg.l2_lambda, theta)
        flat = adam_step(adam, theta.flat(), w_g + b_g)
        theta = MlpParams(flat[:theta.n_layers], flat[theta.n_layers:])
        acc, loss = evaluate(theta, bundle.features, split.val, bundle.labels)
        snap = theta
        if tracker.update(acc, loss, lambda: snap.copy()):
            break
    return tracker.checkpoint if tracker.checkpoint is not None else theta


def run_mlp_baseline(bundle: GraphBundle, split: SplitSpec,
                     cfg: TrainConfig) -> float:
    """MLP trained on the labeled nodes only (hard targets), no propagation."""
    rng = np.random.Generator(np.random.PCG64(cfg.rng_seed))
    targets = np.zeros((bundle.n, bundle.c))
    targets[split.train] = one_hot(bundle.labels[split.train], bundle.c)
    theta = _fit_on_targets(bundle, split, cfg, np.asarray(split.train),
                            targets, rng)
    acc, _ = evaluate(theta, bundle.features, split.test, bundle.labels)
    return acc


def run_static_lp(bundle: GraphBundle, split: SplitSpec, cfg: TrainConfig,
                  alpha: float) -> float:
    """Fixed-teleport PPR pseudo-labels feeding the same MLP training loop,
    then gold-label fine-tuning. No meta updates."""
    rng = np.random.Generator(np.random.PCG64(cfg.rng_seed))
    t = _transition(bundle)
    y0 = seed_labels(bundle.labels, split, bundle.n, bundle.c)
    y = ppr_iterate(t, y0, PprConfig(alpha, cfg.k_max))
    mass = y.sum(axis=1)
    reachable = np.flatnonzero(mass >= MASS_TAU)
    targets = np.zeros_like(y)
    targets[reachable] = y[reachable] / mass[reachable, None]

    pool = np.setdiff1d(reachable, split.train)
    theta = _fit_on_targets(bundle, split, cfg, pool, targets, rng)
    gold = np.zeros((bundle.n, bundle.c))
    gold[split.train] = one_hot(bundle.labels[split.train], bundle.c)
    theta = _fit_on_targets(bundle, split, cfg, np.asarray(split.train), gold,
                            rng, theta=theta, max_epochs=cfg.finetune_epochs)
    acc, _ = evaluate(theta, bundle.features, split.test, bundle.labels)
    return acc


def run_meta_pn(bundle: GraphBundle, split: SplitSpec,
                cfg: TrainConfig) -> float:
    adj = from_edge_list(bundle.n, bundle.edges)
    state, _ = train(adj, bundle.features, bundle.labels, split, cfg)
    acc, _ = evaluate(state.theta, bundle.features, split.test, bundle.labels)
    return acc


_METHODS = ("meta-pn", "lp", "mlp", "static-lp")


def run_single(bundle: GraphBundle, split: SplitSpec, method: str,
               cfg: TrainConfig, alpha: float) -> float:
    if method == "lp":
        return run_lp_baseline(bundle, split, cfg.k_max)
    if method == "mlp":
        return run_mlp_baseline(bundle, split, cfg)
    if method == "static-lp":
        return run_static_lp(bundle, split, cfg, alpha)
    if method == "meta-pn":
        return run_meta_pn(bundle, split, cfg)
    raise ValueError(f"unknown method {method!r}; expected one of {_METHODS}")


def run_experiment(cfg: ExperimentConfig,
                   bundle: GraphBundle | None = None) -> RunResult:
    """Fresh split + fresh init + full training per seed; aggregates the
    per-seed test accuracies into mean and 95% CI (percent)."""
    if bundle is None:
        bundle = load_bundle(cfg.bundle)
    accs = []
    for seed in cfg.seeds:
        split = sample_kshot_split(bundle, cfg.shots, cfg.val_per_class, seed)
        tcfg = replace(cfg.train, rng_seed=seed, k_max=cfg.k_max)
        try:
            acc = run_single(bundle, split, cfg.method, tcfg, cfg.alpha)
        except Exception as exc:
            raise RuntimeError(f"run with seed {seed} failed: {exc}") from exc
        accs.append(100.0 * acc)
    return _aggregate(cfg.method, cfg.shots, cfg.k_max, accs)


def ablate_k(cfg: ExperimentConfig, k_values: list[int],
             methods: list[str]) -> list[RunResult]:
    """One run_experiment per (method, K) cell."""
    bad = set(methods) - {"meta-pn", "static-lp"}
    if bad:
        raise ValueError(f"ablation supports meta-pn and static-lp, got {bad}")
    bundle = load_bundle(cfg.bundle)
    results = []
    for method in methods:
        for k in k_values:
            cell = replace(cfg, method=method, k_max=k)
            results.append(run_experiment(cell, bundle=bundle))
    return results


CSV_COLUMNS = ["method", "dataset", "shots", "k", "runs", "mean", "ci95"]


def append_csv(path, dataset: str, results: list[RunResult]) -> None:
    """Append one row per result; accuracy in percent with 2 decimals."""
    path = Path(path)
    new_file = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(CSV_COLUMNS)
        for r in results:
            writer.writerow([r.method, dataset, r.shots, r.k_max,
                             len(r.accuracies), f"{r.mean:.2f}",
                             f"{r.ci95:.2f}"])


def append_jsonl(path, dataset: str, results: list[RunResult]) -> None:
    with open(path, "a") as fh:
        for r in results:
            fh.write(json.dumps({
                "method": r.method, "dataset": dataset, "shots": r.shots,
                "k": r.k_max, "runs": len(r.accuracies),
                "accuracies": r.accuracies, "mean": r.mean, "ci95": r.ci95,
            }) + "\n")
