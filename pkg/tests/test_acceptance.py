"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
report. Real-data checks are conditional on converted bundles under
data/ (or $METAPN_DATA) and skip when absent.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import central_diff
from test_meta import bilevel_instance, oracle_hypergrad
from test_neural import random_mlp
from test_propagation import random_grad_instance

from metapn.bench import ExperimentConfig, run_experiment, run_single
from metapn.cli import main as cli_main
from metapn.data import (SbmSpec, generate_sbm, sample_kshot_split,
                         store_bundle)
from metapn.meta import TrainConfig, hypergradient
from metapn.neural import (MlpParams, backward, forward, l2_penalty,
                           soft_cross_entropy)
from metapn.propagation import (PropagatorParams, adaptive_propagate,
                                propagator_grad)

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = Path(os.environ.get("METAPN_DATA", REPO_ROOT / "data"))


def report(num, text):
    print(f"\nACCEPTANCE {num}: PASS — {text}")


def sbm_protocol_accuracy(method, seeds, k_max=10, **cfg_kw):
    """Fresh graph + split + init per seed on the standard synthetic fixture."""
    accs = []
    for seed in seeds:
        bundle = generate_sbm(SbmSpec(200, 2, 0.2, 0.01, 0.5, seed))
        split = sample_kshot_split(bundle, 3, 30, seed)
        cfg = TrainConfig(rng_seed=seed, k_max=k_max, **cfg_kw)
        accs.append(run_single(bundle, split, method, cfg, 0.1))
    return 100.0 * float(np.mean(accs))


def test_criterion_1_gradient_correctness():
    start = time.monotonic()

    # MLP backward vs central differences.
    for seed in range(20):
        params, rng = random_mlp(seed)
        x = rng.normal(size=(5, 3))
        targets = rng.dirichlet(np.ones(2), size=5)
        lam = 0.01
        _, cache = forward(params, x)
        w_g, b_g = backward(cache, targets, lam, params)
        grads = w_g + b_g
        flat = params.flat()
        fds = []
        for i in range(len(flat)):
            def loss_at(arr, i=i):
                trial = [a.copy() for a in flat]
                trial[i] = arr
                p = MlpParams(trial[:2], trial[2:])
                pr, _ = forward(p, x)
                return soft_cross_entropy(pr, targets) + l2_penalty(p, lam)
            fds.append(central_diff(loss_at, flat[i]))
        scale = max(max(np.abs(f).max() for f in fds), 1e-10)
        worst = max(np.abs(g - f).max() for g, f in zip(grads, fds))
        assert worst / scale <= 1e-6

    # Propagator gradient vs central differences.
    for seed in range(20):
        trace, params, rng = random_grad_instance(seed)
        nodes = list(range(trace.n))
        cot = rng.normal(size=(trace.n, trace.n_classes))

        def loss_attn(a):
            rows, _ = adaptive_propagate(
                PropagatorParams(a, params.weight), trace, nodes)
            return float((cot * rows).sum())

        def loss_weight(w):
            rows, _ = adaptive_propagate(
                PropagatorParams(params.attn, w), trace, nodes)
            return float((cot * rows).sum())

        g = propagator_grad(params, trace, nodes, cot)
        fd_attn = central_diff(loss_attn, params.attn)
        fd_weight = central_diff(loss_weight, params.weight)
        scale = max(np.abs(fd_attn).max(), np.abs(fd_weight).max(), 1e-10)
        assert np.abs(g.attn - fd_attn).max() / scale <= 1e-6
        assert np.abs(g.weight - fd_weight).max() / scale <= 1e-6

    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    report(1, f"MLP and propagator gradients match finite differences "
              f"(rel err <= 1e-6, {elapsed:.1f}s)")


def test_criterion_2_hypergradient_oracle():
    start = time.monotonic()
    for seed in range(10):
        (bundle, split, trace, batch, theta, phi, gold,
         gold_targets) = bilevel_instance(seed)
        cfg = TrainConfig(eta_theta=0.05)
        approx = hypergradient(theta, phi, batch, trace, bundle.features,
                               gold, gold_targets, cfg)
        ga, gw = oracle_hypergrad(theta, phi, batch, trace, bundle.features,
                                  gold, gold_targets, cfg)
        a = np.concatenate([approx.attn.ravel(), approx.weight.ravel()])
        b = np.concatenate([ga.ravel(), gw.ravel()])
        cos = a @ b / (np.linalg.norm(a) * np.linalg.norm(b) + 1e-30)
        rel = abs(np.linalg.norm(a) - np.linalg.norm(b)) \
            / (np.linalg.norm(b) + 1e-30)
        assert cos >= 0.99
        assert rel <= 5e-2
    elapsed = time.monotonic() - start
    assert elapsed < 30.0
    report(2, f"finite-difference hypergradient matches brute-force bi-level "
              f"oracle on 10 instances ({elapsed:.1f}s)")


def test_criterion_3_loss_gradient_equivalence():
    for seed in range(10):
        rng = np.random.Generator(np.random.PCG64(seed))
        n, c = 6, 2
        params, _ = random_mlp(seed + 300)
        x = rng.normal(size=(n, 3))
        labeled = [0, 1]
        classes = [0, 1]
        y = np.zeros((n, c))
        for j, cls in zip(labeled, classes):
            y[j, cls] = 1.0
        t = rng.random((n, n))

        probs, cache = forward(params, x)
        soft_targets = t @ y
        lhs_loss = soft_cross_entropy(probs, soft_targets)
        lhs_wg, lhs_bg = backward(cache, soft_targets, 0.0, params)

        logp = np.log(np.maximum(probs, 1e-12))
        rhs_loss = sum(t[i, j] * (-logp[i, cls])
                       for i in range(n)
                       for j, cls in zip(labeled, classes)) / n
        rhs_wg = [np.zeros_like(w) for w in params.weights]
        rhs_bg = [np.zeros_like(b) for b in params.biases]
        for j, cls in zip(labeled, classes):
            pair_targets = np.outer(t[:, j], np.eye(c)[cls])
            wg, bg = backward(cache, pair_targets, 0.0, params)
            for acc, g in zip(rhs_wg + rhs_bg, wg + bg):
                acc += g

        assert abs(lhs_loss - rhs_loss) <= 1e-10
        for a, b in zip(lhs_wg + lhs_bg, rhs_wg + rhs_bg):
            assert np.abs(a - b).max() <= 1e-10
    report(3, "propagated-target loss and gradient equal the pairwise "
              "weighted sums (<= 1e-10)")


def test_criterion_4_synthetic_end_to_end():
    start = time.monotonic()
    seeds = range(5)
    meta = sbm_protocol_accuracy("meta-pn", seeds)
    static = sbm_protocol_accuracy("static-lp", seeds)
    mlp = sbm_protocol_accuracy("mlp", seeds)
    elapsed = time.monotonic() - start
    # Comparisons allow float-summation noise (1e-6 of a point), far below
    # the 1-point resolution of the criterion.
    assert meta >= 90.0
    assert meta >= static - 1e-6
    assert static >= mlp - 1.0
    assert elapsed < 120.0
    report(4, f"SBM 3-shot over 5 seeds: meta-pn {meta:.2f} >= 90, "
              f">= static-lp {static:.2f} >= mlp {mlp:.2f} - 1 "
              f"({elapsed:.1f}s)")


def test_criterion_5_ablation_trend():
    seeds = range(5)
    meta = {k: sbm_protocol_accuracy("meta-pn", seeds, k_max=k)
            for k in (10, 15, 20)}
    static10 = sbm_protocol_accuracy("static-lp", seeds, k_max=10)
    assert abs(meta[10] - meta[15]) <= 1.0
    assert abs(meta[10] - meta[20]) <= 1.0
    assert meta[10] >= static10 - 1e-6
    report(5, f"meta-pn stable for K >= 10 ({meta[10]:.2f} / {meta[15]:.2f} "
              f"/ {meta[20]:.2f}) and >= static-lp ({static10:.2f}) at K=10")


def _real_data_case(name, method, shots, expected, tol, runs=10):
    bundle_dir = DATA_DIR / name
    if not (bundle_dir / "meta.json").is_file():
        pytest.skip(f"converted bundle {bundle_dir} not present")
    cfg = ExperimentConfig(bundle=str(bundle_dir), method=method, shots=shots,
                           runs=runs)
    result = run_experiment(cfg)
    assert abs(result.mean - expected) <= tol, \
        f"{name} {method} {shots}-shot: {result.mean:.2f} vs {expected}±{tol}"
    return result.mean


@pytest.mark.parametrize("name,method,shots,expected,tol", [
    ("cora_ml", "meta-pn", 5, 79.88, 3.0),
    ("citeseer", "meta-pn", 3, 70.48, 3.0),
    ("cora_ml", "meta-pn", 20, 86.33, 3.0),
    ("cora_ml", "meta-pn", 10, 83.84, 3.0),
    ("cora_ml", "lp", 5, 68.01, 4.0),
    ("cora_ml", "mlp", 5, 51.12, 4.0),
])
def test_criterion_6_real_data(name, method, shots, expected, tol):
    mean = _real_data_case(name, method, shots, expected, tol)
    report(6, f"{name} {method} {shots}-shot mean {mean:.2f} within "
              f"±{tol} of {expected}")


def test_criterion_7_bench_determinism(tmp_path):
    bundle_dir = tmp_path / "sbm60"
    store_bundle(generate_sbm(SbmSpec(60, 2, 0.3, 0.02, 0.5, 11)), bundle_dir)
    runner = CliRunner()
    outputs = []
    for name in ("one", "two"):
        out_dir = tmp_path / name
        out_dir.mkdir()
        cfg = out_dir / "bench.toml"
        cfg.write_text(f"""
[experiment]
bundle = "{bundle_dir}"
method = "meta-pn"
shots = 3
runs = 2
val_per_class = 5
out_dir = "{out_dir}"

[train]
max_epochs = 40
patience = 10
finetune_epochs = 10
""")
        res = runner.invoke(cli_main, ["bench", "--config", str(cfg)])
        assert res.exit_code == 0, res.output
        outputs.append((out_dir / "results.csv").read_bytes())
    assert outputs[0] == outputs[1]
    report(7, "two bench runs with identical config produce byte-identical "
              "results.csv")


def test_criterion_8_scope_statement_documented():
    readme = (REPO_ROOT / "README.md").read_text()
    assert "ogbn-arxiv" in readme
    assert "not reproduced" in readme.lower()
    report(8, "README states the ogbn-arxiv results and omitted GNN "
              "baselines are not reproduced")
