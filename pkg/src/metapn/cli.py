"""Command-line entry points for bundles, synthetic graphs, and benchmarks."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import click
import numpy as np

from .bench import (ExperimentConfig, ablate_k, append_csv, append_jsonl,
                    run_experiment, run_single)
from .data import (BundleError, SbmSpec, generate_sbm, load_bundle,
                   sample_kshot_split, store_bundle)
from .meta import TrainConfig, train, write_log
from .sparse import from_edge_list


def _load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _train_config(overrides: dict) -> TrainConfig:
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    bad = set(overrides) - known
    if bad:
        raise click.ClickException(f"unknown train config keys: {sorted(bad)}")
    return TrainConfig(**overrides)


def _experiment_config(cfg: dict) -> ExperimentConfig:
    exp = dict(cfg.get("experiment", {}))
    tcfg = _train_config(dict(cfg.get("train", {})))
    known = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"train"}
    bad = set(exp) - known
    if bad:
        raise click.ClickException(f"unknown experiment keys: {sorted(bad)}")
    return ExperimentConfig(train=tcfg, **exp)


@click.group()
def main():
    """Few-shot node classification benchmarks."""


@main.command("bundle-validate")
@click.argument("bundle_dir", type=click.Path(exists=True, file_okay=False))
def bundle_validate(bundle_dir):
    """Validate a graph bundle directory."""
    try:
        b = load_bundle(bundle_dir)
    except BundleError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps({"ok": True, "name": b.name, "n": b.n,
                           "m": len(b.edges), "f": b.f, "c": b.c}))


@main.command("synth-sbm")
@click.option("--n", type=int, required=True)
@click.option("--blocks", type=int, required=True)
@click.option("--p-in", type=float, required=True)
@click.option("--p-out", type=float, required=True)
@click.option("--sigma", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def synth_sbm(n, blocks, p_in, p_out, sigma, seed, out):
    """Generate a planted-partition bundle for hermetic experiments."""
    bundle = generate_sbm(SbmSpec(n, blocks, p_in, p_out, sigma, seed))
    store_bundle(bundle, out)
    click.echo(json.dumps({"name": bundle.name, "n": bundle.n,
                           "m": len(bundle.edges), "out": str(out)}))


@main.command("train")
@click.option("--bundle", "bundle_dir", type=click.Path(exists=True),
              required=True)
@click.option("--method", type=click.Choice(
    ["meta-pn", "lp", "mlp", "static-lp"]), default="meta-pn")
@click.option("--shots", type=int, default=5, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None)
@click.option("--val-per-class", type=int, default=30, show_default=True)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--log-out", type=click.Path(), default=None,
              help="Write the per-epoch training log (JSON lines).")
def train_cmd(bundle_dir, method, shots, config_path, val_per_class, alpha,
              log_out):
    """Run one training run and report test accuracy."""
    cfg = _train_config(dict(_load_toml(config_path).get("train", {}))
                        if config_path else {})
    bundle = load_bundle(bundle_dir)
    split = sample_kshot_split(bundle, shots, val_per_class, cfg.rng_seed)
    if method == "meta-pn" and log_out:
        adj = from_edge_list(bundle.n, bundle.edges)
        state, log = train(adj, bundle.features, bundle.labels, split, cfg)
        write_log(log_out, log)
        from .meta import evaluate
        acc, _ = evaluate(state.theta, bundle.features, split.test,
                          bundle.labels)
    else:
        acc = run_single(bundle, split, method, cfg, alpha)
    click.echo(json.dumps({"method": method, "shots": shots,
                           "test_accuracy": round(100.0 * acc, 2)}))


@main.command("bench")
@click.option("--config", "config_path", type=click.Path(exists=True),
              required=True)
def bench_cmd(config_path):
    """Multi-seed benchmark defined by a TOML config."""
    cfg = _experiment_config(_load_toml(config_path))
    result = run_experiment(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = load_bundle(cfg.bundle).name
    append_csv(out / "results.csv", dataset, [result])
    append_jsonl(out / "results.jsonl", dataset, [result])
    click.echo(json.dumps({"method": result.method, "mean": result.mean,
                           "ci95": result.ci95}))


@main.command("ablate-k")
@click.option("--config", "config_path", type=click.Path(exists=True),
              required=True)
@click.option("--k", "k_values", default="1,2,5,10,15,20", show_default=True)
@click.option("--methods", default="meta-pn,static-lp", show_default=True)
def ablate_cmd(config_path, k_values, methods):
    """Propagation-depth sweep; one CSV row per (method, K) cell."""
    cfg = _experiment_config(_load_toml(config_path))
    ks = [int(s) for s in k_values.split(",") if s]
    ms = [s.strip() for s in methods.split(",") if s.strip()]
    results = ablate_k(cfg, ks, ms)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = load_bundle(cfg.bundle).name
    append_csv(out / "results.csv", dataset, results)
    append_jsonl(out / "results.jsonl", dataset, results)
    for r in results:
        click.echo(f"{r.method}\tK={r.k_max}\t{r.mean:.2f} +- {r.ci95:.2f}")


if __name__ == "__main__":
    main()
