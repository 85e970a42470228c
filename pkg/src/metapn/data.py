"""On-disk graph bundles, few-shot splits, and a planted-partition generator.

Bundle layout (language-neutral, bit-exact):
  meta.json     {"n": ..., "f": ..., "c": ..., "name": ...}
  edges.tsv     two tab-separated node ids per line, each undirected edge once
  labels.tsv    one class id per line, line number = node id
  features.bin  f64 little-endian, row-major, no header
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class BundleError(Exception):
    """Base class for bundle validation failures."""


class MissingFileError(BundleError):
    pass


class DimensionMismatchError(BundleError):
    pass


class LabelRangeError(BundleError):
    pass


@dataclass
class GraphBundle:
    n: int
    f: int
    c: int
    edges: list[tuple[int, int]]
    features: np.ndarray  # (n, f)
    labels: np.ndarray  # (n,) class indices
    name: str = "unnamed"


@dataclass
class SplitSpec:
    """Disjoint labeled-train / validation / test node sets."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    shots: int


@dataclass(frozen=True)
class SbmSpec:
    n: int
    blocks: int
    p_in: float
    p_out: float
    feature_noise_sigma: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise ValueError("need 0 <= p_out <= p_in <= 1")


def load_bundle(dir_path) -> GraphBundle:
    """Load and validate a bundle directory."""
    d = Path(dir_path)
    for fname in ("meta.json", "edges.tsv", "features.bin", "labels.tsv"):
        if not (d / fname).is_file():
            raise MissingFileError(f"{d}: missing {fname}")
    meta = json.loads((d / "meta.json").read_text())
    n, f, c = int(meta["n"]), int(meta["f"]), int(meta["c"])

    payload = (d / "features.bin").read_bytes()
    if len(payload) != n * f * 8:
        raise DimensionMismatchError(
            f"{d}: feature payload size {len(payload)} != n*f*8 = {n * f * 8}")
    features = np.frombuffer(payload, dtype="<f8").reshape(n, f).copy()

    label_lines = (d / "labels.tsv").read_text().splitlines()
    if len(label_lines) != n:
        raise DimensionMismatchError(
            f"{d}: labels.tsv has {len(label_lines)} lines, expected {n}")
    labels = np.array([int(s) for s in label_lines], dtype=np.int64)
    if labels.min() < 0 or labels.max() >= c:
        bad = int(labels[(labels < 0) | (labels >= c)][0])
        raise LabelRangeError(f"{d}: label out of range: {bad} not in [0, {c})")

    edges = []
    for line in (d / "edges.tsv").read_text().splitlines():
        if not line:
            continue
        u, v = line.split("\t")
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise DimensionMismatchError(f"{d}: edge ({u}, {v}) out of range")
        if u == v:
            raise DimensionMismatchError(f"{d}: self-loop on node {u}")
        edges.append((u, v))
    return GraphBundle(n, f, c, edges, features, labels,
                       name=str(meta.get("name", d.name)))


def store_bundle(bundle: GraphBundle, dir_path) -> None:
    """Write a bundle directory; inverse of load_bundle, bit-exact."""
    d = Path(dir_path)
    d.mkdir(parents=True, exist_ok=True)
    (d / "meta.json").write_text(json.dumps(
        {"n": bundle.n, "f": bundle.f, "c": bundle.c, "name": bundle.name},
        indent=2) + "\n")
    (d / "edges.tsv").write_text(
        "".join(f"{u}\t{v}\n" for u, v in bundle.edges))
    (d / "labels.tsv").write_text(
        "".join(f"{int(l)}\n" for l in bundle.labels))
    feats = np.ascontiguousarray(bundle.features, dtype="<f8")
    (d / "features.bin").write_bytes(feats.tobytes())


def sample_kshot_split(bundle: GraphBundle, shots: int, val_per_class: int,
                       seed: int) -> SplitSpec:
    """Stratified split: shots/class train, val_per_class/class validation,
    everything else test. Deterministic in the seed."""
    rng = np.random.Generator(np.random.PCG64(seed))
    train, val, test = [], [], []
    for cls in range(bundle.c):
        members = np.flatnonzero(bundle.labels == cls)
        if len(members) < shots + val_per_class:
            raise ValueError(
                f"class {cls} has {len(members)} nodes, needs at least "
                f"{shots + val_per_class}")
        perm = rng.permutation(members)
        train.append(perm[:shots])
        val.append(perm[shots:shots + val_per_class])
        test.append(perm[shots + val_per_class:])
    return SplitSpec(np.sort(np.concatenate(train)),
                     np.sort(np.concatenate(val)),
                     np.sort(np.concatenate(test)), shots)


def generate_sbm(spec: SbmSpec) -> GraphBundle:
    """Planted-partition graph with one-hot-plus-noise block features.

    Blocks are contiguous index ranges of near-equal size; labels are block
    ids; features are the one-hot block indicator plus iid Gaussian noise.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    sizes = [spec.n // spec.blocks] * spec.blocks
    for i in range(spec.n % spec.blocks):
        sizes[i] += 1
    labels = np.repeat(np.arange(spec.blocks), sizes)

    iu, ju = np.triu_indices(spec.n, k=1)
    same = labels[iu] == labels[ju]
    prob = np.where(same, spec.p_in, spec.p_out)
    keep = rng.random(len(iu)) < prob
    edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))

    features = np.eye(spec.blocks)[labels] + rng.normal(
        0.0, spec.feature_noise_sigma, size=(spec.n, spec.blocks))
    return GraphBundle(spec.n, spec.blocks, spec.blocks, edges, features,
                       labels, name=f"sbm-n{spec.n}-b{spec.blocks}")
