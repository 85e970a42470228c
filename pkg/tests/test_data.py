import json

import numpy as np
import pytest

from metapn.data import (DimensionMismatchError, GraphBundle, LabelRangeError,
                         MissingFileError, SbmSpec, generate_sbm, load_bundle,
                         sample_kshot_split, store_bundle)


def tiny_bundle():
    features = np.array([[0.5, 1.5], [2.5, -1.0]])
    return GraphBundle(2, 2, 2, [(0, 1)], features,
                       np.array([0, 1], dtype=np.int64), name="tiny")


class TestBundleIo:
    def test_round_trip(self, tmp_path):
        b = tiny_bundle()
        store_bundle(b, tmp_path / "tiny")
        loaded = load_bundle(tmp_path / "tiny")
        assert loaded.n == 2 and loaded.f == 2 and loaded.c == 2
        assert loaded.edges == b.edges
        assert np.array_equal(loaded.labels, b.labels)
        assert b.features.tobytes() == loaded.features.tobytes()

    def test_missing_file(self, tmp_path):
        store_bundle(tiny_bundle(), tmp_path / "b")
        (tmp_path / "b" / "edges.tsv").unlink()
        with pytest.raises(MissingFileError, match="edges.tsv"):
            load_bundle(tmp_path / "b")

    def test_label_out_of_range(self, tmp_path):
        store_bundle(tiny_bundle(), tmp_path / "b")
        (tmp_path / "b" / "labels.tsv").write_text("0\n2\n")
        with pytest.raises(LabelRangeError, match="label out of range"):
            load_bundle(tmp_path / "b")

    def test_feature_payload_size(self, tmp_path):
        store_bundle(tiny_bundle(), tmp_path / "b")
        (tmp_path / "b" / "features.bin").write_bytes(b"\x00" * 17)
        with pytest.raises(DimensionMismatchError, match="feature payload size"):
            load_bundle(tmp_path / "b")

    def test_meta_drives_shapes(self, tmp_path):
        store_bundle(tiny_bundle(), tmp_path / "b")
        meta = json.loads((tmp_path / "b" / "meta.json").read_text())
        meta["n"] = 3
        (tmp_path / "b" / "meta.json").write_text(json.dumps(meta))
        with pytest.raises(DimensionMismatchError):
            load_bundle(tmp_path / "b")


class TestKshotSplit:
    def test_cardinality(self):
        bundle = generate_sbm(SbmSpec(140, 7, 0.1, 0.01, 0.5, 0))
        split = sample_kshot_split(bundle, 3, 5, seed=0)
        assert len(split.train) == 21
        assert len(split.val) == 35
        assert len(split.test) == 140 - 21 - 35

    def test_deterministic(self, sbm_bundle):
        s1 = sample_kshot_split(sbm_bundle, 3, 30, seed=5)
        s2 = sample_kshot_split(sbm_bundle, 3, 30, seed=5)
        assert np.array_equal(s1.train, s2.train)
        assert np.array_equal(s1.val, s2.val)
        assert np.array_equal(s1.test, s2.test)

    def test_seeds_differ(self, sbm_bundle):
        diffs = 0
        for seed in range(10):
            a = sample_kshot_split(sbm_bundle, 3, 30, seed=2 * seed)
            b = sample_kshot_split(sbm_bundle, 3, 30, seed=2 * seed + 1)
            if not np.array_equal(a.train, b.train):
                diffs += 1
        assert diffs >= 1

    def test_disjoint_and_covering(self, sbm_bundle):
        split = sample_kshot_split(sbm_bundle, 3, 30, seed=1)
        all_nodes = np.concatenate([split.train, split.val, split.test])
        assert len(np.unique(all_nodes)) == len(all_nodes) == sbm_bundle.n

    def test_stratified(self, sbm_bundle):
        split = sample_kshot_split(sbm_bundle, 4, 10, seed=2)
        labels = sbm_bundle.labels
        for cls in range(sbm_bundle.c):
            assert (labels[split.train] == cls).sum() == 4
            assert (labels[split.val] == cls).sum() == 10

    def test_class_too_small(self):
        bundle = generate_sbm(SbmSpec(10, 2, 0.5, 0.1, 0.5, 0))
        with pytest.raises(ValueError, match="class 0"):
            sample_kshot_split(bundle, 3, 30, seed=0)


class TestSbmGenerator:
    def test_two_cliques(self):
        bundle = generate_sbm(SbmSpec(6, 2, 1.0, 0.0, 0.1, 0))
        assert len(bundle.edges) == 6
        labels = bundle.labels
        for u, v in bundle.edges:
            assert labels[u] == labels[v]

    def test_empty(self):
        bundle = generate_sbm(SbmSpec(5, 2, 0.0, 0.0, 0.1, 0))
        assert bundle.edges == []

    def test_deterministic(self):
        spec = SbmSpec(50, 2, 0.2, 0.02, 0.5, 9)
        a, b = generate_sbm(spec), generate_sbm(spec)
        assert a.edges == b.edges
        assert np.array_equal(a.features, b.features)

    def test_edge_fraction_concentrates(self):
        fractions = []
        for seed in range(10):
            bundle = generate_sbm(SbmSpec(200, 2, 0.2, 0.01, 0.5, seed))
            labels = bundle.labels
            within = sum(1 for u, v in bundle.edges if labels[u] == labels[v])
            pairs = 2 * (100 * 99 // 2)  # within-block pairs over both blocks
            fractions.append(within / pairs)
        assert all(0.17 <= f <= 0.23 for f in fractions)

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SbmSpec(10, 2, 0.1, 0.5, 0.5, 0)
