import csv
import json

import numpy as np
import pytest

import oracles
from mvdis.dissim import (
    average_views,
    euclidean_rescaled,
    kdn_cache,
    kdn_in_path_subspace,
    leaf_confidence,
    leaf_confidences,
    rfd_instance_hardness,
    rfd_node_confidence,
    rfd_path_based,
    rfd_plain,
    save_matrix,
)
from mvdis.dissim import DissimilarityMatrix, _leaf_distance_matrix
from mvdis.forest import fit_forest


def make_forest(seed=0, n=18, m=3, p=6, n_classes=2):
    rng = np.random.default_rng(seed)
    X, y, _ = oracles.make_random_problem(rng, n=n, m=m, n_classes=n_classes)
    f = fit_forest(X, y, p, min(2, m), seed=seed + 100, n_classes=n_classes)
    Xq = np.round(rng.normal(size=(5, m)), 3)
    return f, X, y, Xq


class TestPlain:
    def test_matches_oracle_exactly(self):
        f, X, y, Xq = make_forest(seed=1)
        mat = rfd_plain(f, np.vstack([X, Xq]))
        for r, x in enumerate(np.vstack([X, Xq])):
            for i in range(len(X)):
                assert mat.values[r, i] == oracles.plain_entry(f, x, i, X)

    def test_train_matrix_symmetric_zero_diagonal(self):
        f, X, y, _ = make_forest(seed=2)
        v = rfd_plain(f, X).values
        assert np.array_equal(v, v.T)
        assert np.all(np.diag(v) == 0.0)
        assert v.min() >= 0.0 and v.max() <= 1.0

    def test_rejects_wrong_width(self):
        f, X, y, _ = make_forest(seed=3)
        with pytest.raises(ValueError):
            rfd_plain(f, X[:, :2])


class TestPathBased:
    def test_leaf_distance_matrix_matches_oracle(self, eleven_node_tree):
        t = eleven_node_tree
        idx_of, D = _leaf_distance_matrix(t)
        for a in t.leaf_ids():
            for b in t.leaf_ids():
                assert D[idx_of[a], idx_of[b]] == oracles.leaf_distance(t, int(a), int(b))

    def test_matches_oracle(self):
        f, X, y, Xq = make_forest(seed=4)
        for w in (0.5, 1.0, 2.0):
            mat = rfd_path_based(f, Xq, w)
            for r, x in enumerate(Xq):
                for i in range(len(X)):
                    want = oracles.path_based_entry(f, x, i, X, w)
                    assert mat.values[r, i] == pytest.approx(want, abs=1e-15)

    def test_same_leaf_pairs_have_zero_dissimilarity(self):
        f, X, y, _ = make_forest(seed=5)
        for w in (0.5, 3.0):
            assert np.all(np.diag(rfd_path_based(f, X, w).values) == 0.0)

    def test_larger_w_never_decreases_dissimilarity(self):
        f, X, y, Xq = make_forest(seed=6)
        a = rfd_path_based(f, Xq, 0.5).values
        b = rfd_path_based(f, Xq, 2.0).values
        assert np.all(b >= a - 1e-15)
        assert b.max() > a.max()  # strictly more contrast somewhere

    def test_rejects_nonpositive_w(self):
        f, X, y, Xq = make_forest(seed=7)
        for w in (0.0, -1.0):
            with pytest.raises(ValueError):
                rfd_path_based(f, Xq, w)


class TestNodeConfidence:
    def test_leaf_confidence_matches_oracle(self):
        f, X, y, _ = make_forest(seed=8)
        confs = leaf_confidences(f, y)
        for p, tree in enumerate(f.trees):
            for leaf in tree.leaf_ids():
                want = oracles.leaf_confidence(f, p, int(leaf), X, y)
                assert confs[p][leaf] == want
                assert leaf_confidence(f, X, y, p, int(leaf)) == want
            split_nodes = np.flatnonzero(tree.feature >= 0)
            assert np.all(np.isnan(confs[p][split_nodes]))

    def test_matrix_matches_oracle_exactly(self):
        f, X, y, Xq = make_forest(seed=9)
        mat = rfd_node_confidence(f, X, y, np.vstack([X, Xq]))
        for r, x in enumerate(np.vstack([X, Xq])):
            for i in range(len(X)):
                assert mat.values[r, i] == oracles.node_confidence_entry(f, x, i, X, y)

    def test_leaf_confidence_rejects_split_node(self):
        f, X, y, _ = make_forest(seed=10)
        split = int(np.flatnonzero(f.trees[0].feature >= 0)[0])
        with pytest.raises(ValueError):
            leaf_confidence(f, X, y, 0, split)


class TestKdn:
    def test_single_instance_matches_oracle(self):
        f, X, y, _ = make_forest(seed=11)
        from mvdis.tree import path_features

        for p in range(f.n_trees):
            for i in range(len(y)):
                feats = path_features(f.trees[p], int(f.leaf_table[p, i]))
                for k in (1, 3, 5):
                    got = kdn_in_path_subspace(f, p, i, k, X, y)
                    assert got == oracles.kdn(X, y, i, list(feats), k)

    def test_cache_matches_single_instance(self):
        f, X, y, _ = make_forest(seed=12)
        kd = kdn_cache(f, X, y, 3)
        assert kd.shape == (f.n_trees, len(y))
        for p in range(f.n_trees):
            for i in range(len(y)):
                assert kd[p, i] == kdn_in_path_subspace(f, p, i, 3, X, y)

    def test_root_leaf_tree_uses_index_order_fallback(self):
        # constant features make the tree a single leaf: empty path subspace
        X = np.full((8, 2), 1.5)
        y = np.array([0, 1, 0, 1, 0, 1, 0, 1], dtype=np.int64)
        f = fit_forest(X, y, 2, 1, seed=0, n_classes=2)
        assert all(t.n_nodes == 1 for t in f.trees)
        kd = kdn_cache(f, X, y, 3)
        for i in range(8):
            want = oracles.kdn(X, y, i, [], 3)
            assert kd[0, i] == want
            # neighbors are the first 3 indices, skipping i itself
            neighbors = [j for j in range(8) if j != i][:3]
            manual = np.mean([y[j] != y[i] for j in neighbors])
            assert want == manual

    def test_k_bounds(self):
        f, X, y, _ = make_forest(seed=13)
        with pytest.raises(ValueError):
            kdn_cache(f, X, y, 0)
        with pytest.raises(ValueError):
            kdn_cache(f, X, y, len(y))


class TestInstanceHardness:
    def test_matches_oracle_exactly(self):
        for seed in (14, 15):
            f, X, y, Xq = make_forest(seed=seed)
            for k in (1, 3, 5):
                kd_table = np.array(
                    [
                        [
                            oracles.kdn(
                                X, y, i,
                                oracles.path_features(tree, oracles.route(tree, X[i])),
                                k,
                            )
                            for i in range(len(y))
                        ]
                        for tree in f.trees
                    ]
                )
                mat = rfd_instance_hardness(f, X, y, np.vstack([X, Xq]), k)
                for r, x in enumerate(np.vstack([X, Xq])):
                    for i in range(len(X)):
                        s = 0.0
                        for p, tree in enumerate(f.trees):
                            if oracles.route(tree, x) == oracles.route(tree, X[i]):
                                s += 1.0 - kd_table[p, i]
                        assert mat.values[r, i] == 1.0 - s / f.n_trees

    def test_diagonal_is_mean_kdn(self):
        f, X, y, _ = make_forest(seed=16)
        kd = kdn_cache(f, X, y, 3)
        diag = np.diag(rfd_instance_hardness(f, X, y, X, 3, cache=kd).values)
        assert diag == pytest.approx(kd.mean(axis=0), abs=1e-12)

    def test_asymmetry_is_possible(self):
        # hard and easy instances sharing leaves weight the two directions differently
        for seed in range(20):
            f, X, y, _ = make_forest(seed=seed, n=20, p=4)
            v = rfd_instance_hardness(f, X, y, X, 3).values
            if not np.array_equal(v, v.T):
                return
        raise AssertionError("no asymmetric instance-hardness matrix found")

    def test_accepts_precomputed_cache(self):
        f, X, y, Xq = make_forest(seed=17)
        kd = kdn_cache(f, X, y, 5)
        a = rfd_instance_hardness(f, X, y, Xq, 5).values
        b = rfd_instance_hardness(f, X, y, Xq, 5, cache=kd).values
        assert np.array_equal(a, b)


class TestDegeneracyLaws:
    def separable(self):
        # two tight, far-apart clusters: every tree splits them perfectly
        rng = np.random.default_rng(0)
        X = np.vstack([rng.normal(0, 0.1, (10, 2)), rng.normal(50, 0.1, (10, 2))])
        y = np.repeat([0, 1], 10).astype(np.int64)
        f = fit_forest(X, y, 8, 1, seed=4, n_classes=2)
        return f, X, y

    def test_node_confidence_equals_plain_when_all_leaves_confident(self):
        f, X, y = self.separable()
        confs = leaf_confidences(f, y)
        for p, tree in enumerate(f.trees):  # premise: every leaf fully confident
            assert np.all(confs[p][tree.leaf_ids()] == 1.0)
        a = rfd_plain(f, X).values
        b = rfd_node_confidence(f, X, y, X).values
        oracles.assert_matrices_equal(b, a, "node_confidence vs plain")

    def test_instance_hardness_equals_plain_when_all_kdn_zero(self):
        f, X, y = self.separable()
        kd = kdn_cache(f, X, y, 5)
        assert np.all(kd == 0.0)  # premise: every neighborhood agrees
        a = rfd_plain(f, X).values
        b = rfd_instance_hardness(f, X, y, X, 5).values
        oracles.assert_matrices_equal(b, a, "instance_hardness vs plain")


class TestEuclidean:
    def test_row_rescaling(self):
        Xt = np.array([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])
        v = euclidean_rescaled(Xt, np.array([[0.0, 0.0]])).values
        assert v[0].tolist() == [0.0, 0.5, 1.0]

    def test_zero_row_left_alone(self):
        Xt = np.array([[1.0, 1.0], [1.0, 1.0]])
        v = euclidean_rescaled(Xt, np.array([[1.0, 1.0]])).values
        assert np.all(v == 0.0)

    def test_every_nonzero_row_peaks_at_one(self):
        rng = np.random.default_rng(3)
        Xt, Xq = rng.normal(size=(12, 4)), rng.normal(size=(7, 4))
        v = euclidean_rescaled(Xt, Xq).values
        assert np.allclose(v.max(axis=1), 1.0)
        assert v.min() >= 0.0

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            euclidean_rescaled(np.zeros((3, 2)), np.zeros((2, 3)))


class TestAverageAndExport:
    def test_average_views_is_elementwise_mean(self):
        a = DissimilarityMatrix(np.array([[0.0, 1.0]]), "plain")
        b = DissimilarityMatrix(np.array([[1.0, 0.0]]), "plain")
        joint = average_views([a, b])
        assert joint.values.tolist() == [[0.5, 0.5]]
        assert joint.measure == "plain"
        assert joint.view_id is None

    def test_average_views_validates(self):
        a = DissimilarityMatrix(np.zeros((2, 2)), "plain")
        with pytest.raises(ValueError):
            average_views([])
        with pytest.raises(ValueError):
            average_views([a, DissimilarityMatrix(np.zeros((3, 2)), "plain")])
        with pytest.raises(ValueError):
            average_views([a, DissimilarityMatrix(np.zeros((2, 2)), "euclidean")])

    def test_matrix_range_validation(self):
        with pytest.raises(ValueError):
            DissimilarityMatrix(np.array([[1.5]]), "plain").validate()
        with pytest.raises(ValueError):
            DissimilarityMatrix(np.array([[0.5]]), "nope").validate()

    def test_save_matrix_roundtrip(self, tmp_path):
        f, X, y, Xq = make_forest(seed=18)
        mat = rfd_plain(f, Xq)
        mat.view_id = 1
        out = tmp_path / "mat.csv"
        save_matrix(mat, out, k=5, w=1.0, seed=42)
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [str(i) for i in range(len(X))]
        back = np.array([[float(c) for c in row] for row in rows[1:]])
        assert np.array_equal(back, mat.values)
        meta = json.loads((tmp_path / "mat.csv.meta.json").read_text())
        assert meta == {
            "measure": "plain", "view": 1, "k": 5, "w": 1.0, "seed": 42,
            "shape": [5, len(X)],
        }

    def test_save_matrix_checks_ids(self, tmp_path):
        mat = DissimilarityMatrix(np.zeros((1, 3)), "plain")
        with pytest.raises(ValueError):
            save_matrix(mat, tmp_path / "m.csv", train_ids=[1, 2])
