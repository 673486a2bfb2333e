"""Forest-based dissimilarity measures and the joint-view average.

Five measures produce query x train matrices with values in [0, 1]:

- ``plain``: fraction of trees where the pair lands in different leaves.
- ``path_based``: per tree, similarity exp(-w * g) where g is the edge count
  between the two landing leaves; dissimilarity is one minus the mean.
- ``node_confidence``: same-leaf similarity weighted by the leaf's
  out-of-bag confidence (fraction of training instances in the leaf,
  in-bag and OOB alike, that the tree predicts correctly).
- ``instance_hardness``: same-leaf similarity weighted by 1 - kDN of the
  training instance, where kDN is measured among all training instances
  projected onto the features tested along that leaf's decision path.
- ``euclidean``: plain distances, each query row rescaled by its own max.

Every forest measure accumulates per-tree similarity in tree order and
returns 1 - S/P, so the degeneracy identities (node_confidence == plain when
all confidences are 1, instance_hardness == plain when all kDN are 0) hold
exactly, not just approximately.
"""

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .tree import leaves_of, path_features

__all__ = [
    "MEASURES",
    "DissimilarityMatrix",
    "MeasureCache",
    "average_views",
    "euclidean_rescaled",
    "kdn_cache",
    "kdn_in_path_subspace",
    "leaf_confidence",
    "leaf_confidences",
    "rfd_instance_hardness",
    "rfd_node_confidence",
    "rfd_path_based",
    "rfd_plain",
    "save_matrix",
]

logger = logging.getLogger(__name__)

MEASURES = ("plain", "path_based", "node_confidence", "instance_hardness", "euclidean")


@dataclass
class DissimilarityMatrix:
    """Query-by-train dissimilarity values in [0, 1].

    Rows are query instances, columns are training instances. ``measure``
    names the producing measure; ``view_id`` is set for per-view matrices
    and None for joint/averaged ones.
    """

    values: np.ndarray
    measure: str
    view_id: int = None

    @property
    def shape(self):
        return self.values.shape

    def validate(self):
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure tag {self.measure!r}")
        v = self.values
        if v.ndim != 2:
            raise ValueError(f"expected a 2-d matrix, got shape {v.shape}")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("dissimilarity values outside [0, 1]")
        return self


@dataclass
class MeasureCache:
    """Per-tree values a measure needs at query time.

    kind="node_confidence": per_tree[p] has one confidence per node id
    (NaN at split nodes). kind="instance_hardness": per_tree[p] has one
    kDN value per training instance.
    """

    kind: str
    per_tree: list


def _query_matrix(forest, X_query):
    X_query = np.atleast_2d(np.asarray(X_query, dtype=np.float64))
    if X_query.shape[1] != forest.n_features:
        raise ValueError(
            f"query has {X_query.shape[1]} features, forest expects {forest.n_features}"
        )
    return X_query


def rfd_plain(forest, X_query):
    """Fraction of trees in which query and train land in different leaves."""
    X_query = _query_matrix(forest, X_query)
    S = np.zeros((X_query.shape[0], forest.n_train))
    for p, tree in enumerate(forest.trees):
        q = leaves_of(tree, X_query)
        S += q[:, None] == forest.leaf_table[p][None, :]
    values = 1.0 - S / forest.n_trees
    return DissimilarityMatrix(values, "plain").validate()


def _leaf_distance_matrix(tree):
    """All-pairs edge counts between leaves; returns (node->leaf index, L x L)."""
    leaves = tree.leaf_ids()
    idx_of = np.full(tree.n_nodes, -1, dtype=np.int64)
    idx_of[leaves] = np.arange(len(leaves))
    D = np.zeros((len(leaves), len(leaves)), dtype=np.int64)
    under = [None] * tree.n_nodes
    # children before parents: process deepest nodes first
    for v in sorted(range(tree.n_nodes), key=lambda u: -tree.depth[u]):
        if tree.is_leaf(v):
            under[v] = np.array([v], dtype=np.int64)
            continue
        A, B = under[tree.left[v]], under[tree.right[v]]
        da = tree.depth[A] - tree.depth[v]
        db = tree.depth[B] - tree.depth[v]
        cross = da[:, None] + db[None, :]
        D[np.ix_(idx_of[A], idx_of[B])] = cross
        D[np.ix_(idx_of[B], idx_of[A])] = cross.T
        under[v] = np.concatenate([A, B])
    return idx_of, D


def rfd_path_based(forest, X_query, w):
    """Dissimilarity 1 - mean_p exp(-w * g_p), g_p = inter-leaf path length."""
    if w <= 0:
        raise ValueError(f"w must be positive, got {w}")
    X_query = _query_matrix(forest, X_query)
    S = np.zeros((X_query.shape[0], forest.n_train))
    for p, tree in enumerate(forest.trees):
        idx_of, D = _leaf_distance_matrix(tree)
        sim = np.exp(-w * D)
        q = idx_of[leaves_of(tree, X_query)]
        t = idx_of[forest.leaf_table[p]]
        S += sim[q[:, None], t[None, :]]
    values = 1.0 - S / forest.n_trees
    return DissimilarityMatrix(values, "path_based").validate()


def leaf_confidences(forest, y):
    """OOB-informed confidence of every leaf of every tree.

    A leaf's confidence is the fraction of training instances landing in it
    (in-bag and out-of-bag counted once each) whose label matches the leaf's
    prediction. Returns one array per tree, indexed by node id, NaN at
    split nodes.
    """
    y = np.asarray(y, dtype=np.int64)
    out = []
    for p, tree in enumerate(forest.trees):
        lt = forest.leaf_table[p]
        correct = (tree.label[lt] == y).astype(np.float64)
        num = np.bincount(lt, weights=correct, minlength=tree.n_nodes)
        den = np.bincount(lt, minlength=tree.n_nodes)
        conf = np.full(tree.n_nodes, np.nan)
        hit = den > 0
        conf[hit] = num[hit] / den[hit]
        out.append(conf)
    return out


def leaf_confidence(forest, X, y, p, leaf):
    """Confidence of one leaf of tree p (see ``leaf_confidences``)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != forest.n_train:
        raise ValueError("X does not match the training set the forest was fit on")
    tree = forest.trees[p]
    if not tree.is_leaf(leaf):
        raise ValueError(f"node {leaf} of tree {p} is not a leaf")
    members = forest.leaf_table[p] == leaf
    if not members.any():
        raise ValueError(f"leaf {leaf} of tree {p} has no training instances")
    y = np.asarray(y, dtype=np.int64)
    return float(np.mean(tree.label[leaf] == y[members]))


def _node_confidence_values(forest, confs, X_query):
    X_query = _query_matrix(forest, X_query)
    S = np.zeros((X_query.shape[0], forest.n_train))
    for p, tree in enumerate(forest.trees):
        q = leaves_of(tree, X_query)
        same = q[:, None] == forest.leaf_table[p][None, :]
        S += np.where(same, confs[p][q][:, None], 0.0)
    return 1.0 - S / forest.n_trees


def rfd_node_confidence(forest, X, y, X_query):
    """Same-leaf similarity weighted by the shared leaf's OOB confidence."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != forest.n_train:
        raise ValueError("X does not match the training set the forest was fit on")
    confs = leaf_confidences(forest, y)
    values = _node_confidence_values(forest, confs, X_query)
    return DissimilarityMatrix(values, "node_confidence").validate()


def _kdn_for_members(X, y, members, feats, k):
    """kDN of each member, with neighbors searched among all n training rows
    projected onto ``feats``. Distance ties break to the smaller index
    (stable sort); the member itself is excluded from its neighborhood.

    Squared distances accumulate feature by feature in ascending column
    order, so an independent per-pair loop reproduces them bit for bit.
    """
    n = X.shape[0]
    D = np.zeros((len(members), n))
    for f in feats:
        diff = X[members, f][:, None] - X[None, :, f]
        D += diff * diff
    D[np.arange(len(members)), members] = np.inf
    nn = np.argsort(D, axis=1, kind="stable")[:, :k]
    disagree = y[nn] != y[members][:, None]
    return disagree.sum(axis=1) / k


def kdn_in_path_subspace(forest, p, i, k, X, y):
    """kDN of training instance i, measured in tree p's path subspace.

    The subspace is the set of features tested on the root-to-leaf path of
    the leaf where x_i lands. A root-only tree has an empty subspace: all
    projected distances are zero, so the neighborhood degenerates to the k
    lowest-index training instances (logged as degenerate).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= n:
        raise ValueError(f"k must be < n = {n}, got {k}")
    tree = forest.trees[p]
    leaf = forest.leaf_table[p][i]
    feats = path_features(tree, leaf)
    if feats.size == 0:
        logger.debug("tree %d is a single leaf; kDN for instance %d is degenerate", p, i)
    return float(_kdn_for_members(X, y, np.array([i]), feats, k)[0])


def kdn_cache(forest, X, y, k):
    """kDN of every training instance under every tree, as a (P, n) array.

    x_i's leaf, and hence its path subspace and kDN, are fixed per tree and
    independent of the query, so this is computed once per forest and reused
    for every dissimilarity row. Instances are batched by leaf (they share
    the path subspace).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= n:
        raise ValueError(f"k must be < n = {n}, got {k}")
    out = np.empty((forest.n_trees, n))
    for p, tree in enumerate(forest.trees):
        lt = forest.leaf_table[p]
        for leaf in np.unique(lt):
            members = np.flatnonzero(lt == leaf)
            feats = path_features(tree, leaf)
            if feats.size == 0:
                logger.debug("tree %d is a single leaf; kDN values are degenerate", p)
            out[p, members] = _kdn_for_members(X, y, members, feats, k)
    return out


def _instance_hardness_values(forest, kd, X_query):
    X_query = _query_matrix(forest, X_query)
    S = np.zeros((X_query.shape[0], forest.n_train))
    for p, tree in enumerate(forest.trees):
        q = leaves_of(tree, X_query)
        same = q[:, None] == forest.leaf_table[p][None, :]
        S += np.where(same, (1.0 - kd[p])[None, :], 0.0)
    return 1.0 - S / forest.n_trees


def rfd_instance_hardness(forest, X, y, X_query, k, cache=None):
    """Same-leaf similarity weighted by 1 - kDN of the training instance.

    Per tree: s_p(x, x_i) = 1 - kDN_p(x_i) if both land in the same leaf,
    else 0; the matrix entry is 1 - (sum_p s_p) / P. ``cache`` may carry a
    precomputed ``kdn_cache`` array.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != forest.n_train:
        raise ValueError("X does not match the training set the forest was fit on")
    kd = cache if cache is not None else kdn_cache(forest, X, y, k)
    values = _instance_hardness_values(forest, kd, X_query)
    return DissimilarityMatrix(values, "instance_hardness").validate()


def euclidean_rescaled(X_train, X_query):
    """Euclidean distances with every query row rescaled by its own maximum.

    All-zero rows are left as zeros; everything else ends in [0, 1].
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    X_query = np.atleast_2d(np.asarray(X_query, dtype=np.float64))
    if X_train.shape[1] != X_query.shape[1]:
        raise ValueError(
            f"column mismatch: train has {X_train.shape[1]}, query {X_query.shape[1]}"
        )
    D = cdist(X_query, X_train)
    mx = D.max(axis=1, keepdims=True)
    np.divide(D, mx, out=D, where=mx > 0)
    return DissimilarityMatrix(D, "euclidean").validate()


def average_views(mats):
    """Elementwise mean of per-view dissimilarity matrices (the joint matrix)."""
    if not mats:
        raise ValueError("average_views needs at least one matrix")
    shape = mats[0].shape
    measure = mats[0].measure
    for m in mats[1:]:
        if m.shape != shape:
            raise ValueError(f"shape mismatch: {m.shape} vs {shape}")
        if m.measure != measure:
            raise ValueError(f"measure mismatch: {m.measure!r} vs {measure!r}")
    acc = np.zeros(shape)
    for m in mats:
        acc += m.values
    acc /= len(mats)
    return DissimilarityMatrix(acc, measure).validate()


def save_matrix(mat, path, train_ids=None, k=None, w=None, seed=None):
    """Write a matrix as CSV (header row = training-instance ids) plus a
    ``<path>.meta.json`` sidecar recording measure, view, k, w and seed."""
    path = Path(path)
    n = mat.shape[1]
    ids = list(range(n)) if train_ids is None else list(train_ids)
    if len(ids) != n:
        raise ValueError(f"{len(ids)} train ids for {n} columns")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ids)
        for row in mat.values:
            writer.writerow([repr(float(v)) for v in row])
    meta = {
        "measure": mat.measure,
        "view": mat.view_id,
        "k": k,
        "w": w,
        "seed": seed,
        "shape": list(mat.shape),
    }
    Path(str(path) + ".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )
    return path
