"""Bagged forests with out-of-bag tracking and a training leaf-assignment table.

Every dissimilarity measure consumes ``leaf_table``: for each tree p and
training row i it records the leaf i lands in, so the n x n measures never
re-route training instances. The table costs O(P*n) memory by design.
"""

import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .tree import fit_tree, leaf_of, leaves_of

__all__ = ["Forest", "fit_forest", "predict_forest", "predict_forest_batch", "oob_correct"]

logger = logging.getLogger(__name__)


@dataclass
class Forest:
    """P fitted trees plus bootstrap bookkeeping.

    Attributes
    ----------
    trees : list of DecisionTree
    in_bag : ndarray (P, n)
        Bootstrap draw counts; row p sums to n. Tree p's out-of-bag set is
        ``{i : in_bag[p, i] == 0}``.
    leaf_table : ndarray (P, n)
        ``leaf_table[p, i]`` = leaf of tree p that training row i lands in.
    n_classes : int
    seed : int or numpy SeedSequence
    """

    trees: list
    in_bag: np.ndarray
    leaf_table: np.ndarray
    n_classes: int
    seed: object
    mtry: int
    n_features: int

    @property
    def n_trees(self):
        return len(self.trees)

    @property
    def n_train(self):
        return self.in_bag.shape[1]


def _as_seedseq(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _build_one(X, y, mtry, n_classes, child_seed):
    rng = np.random.default_rng(child_seed)
    n = X.shape[0]
    sample = rng.integers(0, n, size=n)
    in_bag = np.bincount(sample, minlength=n)
    tree = fit_tree(X, y, sample, mtry, rng, n_classes=n_classes)
    return tree, in_bag, leaves_of(tree, X)


def fit_forest(X, y, p_trees, mtry, seed, n_classes=None, n_jobs=1):
    """Fit a bagged forest of ``p_trees`` maximum-depth trees.

    Tree p's bootstrap and feature draws come from an rng spawned from
    ``(seed, p)``, so changing ``p_trees`` or the parallelism degree never
    reshuffles earlier trees; results depend only on the seed.

    Parameters
    ----------
    X : ndarray (n, m)
    y : ndarray (n,) int class indices
    p_trees : int >= 1
    mtry : int, candidate features per node
    seed : int or numpy SeedSequence
    n_jobs : int, trees built in parallel when > 1 (identical output)
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if p_trees < 1:
        raise ValueError(f"p_trees must be >= 1, got {p_trees}")
    n, m = X.shape
    if n_classes is None:
        n_classes = int(y.max()) + 1
    children = _as_seedseq(seed).spawn(p_trees)

    if n_jobs == 1:
        built = [_build_one(X, y, mtry, n_classes, c) for c in children]
    else:
        built = Parallel(n_jobs=n_jobs)(
            delayed(_build_one)(X, y, mtry, n_classes, c) for c in children
        )
    trees = [b[0] for b in built]
    in_bag = np.stack([b[1] for b in built]).astype(np.int64)
    leaf_table = np.stack([b[2] for b in built]).astype(np.int64)

    empty_oob = int(np.sum(np.all(in_bag > 0, axis=1)))
    if empty_oob:
        log = logger.warning if n >= 10 else logger.debug
        log("%d of %d trees have no out-of-bag instances", empty_oob, p_trees)
    return Forest(
        trees=trees,
        in_bag=in_bag,
        leaf_table=leaf_table,
        n_classes=n_classes,
        seed=seed,
        mtry=mtry,
        n_features=m,
    )


def predict_forest(forest, x):
    """Majority vote over trees; ties go to the smallest class index."""
    votes = np.array([tree.label[leaf_of(tree, x)] for tree in forest.trees])
    return int(np.argmax(np.bincount(votes, minlength=forest.n_classes)))


def predict_forest_batch(forest, X):
    """Vectorized majority vote for every row of X."""
    X = np.asarray(X, dtype=np.float64)
    counts = np.zeros((X.shape[0], forest.n_classes), dtype=np.int64)
    rows = np.arange(X.shape[0])
    for tree in forest.trees:
        counts[rows, tree.label[leaves_of(tree, X)]] += 1
    return np.argmax(counts, axis=1)


def oob_correct(forest, X, y):
    """Per (tree, instance) OOB correctness as a masked P x n array.

    Entry (p, i) is unmasked iff instance i is out-of-bag for tree p, and
    then records whether tree p predicts y[i] for x_i.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != forest.n_train:
        raise ValueError("X does not match the training set the forest was fit on")
    preds = np.stack(
        [tree.label[forest.leaf_table[p]] for p, tree in enumerate(forest.trees)]
    )
    correct = preds == y[None, :]
    return np.ma.masked_array(correct, mask=forest.in_bag > 0)
