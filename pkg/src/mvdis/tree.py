"""CART decision trees grown to maximum depth, with leaf geometry queries.

Trees are stored as flat parallel arrays with parent links (struct-of-arrays),
so root-to-leaf walks and inter-leaf path lengths are O(depth) without any
global search. Node ids follow preorder construction: the root is node 0 and
children always have larger ids than their parent.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DecisionTree",
    "fit_tree",
    "leaf_of",
    "leaves_of",
    "leaf_path_length",
    "path_features",
    "predict_tree",
]


@dataclass
class DecisionTree:
    """Array-encoded binary CART tree.

    Split nodes test ``x[feature[v]] <= threshold[v]`` (left on true).
    Leaves have ``feature[v] == -1``; their ``label`` is the majority
    in-bag class (ties to the smallest class index) and ``class_counts[v]``
    holds the in-bag class histogram, with bootstrap multiplicity.
    """

    feature: np.ndarray       # (n_nodes,) int32, -1 at leaves
    threshold: np.ndarray     # (n_nodes,) float64, nan at leaves
    left: np.ndarray          # (n_nodes,) int32, -1 at leaves
    right: np.ndarray         # (n_nodes,) int32, -1 at leaves
    parent: np.ndarray        # (n_nodes,) int32, -1 at the root
    depth: np.ndarray         # (n_nodes,) int32
    label: np.ndarray         # (n_nodes,) int32, -1 at split nodes
    class_counts: np.ndarray  # (n_nodes, n_classes) int64
    n_features: int
    n_classes: int

    @property
    def n_nodes(self):
        return len(self.feature)

    def is_leaf(self, node):
        return self.feature[node] < 0

    def leaf_ids(self):
        return np.flatnonzero(self.feature < 0)


def _check_vector(tree, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != tree.n_features:
        raise ValueError(
            f"expected a vector of {tree.n_features} features, got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("feature vector has non-finite components")
    return x


def fit_tree(X, y, sample, mtry, rng, n_classes=None):
    """Grow a CART tree on a bootstrap multiset of rows.

    At every node, ``mtry`` candidate features are drawn without replacement
    and the (feature, threshold) pair maximizing the Gini impurity decrease
    is chosen; thresholds are midpoints between consecutive distinct sorted
    values. Splitting stops when the node is pure or unsplittable (every
    candidate feature constant, or no candidate split reduces impurity).
    Tie-breaks: smallest feature column, then smallest threshold.

    Parameters
    ----------
    X : ndarray (n, m)
    y : ndarray (n,) of int class indices
    sample : ndarray of row indices, with bootstrap multiplicity
    mtry : int, 1 <= mtry <= m
    rng : numpy Generator (one feature draw per node)
    n_classes : int, optional (inferred from y when omitted)
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    sample = np.asarray(sample, dtype=np.int64)
    if sample.size == 0:
        raise ValueError("cannot fit a tree on an empty sample")
    n, m = X.shape
    if not 1 <= mtry <= m:
        raise ValueError(f"mtry must be in [1, {m}], got {mtry}")
    if n_classes is None:
        n_classes = int(y.max()) + 1

    feature, threshold, left, right = [], [], [], []
    parent, depth, label, class_counts = [], [], [], []

    def new_node(par, dep):
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        parent.append(par)
        depth.append(dep)
        label.append(-1)
        class_counts.append(None)
        return len(feature) - 1

    # LIFO stack, right child pushed first => preorder ids
    stack = [(sample, -1, 0, "root")]
    while stack:
        rows, par, dep, side = stack.pop()
        node = new_node(par, dep)
        if side == "left":
            left[par] = node
        elif side == "right":
            right[par] = node

        labels = y[rows]
        counts = np.bincount(labels, minlength=n_classes)
        class_counts[node] = counts
        split = None
        if np.count_nonzero(counts) > 1:
            split = _best_split(X, labels, rows, counts, mtry, rng)
        if split is None:
            label[node] = int(np.argmax(counts))
            continue
        col, thr = split
        feature[node] = col
        threshold[node] = thr
        go_left = X[rows, col] <= thr
        stack.append((rows[~go_left], node, dep + 1, "right"))
        stack.append((rows[go_left], node, dep + 1, "left"))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        parent=np.asarray(parent, dtype=np.int32),
        depth=np.asarray(depth, dtype=np.int32),
        label=np.asarray(label, dtype=np.int32),
        class_counts=np.asarray(class_counts, dtype=np.int64),
        n_features=m,
        n_classes=n_classes,
    )


def _best_split(X, labels, rows, counts, mtry, rng):
    """Best (feature, threshold) over mtry drawn features, or None.

    The split score sum(c_L^2)/n_L + sum(c_R^2)/n_R is an affine transform
    of the Gini decrease; "does this split reduce impurity at all" is
    decided exactly in integer arithmetic so zero-gain splits never fire.
    """
    n_node = len(rows)
    m = X.shape[1]
    feats = np.sort(rng.choice(m, size=mtry, replace=False))
    sub = X[np.ix_(rows, feats)]

    order = np.argsort(sub, axis=0, kind="stable")
    v_sorted = np.take_along_axis(sub, order, axis=0)
    y_sorted = labels[order]                                  # (n_node, mtry)
    valid = v_sorted[:-1] < v_sorted[1:]                      # distinct-value boundaries
    if not valid.any():
        return None

    k = counts.shape[0]
    onehot = y_sorted[:, :, None] == np.arange(k)[None, None, :]
    cum = np.cumsum(onehot, axis=0, dtype=np.int64)[:-1]      # (n_node-1, mtry, k)
    n_left = np.arange(1, n_node, dtype=np.int64)[:, None]
    n_right = n_node - n_left
    c_right = counts[None, None, :] - cum
    num = (cum ** 2).sum(axis=2) * n_right + (c_right ** 2).sum(axis=2) * n_left
    den = n_left * n_right
    parent_num = int((counts.astype(np.int64) ** 2).sum())
    improving = valid & (num * n_node > parent_num * den)     # exact: gain > 0
    if not improving.any():
        return None

    score = np.where(improving, num / den, -np.inf)
    # feature-major argmax: smallest feature wins ties, then smallest threshold
    flat = int(np.argmax(score.T))
    f_idx, pos = divmod(flat, n_node - 1)
    lo = v_sorted[pos, f_idx]
    hi = v_sorted[pos + 1, f_idx]
    thr = (lo + hi) / 2.0
    if thr >= hi:  # adjacent floats: midpoint rounded up would empty the right child
        thr = lo
    return int(feats[f_idx]), float(thr)


def leaf_of(tree, x):
    """Leaf id reached by descending the tree with vector x."""
    x = _check_vector(tree, x)
    node = 0
    while tree.feature[node] >= 0:
        if x[tree.feature[node]] <= tree.threshold[node]:
            node = tree.left[node]
        else:
            node = tree.right[node]
    return int(node)


def leaves_of(tree, X):
    """Vectorized leaf assignment for every row of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise ValueError(
            f"expected a matrix with {tree.n_features} columns, got shape {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("query matrix has non-finite values")
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        f = tree.feature[node]
        active = np.flatnonzero(f >= 0)
        if active.size == 0:
            return node
        cur = node[active]
        go_left = X[active, tree.feature[cur]] <= tree.threshold[cur]
        node[active] = np.where(go_left, tree.left[cur], tree.right[cur])


def predict_tree(tree, x):
    """Class index of the leaf x lands in."""
    return int(tree.label[leaf_of(tree, x)])


def path_features(tree, leaf):
    """Sorted array of feature columns tested on the root->leaf path."""
    if not tree.is_leaf(leaf):
        raise ValueError(f"node {leaf} is not a leaf")
    feats = []
    node = int(tree.parent[leaf])
    while node >= 0:
        feats.append(int(tree.feature[node]))
        node = int(tree.parent[node])
    return np.unique(np.asarray(feats, dtype=np.int64))


def leaf_path_length(tree, a, b):
    """Number of edges on the unique tree path between leaves a and b."""
    if not (tree.is_leaf(a) and tree.is_leaf(b)):
        raise ValueError(f"nodes {a} and {b} must both be leaves")
    assert 0 <= a < tree.n_nodes and 0 <= b < tree.n_nodes
    if a == b:
        return 0
    da, db = int(tree.depth[a]), int(tree.depth[b])
    edges = 0
    while da > db:
        a = int(tree.parent[a])
        da -= 1
        edges += 1
    while db > da:
        b = int(tree.parent[b])
        db -= 1
        edges += 1
    while a != b:
        a = int(tree.parent[a])
        b = int(tree.parent[b])
        edges += 2
    return edges
