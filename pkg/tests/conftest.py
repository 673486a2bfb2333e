import numpy as np
import pytest

from mvdis.tree import DecisionTree


def build_tree(nodes, n_features, n_classes):
    """Build a DecisionTree from (feature, threshold, left, right, parent,
    depth, label, counts) tuples; feature=-1 marks a leaf."""
    n = len(nodes)
    t = DecisionTree(
        feature=np.array([v[0] for v in nodes], dtype=np.int32),
        threshold=np.array([v[1] for v in nodes], dtype=np.float64),
        left=np.array([v[2] for v in nodes], dtype=np.int32),
        right=np.array([v[3] for v in nodes], dtype=np.int32),
        parent=np.array([v[4] for v in nodes], dtype=np.int32),
        depth=np.array([v[5] for v in nodes], dtype=np.int32),
        label=np.array([v[6] for v in nodes], dtype=np.int32),
        class_counts=np.array([v[7] for v in nodes], dtype=np.int64),
        n_features=n_features,
        n_classes=n_classes,
    )
    assert t.n_nodes == n
    return t


@pytest.fixture
def eleven_node_tree():
    """Hand-built 11-node tree, preorder numbering, depths 0..5.

    Leaves are 2, 5, 7, 8, 9, 10; leaf 10 hangs directly off the root.
    The 2<->8 leaf pair is 5 edges apart, the 2<->10 pair 3 edges.
    """
    N = np.nan
    nodes = [
        # feature, threshold, left, right, parent, depth, label, counts
        (0, 5.00, 1, 10, -1, 0, -1, [6, 5]),   # 0
        (1, 5.00, 2, 3, 0, 1, -1, [6, 2]),     # 1
        (-1, N, -1, -1, 1, 2, 0, [3, 0]),      # 2 leaf
        (0, 2.50, 4, 9, 1, 2, -1, [3, 2]),     # 3
        (1, 7.50, 5, 6, 3, 3, -1, [1, 2]),     # 4
        (-1, N, -1, -1, 4, 4, 1, [0, 1]),      # 5 leaf
        (0, 1.25, 7, 8, 4, 4, -1, [1, 1]),     # 6
        (-1, N, -1, -1, 6, 5, 0, [1, 0]),      # 7 leaf
        (-1, N, -1, -1, 6, 5, 1, [0, 1]),      # 8 leaf
        (-1, N, -1, -1, 3, 3, 0, [2, 0]),      # 9 leaf
        (-1, N, -1, -1, 0, 1, 1, [0, 3]),      # 10 leaf
    ]
    return build_tree(nodes, n_features=2, n_classes=2)


@pytest.fixture
def tiny_xy():
    rng = np.random.default_rng(7)
    X = np.round(rng.normal(size=(20, 3)), 3)
    y = (X[:, 0] + X[:, 1] > 0).astype(np.int64)
    y[0], y[1] = 0, 1  # both classes present whatever the draw
    return X, y
