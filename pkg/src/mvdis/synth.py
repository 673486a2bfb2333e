"""Synthetic multi-view datasets used by the benchmarks and tests.

Three generators, all deterministic per seed:

- ``make_blobs``: well-separated Gaussian clusters per view, the easy
  sanity-check dataset.
- ``make_noisy_leaf``: two overlapping clusters where a fraction of the
  instances nearest the class boundary get their labels flipped; the noisy
  instances have high kDN, the regime the instance-hardness measure is
  built to discount.
- ``make_iris_like``: one 4-feature view, 3 classes, where two feature
  pairs carry contradictory neighborhood structure: a planted instance
  sits inside a wrong-class cluster in features (0, 1) but at its own
  class center in features (2, 3), so its kDN differs strongly between
  the two subspaces.
"""

import numpy as np

from .data import MultiViewDataset, encode_labels

__all__ = ["SYNTH_KINDS", "make_blobs", "make_iris_like", "make_noisy_leaf", "make_synth"]

SYNTH_KINDS = ("blobs", "noisyleaf", "irislike")


def _dataset(name, views, y_idx, n_classes):
    raw = [f"c{int(v)}" for v in y_idx]
    labels, class_table = encode_labels(raw)
    assert len(class_table) == n_classes
    return MultiViewDataset(
        name=name,
        views=[np.ascontiguousarray(V, dtype=np.float64) for V in views],
        labels=labels,
        class_table=class_table,
    ).validate()


def _spread_centers(rng, n_classes, n_features, sep, min_gap):
    # rejection-sample until all centers are at least min_gap apart
    for _ in range(200):
        centers = sep * rng.standard_normal((n_classes, n_features))
        gap = np.inf
        for a in range(n_classes):
            for b in range(a + 1, n_classes):
                gap = min(gap, float(np.linalg.norm(centers[a] - centers[b])))
        if n_classes == 1 or gap >= min_gap:
            return centers
    raise RuntimeError("could not place separated centers; raise sep")


def make_blobs(n=40, n_views=2, n_classes=2, n_features=2, sep=6.0, std=1.0, seed=0):
    """Separable Gaussian blobs, one independent geometry per view."""
    if n < 2 * n_classes:
        raise ValueError(f"need at least 2 instances per class, got n={n}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    y = np.arange(n) % n_classes
    views = []
    for _ in range(n_views):
        centers = _spread_centers(rng, n_classes, n_features, sep, 6.0 * std)
        views.append(centers[y] + std * rng.standard_normal((n, n_features)))
    return _dataset(f"blobs{n}x{n_views}", views, y, n_classes)


def make_noisy_leaf(n=80, n_views=1, noise_frac=0.15, std=1.0, gap=3.0,
                    m_noise=58, seed=0):
    """Two clusters separated along column 0, plus many irrelevant columns,
    with labels flipped for the instances nearest the class boundary.

    The flipped instances sit among opposite-label neighbors, so their kDN
    is high while deep-cluster instances stay easy. The irrelevant columns
    keep the feature count far above the sample count, the regime where
    trees route through many different subspaces.
    """
    if not 0.0 <= noise_frac < 0.5:
        raise ValueError(f"noise_frac must be in [0, 0.5), got {noise_frac}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    y = np.arange(n) % 2
    offset = np.where(y == 0, -gap / 2.0, gap / 2.0)
    views = []
    for _ in range(n_views):
        X = std * rng.standard_normal((n, 2))
        X[:, 0] += offset
        views.append(np.hstack([X, std * rng.standard_normal((n, m_noise))]))
    # flip the labels of the instances nearest the x0 = 0 midplane (view 0)
    n_flip = int(round(noise_frac * n))
    if n_flip:
        order = np.argsort(np.abs(views[0][:, 0]), kind="stable")
        y = y.copy()
        y[order[:n_flip]] = 1 - y[order[:n_flip]]
    return _dataset(f"noisyleaf{n}", views, y, 2)


def make_iris_like(n_per_class=20, std=0.5, seed=0):
    """3 classes, 4 features, one view; features (0, 1) confuse two classes
    while features (2, 3) separate all three.

    Instance 0 (class c1) is planted at class c0's center in features
    (0, 1) and at its own center in features (2, 3), so its kDN is ~1 in
    the first subspace and ~0 in the second.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    n = 3 * n_per_class
    y = np.repeat(np.arange(3), n_per_class)
    centers_a = np.array([[0.0, 0.0], [6.0, 6.0], [6.0, 6.0]])  # c1, c2 collide
    centers_b = np.array([[0.0, 0.0], [8.0, 0.0], [0.0, 8.0]])  # all separated
    A = centers_a[y] + std * rng.standard_normal((n, 2))
    B = centers_b[y] + std * rng.standard_normal((n, 2))
    X = np.hstack([A, B])
    # plant a class-1 instance that looks like class 0 in features (0, 1)
    planted = n_per_class  # first class-1 row
    X[planted, 0:2] = centers_a[0]
    X[planted, 2:4] = centers_b[1]
    order = np.arange(n)
    order[[0, planted]] = order[[planted, 0]]
    return _dataset("irislike", [X[order]], y[order], 3)


def make_synth(kind, seed=0, **params):
    """Dispatch by kind; see SYNTH_KINDS."""
    if kind == "blobs":
        return make_blobs(seed=seed, **params)
    if kind == "noisyleaf":
        return make_noisy_leaf(seed=seed, **params)
    if kind == "irislike":
        return make_iris_like(seed=seed, **params)
    raise ValueError(f"unknown synthetic kind {kind!r}; choose one of {SYNTH_KINDS}")
