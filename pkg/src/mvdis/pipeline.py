"""Joint multi-view learning on averaged dissimilarity representations.

Training: fit one forest per view, build each view's n x n train-vs-train
dissimilarity matrix, average them elementwise into the joint matrix, then
fit a final forest that treats joint-matrix rows as feature vectors.
Prediction: route the query through every per-view forest to get its
dissimilarity row per view, average, and classify with the final forest.

All randomness flows from one seed: view q's forest draws from
SeedSequence(seed, spawn_key=(0, q)) and the final forest from
SeedSequence(seed, spawn_key=(1,)), so runs are reproducible end to end
and independent of --jobs.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import dissim
from .config import RunConfig, resolve_mtry
from .data import MultiViewDataset
from .dissim import DissimilarityMatrix, MeasureCache
from .forest import Forest, fit_forest, predict_forest_batch

__all__ = ["MvlModel", "fit_mvl", "predict_mvl", "predict_mvl_batch", "represent", "transform"]

logger = logging.getLogger(__name__)


@dataclass
class MvlModel:
    """Everything needed to represent and classify new multi-view instances."""

    config: RunConfig
    class_table: list
    view_forests: list  # one Forest per view; empty for measure="euclidean"
    final_forest: Forest
    d_joint: np.ndarray  # n x n joint train matrix the final forest was fit on
    caches: list = field(default_factory=list)  # per-view MeasureCache or None
    train_views: list = field(default_factory=list)  # only for measure="euclidean"

    @property
    def measure(self):
        return self.config.measure

    @property
    def n_views(self):
        if self.measure == "euclidean":
            return len(self.train_views)
        return len(self.view_forests)

    @property
    def n_train(self):
        return self.d_joint.shape[0]


def _view_matrix(measure, forest, X_train, y, X_query, cache, k, w):
    """Dissimilarity of X_query against the training set under one view."""
    if measure == "plain":
        return dissim.rfd_plain(forest, X_query)
    if measure == "path_based":
        return dissim.rfd_path_based(forest, X_query, w)
    if measure == "node_confidence":
        values = dissim._node_confidence_values(forest, cache.per_tree, X_query)
        return DissimilarityMatrix(values, measure).validate()
    if measure == "instance_hardness":
        values = dissim._instance_hardness_values(forest, cache.per_tree, X_query)
        return DissimilarityMatrix(values, measure).validate()
    if measure == "euclidean":
        return dissim.euclidean_rescaled(X_train, X_query)
    raise ValueError(f"unknown measure {measure!r}")


def fit_mvl(train, config):
    """Fit the full joint pipeline on a multi-view training set."""
    if not isinstance(train, MultiViewDataset):
        raise TypeError("train must be a MultiViewDataset")
    train.validate()
    config.validate()
    measure = config.measure
    y = train.labels
    n = train.n_instances

    view_forests = []
    caches = []
    train_views = []
    mats = []
    for q, V in enumerate(train.views):
        cache = None
        forest = None
        if measure == "euclidean":
            train_views.append(V.copy())
        else:
            forest = fit_forest(
                V,
                y,
                config.p_trees,
                resolve_mtry(V.shape[1], config.mtry),
                np.random.SeedSequence(config.seed, spawn_key=(0, q)),
                n_classes=train.n_classes,
                n_jobs=config.n_jobs,
            )
            view_forests.append(forest)
            if measure == "node_confidence":
                cache = MeasureCache("node_confidence", dissim.leaf_confidences(forest, y))
            elif measure == "instance_hardness":
                cache = MeasureCache(
                    "instance_hardness", dissim.kdn_cache(forest, V, y, config.k)
                )
        caches.append(cache)
        mat = _view_matrix(measure, forest, V, y, V, cache, config.k, config.w)
        mat.view_id = q
        mats.append(mat)
        logger.info("view %d: %s matrix %s built", q, measure, mat.shape)

    joint = dissim.average_views(mats)
    final_forest = fit_forest(
        joint.values,
        y,
        config.p_trees,
        resolve_mtry(n, config.mtry),
        np.random.SeedSequence(config.seed, spawn_key=(1,)),
        n_classes=train.n_classes,
        n_jobs=config.n_jobs,
    )
    return MvlModel(
        config=config,
        class_table=list(train.class_table),
        view_forests=view_forests,
        final_forest=final_forest,
        d_joint=joint.values,
        caches=caches,
        train_views=train_views,
    )


def _check_views(model, views):
    views = [np.atleast_2d(np.asarray(V, dtype=np.float64)) for V in views]
    if len(views) != model.n_views:
        raise ValueError(f"expected {model.n_views} views, got {len(views)}")
    r = views[0].shape[0]
    for q, V in enumerate(views):
        if V.shape[0] != r:
            raise ValueError(f"view {q} has {V.shape[0]} rows, view 0 has {r}")
        want = (
            model.train_views[q].shape[1]
            if model.measure == "euclidean"
            else model.view_forests[q].n_features
        )
        if V.shape[1] != want:
            raise ValueError(f"view {q} has {V.shape[1]} features, model expects {want}")
        if not np.isfinite(V).all():
            raise ValueError(f"view {q} contains non-finite values")
    return views


def transform(model, views):
    """Joint dissimilarity rows for a batch of query instances."""
    views = _check_views(model, views)
    cfg = model.config
    mats = []
    for q, V in enumerate(views):
        forest = None if model.measure == "euclidean" else model.view_forests[q]
        X_train = model.train_views[q] if model.measure == "euclidean" else None
        mat = _view_matrix(
            model.measure, forest, X_train, None, V, model.caches[q], cfg.k, cfg.w
        )
        mat.view_id = q
        mats.append(mat)
    return dissim.average_views(mats).values


def represent(model, x_views):
    """Joint dissimilarity row (length n_train) for one query instance."""
    rows = transform(model, [np.atleast_2d(v) for v in x_views])
    if rows.shape[0] != 1:
        raise ValueError("represent takes exactly one instance per view")
    return rows[0]


def predict_mvl_batch(model, views):
    """Predicted class indices for a batch of query instances."""
    return predict_forest_batch(model.final_forest, transform(model, views))


def predict_mvl(model, x_views):
    """Predicted class index for one query instance."""
    return int(predict_mvl_batch(model, [np.atleast_2d(v) for v in x_views])[0])
