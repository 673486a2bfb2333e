"""Multi-view classification through random-forest dissimilarity spaces."""

from .config import RunConfig, resolve_mtry
from .data import (
    DataError,
    MultiViewDataset,
    SplitIndices,
    encode_labels,
    load_multiview,
    save_multiview,
    stratified_split,
    subset,
)
from .dissim import (
    MEASURES,
    DissimilarityMatrix,
    MeasureCache,
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
from .forest import Forest, fit_forest, oob_correct, predict_forest, predict_forest_batch
from .model_io import load_model, save_model
from .pipeline import MvlModel, fit_mvl, predict_mvl, predict_mvl_batch, represent, transform
from .tree import (
    DecisionTree,
    fit_tree,
    leaf_of,
    leaf_path_length,
    leaves_of,
    path_features,
    predict_tree,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DecisionTree",
    "DissimilarityMatrix",
    "Forest",
    "MEASURES",
    "MeasureCache",
    "MultiViewDataset",
    "MvlModel",
    "RunConfig",
    "SplitIndices",
    "average_views",
    "encode_labels",
    "euclidean_rescaled",
    "fit_forest",
    "fit_mvl",
    "fit_tree",
    "kdn_cache",
    "kdn_in_path_subspace",
    "leaf_confidence",
    "leaf_confidences",
    "leaf_of",
    "leaf_path_length",
    "leaves_of",
    "load_model",
    "load_multiview",
    "oob_correct",
    "path_features",
    "predict_forest",
    "predict_forest_batch",
    "predict_mvl",
    "predict_mvl_batch",
    "predict_tree",
    "represent",
    "resolve_mtry",
    "rfd_instance_hardness",
    "rfd_node_confidence",
    "rfd_path_based",
    "rfd_plain",
    "save_matrix",
    "save_model",
    "save_multiview",
    "stratified_split",
    "subset",
    "transform",
]
