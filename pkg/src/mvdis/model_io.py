"""Save and load fitted models as MVDIS1 containers.

A model file holds the run config, the class table, every per-view forest
(all node arrays, in-bag counts, leaf table), the measure caches, the joint
train matrix and the final forest. Writing the same model twice produces
byte-identical files, and a loaded model predicts exactly like the
original.
"""

import numpy as np

from ._container import load_arrays, save_arrays
from .config import RunConfig
from .dissim import MeasureCache
from .forest import Forest
from .pipeline import MvlModel
from .tree import DecisionTree

__all__ = ["load_model", "save_model"]

_TREE_FIELDS = (
    ("feature", np.int32),
    ("threshold", np.float64),
    ("left", np.int32),
    ("right", np.int32),
    ("parent", np.int32),
    ("depth", np.int32),
    ("label", np.int32),
)


def _seed_spec(seed):
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": int(seed.entropy), "spawn_key": [int(v) for v in seed.spawn_key]}
    return {"entropy": int(seed), "spawn_key": []}


def _seed_from_spec(spec):
    return np.random.SeedSequence(spec["entropy"], spawn_key=tuple(spec["spawn_key"]))


def _pack_forest(prefix, forest, arrays, meta):
    offsets = np.zeros(forest.n_trees + 1, dtype=np.int64)
    for p, t in enumerate(forest.trees):
        offsets[p + 1] = offsets[p] + t.n_nodes
    for name, dtype in _TREE_FIELDS:
        arrays[prefix + name] = np.concatenate(
            [getattr(t, name) for t in forest.trees]
        ).astype(dtype)
    arrays[prefix + "class_counts"] = np.concatenate(
        [t.class_counts for t in forest.trees], axis=0
    ).astype(np.int64)
    arrays[prefix + "offsets"] = offsets
    arrays[prefix + "in_bag"] = forest.in_bag
    arrays[prefix + "leaf_table"] = forest.leaf_table
    meta[prefix + "info"] = {
        "mtry": int(forest.mtry),
        "n_features": int(forest.n_features),
        "n_classes": int(forest.n_classes),
        "seed": _seed_spec(forest.seed),
    }


def _unpack_forest(prefix, arrays, meta):
    info = meta[prefix + "info"]
    offsets = arrays[prefix + "offsets"]
    trees = []
    for p in range(len(offsets) - 1):
        lo, hi = offsets[p], offsets[p + 1]
        fields = {name: arrays[prefix + name][lo:hi] for name, _ in _TREE_FIELDS}
        trees.append(
            DecisionTree(
                class_counts=arrays[prefix + "class_counts"][lo:hi],
                n_features=info["n_features"],
                n_classes=info["n_classes"],
                **fields,
            )
        )
    return Forest(
        trees=trees,
        in_bag=arrays[prefix + "in_bag"],
        leaf_table=arrays[prefix + "leaf_table"],
        n_classes=info["n_classes"],
        seed=_seed_from_spec(info["seed"]),
        mtry=info["mtry"],
        n_features=info["n_features"],
    )


def save_model(model, path):
    arrays = {"d_joint": model.d_joint}
    meta = {
        "kind": "mvl-model",
        "config": model.config.to_dict(),
        "class_table": list(model.class_table),
        "n_views": model.n_views,
    }
    _pack_forest("final.", model.final_forest, arrays, meta)
    for q in range(model.n_views):
        if model.measure == "euclidean":
            arrays[f"view{q}.train"] = model.train_views[q]
            continue
        _pack_forest(f"view{q}.", model.view_forests[q], arrays, meta)
        cache = model.caches[q]
        if cache is None:
            continue
        if cache.kind == "node_confidence":
            arrays[f"view{q}.cache"] = np.concatenate(cache.per_tree)
        else:
            arrays[f"view{q}.cache"] = np.asarray(cache.per_tree)
    save_arrays(path, meta, arrays)
    return path


def load_model(path):
    meta, arrays = load_arrays(path)
    if meta.get("kind") != "mvl-model":
        raise ValueError(f"{path}: not a model file (kind={meta.get('kind')!r})")
    config = RunConfig(**meta["config"]).validate()
    final = _unpack_forest("final.", arrays, meta)
    view_forests = []
    caches = []
    train_views = []
    for q in range(meta["n_views"]):
        if config.measure == "euclidean":
            train_views.append(arrays[f"view{q}.train"])
            caches.append(None)
            continue
        forest = _unpack_forest(f"view{q}.", arrays, meta)
        view_forests.append(forest)
        cache = None
        if config.measure == "node_confidence":
            flat = arrays[f"view{q}.cache"]
            offsets = arrays[f"view{q}.offsets"]
            per_tree = [flat[offsets[p] : offsets[p + 1]] for p in range(forest.n_trees)]
            cache = MeasureCache("node_confidence", per_tree)
        elif config.measure == "instance_hardness":
            cache = MeasureCache("instance_hardness", arrays[f"view{q}.cache"])
        caches.append(cache)
    return MvlModel(
        config=config,
        class_table=meta["class_table"],
        view_forests=view_forests,
        final_forest=final,
        d_joint=arrays["d_joint"],
        caches=caches,
        train_views=train_views,
    )
