"""Multi-view dataset loading, label encoding and stratified splitting.

A multi-view dataset is a set of Q feature matrices (the views) describing
the same n instances, plus one label per instance. Datasets are declared on
disk through a small JSON manifest pointing at one CSV file per view and a
text file with one label per line.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DataError",
    "MultiViewDataset",
    "SplitIndices",
    "encode_labels",
    "load_multiview",
    "save_multiview",
    "stratified_split",
    "subset",
]


class DataError(Exception):
    """Raised when user-supplied data (manifest, CSV, labels) is invalid."""


@dataclass
class MultiViewDataset:
    """Q per-view feature matrices over the same n instances, plus labels.

    Attributes
    ----------
    name : str
        Dataset identifier (from the manifest).
    views : list of ndarray
        Q float matrices; view q has shape (n, m_q). All views share the
        same row order: row i of every view describes instance i.
    labels : ndarray of shape (n,)
        Integer class indices into ``class_table``.
    class_table : list of str
        Original label strings, sorted lexicographically; ``labels[i]`` is
        the index of instance i's label in this table.
    """

    name: str
    views: list = field(default_factory=list)
    labels: np.ndarray = None
    class_table: list = field(default_factory=list)

    @property
    def n_instances(self):
        return len(self.labels)

    @property
    def n_views(self):
        return len(self.views)

    @property
    def n_classes(self):
        return len(self.class_table)

    def validate(self):
        """Check the dataset invariants, raising DataError on violation."""
        if not self.views:
            raise DataError(f"dataset {self.name!r}: no views")
        n = self.views[0].shape[0]
        if n < 2:
            raise DataError(f"dataset {self.name!r}: needs at least 2 instances, got {n}")
        for q, v in enumerate(self.views):
            if v.ndim != 2 or v.shape[1] == 0:
                raise DataError(f"dataset {self.name!r}: view {q} has no columns")
            if v.shape[0] != n:
                raise DataError(
                    f"dataset {self.name!r}: view {q} has {v.shape[0]} rows, expected {n}"
                )
            if not np.all(np.isfinite(v)):
                i = int(np.argwhere(~np.isfinite(v))[0][0])
                raise DataError(
                    f"dataset {self.name!r}: view {q} has a non-finite value at row {i + 1}"
                )
        if len(self.labels) != n:
            raise DataError(
                f"dataset {self.name!r}: {len(self.labels)} labels for {n} instances"
            )
        if not self.class_table:
            raise DataError(f"dataset {self.name!r}: empty class table")
        if self.labels.min() < 0 or self.labels.max() >= len(self.class_table):
            raise DataError(f"dataset {self.name!r}: label index out of range")
        return self


@dataclass
class SplitIndices:
    """Disjoint train/test row indices partitioning {0..n-1}."""

    train: np.ndarray
    test: np.ndarray


def encode_labels(raw):
    """Encode label strings as indices into a sorted class table.

    Parameters
    ----------
    raw : sequence of str

    Returns
    -------
    labels : ndarray of int
    class_table : list of str
        Sorted lexicographically; ``class_table[labels[i]] == raw[i]``.
    """
    if len(raw) == 0:
        raise DataError("cannot encode an empty label list")
    class_table = sorted(set(raw))
    index = {c: i for i, c in enumerate(class_table)}
    labels = np.array([index[r] for r in raw], dtype=np.int64)
    return labels, class_table


def _read_view_csv(path):
    """Parse one view CSV: optional single header row, one instance per row.

    The first row is treated as a header iff it contains any non-numeric
    cell. Raises DataError naming the file and 1-based row on bad input.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"view file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty view file")

    def parse_row(cells, rownum):
        vals = []
        for j, cell in enumerate(cells):
            try:
                vals.append(float(cell))
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell {cell!r} at row {rownum}, column {j + 1}"
                ) from None
        return vals

    start = 0
    try:
        first = parse_row(rows[0], 1)
    except DataError:
        start = 1  # header row
        first = None
    data = [] if first is None else [first]
    width = len(rows[start if first is None else 0])
    for i in range(start + (0 if first is None else 1), len(rows)):
        if len(rows[i]) != width:
            raise DataError(
                f"{path}: row {i + 1} has {len(rows[i])} columns, expected {width}"
            )
        data.append(parse_row(rows[i], i + 1))
    if not data:
        raise DataError(f"{path}: no data rows")
    mat = np.asarray(data, dtype=np.float64)
    if mat.shape[1] == 0:
        raise DataError(f"{path}: view has zero columns")
    bad = ~np.isfinite(mat)
    if bad.any():
        i = int(np.argwhere(bad)[0][0])
        raise DataError(f"{path}: non-finite value at row {i + 1 + start}")
    return mat


def _read_labels(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"label file not found: {path}")
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise DataError(f"{path}: empty label file")
    for i, ln in enumerate(lines):
        if not ln.strip():
            raise DataError(f"{path}: blank label at line {i + 1}")
    return [ln.strip() for ln in lines]


def load_multiview(manifest_path):
    """Load a multi-view dataset from a JSON manifest.

    The manifest is ``{"name": str, "views": [path, ...], "labels": path}``;
    relative paths are resolved against the manifest's directory. Row i of
    every view file describes the same instance.

    Raises
    ------
    DataError
        Missing file, row-count mismatch across views, non-numeric cell,
        empty view, or label-count mismatch.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"manifest not found: {manifest_path}")
    try:
        spec = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"{manifest_path}: invalid JSON ({e})") from None
    for key in ("name", "views", "labels"):
        if key not in spec:
            raise DataError(f"{manifest_path}: missing manifest key {key!r}")
    if not spec["views"]:
        raise DataError(f"{manifest_path}: manifest lists no views")

    base = manifest_path.parent
    views = []
    for vp in spec["views"]:
        views.append(_read_view_csv(base / vp))
    n = views[0].shape[0]
    for q, v in enumerate(views):
        if v.shape[0] != n:
            raise DataError(
                f"{base / spec['views'][q]}: has {v.shape[0]} rows, "
                f"but view {spec['views'][0]!r} has {n}"
            )
    raw_labels = _read_labels(base / spec["labels"])
    if len(raw_labels) != n:
        raise DataError(
            f"{base / spec['labels']}: {len(raw_labels)} labels for {n} instances"
        )
    labels, class_table = encode_labels(raw_labels)
    return MultiViewDataset(str(spec["name"]), views, labels, class_table).validate()


def save_multiview(ds, out_dir, manifest_name="manifest.json"):
    """Write a dataset as view CSVs + label file + manifest; returns manifest path.

    Values are written with ``repr`` so a load round-trips them exactly.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    view_files = []
    for q, v in enumerate(ds.views):
        fname = f"view{q}.csv"
        with open(out_dir / fname, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in v:
                w.writerow([repr(float(x)) for x in row])
        view_files.append(fname)
    with open(out_dir / "labels.txt", "w") as fh:
        for li in ds.labels:
            fh.write(ds.class_table[li] + "\n")
    manifest = {"name": ds.name, "views": view_files, "labels": "labels.txt"}
    mpath = out_dir / manifest_name
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return mpath


def subset(ds, indices):
    """Dataset restricted to the given instance rows (same class table)."""
    idx = np.asarray(indices, dtype=np.int64)
    return MultiViewDataset(
        ds.name,
        [v[idx] for v in ds.views],
        ds.labels[idx],
        list(ds.class_table),
    )


def stratified_split(ds, train_frac, rng_seed):
    """Stratified train/test split, deterministic for a given seed.

    Per-class train counts start from floor(train_frac * class count);
    leftover slots (to reach round(train_frac * n) in total) go to the
    largest classes first, and every class keeps at least one instance on
    each side.

    Parameters
    ----------
    ds : MultiViewDataset
    train_frac : float in (0, 1)
    rng_seed : int or numpy SeedSequence

    Raises
    ------
    DataError
        If any class has fewer than 2 instances.
    """
    if not 0.0 < train_frac < 1.0:
        raise ValueError(f"train_frac must be in (0,1), got {train_frac}")
    y = ds.labels
    n = len(y)
    counts = np.bincount(y, minlength=ds.n_classes)
    for c, cnt in enumerate(counts):
        if cnt < 2:
            raise DataError(
                f"dataset {ds.name!r}: class {ds.class_table[c]!r} has {cnt} "
                "instance(s); stratified splitting needs at least 2 per class"
            )
    total_train = int(math.floor(train_frac * n + 0.5))
    base = np.floor(train_frac * counts).astype(np.int64)
    base = np.clip(base, 1, counts - 1)
    # largest classes first, ties by class index
    order = sorted(range(len(counts)), key=lambda c: (-counts[c], c))
    rem = total_train - int(base.sum())
    while rem != 0:
        moved = False
        for c in order:
            if rem > 0 and base[c] < counts[c] - 1:
                base[c] += 1
                rem -= 1
                moved = True
            elif rem < 0 and base[c] > 1:
                base[c] -= 1
                rem += 1
                moved = True
            if rem == 0:
                break
        if not moved:
            break  # no capacity left; per-class bounds win over the total

    rng = np.random.default_rng(rng_seed)
    train, test = [], []
    for c in range(len(counts)):
        idx_c = np.flatnonzero(y == c)
        perm = rng.permutation(idx_c)
        train.append(perm[: base[c]])
        test.append(perm[base[c]:])
    train = np.sort(np.concatenate(train))
    test = np.sort(np.concatenate(test))
    return SplitIndices(train=train, test=test)
