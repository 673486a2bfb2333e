"""Deterministic binary container for model files.

Layout: 8-byte magic ``MVDIS1\\x00\\n``, an 8-byte big-endian header length,
a JSON header (sorted keys), then raw little-endian C-order array bytes.
Writing the same arrays and metadata always produces identical bytes;
zip-based formats embed timestamps and were ruled out for that reason.
"""

import json
import struct

import numpy as np

MAGIC = b"MVDIS1\x00\n"

_ALLOWED_KINDS = ("i", "u", "f", "b")


def _dtype_tag(arr):
    dt = arr.dtype.newbyteorder("<")
    if dt.kind not in _ALLOWED_KINDS:
        raise ValueError(f"unsupported dtype {arr.dtype}")
    return dt.str


def save_arrays(path, meta, arrays):
    """Write ``arrays`` (name -> ndarray) and a JSON-friendly ``meta`` dict."""
    entries = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        tag = _dtype_tag(arr)
        raw = arr.astype(tag, copy=False).tobytes()
        entries.append(
            {
                "name": name,
                "dtype": tag,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"meta": meta, "arrays": entries}, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack(">Q", len(header)))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)


def load_arrays(path):
    """Read a container; returns (meta, dict name -> ndarray)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a MVDIS1 container")
        (hlen,) = struct.unpack(">Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        data = fh.read()
    arrays = {}
    for ent in header["arrays"]:
        start, stop = ent["offset"], ent["offset"] + ent["nbytes"]
        arr = np.frombuffer(data[start:stop], dtype=np.dtype(ent["dtype"]))
        arrays[ent["name"]] = arr.reshape(ent["shape"]).copy()
    return header["meta"], arrays
