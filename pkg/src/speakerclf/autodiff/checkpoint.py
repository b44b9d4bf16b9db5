"""Parameter checkpoint container.

Layout: a magic line, one JSON header line (format version, dtype,
ordered parameter names and shapes, free-form metadata), then the raw
array bytes concatenated in header order (C order, little endian).
Round-trips are bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ContractError
from .tensor import Tensor

MAGIC = b"SPEAKERCLF-CKPT\n"
FORMAT_VERSION = 1

_DTYPE_TAGS = {"float64": "<f8", "float32": "<f4"}


def save_checkpoint(path, params: dict, meta: dict | None = None) -> None:
    """``params`` maps names to Tensors or plain numpy arrays."""
    arrays = {
        name: (p.data if isinstance(p, Tensor) else np.asarray(p))
        for name, p in params.items()
    }
    dtypes = {a.dtype.name for a in arrays.values()}
    if len(dtypes) > 1:
        raise ContractError(f"mixed parameter dtypes {sorted(dtypes)} in one checkpoint")
    dtype_name = dtypes.pop() if dtypes else "float64"
    header = {
        "format_version": FORMAT_VERSION,
        "dtype": dtype_name,
        "params": [{"name": n, "shape": list(a.shape)} for n, a in arrays.items()],
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        tag = _DTYPE_TAGS[dtype_name]
        for a in arrays.values():
            fh.write(np.ascontiguousarray(a, dtype=tag).tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise ContractError(f"{path}: not a parameter checkpoint (bad magic)")
    body = raw[len(MAGIC):]
    nl = body.index(b"\n")
    header = json.loads(body[:nl].decode("utf-8"))
    if header.get("format_version") != FORMAT_VERSION:
        raise ContractError(
            f"{path}: unsupported checkpoint format version {header.get('format_version')}"
        )
    tag = _DTYPE_TAGS[header["dtype"]]
    itemsize = np.dtype(tag).itemsize
    blob = body[nl + 1:]
    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * itemsize
        arr = np.frombuffer(blob[offset:offset + nbytes], dtype=tag).reshape(shape).copy()
        arrays[entry["name"]] = arr
        offset += nbytes
    if offset != len(blob):
        raise ContractError(f"{path}: trailing bytes after parameter payload")
    return arrays, header["meta"]
