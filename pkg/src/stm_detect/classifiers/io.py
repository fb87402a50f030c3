"""Versioned binary container for trained models.

Layout (little-endian)::

    magic     4s  b"STMM"
    version   u16
    kind      u8  index into KINDS
    hlen      u32 length of the JSON header
    header    JSON: {"params", "meta", "arrays": [[name, dtype, shape], ...]}
    arrays    raw array bytes in header order
    crc32     u32 over everything above

The JSON header is written with sorted keys and no whitespace so equal models
serialize to equal bytes.
"""

from __future__ import annotations

import json
import os
import struct
import zlib

import numpy as np

from ..modulation import Standardizer
from .extratrees import ExtraTrees
from .knn import KNN
from .svm import SVM

MAGIC = b"STMM"
VERSION = 1
KINDS = ("svm", "knn", "extratrees", "scaler")
_HEAD = struct.Struct("<4sHBI")


class ModelFormatError(ValueError):
    """Bad magic, version, checksum, or truncated payload."""


class ModelKindError(ModelFormatError):
    """The payload holds a different model kind than requested."""


def _scaler_state(s: Standardizer):
    return {}, {"mean": s.mean_, "std": s.std_}


_CLASSES = {"svm": SVM, "knn": KNN, "extratrees": ExtraTrees}


def _kind_of(model) -> str:
    if isinstance(model, Standardizer):
        return "scaler"
    return model.kind


def save_model(model, meta: dict | None = None) -> bytes:
    kind = _kind_of(model)
    params, arrays = _scaler_state(model) if kind == "scaler" else model._state()
    names = sorted(arrays)
    blobs, layout = [], []
    for name in names:
        a = np.asarray(arrays[name])
        dt = a.dtype.newbyteorder("<")
        blobs.append(np.ascontiguousarray(a, dtype=dt).tobytes())
        layout.append([name, dt.str, list(a.shape)])
    header = json.dumps({"params": params, "meta": meta or {}, "arrays": layout},
                        sort_keys=True, separators=(",", ":")).encode()
    body = _HEAD.pack(MAGIC, VERSION, KINDS.index(kind), len(header)) + header + b"".join(blobs)
    return body + struct.pack("<I", zlib.crc32(body))


def load_model(blob: bytes, expected_kind: str | None = None):
    """Inverse of :func:`save_model`; the returned model carries ``meta``."""
    if len(blob) < _HEAD.size + 4:
        raise ModelFormatError("truncated model payload")
    magic, version, kind_idx, hlen = _HEAD.unpack_from(blob)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model version {version} (expected {VERSION})")
    if kind_idx >= len(KINDS):
        raise ModelFormatError(f"unknown model kind tag {kind_idx}")
    kind = KINDS[kind_idx]
    if expected_kind is not None and kind != expected_kind:
        raise ModelKindError(f"payload holds a {kind} model, not {expected_kind}")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise ModelFormatError("checksum mismatch (truncated or corrupted payload)")
    offset = _HEAD.size
    header = json.loads(body[offset:offset + hlen])
    offset += hlen
    arrays = {}
    for name, dtype, shape in header["arrays"]:
        dt = np.dtype(dtype)
        size = dt.itemsize * int(np.prod(shape, dtype=np.int64))
        if offset + size > len(body):
            raise ModelFormatError("truncated model payload")
        arrays[name] = np.frombuffer(body, dtype=dt, count=int(np.prod(shape, dtype=np.int64)),
                                     offset=offset).reshape(shape).astype(dt.newbyteorder("="))
        offset += size
    if offset != len(body):
        raise ModelFormatError("trailing bytes after model arrays")
    if kind == "scaler":
        model = Standardizer(arrays["mean"], arrays["std"])
    else:
        model = _CLASSES[kind]._from_state(header["params"], arrays)
    model.meta = header["meta"]
    return model


def write_model(path, model, meta: dict | None = None) -> None:
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(save_model(model, meta))
    os.replace(tmp, path)


def read_model(path, expected_kind: str | None = None):
    with open(os.fspath(path), "rb") as fh:
        return load_model(fh.read(), expected_kind)
