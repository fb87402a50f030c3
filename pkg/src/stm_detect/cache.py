"""On-disk feature cache.

Each record lives in ``<source_id>.<frontend>.<feature_kind>.stmf``::

    magic      4s   b"STMF"
    version    u16
    kind       u8   0 = stm_global, 1 = stm_segmental
    frontend   u8   0 = gtfb, 1 = gcfb
    ndim       u8
    dims       u32 * ndim
    fingerprint 32s  raw SHA-256 digest
    payload    f32 * prod(dims), little-endian, row-major

All header integers are little-endian.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

MAGIC = b"STMF"
VERSION = 1
FEATURE_KINDS = ("stm_global", "stm_segmental")
FRONTENDS = ("gtfb", "gcfb")

_HEAD = struct.Struct("<4sHBBB")


class CacheIntegrityError(Exception):
    """A cache file is truncated, padded, or has a foreign header."""


@dataclass(frozen=True, eq=False)
class FeatureCacheRecord:
    source_id: str
    feature_kind: str
    frontend: str
    dims: tuple
    payload: np.ndarray
    pipeline_fingerprint: str

    def __post_init__(self):
        if self.feature_kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.feature_kind!r}")
        if self.frontend not in FRONTENDS:
            raise ValueError(f"unknown frontend {self.frontend!r}")
        dims = tuple(int(d) for d in self.dims)
        payload = np.ascontiguousarray(self.payload, dtype="<f4").reshape(-1)
        if payload.size != int(np.prod(dims)):
            raise ValueError(f"payload length {payload.size} != prod{dims}")
        if len(bytes.fromhex(self.pipeline_fingerprint)) != 32:
            raise ValueError("pipeline_fingerprint must be a SHA-256 hex digest")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "payload", payload)

    def array(self) -> np.ndarray:
        return self.payload.reshape(self.dims)

    def __eq__(self, other):
        if not isinstance(other, FeatureCacheRecord):
            return NotImplemented
        return (self.source_id == other.source_id
                and self.feature_kind == other.feature_kind
                and self.frontend == other.frontend
                and self.dims == other.dims
                and self.pipeline_fingerprint == other.pipeline_fingerprint
                and self.payload.tobytes() == other.payload.tobytes())


def cache_path(store, source_id: str, frontend: str, feature_kind: str) -> str:
    return os.path.join(os.fspath(store), f"{source_id}.{frontend}.{feature_kind}.stmf")


def encode_record(record: FeatureCacheRecord) -> bytes:
    head = _HEAD.pack(MAGIC, VERSION, FEATURE_KINDS.index(record.feature_kind),
                      FRONTENDS.index(record.frontend), len(record.dims))
    dims = struct.pack(f"<{len(record.dims)}I", *record.dims)
    return head + dims + bytes.fromhex(record.pipeline_fingerprint) + record.payload.tobytes()


def decode_record(blob: bytes, source_id: str) -> FeatureCacheRecord:
    if len(blob) < _HEAD.size:
        raise CacheIntegrityError(f"{source_id}: truncated header")
    magic, version, kind, frontend, ndim = _HEAD.unpack_from(blob)
    if magic != MAGIC:
        raise CacheIntegrityError(f"{source_id}: bad magic {magic!r}")
    if version != VERSION:
        raise CacheIntegrityError(f"{source_id}: unsupported cache version {version}")
    if kind >= len(FEATURE_KINDS) or frontend >= len(FRONTENDS):
        raise CacheIntegrityError(f"{source_id}: bad kind/frontend tag")
    offset = _HEAD.size
    need = offset + 4 * ndim + 32
    if len(blob) < need:
        raise CacheIntegrityError(f"{source_id}: truncated header")
    dims = struct.unpack_from(f"<{ndim}I", blob, offset)
    offset += 4 * ndim
    fingerprint = blob[offset:offset + 32].hex()
    offset += 32
    body = blob[offset:]
    expected = 4 * int(np.prod(dims))
    if len(body) != expected:
        raise CacheIntegrityError(
            f"{source_id}: payload is {len(body)} bytes, header dims {dims} need {expected}")
    payload = np.frombuffer(body, dtype="<f4").copy()
    return FeatureCacheRecord(source_id, FEATURE_KINDS[kind], FRONTENDS[frontend],
                              dims, payload, fingerprint)


def cache_put(record: FeatureCacheRecord, store) -> str:
    """Atomically write ``record`` into ``store``; returns the file path."""
    os.makedirs(store, exist_ok=True)
    target = cache_path(store, record.source_id, record.frontend, record.feature_kind)
    fd, tmp = tempfile.mkstemp(dir=os.fspath(store), prefix=".tmp-", suffix=".stmf")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(encode_record(record))
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def cache_get(store, source_id: str, feature_kind: str, frontend: str,
              fingerprint: str) -> FeatureCacheRecord | None:
    """Return the cached record, or None when absent or stale.

    A stored record whose fingerprint differs from ``fingerprint`` counts as
    absent. Damaged files raise :class:`CacheIntegrityError`.
    """
    path = cache_path(store, source_id, frontend, feature_kind)
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError:
        return None
    record = decode_record(blob, source_id)
    if record.pipeline_fingerprint != fingerprint:
        return None
    if record.feature_kind != feature_kind or record.frontend != frontend:
        raise CacheIntegrityError(f"{path}: header does not match file name")
    return record
