"""Bit-exact feature archive: the file contract between feature producers
(baseline featurizer or the external embedding exporter) and the trainer.

Layout:
    bytes 0-7    magic "MFARCH01"
    bytes 8-11   header length L, unsigned 32-bit little-endian
    bytes 12..   UTF-8 JSON {"dims": [d_t, d_h, d_i], "ids": [...sorted...]}
    payload      per id in sorted order: d_t floats (T), d_h floats (H),
                 d_i floats (I), each 32-bit little-endian

The header JSON is canonical (sorted ids, compact separators) and carries
no timestamps, so identical input always produces identical bytes.
Readers tolerate extra header keys (e.g. a "provenance" field written by
exporters).
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"MFARCH01"


class ArchiveError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureBundle:
    """Per-example feature triple: text representation, image hidden
    representation, image prediction representation."""

    t: np.ndarray
    h: np.ndarray
    i: np.ndarray

    def dims(self):
        return (self.t.shape[0], self.h.shape[0], self.i.shape[0])

    def concat(self):
        return np.concatenate([self.t, self.h, self.i])


def make_bundle(t, h, i):
    """Build a validated float32 FeatureBundle (1-D, finite, non-empty)."""
    parts = []
    for name, vec in (("T", t), ("H", h), ("I", i)):
        arr = np.asarray(vec, dtype=np.float32).reshape(-1)
        if arr.size < 1:
            raise ArchiveError(f"{name} vector must have dimension >= 1")
        if not np.isfinite(arr).all():
            raise ArchiveError(f"{name} vector contains NaN or Inf")
        parts.append(arr)
    return FeatureBundle(*parts)


def write_archive(bundles, path, provenance=None):
    """Write id -> FeatureBundle to `path`.  All bundles must share dims.

    Two writes of the same data are byte-identical.
    """
    if not bundles:
        raise ArchiveError("cannot write an empty archive")
    ids = sorted(bundles)
    dims = bundles[ids[0]].dims()
    for rid in ids:
        if bundles[rid].dims() != dims:
            raise ArchiveError(
                f"bundle {rid!r} has dims {bundles[rid].dims()}, expected {dims}"
            )
    header = {"dims": list(dims), "ids": ids}
    if provenance is not None:
        header["provenance"] = provenance
    blob = json.dumps(header, separators=(",", ":"), ensure_ascii=True, sort_keys=True)
    payload = bytearray()
    for rid in ids:
        b = bundles[rid]
        for vec in (b.t, b.h, b.i):
            payload += np.ascontiguousarray(vec, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob.encode("utf-8"))))
        fh.write(blob.encode("utf-8"))
        fh.write(bytes(payload))


def read_archive(path):
    """Read an archive back into id -> FeatureBundle with exact floats."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise ArchiveError(f"{path}: bad magic {data[:8]!r}, expected {MAGIC!r}")
    if len(data) < 12:
        raise ArchiveError(f"{path}: truncated header")
    (hlen,) = struct.unpack("<I", data[8:12])
    if len(data) < 12 + hlen:
        raise ArchiveError(f"{path}: truncated header JSON")
    try:
        header = json.loads(data[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArchiveError(f"{path}: malformed header: {exc}") from None
    try:
        dims = tuple(int(d) for d in header["dims"])
        ids = list(header["ids"])
    except (KeyError, TypeError, ValueError):
        raise ArchiveError(f"{path}: header missing dims/ids") from None
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ArchiveError(f"{path}: bad dims {dims}")
    if len(set(ids)) != len(ids):
        raise ArchiveError(f"{path}: duplicate ids in header")
    stride = sum(dims)
    expected = len(ids) * stride * 4
    actual = len(data) - 12 - hlen
    if actual != expected:
        raise ArchiveError(
            f"{path}: payload size mismatch: expected {expected} bytes, got {actual}"
        )
    flat = np.frombuffer(data, dtype="<f4", count=len(ids) * stride, offset=12 + hlen)
    d_t, d_h, d_i = dims
    bundles = {}
    for k, rid in enumerate(ids):
        row = flat[k * stride : (k + 1) * stride]
        bundles[rid] = FeatureBundle(
            t=row[:d_t].copy(),
            h=row[d_t : d_t + d_h].copy(),
            i=row[d_t + d_h :].copy(),
        )
    return bundles
