"""Writer for the shared feature-archive format.

Layout, matching the trainer's reader byte for byte:
    bytes 0-7    magic "MFARCH01"
    bytes 8-11   header length, unsigned 32-bit little-endian
    bytes 12..   canonical UTF-8 JSON {"dims": [d_t, d_h, d_i],
                 "ids": [...sorted...], "provenance": {...}}
    payload      per id in sorted order: T then H then I, float32 LE
"""

import json
import struct

import numpy as np

MAGIC = b"MFARCH01"


class ExportArchiveError(ValueError):
    pass


def write_archive(triples, path, provenance=None):
    """Write id -> (t, h, i) arrays; identical input gives identical bytes."""
    if not triples:
        raise ExportArchiveError("cannot write an empty archive")
    ids = sorted(triples)
    prepared = {}
    dims = None
    for rid in ids:
        parts = []
        for name, vec in zip(("T", "H", "I"), triples[rid]):
            arr = np.ascontiguousarray(vec, dtype="<f4").reshape(-1)
            if arr.size < 1:
                raise ExportArchiveError(f"id {rid!r}: {name} vector is empty")
            if not np.isfinite(arr).all():
                raise ExportArchiveError(f"id {rid!r}: {name} vector has NaN or Inf")
            parts.append(arr)
        this = tuple(len(p) for p in parts)
        if dims is None:
            dims = this
        elif this != dims:
            raise ExportArchiveError(f"id {rid!r}: dims {this} != {dims}")
        prepared[rid] = parts
    header = {"dims": list(dims), "ids": ids}
    if provenance is not None:
        header["provenance"] = provenance
    blob = json.dumps(
        header, separators=(",", ":"), ensure_ascii=True, sort_keys=True
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for rid in ids:
            for arr in prepared[rid]:
                fh.write(arr.tobytes())
