"""Standalone FEAT binary writer.

Mirrors the consumer's documented layout byte for byte: magic "FEAT",
version u32 LE = 1, rows u64 LE, dims u64 LE, length-prefixed UTF-8 ids
(u32 LE lengths), then rows*dims float32 LE values, row-major. Kept free
of any dependency on the consumer package on purpose; the file format is
the contract.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

FEAT_MAGIC = b"FEAT"
FEAT_VERSION = 1


def write_feat(path: str | Path, ids: list[str], data: np.ndarray) -> None:
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {data.shape}")
    rows, dims = data.shape
    if len(ids) != rows:
        raise ValueError(f"{len(ids)} ids for {rows} rows")
    with open(path, "wb") as fh:
        fh.write(FEAT_MAGIC)
        fh.write(struct.pack("<I", FEAT_VERSION))
        fh.write(struct.pack("<QQ", rows, dims))
        for sample_id in ids:
            raw = sample_id.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        fh.write(data.tobytes())
