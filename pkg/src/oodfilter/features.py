"""Feature containers and the on-disk formats shared with feature extractors.

Binary layout ("FEAT"):
    magic    4 bytes  b"FEAT"
    version  u32 LE   currently 1
    rows     u64 LE   N
    dims     u64 LE   D
    ids      N times: u32 LE byte length + UTF-8 payload
    data     N*D float32 LE, row-major

Values are stored in single precision end to end, so a binary round trip
is bit-exact and the 17-significant-digit CSV form re-parses losslessly.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FeatureFormatError, ValidationError

FEAT_MAGIC = b"FEAT"
FEAT_VERSION = 1


@dataclass(frozen=True)
class FeatureMatrix:
    """N rows of D-dimensional features with stable per-row identifiers."""

    ids: tuple[str, ...]
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise ValidationError(f"feature data must be 2-D, got shape {data.shape}")
        n, d = data.shape
        if n < 1 or d < 1:
            raise ValidationError(f"need at least one row and one dimension, got {n}x{d}")
        if len(self.ids) != n:
            raise ValidationError(f"{len(self.ids)} ids for {n} rows")
        seen: set[str] = set()
        for i, sample_id in enumerate(self.ids):
            if sample_id in seen:
                raise ValidationError(f"duplicate id {sample_id!r} at row {i}")
            seen.add(sample_id)
        bad = np.flatnonzero(~np.isfinite(data).all(axis=1))
        if bad.size:
            raise ValidationError(f"non-finite value at row {int(bad[0])}")
        data.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> int:
        return self.data.shape[1]


def synthesize_ids(n: int) -> tuple[str, ...]:
    """Stable fallback ids for sources that do not carry their own."""
    return tuple(f"row-{i}" for i in range(n))


def save_features(m: FeatureMatrix, path: str | Path, format: str = "binary") -> None:
    """Write a FeatureMatrix to `path` in the FEAT binary or CSV format."""
    path = Path(path)
    if format == "binary":
        _save_binary(m, path)
    elif format == "csv":
        _save_csv(m, path)
    else:
        raise ValidationError(f"unknown format {format!r}")


def load_features(path: str | Path, format: str = "binary") -> FeatureMatrix:
    """Read a FeatureMatrix from `path`; row order matches file order."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise ValidationError(f"unknown format {format!r}")


def _save_binary(m: FeatureMatrix, path: Path) -> None:
    with open(path, "wb") as fh:
        fh.write(FEAT_MAGIC)
        fh.write(struct.pack("<I", FEAT_VERSION))
        fh.write(struct.pack("<QQ", m.rows, m.dims))
        for sample_id in m.ids:
            raw = sample_id.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(m.data, dtype="<f4").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FeatureFormatError(f"truncated file while reading {what}")
    return buf


def _load_binary(path: Path) -> FeatureMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FEAT_MAGIC:
            raise FeatureFormatError(f"bad magic {magic!r}, expected {FEAT_MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != FEAT_VERSION:
            raise FeatureFormatError(f"unsupported version {version}")
        rows, dims = struct.unpack("<QQ", _read_exact(fh, 16, "header"))
        if rows < 1 or dims < 1:
            raise FeatureFormatError(f"header declares {rows} rows x {dims} dims")
        ids = []
        for i in range(rows):
            (id_len,) = struct.unpack("<I", _read_exact(fh, 4, f"id length of row {i}"))
            ids.append(_read_exact(fh, id_len, f"id of row {i}").decode("utf-8"))
        payload = fh.read(rows * dims * 4)
        if len(payload) != rows * dims * 4:
            got_rows = len(payload) // (dims * 4)
            raise FeatureFormatError(
                f"truncated payload: header declares {rows} rows, data ends in row {got_rows}"
            )
        if fh.read(1):
            raise FeatureFormatError("trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(rows, dims)
    return _build(ids, data)


def _save_csv(m: FeatureMatrix, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"x{j}" for j in range(m.dims)])
        for sample_id, row in zip(m.ids, m.data):
            writer.writerow([sample_id] + [format(float(v), ".17g") for v in row])


def _load_csv(path: Path) -> FeatureMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FeatureFormatError("empty CSV file") from None
        has_ids = bool(header) and header[0].strip().lower() == "id"
        dims = len(header) - 1 if has_ids else len(header)
        if dims < 1:
            raise FeatureFormatError("CSV header declares no feature columns")
        ids: list[str] = []
        values: list[list[float]] = []
        for i, fields in enumerate(reader):
            if not fields:
                continue
            expected = dims + 1 if has_ids else dims
            if len(fields) != expected:
                raise FeatureFormatError(
                    f"row {i}: expected {expected} fields, got {len(fields)}"
                )
            ids.append(fields[0] if has_ids else f"row-{i}")
            numeric = fields[1:] if has_ids else fields
            try:
                values.append([float(v) for v in numeric])
            except ValueError as exc:
                raise FeatureFormatError(f"row {i}: {exc}") from None
    if not values:
        raise FeatureFormatError("CSV file has a header but no rows")
    return _build(ids, np.array(values, dtype=np.float32))


def _build(ids: list[str], data: np.ndarray) -> FeatureMatrix:
    # Re-raise invariant violations as format errors with a row index.
    seen: set[str] = set()
    for i, sample_id in enumerate(ids):
        if sample_id in seen:
            raise FeatureFormatError(f"duplicate id {sample_id!r} at row {i}")
        seen.add(sample_id)
    bad = np.flatnonzero(~np.isfinite(data).all(axis=1))
    if bad.size:
        raise FeatureFormatError(f"non-finite value at row {int(bad[0])}")
    return FeatureMatrix(ids=tuple(ids), data=data)
