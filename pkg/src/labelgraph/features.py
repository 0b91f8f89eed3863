"""Embedding ingest and the feature-file formats.

Two on-disk representations are supported:

* binary: magic ``LGF1``, little-endian ``u32 n``, ``u32 d``, then ``n*d``
  float32 values row-major, then ``n`` length-prefixed UTF-8 ids
  (``u16`` length + bytes);
* JSON lines: one ``{"id": ..., "vec": [...]}`` object per line, with the
  dimension inferred from the first line and enforced thereafter.

Every ingested row is L2-normalized; the original norms are discarded.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError

MAGIC = b"LGF1"
_HEADER = struct.Struct("<4sII")
_IDLEN = struct.Struct("<H")


@dataclass(frozen=True)
class FeatureMatrix:
    """Unit-normalized embedding rows plus their opaque sample ids.

    ``data`` is float32 with one embedding per row; construction goes
    through :func:`from_rows` (or the file readers), which normalizes and
    validates, so instances can be treated as immutable and well-formed.
    """

    data: np.ndarray
    ids: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def index_of(self) -> dict[str, int]:
        return {sid: i for i, sid in enumerate(self.ids)}

    def subset(self, indices) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureMatrix(
            data=self.data[idx].copy(),
            ids=tuple(self.ids[i] for i in idx),
        )


def normalize_rows(raw: np.ndarray) -> np.ndarray:
    """L2-normalize rows in float64, returning float32.

    Rejects non-finite values (naming row and column) and zero-norm rows
    (naming the row); both are unrecoverable at ingest time.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 2:
        raise FormatError(f"expected a 2-d array of embeddings, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise FormatError(f"empty feature matrix (shape {arr.shape})")
    bad = ~np.isfinite(arr)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise FormatError(f"non-finite value at row {r}, column {c}")
    norms = np.linalg.norm(arr, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise FormatError(f"zero-norm row {zero[0]}")
    return (arr / norms[:, None]).astype(np.float32)


def from_rows(rows, ids) -> FeatureMatrix:
    """Build a FeatureMatrix from raw rows and ids, normalizing on the way in."""
    ids = tuple(str(s) for s in ids)
    data = normalize_rows(np.asarray(rows))
    if len(ids) != data.shape[0]:
        raise FormatError(f"{data.shape[0]} rows but {len(ids)} ids")
    if len(set(ids)) != len(ids):
        seen: set[str] = set()
        dup = next(s for s in ids if s in seen or seen.add(s))
        raise FormatError(f"duplicate sample id {dup!r}")
    data.setflags(write=False)
    return FeatureMatrix(data=data, ids=ids)


def read_features(stream) -> FeatureMatrix:
    """Ingest a feature byte stream, auto-detecting binary vs JSON lines."""
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    head = stream.read(4)
    if head == MAGIC:
        return _read_binary(stream)
    return _read_jsonl(head + stream.read())


def read_features_path(path) -> FeatureMatrix:
    with open(path, "rb") as fh:
        return read_features(fh)


def _read_binary(stream) -> FeatureMatrix:
    header = stream.read(_HEADER.size - 4)
    if len(header) != _HEADER.size - 4:
        raise FormatError("truncated feature header")
    n, d = struct.unpack("<II", header)
    if n < 1 or d < 1:
        raise FormatError(f"invalid feature header (n={n}, d={d})")
    payload = stream.read(n * d * 4)
    if len(payload) != n * d * 4:
        raise FormatError(f"truncated feature data (expected {n}x{d} float32)")
    raw = np.frombuffer(payload, dtype="<f4").reshape(n, d)
    ids = []
    for i in range(n):
        lenbuf = stream.read(_IDLEN.size)
        if len(lenbuf) != _IDLEN.size:
            raise FormatError(f"truncated id table at entry {i}")
        (length,) = _IDLEN.unpack(lenbuf)
        blob = stream.read(length)
        if len(blob) != length:
            raise FormatError(f"truncated id table at entry {i}")
        ids.append(blob.decode("utf-8"))
    return from_rows(raw, ids)


def _read_jsonl(blob: bytes) -> FeatureMatrix:
    rows: list[list[float]] = []
    ids: list[str] = []
    dim: int | None = None
    for lineno, line in enumerate(blob.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "id" not in obj or "vec" not in obj:
            raise FormatError(f"line {lineno}: expected fields 'id' and 'vec'")
        vec = obj["vec"]
        if not isinstance(vec, list) or not all(
            isinstance(v, (int, float)) for v in vec
        ):
            raise FormatError(f"line {lineno}: 'vec' must be an array of numbers")
        if dim is None:
            dim = len(vec)
            if dim < 1:
                raise FormatError(f"line {lineno}: empty vector")
        elif len(vec) != dim:
            raise FormatError(
                f"line {lineno}: dimension {len(vec)} does not match {dim}"
            )
        ids.append(str(obj["id"]))
        rows.append(vec)
    if not rows:
        raise FormatError("no feature rows found")
    return from_rows(np.array(rows, dtype=np.float64), ids)


def write_features(features: FeatureMatrix, path) -> None:
    """Serialize to the binary feature-file format (path or binary stream)."""
    if hasattr(path, "write"):
        _write_binary(path, features)
    else:
        with open(path, "wb") as fh:
            _write_binary(fh, features)


def _write_binary(fh, features: FeatureMatrix) -> None:
    fh.write(_HEADER.pack(MAGIC, features.n, features.d))
    fh.write(np.ascontiguousarray(features.data, dtype="<f4").tobytes())
    for sid in features.ids:
        blob = sid.encode("utf-8")
        if len(blob) > 0xFFFF:
            raise FormatError(f"id too long to serialize: {sid[:32]!r}...")
        fh.write(_IDLEN.pack(len(blob)))
        fh.write(blob)
