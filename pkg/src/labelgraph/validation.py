"""Input validation helpers used by the estimator and the core modules.

These mirror the role of ``sklearn.utils.validation`` for this package:
coerce user input into the canonical array forms and fail early with
actionable messages.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

UNIT_NORM_TOL = 1e-5


def as_float_matrix(data, name: str = "data") -> np.ndarray:
    """Coerce ``data`` to a 2-D float64 array, rejecting non-finite values."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ParameterError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ParameterError(
            f"{name} contains a non-finite value at row {bad[0]}, column {bad[1]}"
        )
    return arr


def check_unit_rows(data: np.ndarray, tol: float = UNIT_NORM_TOL) -> None:
    """Raise unless every row of ``data`` has L2 norm within ``tol`` of 1."""
    norms = np.linalg.norm(np.asarray(data, dtype=np.float64), axis=1)
    off = np.flatnonzero(np.abs(norms - 1.0) > tol)
    if off.size:
        raise ParameterError(
            f"row {off[0]} is not unit-normalized (norm={norms[off[0]]:.6g})"
        )


def check_graph_params(n: int, k: int, temperature: float) -> None:
    """Validate neighbor count and temperature against the node count."""
    if k <= 0:
        raise ParameterError(f"k must be positive, got {k}")
    if k >= n:
        raise ParameterError(f"k must be < n (k={k}, n={n})")
    if not temperature > 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")


def check_class_index(value: int, num_classes: int | None) -> int:
    """Validate a class index, optionally against a known class count."""
    cls = int(value)
    if cls < 0:
        raise ParameterError(f"class index must be >= 0, got {cls}")
    if num_classes is not None and cls >= num_classes:
        raise ParameterError(
            f"class index {cls} out of range for {num_classes} classes"
        )
    return cls


def check_indices(indices, n: int, name: str = "indices") -> np.ndarray:
    """Coerce to a 1-D int64 index array with every value in [0, n)."""
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ParameterError(f"{name} out of range [0, {n})")
    return idx
