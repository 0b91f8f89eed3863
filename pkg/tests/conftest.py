"""Shared fixtures and independent reference implementations.

The reference functions here deliberately avoid the library's own code
paths (plain Python loops, dense matrices) so tests compare two
independent derivations of the same quantity.
"""

from __future__ import annotations

import io
import math

import numpy as np
import pytest

from labelgraph import FeatureMatrix, make_blobs, write_features


def brute_force_neighbors(data: np.ndarray, k: int) -> list[list[int]]:
    """Top-k cosine neighbors per row via an O(n^2) loop.

    Ties break toward the lower index; self is excluded. Uses explicit
    pairwise dot products and Python sorting, not the library's blocked
    scan. Similarities are taken in float64, matching the precision the
    library computes in.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    out = []
    for i in range(n):
        sims = []
        for j in range(n):
            if j == i:
                continue
            sims.append((-float(np.dot(data[i], data[j])), j))
        sims.sort()
        out.append([j for _, j in sims[:k]])
    return out


def dense_weight_matrix(data: np.ndarray, k: int, temperature: float) -> np.ndarray:
    """Dense symmetrized edge weights exp((s - 1) / T) over top-k pairs."""
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    w = np.zeros((n, n))
    for i, neighbors in enumerate(brute_force_neighbors(data, k)):
        for j in neighbors:
            s = float(np.dot(data[i], data[j]))
            w[i, j] = math.exp((s - 1.0) / temperature)
    return np.maximum(w, w.T)


def dense_normalize(w: np.ndarray) -> np.ndarray:
    """Dense D^(-1/2) W D^(-1/2)."""
    degree = w.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(degree)
    return w * inv_sqrt[:, None] * inv_sqrt[None, :]


def dense_propagate_reference(
    normalized: np.ndarray,
    given: np.ndarray,
    trusted: np.ndarray,
    num_classes: int,
    iterations: int,
) -> list[np.ndarray]:
    """Dense recurrence: diffuse, then reset trusted rows; one snapshot
    per iteration."""
    n = len(given)
    y0 = np.zeros((n, num_classes))
    for i in range(n):
        if given[i] >= 0:
            y0[i, given[i]] = 1.0
    y = y0.copy()
    snapshots = []
    for _ in range(iterations):
        y = normalized @ y
        for i in range(n):
            if trusted[i]:
                y[i] = y0[i]
        snapshots.append(y.copy())
    return snapshots


def brute_force_vote(
    w_dense: np.ndarray,
    neighbors: list[list[int]],
    label_rows: np.ndarray,
    targets,
) -> list[int]:
    """Weighted neighbor vote from first principles; -1 when no mass."""
    out = []
    for i in targets:
        scores = np.zeros(label_rows.shape[1])
        for j in neighbors[i]:
            scores += w_dense[i, j] * label_rows[j]
        if scores.sum() == 0.0:
            out.append(-1)
        else:
            out.append(int(np.argmax(scores)))
    return out


def feature_bytes(features: FeatureMatrix) -> bytes:
    buf = io.BytesIO()
    write_features(features, buf)
    return buf.getvalue()


def random_features(n: int, d: int, seed: int) -> FeatureMatrix:
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((n, d))
    from labelgraph.features import from_rows

    return from_rows(data, [f"s{i:05d}" for i in range(n)])


@pytest.fixture(scope="session")
def small_blobs():
    """3 well-separated classes, cheap enough for per-test graph builds."""
    return make_blobs(classes=3, n=120, dim=16, separation=6.0, seed=11)


@pytest.fixture(scope="session")
def medium_blobs():
    """5 classes used by the service and workflow tests."""
    return make_blobs(classes=5, n=400, dim=32, separation=5.0, seed=23)
