"""Exact k-NN similarity graph construction and symmetric normalization.

Edge weights follow a temperature-scaled exponential of cosine similarity.
To stay finite for small temperatures, the stored weight is
``exp((s - 1) / T)`` rather than ``exp(s / T)``: a global rescaling by
``exp(-1/T)`` that cancels exactly in the degree-normalized operator and
in every argmax downstream. Multiply by ``exp(1/T)`` to recover the
unshifted scale when it is representable.

Construction is exact (blocked O(n^2 d) scan) and deterministic: ties in
the top-k selection break toward the lower node index.
"""

from __future__ import annotations

import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateNodeError, FormatError, ParameterError
from .features import FeatureMatrix
from .validation import check_graph_params

_BLOCK_ROWS = 512

GRAPH_FORMAT = "lg-graph-v1"


@dataclass(frozen=True)
class KnnGraph:
    """Symmetrized k-NN adjacency plus its degree-normalized operator.

    ``adjacency`` is the CSR matrix after elementwise-max symmetrization;
    ``neighbors``/``neighbor_weights`` retain each row's original top-k
    (by similarity, self excluded) with the symmetrized weights, which is
    what neighbor-vote classification consumes.
    """

    n: int
    k: int
    temperature: float
    adjacency: sp.csr_matrix
    degree: np.ndarray
    normalized: sp.csr_matrix
    neighbors: np.ndarray
    neighbor_weights: np.ndarray


def cosine_similarity(a, b) -> float:
    """Dot product of two unit-normalized rows."""
    return float(np.dot(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)))


def _topk_block(x64: np.ndarray, start: int, stop: int, k: int, out: np.ndarray) -> None:
    sims = x64[start:stop] @ x64.T
    rows = np.arange(start, stop)
    sims[np.arange(stop - start), rows] = -np.inf  # exclude self
    # stable sort on descending similarity: equal values keep index order,
    # so the lower index wins
    order = np.argsort(-sims, axis=1, kind="stable")
    out[start:stop] = order[:, :k]


def build_knn_graph(
    features: FeatureMatrix,
    k: int,
    temperature: float,
    threads: int | None = None,
) -> KnnGraph:
    """Build the exact k-NN graph over unit-normalized embeddings.

    For each row the k most cosine-similar other rows are kept (ties to
    the lower index), weighted by the temperature-scaled exponential, then
    the adjacency is symmetrized with an elementwise max and normalized by
    inverse square-root degrees.
    """
    n = features.n
    check_graph_params(n, k, temperature)
    x64 = features.data.astype(np.float64)

    neighbors = np.empty((n, k), dtype=np.int64)
    blocks = [(s, min(s + _BLOCK_ROWS, n)) for s in range(0, n, _BLOCK_ROWS)]
    if threads is not None and threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: _topk_block(x64, b[0], b[1], k, neighbors), blocks))
    else:
        for s, e in blocks:
            _topk_block(x64, s, e, k, neighbors)

    sims = np.einsum("ij,ikj->ik", x64, x64[neighbors])
    weights = np.exp((sims - 1.0) / temperature)
    if weights.min() == 0.0:
        raise ParameterError(
            f"temperature {temperature} is too small: edge weights underflow to zero"
        )

    indptr = np.arange(0, n * k + 1, k, dtype=np.int64)
    w = sp.csr_matrix((weights.ravel(), neighbors.ravel(), indptr), shape=(n, n))
    w_sym = w.maximum(w.T).tocsr()
    w_sym.sort_indices()

    normalized, degree = normalize_symmetric(w_sym, return_degree=True)
    neighbor_weights = _gather_rows(w_sym, neighbors)

    return KnnGraph(
        n=n,
        k=k,
        temperature=float(temperature),
        adjacency=w_sym,
        degree=degree,
        normalized=normalized,
        neighbors=neighbors,
        neighbor_weights=neighbor_weights,
    )


def _gather_rows(w: sp.csr_matrix, columns: np.ndarray) -> np.ndarray:
    """Per-row gather of stored entries: out[i, j] = w[i, columns[i, j]].

    Every requested column must be a stored entry of its row (true for the
    original top-k positions, which symmetrization only preserves).
    Requires sorted indices.
    """
    out = np.empty(columns.shape, dtype=w.data.dtype)
    indptr, indices, data = w.indptr, w.indices, w.data
    for i in range(columns.shape[0]):
        row_cols = indices[indptr[i]:indptr[i + 1]]
        row_vals = data[indptr[i]:indptr[i + 1]]
        out[i] = row_vals[np.searchsorted(row_cols, columns[i])]
    return out


def normalize_symmetric(w: sp.spmatrix, return_degree: bool = False):
    """Scale a symmetric non-negative adjacency by inverse sqrt degrees.

    Entry (i, j) becomes ``w_ij / sqrt(deg_i * deg_j)``; the sparsity
    pattern is preserved. Rows with zero degree are degenerate and raise.
    """
    w = w.tocsr()
    degree = np.asarray(w.sum(axis=1)).ravel()
    zero = np.flatnonzero(degree == 0.0)
    if zero.size:
        raise DegenerateNodeError(int(zero[0]))
    inv_sqrt = 1.0 / np.sqrt(degree)
    scale = sp.diags(inv_sqrt)
    normalized = (scale @ w @ scale).tocsr()
    normalized.sort_indices()
    if return_degree:
        return normalized, degree
    return normalized


def save_graph(path, graph: KnnGraph, features: FeatureMatrix) -> None:
    """Serialize a graph with its features and ids to a self-contained file."""
    adj = graph.adjacency
    np.savez(
        path,
        format=np.array(GRAPH_FORMAT),
        k=np.array(graph.k, dtype=np.int64),
        temperature=np.array(graph.temperature, dtype=np.float64),
        indptr=adj.indptr.astype(np.int64),
        indices=adj.indices.astype(np.int64),
        data=adj.data,
        neighbors=graph.neighbors,
        neighbor_weights=graph.neighbor_weights,
        features=features.data,
        ids=np.array(features.ids, dtype=np.str_),
    )


def load_graph(path) -> tuple[KnnGraph, FeatureMatrix]:
    """Load a serialized graph; the normalized operator is recomputed
    deterministically from the stored adjacency."""
    try:
        with np.load(path, allow_pickle=False) as z:
            if "format" not in z or str(z["format"]) != GRAPH_FORMAT:
                raise FormatError(f"{path}: not a graph file")
            k = int(z["k"])
            temperature = float(z["temperature"])
            data = z["data"]
            indices = z["indices"]
            indptr = z["indptr"]
            neighbors = z["neighbors"]
            neighbor_weights = z["neighbor_weights"]
            feat = z["features"]
            ids = tuple(str(s) for s in z["ids"])
    except (zipfile.BadZipFile, OSError, KeyError, ValueError) as exc:
        raise FormatError(f"{path}: corrupt graph file ({exc})") from exc
    n = len(ids)
    if feat.shape[0] != n or neighbors.shape != (n, k):
        raise FormatError(f"{path}: inconsistent graph file")
    adjacency = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    adjacency.sort_indices()
    normalized, degree = normalize_symmetric(adjacency, return_degree=True)
    feat = np.asarray(feat, dtype=np.float32)
    feat.setflags(write=False)
    features = FeatureMatrix(data=feat, ids=ids)
    graph = KnnGraph(
        n=n,
        k=k,
        temperature=temperature,
        adjacency=adjacency,
        degree=degree,
        normalized=normalized,
        neighbors=neighbors,
        neighbor_weights=neighbor_weights,
    )
    return graph, features
