"""Label diffusion over the similarity graph and its derived outputs.

The core recurrence multiplies the degree-normalized adjacency into the
current label matrix, then resets trusted rows to their one-hot ground
truth. Untrusted rows that carry a (possibly noisy) given label seed the
initial matrix but evolve freely afterwards; with no trusted rows at all
the update is pure diffusion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import FormatError, ParameterError
from .graph import KnnGraph
from .validation import check_indices

UNDETERMINED = -1

DEFAULT_ITERATIONS = 20


@dataclass(frozen=True)
class LabelState:
    """Per-sample label record: given class (-1 = absent) and trusted flag.

    Trusted rows are clamped during propagation; untrusted rows with a
    given class contribute their one-hot only at initialization.
    """

    num_classes: int
    given: np.ndarray
    trusted: np.ndarray

    def __post_init__(self):
        given = np.asarray(self.given, dtype=np.int64)
        trusted = np.asarray(self.trusted, dtype=bool)
        if given.shape != trusted.shape or given.ndim != 1:
            raise ParameterError("given and trusted must be 1-d arrays of equal length")
        if self.num_classes < 2:
            raise ParameterError(f"need >= 2 classes, got {self.num_classes}")
        if np.any(trusted & (given < 0)):
            bad = int(np.flatnonzero(trusted & (given < 0))[0])
            raise ParameterError(f"trusted sample {bad} has no given class")
        present = given[given >= 0]
        if present.size and present.max() >= self.num_classes:
            raise ParameterError(
                f"class index {present.max()} out of range for {self.num_classes} classes"
            )
        object.__setattr__(self, "given", given)
        object.__setattr__(self, "trusted", trusted)

    @property
    def n(self) -> int:
        return self.given.shape[0]

    @property
    def has_labels(self) -> bool:
        return bool(np.any(self.given >= 0))


@dataclass(frozen=True)
class SoftLabelMatrix:
    """Raw propagation scores (n x c, float64) and the iteration count run.

    Rows are not renormalized: scores may shrink where the graph is weakly
    connected, which is useful for spotting isolated regions. Confidence is
    exposed as max over row sum instead.
    """

    scores: np.ndarray
    iterations: int

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def num_classes(self) -> int:
        return self.scores.shape[1]


def _one_hot(labels: LabelState) -> np.ndarray:
    """One-hot rows for every sample with a given class, zeros elsewhere."""
    y0 = np.zeros((labels.n, labels.num_classes), dtype=np.float64)
    present = np.flatnonzero(labels.given >= 0)
    y0[present, labels.given[present]] = 1.0
    return y0


def init_label_matrix(labels: LabelState) -> SoftLabelMatrix:
    """The iteration-zero label matrix: given classes one-hot, rest zero."""
    return SoftLabelMatrix(scores=_one_hot(labels), iterations=0)


def propagate_steps(
    graph: KnnGraph, labels: LabelState, iterations: int
) -> Iterator[np.ndarray]:
    """Yield the label matrix after each full propagation round.

    Each round multiplies the normalized adjacency into the current
    matrix, then restores trusted rows to their initial one-hots. The
    yielded arrays are fresh copies owned by the caller.
    """
    if graph.n != labels.n:
        raise ParameterError(f"graph has {graph.n} nodes but labels have {labels.n}")
    if iterations < 1:
        raise ParameterError(f"iterations must be >= 1, got {iterations}")
    if not labels.has_labels:
        raise ParameterError("nothing to propagate: no sample has a given label")
    return _steps(graph, labels, iterations)


def _steps(graph: KnnGraph, labels: LabelState, iterations: int) -> Iterator[np.ndarray]:
    y = _one_hot(labels)
    clamp_idx = np.flatnonzero(labels.trusted)
    clamp_rows = y[clamp_idx].copy()
    for _ in range(iterations):
        y = graph.normalized @ y
        if clamp_idx.size:
            y[clamp_idx] = clamp_rows
        yield y


def propagate(
    graph: KnnGraph,
    labels: LabelState,
    iterations: int = DEFAULT_ITERATIONS,
    stop_tol: float | None = None,
) -> SoftLabelMatrix:
    """Run label propagation for a fixed number of rounds.

    ``stop_tol`` is an opt-in early stop: once the largest entrywise
    change between consecutive rounds drops below it, remaining rounds
    are skipped (they could move no entry by more than the tolerance).
    """
    prev: np.ndarray | None = None
    ran = 0
    y: np.ndarray | None = None
    for step, y in enumerate(propagate_steps(graph, labels, iterations), start=1):
        ran = step
        if stop_tol is not None and prev is not None:
            if np.max(np.abs(y - prev)) < stop_tol:
                break
        prev = y
    assert y is not None
    return SoftLabelMatrix(scores=y, iterations=ran)


def pseudo_labels(soft: SoftLabelMatrix) -> tuple[np.ndarray, np.ndarray]:
    """argmax class per row (ties to the lower class) plus a confidence.

    Confidence is the winning entry over the row sum; all-zero rows are
    undetermined (-1) with confidence 0.
    """
    scores = soft.scores
    classes = np.argmax(scores, axis=1).astype(np.int64)
    row_sum = scores.sum(axis=1)
    row_max = scores[np.arange(scores.shape[0]), classes]
    empty = row_sum == 0.0
    confidence = np.zeros(scores.shape[0], dtype=np.float64)
    np.divide(row_max, row_sum, out=confidence, where=~empty)
    classes[empty] = UNDETERMINED
    return classes, confidence


def weighted_knn_classify(
    graph: KnnGraph, label_rows: np.ndarray, targets
) -> np.ndarray:
    """Classify targets by a weighted vote over their original k neighbors.

    ``label_rows`` holds one soft or one-hot row per graph node (zero rows
    for nodes whose label must not vote). Targets whose neighbors carry no
    label mass come back undetermined (-1) rather than failing.
    """
    label_rows = np.asarray(label_rows, dtype=np.float64)
    if label_rows.shape[0] != graph.n:
        raise ParameterError(
            f"label rows for {label_rows.shape[0]} nodes but graph has {graph.n}"
        )
    targets = check_indices(targets, graph.n, "targets")
    votes = label_rows[graph.neighbors[targets]]  # (m, k, c)
    scores = np.einsum("mk,mkc->mc", graph.neighbor_weights[targets], votes)
    predicted = np.argmax(scores, axis=1).astype(np.int64)
    predicted[scores.sum(axis=1) == 0.0] = UNDETERMINED
    return predicted


def label_error_scores(
    soft: SoftLabelMatrix, labels: LabelState
) -> list[tuple[int, float]]:
    """Rank labeled samples by propagation mass off their given class.

    Returns (sample index, disagreement score) pairs in descending score
    order (ties to the lower index); the ranking is the verification queue.
    """
    if soft.n != labels.n:
        raise ParameterError(f"soft matrix has {soft.n} rows but labels have {labels.n}")
    given_idx = np.flatnonzero(labels.given >= 0)
    if not given_idx.size:
        raise ParameterError("no sample has a given label")
    rows = soft.scores[given_idx]
    row_sum = rows.sum(axis=1)
    own = rows[np.arange(given_idx.size), labels.given[given_idx]]
    scores = np.zeros(given_idx.size, dtype=np.float64)
    nonzero = row_sum > 0.0
    scores[nonzero] = 1.0 - own[nonzero] / row_sum[nonzero]
    order = np.lexsort((given_idx, -scores))
    return [(int(given_idx[i]), float(scores[i])) for i in order]


# ---------------------------------------------------------------------------
# label / soft-label JSON-lines formats
# ---------------------------------------------------------------------------


def read_label_file(stream, index_of: dict[str, int], n: int,
                    num_classes: int | None = None) -> LabelState:
    """Parse a JSON-lines label file ({"id", "class", "trusted"}) into a
    LabelState over ``n`` samples; unknown ids are format errors."""
    if isinstance(stream, (bytes, bytearray)):
        text = stream.decode("utf-8")
    elif isinstance(stream, str):
        text = stream
    else:
        text = stream.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    given = np.full(n, UNDETERMINED, dtype=np.int64)
    trusted = np.zeros(n, dtype=bool)
    max_class = -1
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        try:
            sid = str(obj["id"])
            cls = int(obj["class"])
            trust = bool(obj.get("trusted", True))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"line {lineno}: expected id/class/trusted fields") from exc
        if sid not in index_of:
            raise FormatError(f"line {lineno}: unknown sample id {sid!r}")
        if cls < 0:
            raise FormatError(f"line {lineno}: negative class {cls}")
        if num_classes is not None and cls >= num_classes:
            raise FormatError(
                f"line {lineno}: class {cls} out of range for {num_classes} classes"
            )
        row = index_of[sid]
        given[row] = cls
        trusted[row] = trust
        max_class = max(max_class, cls)
    if max_class < 0:
        raise ParameterError("label file contains no labels")
    c = num_classes if num_classes is not None else max(2, max_class + 1)
    return LabelState(num_classes=c, given=given, trusted=trusted)


def label_file_lines(labels: LabelState, ids) -> Iterator[str]:
    """Serialize every sample with a given label, carrying its trusted flag."""
    for i in np.flatnonzero(labels.given >= 0):
        yield json.dumps(
            {"id": ids[i], "class": int(labels.given[i]), "trusted": bool(labels.trusted[i])},
            sort_keys=True,
        )


def soft_label_lines(soft: SoftLabelMatrix, ids) -> Iterator[str]:
    """Serialize soft rows as {"id", "scores", "pseudo", "confidence"} lines."""
    classes, confidence = pseudo_labels(soft)
    for i in range(soft.n):
        yield json.dumps(
            {
                "id": ids[i],
                "scores": [float(v) for v in soft.scores[i]],
                "pseudo": int(classes[i]),
                "confidence": float(confidence[i]),
            },
            sort_keys=True,
        )
