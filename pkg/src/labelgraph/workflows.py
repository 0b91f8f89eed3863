"""Simulation harnesses: active-learning annotation and label-noise studies.

Everything here is seed-deterministic: identical seeds reproduce identical
acquisition orders, noise masks, and metric curves bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError
from .features import FeatureMatrix, from_rows
from .graph import KnnGraph, build_knn_graph
from .propagation import (
    DEFAULT_ITERATIONS,
    LabelState,
    SoftLabelMatrix,
    init_label_matrix,
    propagate,
    propagate_steps,
    pseudo_labels,
    weighted_knn_classify,
)
from .validation import check_indices

DEFAULT_EVAL_FRACTION = 0.1


@dataclass(frozen=True)
class ActiveLearningConfig:
    """Budgeted random-acquisition loop over an unlabeled pool.

    ``include_unlabeled_pool`` switches between propagating over the full
    graph (pool pseudo-labels contribute) and rebuilding the graph over
    labeled + eval nodes only, the ablation that measures what the
    unlabeled pool buys.
    """

    batch_size: int
    budget: int
    seed: int
    eval_split: tuple[int, ...]
    num_classes: int
    include_unlabeled_pool: bool = True
    iterations: int = DEFAULT_ITERATIONS
    strategy: str = "random"

    @classmethod
    def from_json(cls, text: str) -> "ActiveLearningConfig":
        obj = json.loads(text)
        obj["eval_split"] = tuple(obj["eval_split"])
        return cls(**obj)

    def to_json(self) -> str:
        obj = asdict(self)
        obj["eval_split"] = list(self.eval_split)
        return json.dumps(obj, sort_keys=True)


@dataclass(frozen=True)
class NoiseExperimentConfig:
    """Label-corruption study configuration.

    ``eval_split`` holds out nodes for the classification comparison; when
    empty a deterministic 10% split is carved from the seed.
    """

    noise_rate: float
    iterations: int = DEFAULT_ITERATIONS
    seed: int = 0
    eval_split: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ParameterError(f"noise_rate must be in [0, 1], got {self.noise_rate}")

    @classmethod
    def from_json(cls, text: str) -> "NoiseExperimentConfig":
        obj = json.loads(text)
        if "eval_split" in obj:
            obj["eval_split"] = tuple(obj["eval_split"])
        return cls(**obj)

    def to_json(self) -> str:
        obj = asdict(self)
        obj["eval_split"] = list(self.eval_split)
        return json.dumps(obj, sort_keys=True)


@dataclass(frozen=True)
class NoiseStudyResult:
    noise_trace: tuple[float, ...]  # index t = noise level after t rounds
    accuracy_propagated: float
    accuracy_corrupted: float


def inject_noise(
    labels, noise_rate: float, num_classes: int, rng_seed: int
) -> np.ndarray:
    """Corrupt exactly round(noise_rate * n) labels, chosen uniformly
    without replacement, each replaced by a uniform draw over the other
    classes."""
    if num_classes < 2:
        raise ParameterError(f"need >= 2 classes, got {num_classes}")
    clean = np.asarray(labels, dtype=np.int64).copy()
    n = clean.shape[0]
    count = int(round(noise_rate * n))
    if count == 0:
        return clean
    rng = np.random.default_rng(rng_seed)
    hit = rng.choice(n, size=count, replace=False)
    # uniform over the other classes: draw from c-1 slots, skip the original
    draws = rng.integers(0, num_classes - 1, size=count)
    draws[draws >= clean[hit]] += 1
    clean[hit] = draws
    return clean


def noise_level(pseudo, truth) -> float:
    """Fraction of positions where the two label vectors disagree
    (undetermined entries count as disagreement)."""
    pseudo = np.asarray(pseudo, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pseudo.shape != truth.shape:
        raise ParameterError(
            f"length mismatch: {pseudo.shape[0]} pseudo vs {truth.shape[0]} truth"
        )
    return float(np.mean(pseudo != truth))


def carve_eval_split(n: int, fraction: float, seed: int) -> tuple[int, ...]:
    """Deterministic held-out index set of round(fraction * n) nodes."""
    count = int(round(fraction * n))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x65_76_61_6C]))
    return tuple(int(i) for i in np.sort(rng.choice(n, size=count, replace=False)))


def run_noise_study(
    graph: KnnGraph, clean_labels, config: NoiseExperimentConfig
) -> NoiseStudyResult:
    """Corrupt pool labels, diffuse without clamping, and track recovery.

    Records the pseudo-label noise level on the pool after each round
    (index 0 = the injected corruption itself), then compares neighbor-vote
    classification of the eval split fed by the diffused pseudo-labels
    against the corrupted labels used directly.
    """
    truth = np.asarray(clean_labels, dtype=np.int64)
    if truth.shape[0] != graph.n:
        raise ParameterError(f"got {truth.shape[0]} labels for {graph.n} nodes")
    num_classes = max(2, int(truth.max()) + 1)
    eval_idx = (
        np.asarray(config.eval_split, dtype=np.int64)
        if config.eval_split
        else np.asarray(carve_eval_split(graph.n, DEFAULT_EVAL_FRACTION, config.seed))
    )
    check_indices(eval_idx, graph.n, "eval_split")
    pool = np.setdiff1d(np.arange(graph.n), eval_idx)

    corrupted_pool = inject_noise(truth[pool], config.noise_rate, num_classes, config.seed)
    given = np.full(graph.n, -1, dtype=np.int64)
    given[pool] = corrupted_pool
    state = LabelState(
        num_classes=num_classes,
        given=given,
        trusted=np.zeros(graph.n, dtype=bool),
    )

    trace = [noise_level(corrupted_pool, truth[pool])]
    final = init_label_matrix(state).scores
    for y in propagate_steps(graph, state, config.iterations):
        classes, _ = pseudo_labels(SoftLabelMatrix(scores=y, iterations=0))
        trace.append(noise_level(classes[pool], truth[pool]))
        final = y

    final_classes, _ = pseudo_labels(SoftLabelMatrix(scores=final, iterations=0))
    acc_lp = _knn_eval_accuracy(graph, pool, final_classes[pool], num_classes, eval_idx, truth)
    acc_raw = _knn_eval_accuracy(graph, pool, corrupted_pool, num_classes, eval_idx, truth)
    return NoiseStudyResult(
        noise_trace=tuple(trace),
        accuracy_propagated=acc_lp,
        accuracy_corrupted=acc_raw,
    )


def _knn_eval_accuracy(graph, pool, pool_classes, num_classes, eval_idx, truth) -> float:
    """Accuracy of the neighbor-weighted vote on eval nodes, with label
    rows only on pool nodes (undetermined predictions count as wrong)."""
    rows = np.zeros((graph.n, num_classes), dtype=np.float64)
    voting = pool[pool_classes >= 0]
    rows[voting, pool_classes[pool_classes >= 0]] = 1.0
    predicted = weighted_knn_classify(graph, rows, eval_idx)
    return float(np.mean(predicted == truth[eval_idx]))


def run_active_learning(
    graph: KnnGraph,
    oracle: Callable[[int], int] | np.ndarray,
    config: ActiveLearningConfig,
    features: FeatureMatrix | None = None,
) -> list[tuple[int, float]]:
    """Random-acquisition annotation loop; returns (labels spent, accuracy).

    The oracle is a callable mapping node index to true class, or simply an
    array of true classes. Each round draws a batch from the untrusted
    pool, labels it through the oracle, propagates, and scores pseudo-label
    top-1 on the eval split.
    The labeled-only ablation (``include_unlabeled_pool=False``) rebuilds
    the graph over trusted + eval nodes each round, which requires the
    embedding matrix.
    """
    if config.strategy != "random":
        raise ParameterError(f"unknown acquisition strategy {config.strategy!r}")
    if not callable(oracle):
        truth = np.asarray(oracle, dtype=np.int64)
        if truth.shape != (graph.n,):
            raise ParameterError(
                f"oracle array must have one label per node, got {truth.shape}"
            )
        if (truth < 0).any():
            raise ParameterError("oracle array must label every sample")
        oracle = truth.__getitem__
    eval_idx = check_indices(config.eval_split, graph.n, "eval_split")
    pool = np.setdiff1d(np.arange(graph.n), eval_idx)
    if not config.include_unlabeled_pool and features is None:
        raise ParameterError("the labeled-only ablation needs the feature matrix to rebuild")
    if config.batch_size < 1 or config.batch_size > config.budget:
        raise ParameterError(
            f"batch_size must be in [1, budget], got {config.batch_size}"
        )
    if config.budget > pool.size:
        raise ParameterError(f"budget {config.budget} exceeds pool size {pool.size}")

    rng = np.random.default_rng(config.seed)
    remaining = pool.copy()
    given = np.full(graph.n, -1, dtype=np.int64)
    trusted = np.zeros(graph.n, dtype=bool)
    eval_truth = np.array([oracle(int(i)) for i in eval_idx], dtype=np.int64)

    curve: list[tuple[int, float]] = []
    spent = 0
    while spent < config.budget:
        take = min(config.batch_size, config.budget - spent)
        picked = rng.choice(remaining, size=take, replace=False)
        remaining = np.setdiff1d(remaining, picked)
        for i in picked:
            given[i] = oracle(int(i))
            trusted[i] = True
        spent += take

        if config.include_unlabeled_pool:
            state = LabelState(
                num_classes=config.num_classes, given=given, trusted=trusted
            )
            soft = propagate(graph, state, iterations=config.iterations)
            classes, _ = pseudo_labels(soft)
            predicted = classes[eval_idx]
        else:
            predicted = _labeled_only_predictions(
                graph, features, given, trusted, eval_idx, config
            )
        curve.append((spent, float(np.mean(predicted == eval_truth))))
    return curve


def _labeled_only_predictions(graph, features, given, trusted, eval_idx, config):
    """Rebuild the graph over trusted + eval nodes and propagate there."""
    subset = np.sort(np.concatenate([np.flatnonzero(trusted), eval_idx]))
    sub_features = features.subset(subset)
    k = min(graph.k, subset.size - 1)
    sub_graph = build_knn_graph(sub_features, k=k, temperature=graph.temperature)
    state = LabelState(
        num_classes=config.num_classes,
        given=given[subset],
        trusted=trusted[subset],
    )
    soft = propagate(sub_graph, state, iterations=config.iterations)
    classes, _ = pseudo_labels(soft)
    position = {int(node): p for p, node in enumerate(subset)}
    return np.array([classes[position[int(i)]] for i in eval_idx], dtype=np.int64)


def make_blobs(
    classes: int, n: int, dim: int, separation: float, seed: int
) -> tuple[FeatureMatrix, np.ndarray]:
    """Isotropic Gaussian blobs around mutually orthogonal unit centers.

    ``separation`` is the ratio of the inter-center distance to the
    expected within-cluster radius (the noise vector norm), which is the
    scale that controls neighbor purity after rows are unit-normalized.
    Returns the normalized features and the ground-truth classes.
    """
    if classes < 2:
        raise ParameterError(f"need >= 2 classes, got {classes}")
    if classes > dim:
        raise ParameterError(f"need dim >= classes to place centers, got dim={dim}")
    if n < classes:
        raise ParameterError(f"need n >= classes, got n={n}")
    if separation <= 0:
        raise ParameterError(f"separation must be positive, got {separation}")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((dim, classes)))
    centers = basis.T  # orthonormal rows, pairwise distance sqrt(2)
    truth = np.arange(n, dtype=np.int64) % classes
    radius = np.sqrt(2.0) / separation
    points = centers[truth] + rng.standard_normal((n, dim)) * (radius / np.sqrt(dim))
    ids = [f"blob-{i:06d}" for i in range(n)]
    return from_rows(points, ids), truth
