"""scikit-learn compatible front end for the graph propagation engine.

``GraphLabelPropagation`` follows the semi-supervised estimator
convention: ``fit(X, y)`` with ``-1`` marking unlabeled rows performs
transductive propagation over the k-NN graph of the training set, and
``predict``/``predict_proba`` classify new rows by a temperature-weighted
vote among their nearest training neighbors.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import features as feats
from .errors import ParameterError
from .graph import build_knn_graph
from .propagation import (
    DEFAULT_ITERATIONS,
    UNDETERMINED,
    LabelState,
    propagate,
    pseudo_labels,
)
from .validation import as_float_matrix


class GraphLabelPropagation(BaseEstimator, ClassifierMixin):
    """Transductive classification by label diffusion over a k-NN graph.

    Parameters
    ----------
    k : int, default 10
        Neighbors per node in the similarity graph.
    temperature : float, default 0.01
        Sharpness of the exponential edge weighting; smaller values
        concentrate weight on the closest neighbors.
    iterations : int, default 20
        Propagation rounds.

    Attributes
    ----------
    classes_ : ndarray of the distinct labels seen in ``y`` (excluding -1).
    transduction_ : per-training-row predicted labels (-1 where the graph
        carried no label mass to the row).
    label_distributions_ : raw propagation scores, one row per sample.
    graph_ : the fitted similarity graph.
    """

    def __init__(self, k: int = 10, temperature: float = 0.01,
                 iterations: int = DEFAULT_ITERATIONS):
        self.k = k
        self.temperature = temperature
        self.iterations = iterations

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ParameterError(f"y must have shape ({X.shape[0]},), got {y.shape}")
        labeled = y != -1
        if not labeled.any():
            raise ParameterError("y contains no labels (all entries are -1)")
        self.classes_ = np.unique(y[labeled])
        if self.classes_.size < 2:
            # propagation is defined for >= 2 classes; pad the column space
            encoded_classes = 2
        else:
            encoded_classes = self.classes_.size
        code = {label: i for i, label in enumerate(self.classes_)}
        given = np.full(X.shape[0], -1, dtype=np.int64)
        given[labeled] = [code[v] for v in y[labeled]]

        self._features = feats.from_rows(X, [str(i) for i in range(X.shape[0])])
        self.graph_ = build_knn_graph(self._features, k=self.k, temperature=self.temperature)
        state = LabelState(
            num_classes=encoded_classes,
            given=given,
            trusted=labeled.astype(bool),
        )
        soft = propagate(self.graph_, state, iterations=self.iterations)
        self.label_distributions_ = soft.scores
        codes, self.confidence_ = pseudo_labels(soft)
        self.transduction_ = self._decode(codes)
        return self

    def _decode(self, codes: np.ndarray) -> np.ndarray:
        out = np.full(codes.shape[0], -1, dtype=self.classes_.dtype)
        known = codes != UNDETERMINED
        out[known] = self.classes_[codes[known]]
        return out

    def _vote_scores(self, X) -> np.ndarray:
        X = as_float_matrix(X, "X")
        if X.shape[1] != self._features.d:
            raise ParameterError(
                f"X has {X.shape[1]} columns but the model was fitted with {self._features.d}"
            )
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0.0):
            raise ParameterError("X contains a zero row")
        queries = X / norms[:, None]
        sims = queries @ self._features.data.astype(np.float64).T
        order = np.argsort(-sims, axis=1, kind="stable")[:, : self.k]
        weights = np.exp((np.take_along_axis(sims, order, axis=1) - 1.0) / self.temperature)
        onehot = np.zeros((self.graph_.n, self.label_distributions_.shape[1]))
        codes = np.argmax(self.label_distributions_, axis=1)
        voting = self.label_distributions_.sum(axis=1) > 0
        onehot[np.flatnonzero(voting), codes[voting]] = 1.0
        return np.einsum("mk,mkc->mc", weights, onehot[order])

    def predict(self, X):
        """Nearest-neighbor vote among fitted rows using their pseudo-labels;
        rows whose neighbors carry no label mass come back as -1."""
        scores = self._vote_scores(X)
        codes = np.argmax(scores, axis=1).astype(np.int64)
        codes[scores.sum(axis=1) == 0.0] = UNDETERMINED
        return self._decode(codes)

    def predict_proba(self, X):
        scores = self._vote_scores(X)
        totals = scores.sum(axis=1, keepdims=True)
        np.divide(scores, totals, out=scores, where=totals > 0)
        return scores[:, : max(self.classes_.size, 1)]

    def fit_predict(self, X, y):
        return self.fit(X, y).transduction_
