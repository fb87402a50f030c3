"""Exact k-nearest-neighbour classification by exhaustive Euclidean search."""

from __future__ import annotations

import numpy as np

from ._base import BinaryClassifier, check_labels


class KNN(BinaryClassifier):
    """Majority vote over the ``k`` nearest training vectors.

    Equal distances rank the lower training index first; a tied vote
    resolves to -1 (genuine).
    """

    kind = "knn"

    def __init__(self, k: int = 5):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = int(k)

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = check_labels(y, X, require_both=False)
        if self.k > X.shape[0]:
            raise ValueError(f"k={self.k} exceeds the {X.shape[0]} training samples")
        self.X_ = X.copy()
        self.y_ = y
        self.n_features_ = X.shape[1]
        return self

    def neighbors(self, x):
        """Indices of the k nearest training vectors to one query, nearest first."""
        d = np.sqrt(((self.X_ - x) ** 2).sum(axis=1))
        return np.argsort(d, kind="stable")[:self.k]

    def score_samples(self, X):
        """Sum of neighbour labels, in [-k, k]."""
        X = self._check_input(X)
        return np.array([self.y_[self.neighbors(x)].sum() for x in X], dtype=np.float64)

    def predict(self, X):
        return np.where(self.score_samples(X) > 0, 1, -1)

    def _state(self):
        return {"k": self.k, "n_features": self.n_features_}, {"X": self.X_, "y": self.y_.astype(np.int8)}

    @classmethod
    def _from_state(cls, params, arrays):
        model = cls(params["k"])
        model.X_ = arrays["X"]
        model.y_ = arrays["y"].astype(np.int64)
        model.n_features_ = params["n_features"]
        return model
