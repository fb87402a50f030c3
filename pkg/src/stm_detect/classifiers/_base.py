from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    pass


def check_labels(y, X, require_both: bool = True):
    y = np.asarray(y)
    if y.ndim != 1 or y.size != X.shape[0]:
        raise ValueError(f"expected {X.shape[0]} labels, got shape {y.shape}")
    if not np.isin(y, (-1, 1)).all():
        raise ValueError("labels must be -1 (genuine) or +1 (imitated)")
    if require_both and not ((y == -1).any() and (y == 1).any()):
        raise ValueError("training data must contain both classes")
    return y.astype(np.int64)


class BinaryClassifier:
    """Shared fit/predict surface for the {-1, +1} classifiers."""

    kind = ""
    n_features_: int

    def fit(self, X, y):
        raise NotImplementedError

    def predict(self, X):
        raise NotImplementedError

    def score_samples(self, X):
        """Continuous score; larger means more likely +1."""
        raise NotImplementedError

    def _check_input(self, X):
        if not hasattr(self, "n_features_"):
            raise RuntimeError(f"{type(self).__name__} is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_:
            raise DimensionError(f"expected {self.n_features_} features, got {X.shape[1]}")
        return X

    def _state(self):
        raise NotImplementedError

    @classmethod
    def _from_state(cls, params, arrays):
        raise NotImplementedError
