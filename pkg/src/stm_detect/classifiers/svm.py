"""Soft-margin SVM with an RBF kernel, trained by SMO.

The solver works on the dual

    min_a  1/2 a^T Q a - sum(a),   Q_ij = y_i y_j K(x_i, x_j)
    s.t.   0 <= a_i <= C,  sum(a_i y_i) = 0

choosing each working pair by maximal violation for the first index and
second-order gain for the second (as in LIBSVM's WSS2).
"""

from __future__ import annotations

import warnings

import numpy as np

from ._base import BinaryClassifier, check_labels

TAU = 1e-12
ALPHA_EPS = 1e-8


class ConvergenceWarning(UserWarning):
    pass


def squared_distances(A, B):
    """Pairwise squared Euclidean distances via the Gram expansion, clamped at 0."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def rbf_kernel(A, B, gamma: float):
    return np.exp(-gamma * squared_distances(A, B))


def scale_gamma(X) -> float:
    """1 / (d * mean per-feature variance); 1.0 when every feature is constant."""
    X = np.asarray(X, dtype=np.float64)
    var = X.var(axis=0).mean()
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


class SVM(BinaryClassifier):
    """Binary RBF-kernel SVM.

    Parameters
    ----------
    C : float
        Box constraint on the dual variables.
    gamma : float or "scale"
        Kernel width; "scale" resolves to :func:`scale_gamma` of the training data.
    tol : float
        KKT violation tolerance for stopping.
    max_passes : int
        Iteration budget in units of the training-set size.

    After fitting, ``support_vectors_``, ``alphas_`` (non-negative),
    ``sv_labels_``, ``bias_`` and ``gamma_`` describe the decision function
    ``sum(alpha_i y_i K(x, x_i)) + bias``. ``converged_`` is False when the
    iteration budget ran out; the best iterate is kept.
    """

    kind = "svm"

    def __init__(self, C: float = 1.0, gamma="scale", tol: float = 1e-3, max_passes: int = 10000):
        if C <= 0:
            raise ValueError("C must be positive")
        self.C = float(C)
        self.gamma = gamma
        self.tol = float(tol)
        self.max_passes = int(max_passes)

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = check_labels(y, X)
        gamma = scale_gamma(X) if self.gamma == "scale" else float(self.gamma)
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        K = rbf_kernel(X, X, gamma)
        alpha, bias, converged, n_iter = _smo(K, y.astype(np.float64), self.C, self.tol,
                                              self.max_passes * len(y))
        if not converged:
            warnings.warn(f"SMO stopped after {n_iter} iterations without reaching tol={self.tol}",
                          ConvergenceWarning, stacklevel=2)
        keep = alpha > ALPHA_EPS
        self.support_vectors_ = X[keep]
        self.alphas_ = alpha[keep]
        self.sv_labels_ = y[keep]
        self.support_ = np.nonzero(keep)[0]
        self.bias_ = float(bias)
        self.gamma_ = float(gamma)
        self.converged_ = bool(converged)
        self.n_iter_ = int(n_iter)
        self.n_features_ = X.shape[1]
        return self

    def decision_function(self, X):
        X = self._check_input(X)
        # direct differences rather than the Gram expansion: exact at zero distance
        out = np.empty(X.shape[0])
        coef = self.alphas_ * self.sv_labels_
        for i, x in enumerate(X):
            d2 = ((self.support_vectors_ - x) ** 2).sum(axis=1)
            out[i] = coef @ np.exp(-self.gamma_ * d2) + self.bias_
        return out

    def predict(self, X):
        """Sign of the decision value; an exact zero maps to +1."""
        return np.where(self.decision_function(X) >= 0, 1, -1)

    def score_samples(self, X):
        return self.decision_function(X)

    def _state(self):
        params = {"C": self.C, "gamma": self.gamma, "tol": self.tol, "max_passes": self.max_passes,
                  "bias": self.bias_, "gamma_value": self.gamma_, "converged": self.converged_,
                  "n_iter": self.n_iter_, "n_features": self.n_features_}
        arrays = {"support_vectors": self.support_vectors_, "alphas": self.alphas_,
                  "sv_labels": self.sv_labels_.astype(np.int8), "support": self.support_.astype(np.int64)}
        return params, arrays

    @classmethod
    def _from_state(cls, params, arrays):
        model = cls(params["C"], params["gamma"], params["tol"], params["max_passes"])
        model.support_vectors_ = arrays["support_vectors"]
        model.alphas_ = arrays["alphas"]
        model.sv_labels_ = arrays["sv_labels"].astype(np.int64)
        model.support_ = arrays["support"]
        model.bias_ = params["bias"]
        model.gamma_ = params["gamma_value"]
        model.converged_ = params["converged"]
        model.n_iter_ = params["n_iter"]
        model.n_features_ = params["n_features"]
        return model


def _smo(K, y, C, tol, max_iter):
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective, Q @ alpha - 1
    Kd = np.diag(K).copy()
    converged = False
    it = 0
    while it < max_iter:
        i, j, gap = _select_pair(K, Kd, y, alpha, grad, C)
        if gap < tol or j < 0:
            converged = True
            break
        it += 1
        _update_pair(K, Kd, y, alpha, grad, C, i, j)
    else:
        _, _, gap = _select_pair(K, Kd, y, alpha, grad, C)
        converged = gap < tol
    alpha = np.clip(alpha, 0.0, C)
    return alpha, -_rho(y, alpha, grad, C), converged, it


def _up_low(y, alpha, C):
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    return up, low


def _select_pair(K, Kd, y, alpha, grad, C):
    up, low = _up_low(y, alpha, C)
    score = -y * grad
    if not up.any() or not low.any():
        return -1, -1, 0.0
    up_idx = np.nonzero(up)[0]
    i = int(up_idx[np.argmax(score[up_idx])])
    g_max = score[i]
    low_idx = np.nonzero(low)[0]
    g_min = score[low_idx].min()
    gap = g_max - g_min

    b = g_max - score[low_idx]
    cand = b > 0
    if not cand.any():
        return i, -1, gap
    t = low_idx[cand]
    a = Kd[i] + Kd[t] - 2.0 * K[i, t]
    a = np.where(a > 0, a, TAU)
    j = int(t[np.argmin(-(b[cand] ** 2) / a)])
    return i, j, gap


def _update_pair(K, Kd, y, alpha, grad, C, i, j):
    Qi = y[i] * y * K[i]
    Qj = y[j] * y * K[j]
    old_i, old_j = alpha[i], alpha[j]
    if y[i] != y[j]:
        quad = Kd[i] + Kd[j] + 2.0 * Qi[j]
        quad = quad if quad > 0 else TAU
        delta = (-grad[i] - grad[j]) / quad
        diff = old_i - old_j
        ai, aj = old_i + delta, old_j + delta
        if diff > 0:
            if aj < 0:
                aj, ai = 0.0, diff
        elif ai < 0:
            ai, aj = 0.0, -diff
        if diff > 0:
            if ai > C:
                ai, aj = C, C - diff
        elif aj > C:
            aj, ai = C, C + diff
    else:
        quad = Kd[i] + Kd[j] - 2.0 * Qi[j]
        quad = quad if quad > 0 else TAU
        delta = (grad[i] - grad[j]) / quad
        total = old_i + old_j
        ai, aj = old_i - delta, old_j + delta
        if total > C:
            if ai > C:
                ai, aj = C, total - C
        elif aj < 0:
            aj, ai = 0.0, total
        if total > C:
            if aj > C:
                aj, ai = C, total - C
        elif ai < 0:
            ai, aj = 0.0, total
    alpha[i], alpha[j] = ai, aj
    grad += Qi * (ai - old_i) + Qj * (aj - old_j)


def _rho(y, alpha, grad, C):
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(yg[free].mean())
    up, low = _up_low(y, alpha, C)
    ub = yg[up].min() if up.any() else np.inf
    lb = yg[low].max() if low.any() else -np.inf
    # both bounds exist whenever each class has at least one sample
    return float((ub + lb) / 2.0)
