"""Extremely randomized trees for binary classification.

Every tree sees the full training set. At each node up to ``features_per_node``
non-constant features are visited in random order, one threshold is drawn
uniformly between that feature's node minimum and maximum, and the candidate
with the largest Gini decrease becomes the split (``x <= threshold`` goes left).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._base import BinaryClassifier, check_labels

LEAF = -1


def gini(counts) -> float:
    """Gini impurity of a node with the given per-class counts."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


def gini_gain(y_node, left_mask) -> float:
    """Impurity decrease of splitting ``y_node`` into ``left_mask`` / not ``left_mask``."""
    y_node = np.asarray(y_node)
    left_mask = np.asarray(left_mask, dtype=bool)
    n = y_node.size

    def counts(v):
        return [(v == -1).sum(), (v == 1).sum()]

    yl, yr = y_node[left_mask], y_node[~left_mask]
    return gini(counts(y_node)) - yl.size / n * gini(counts(yl)) - yr.size / n * gini(counts(yr))


@dataclass
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf.

    ``value[i]`` holds (P(-1), P(+1)) for leaves.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self) -> int:
        return self.feature.size

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        out = np.empty(X.shape[0], dtype=np.int64)
        for r, x in enumerate(X):
            node = 0
            while self.feature[node] != LEAF:
                node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
            out[r] = node
        return out


def _grow_tree(X, y, features_per_node, min_samples_split, rng) -> Tree:
    n, d = X.shape
    positive = y == 1
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        pos = int(positive[idx].sum())
        value.append(((idx.size - pos) / idx.size, pos / idx.size))
        return len(feature) - 1

    stack = [(new_node(np.arange(n)), np.arange(n))]
    while stack:
        node, idx = stack.pop()
        m = idx.size
        pos = int(positive[idx].sum())
        if pos == 0 or pos == m or m < min_samples_split:
            continue
        split = _best_split(X, idx, positive[idx], pos, features_per_node, rng)
        if split is None:
            continue
        f, theta, go_left = split
        feature[node], threshold[node] = f, theta
        li, ri = idx[go_left], idx[~go_left]
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is expanded (and numbered) first
        stack.append((right[node], ri))
        stack.append((left[node], li))

    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(value, dtype=np.float64).reshape(-1, 2))


def _best_split(X, idx, pos_mask, pos, features_per_node, rng):
    m = idx.size
    d = X.shape[1]
    order = rng.permutation(d)
    chosen, lo_all, hi_all = [], [], []
    found = 0
    # scan features in random order until enough non-constant ones are found
    chunk = max(features_per_node, 64)
    for start in range(0, d, chunk):
        cols = order[start:start + chunk]
        sub = X[np.ix_(idx, cols)]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        usable = np.nonzero(hi > lo)[0][:features_per_node - found]
        chosen.append(cols[usable])
        lo_all.append(lo[usable])
        hi_all.append(hi[usable])
        found += usable.size
        if found == features_per_node:
            break
    cols = np.concatenate(chosen)
    if cols.size == 0:
        return None
    lo, hi = np.concatenate(lo_all), np.concatenate(hi_all)
    theta = rng.uniform(lo, hi)

    sub = X[np.ix_(idx, cols)]
    go_left = sub <= theta
    n_left = go_left.sum(axis=0)
    n_right = m - n_left
    pos_left = (go_left & pos_mask[:, None]).sum(axis=0)
    pos_right = pos - pos_left

    def impurity(p, n):
        # from integer class counts, so relabelling classes gives bit-identical gains
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n > 0, 1.0 - (p * p + (n - p) * (n - p)) / (n * n).astype(np.float64), 0.0)

    parent = impurity(np.int64(pos), np.int64(m))
    gain = parent - n_left / m * impurity(pos_left, n_left) - n_right / m * impurity(pos_right, n_right)
    valid = (n_left > 0) & (n_right > 0)
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))
    return int(cols[best]), float(theta[best]), go_left[:, best]


class ExtraTrees(BinaryClassifier):
    """Ensemble of T extremely randomized trees; posterior is the mean leaf distribution.

    Tree ``t`` draws from its own generator seeded by ``(seed, t)``, so the
    forest does not depend on ``n_jobs``.
    """

    kind = "extratrees"

    def __init__(self, n_trees: int = 100, features_per_node: int | None = None,
                 min_samples_split: int = 2, seed: int = 0, n_jobs: int = 1):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if features_per_node is not None and features_per_node < 1:
            raise ValueError("features_per_node must be >= 1")
        self.n_trees = int(n_trees)
        self.features_per_node = features_per_node
        self.min_samples_split = int(min_samples_split)
        self.seed = int(seed)
        self.n_jobs = int(n_jobs)

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = check_labels(y, X, require_both=False)
        d = X.shape[1]
        mtry = self.features_per_node or max(1, int(round(np.sqrt(d))))
        if mtry > d:
            raise ValueError(f"features_per_node={mtry} exceeds the {d} features")

        def grow(t):
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, t]))
            return _grow_tree(X, y, mtry, self.min_samples_split, rng)

        if self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                self.trees_ = list(pool.map(grow, range(self.n_trees)))
        else:
            self.trees_ = [grow(t) for t in range(self.n_trees)]
        self.features_per_node_ = mtry
        self.n_features_ = d
        return self

    def predict_proba(self, X):
        """(n, 2) array of averaged (P(-1), P(+1))."""
        X = self._check_input(X)
        total = np.zeros((X.shape[0], 2))
        for tree in self.trees_:
            total += tree.value[tree.apply(X)]
        return total / len(self.trees_)

    def score_samples(self, X):
        return self.predict_proba(X)[:, 1]

    def predict(self, X):
        """Argmax of the posterior; an exact tie maps to -1."""
        proba = self.predict_proba(X)
        return np.where(proba[:, 1] > proba[:, 0], 1, -1)

    def _state(self):
        params = {"n_trees": self.n_trees, "features_per_node": self.features_per_node,
                  "min_samples_split": self.min_samples_split, "seed": self.seed,
                  "features_per_node_value": self.features_per_node_, "n_features": self.n_features_}
        arrays = {}
        for t, tree in enumerate(self.trees_):
            arrays[f"t{t}.feature"] = tree.feature
            arrays[f"t{t}.threshold"] = tree.threshold
            arrays[f"t{t}.left"] = tree.left
            arrays[f"t{t}.right"] = tree.right
            arrays[f"t{t}.value"] = tree.value
        return params, arrays

    @classmethod
    def _from_state(cls, params, arrays):
        model = cls(params["n_trees"], params["features_per_node"], params["min_samples_split"],
                    params["seed"])
        model.trees_ = [Tree(*(arrays[f"t{t}.{name}"] for name in ("feature", "threshold", "left", "right", "value")))
                        for t in range(params["n_trees"])]
        model.features_per_node_ = params["features_per_node_value"]
        model.n_features_ = params["n_features"]
        return model
