"""CART regression trees built on the shared split-search kernel."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from . import _kernels

LEAF = -1


@dataclass
class Tree:
    """Flattened binary tree; index 0 is the root."""

    feature: np.ndarray     # split feature index, -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray       # mean label of the node
    n_samples: np.ndarray
    impurity: np.ndarray    # label variance of the node

    def __len__(self) -> int:
        return len(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0])
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            if self.feature[node] == LEAF:
                out[rows] = self.value[node]
                continue
            go_left = X[rows, self.feature[node]] <= self.threshold[node]
            stack.append((self.left[node], rows[go_left]))
            stack.append((self.right[node], rows[~go_left]))
        return out


class _Builder:
    def __init__(self, X, y, max_depth, min_leaf, max_features, rng):
        self.X = np.ascontiguousarray(X, dtype=float)
        self.y = np.ascontiguousarray(y, dtype=float)
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.rng = rng
        self.nodes: list[list] = []  # feature, threshold, left, right, value, n, impurity

    def _candidate_features(self):
        m = self.X.shape[1]
        if self.max_features is None or self.max_features >= m:
            return np.arange(m)
        chosen = self.rng.choice(m, size=self.max_features, replace=False)
        return np.sort(chosen)

    def build(self, rows, depth):
        yr = self.y[rows]
        mean = float(yr.mean())
        var = float(yr.var())
        idx = len(self.nodes)
        self.nodes.append([LEAF, 0.0, LEAF, LEAF, mean, len(rows), var])
        if depth >= self.max_depth or var == 0.0 or len(rows) < 2 * self.min_leaf:
            return idx
        split = _kernels.best_split(self.X, self.y, rows,
                                    self._candidate_features(), self.min_leaf)
        if split is None:
            return idx
        f, thr, _score = split
        go_left = self.X[rows, f] <= thr
        left = self.build(rows[go_left], depth + 1)
        right = self.build(rows[~go_left], depth + 1)
        self.nodes[idx][0] = f
        self.nodes[idx][1] = thr
        self.nodes[idx][2] = left
        self.nodes[idx][3] = right
        return idx


def fit_regression_tree(X, y, max_depth: int = 8, min_leaf: int = 1,
                        seed: int | None = None, max_features=None,
                        rng=None) -> Tree:
    """Greedy variance-minimizing regression tree.

    max_features limits the candidate features per split (random forest
    column subsampling); rng/seed only matter when it is set.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("empty or non-matrix training input")
    if X.shape[0] != y.shape[0]:
        raise DataError("row count mismatch between X and y")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    b = _Builder(X, y, max_depth, min_leaf, max_features, rng)
    b.build(np.arange(X.shape[0]), 0)
    cols = list(zip(*b.nodes))
    return Tree(
        feature=np.array(cols[0], dtype=np.int64),
        threshold=np.array(cols[1], dtype=float),
        left=np.array(cols[2], dtype=np.int64),
        right=np.array(cols[3], dtype=np.int64),
        value=np.array(cols[4], dtype=float),
        n_samples=np.array(cols[5], dtype=np.int64),
        impurity=np.array(cols[6], dtype=float),
    )


def gini_impurity(labels) -> float:
    """Gini impurity 1 - sum(p_k^2) of a categorical label vector."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise DataError("empty label vector")
    _, counts = np.unique(labels, return_counts=True)
    p = counts / labels.size
    return float(1.0 - np.sum(p * p))
