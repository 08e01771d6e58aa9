"""Isolation forest anomaly scoring."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..seeding import child_rng

EULER_GAMMA = 0.5772156649


def average_path_length(n: int) -> float:
    """Expected unsuccessful-search path length c(n) in a binary search tree."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    h = math.log(n - 1) + EULER_GAMMA
    return 2.0 * h - 2.0 * (n - 1) / n


@dataclass
class _INode:
    feature: int = -1
    threshold: float = 0.0
    left: "_INode | None" = None
    right: "_INode | None" = None
    size: int = 0  # leaf sample count


@dataclass
class IsolationForest:
    trees: list[_INode]
    subsample_size: int
    n_train: int
    seed: int
    kind: str = "isolation_forest"

    def path_length(self, x: np.ndarray) -> float:
        """Mean adjusted isolation depth of one row across all trees."""
        total = 0.0
        for root in self.trees:
            node = root
            depth = 0
            while node.feature != -1:
                node = node.left if x[node.feature] <= node.threshold else node.right
                depth += 1
            total += depth + average_path_length(node.size)
        return total / len(self.trees)


def _grow(X, rows, depth, depth_cap, rng) -> _INode:
    if depth >= depth_cap or len(rows) <= 1:
        return _INode(size=len(rows))
    sub = X[rows]
    spans = sub.max(axis=0) - sub.min(axis=0)
    candidates = np.flatnonzero(spans > 0)
    if candidates.size == 0:
        return _INode(size=len(rows))
    f = int(rng.choice(candidates))
    lo, hi = sub[:, f].min(), sub[:, f].max()
    thr = float(rng.uniform(lo, hi))
    go_left = sub[:, f] <= thr
    if go_left.all() or not go_left.any():
        return _INode(size=len(rows))
    return _INode(feature=f, threshold=thr,
                  left=_grow(X, rows[go_left], depth + 1, depth_cap, rng),
                  right=_grow(X, rows[~go_left], depth + 1, depth_cap, rng))


def fit_isolation_forest(X, n_trees: int = 100, subsample: int = 256,
                         seed: int = 0) -> IsolationForest:
    """Random trees over psi-subsamples, depth-capped at ceil(log2 psi)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("empty training input")
    n = X.shape[0]
    if subsample > n:
        raise ValueError(f"subsample {subsample} exceeds dataset size {n}")
    if subsample < 2 or n_trees < 1:
        raise ValueError("need subsample >= 2 and n_trees >= 1")
    depth_cap = math.ceil(math.log2(subsample))
    trees = []
    for i in range(n_trees):
        rng = child_rng(seed, i)
        rows = rng.choice(n, size=subsample, replace=False)
        trees.append(_grow(X, rows, 0, depth_cap, rng))
    return IsolationForest(trees=trees, subsample_size=subsample, n_train=n, seed=seed)


def anomaly_score(forest: IsolationForest, x) -> float:
    """S(x, n) = 2^(-E(h(x)) / c(n)); higher means more anomalous."""
    if not forest.trees:
        raise DataError("unfitted forest")
    x = np.asarray(x, dtype=float)
    e_h = forest.path_length(x)
    c = average_path_length(forest.subsample_size)
    return float(2.0 ** (-e_h / c))


def detect_anomalies(X, contamination: float = 0.02, n_trees: int = 100,
                     subsample: int = 256, seed: int = 0):
    """Score every row; flag the ceil(contamination * n) highest scores.

    Returns (flagged_indices, scores); flagged indices are sorted by
    descending score.
    """
    if not 0 <= contamination < 0.5:
        raise ValueError("contamination must be in [0, 0.5)")
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    forest = fit_isolation_forest(X, n_trees=n_trees,
                                  subsample=min(subsample, n), seed=seed)
    scores = np.array([anomaly_score(forest, X[i]) for i in range(n)])
    k = math.ceil(contamination * n)
    if k == 0:
        return np.array([], dtype=int), scores
    order = np.argsort(-scores, kind="stable")
    return order[:k], scores
