"""Pure-numpy best-split search; fallback when the compiled kernel is absent.

Both backends share the same candidate set (midpoints between consecutive
distinct sorted values), the same tie rule (first strict improvement in
feature order, then ascending threshold) and the same min_leaf handling.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def best_split(X, y, rows, features, min_leaf):
    """Find the split minimizing summed child SSE over the given rows.

    Returns (feature, threshold, score) or None when no valid split exists.
    """
    n = len(rows)
    if n < 2 * min_leaf:
        return None
    best = None
    yr = y[rows]
    for f in features:
        v = X[rows, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        ys = yr[order]
        csum = np.cumsum(ys)
        csum2 = np.cumsum(ys * ys)
        total = csum[-1]
        total2 = csum2[-1]
        k = np.arange(1, n)
        valid = (vs[1:] > vs[:-1]) & (k >= min_leaf) & (n - k >= min_leaf)
        if not valid.any():
            continue
        left = csum2[:-1] - csum[:-1] ** 2 / k
        right = (total2 - csum2[:-1]) - (total - csum[:-1]) ** 2 / (n - k)
        score = np.where(valid, left + right, np.inf)
        i = int(np.argmin(score))
        s = float(score[i])
        if best is None or s < best[2]:
            thr = 0.5 * (vs[i] + vs[i + 1])
            best = (int(f), float(thr), s)
    return best
