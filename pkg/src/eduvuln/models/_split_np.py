"""Numpy fallback for the best-split scan.

Both backends must produce bit-identical proxies: cumulative sums are
sequential in both, every arithmetic expression is written with the same
operation order, and ties resolve to the first (lowest) position.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def best_split_regression(values: np.ndarray, targets: np.ndarray,
                          min_leaf: int) -> tuple[int, float]:
    """Best variance-reducing split of ascending-sorted values.

    Returns (pos, proxy) where the left side is values[:pos + 1], or
    (-1, -inf) when no position satisfies the distinct-boundary and
    min_leaf constraints. The proxy sum_L^2/n_L + sum_R^2/n_R increases
    exactly when the total squared error decreases.
    """
    n = values.shape[0]
    if n < 2 * min_leaf:
        return -1, -np.inf
    csum = np.cumsum(targets)
    total = csum[-1]
    pos = np.arange(min_leaf - 1, n - min_leaf)
    pos = pos[values[pos] < values[pos + 1]]
    if pos.size == 0:
        return -1, -np.inf
    nl = (pos + 1).astype(np.float64)
    nr = n - nl
    sl = csum[pos]
    sr = total - sl
    proxy = sl * sl / nl + sr * sr / nr
    best = int(np.argmax(proxy))
    return int(pos[best]), float(proxy[best])


def best_split_classification(values: np.ndarray, labels: np.ndarray,
                              min_leaf: int) -> tuple[int, float]:
    """Best Gini-reducing split for 0/1 labels; same contract as the
    regression variant. Counts stay exact integers in float64, so the
    proxy (p_L^2 + q_L^2)/n_L + (p_R^2 + q_R^2)/n_R rounds only at the
    two divisions."""
    n = values.shape[0]
    if n < 2 * min_leaf:
        return -1, -np.inf
    cpos = np.cumsum(labels)
    total_pos = cpos[-1]
    pos = np.arange(min_leaf - 1, n - min_leaf)
    pos = pos[values[pos] < values[pos + 1]]
    if pos.size == 0:
        return -1, -np.inf
    nl = (pos + 1).astype(np.float64)
    nr = n - nl
    pl = cpos[pos]
    ql = nl - pl
    pr = total_pos - pl
    qr = nr - pr
    proxy = (pl * pl + ql * ql) / nl + (pr * pr + qr * qr) / nr
    best = int(np.argmax(proxy))
    return int(pos[best]), float(proxy[best])
