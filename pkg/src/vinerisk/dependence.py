"""Rank based dependence: Kendall's tau-b and tau matrices."""
from __future__ import annotations

import math
from collections.abc import Mapping

import numpy as np
import pandas as pd


class DependenceError(ValueError):
    pass


def _tie_pairs(sorted_vals):
    """Number of tied pairs in a sorted 1-d array."""
    if sorted_vals.size < 2:
        return 0
    boundaries = np.flatnonzero(np.diff(sorted_vals) != 0)
    sizes = np.diff(np.concatenate(([0], boundaries + 1, [sorted_vals.size])))
    return int(np.sum(sizes * (sizes - 1) // 2))


def _count_inversions(a):
    """Pairs i < j with a[i] > a[j], by bottom-up merge sort.

    ``a`` holds integer ranks in ``[0, n)``.  Each pass merges neighbouring
    sorted blocks of width ``w``; blocks are separated by adding a per-pair
    offset so all merges of a pass run as one vectorised sort.
    """
    a = np.asarray(a, dtype=np.int64).copy()
    n = a.size
    inv = 0
    w = 1
    big = n + 1
    idx = np.arange(n)
    while w < n:
        pair = idx // (2 * w)
        in_right = (idx // w) % 2 == 1
        keyed = a + pair * big
        left_keys = keyed[~in_right]
        left_pair = pair[~in_right]
        right_keys = keyed[in_right]
        right_pair = pair[in_right]
        ends = np.searchsorted(left_pair, right_pair, side="right")
        not_greater = np.searchsorted(left_keys, right_keys, side="right")
        inv += int(np.sum(ends - not_greater))
        a = np.sort(keyed) - np.sort(pair) * big
        w *= 2
    return inv


def kendall_tau(x, y) -> float:
    """Kendall's tau-b between two samples, O(n log n)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise DependenceError(f"length mismatch: {x.size} vs {y.size}")
    n = x.size
    if n < 2:
        raise DependenceError("need at least 2 observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DependenceError("non-finite values")
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(xs)
    # joint ties: runs equal in both x and y
    same = np.concatenate(([False], (np.diff(xs) == 0) & (np.diff(ys) == 0)))
    run_id = np.cumsum(~same)
    sizes = np.bincount(run_id)
    n3 = int(np.sum(sizes * (sizes - 1) // 2))
    n2 = _tie_pairs(np.sort(ys))
    if n1 == n0 or n2 == n0:
        raise DependenceError("degenerate sample: all values tied")
    # dense ranks of y; ties within equal x are already ordered so they add no inversions
    ranks = np.unique(ys, return_inverse=True)[1]
    swaps = _count_inversions(ranks)
    num = n0 - n1 - n2 + n3 - 2 * swaps
    return float(num / math.sqrt((n0 - n1) * (n0 - n2)))


def kendall_tau_bruteforce(x, y) -> float:
    """O(n^2) tau-b by direct enumeration of pairs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(x.size, 1)
    s = float(np.sum((dx * dy)[iu]))
    tx = float(np.sum(dx[iu] != 0))
    ty = float(np.sum(dy[iu] != 0))
    return s / math.sqrt(tx * ty)


def tau_matrix(columns) -> pd.DataFrame:
    """Symmetric matrix of pairwise Kendall's tau with unit diagonal.

    ``columns`` is a mapping of name to sample, or a DataFrame.
    """
    if isinstance(columns, pd.DataFrame):
        columns = {c: columns[c].to_numpy() for c in columns.columns}
    elif not isinstance(columns, Mapping):
        raise DependenceError("columns must be a mapping of name -> values")
    names = list(columns)
    if len(names) < 2:
        raise DependenceError("need at least 2 columns")
    lengths = {len(columns[c]) for c in names}
    if len(lengths) != 1:
        raise DependenceError(f"columns have unequal lengths: {sorted(lengths)}")
    k = len(names)
    mat = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            try:
                t = kendall_tau(columns[names[i]], columns[names[j]])
            except DependenceError as exc:
                raise DependenceError(f"{names[i]} vs {names[j]}: {exc}") from exc
            mat[i, j] = mat[j, i] = t
    return pd.DataFrame(mat, index=names, columns=names)


def tau_series(years, x_by_year, y_by_year) -> pd.DataFrame:
    """Per-year Kendall's tau between two variables as a (year, tau) frame."""
    rows = [(int(t), kendall_tau(x_by_year[t], y_by_year[t])) for t in sorted(years)]
    return pd.DataFrame(rows, columns=["year", "tau"])
