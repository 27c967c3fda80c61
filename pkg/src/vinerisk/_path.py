"""Shared D-vine path machinery.

Predictors occupy path positions 1..m; a response sits at position 0 as a
leaf.  For the edge joining positions i < k (tree k - i) the arguments are

    first  = C(x_i | x_{i+1..k-1})   stored as a[(k - i, i)]
    second = C(x_k | x_{i+1..k-1})

A response arm edge (0, k) has arguments C(v | u_1..u_{k-1}) and
C(u_k | u_1..u_{k-1}).  The latter, ``b0[k]``, depends on predictors only, so
any number of responses can hang off the same path (D-vine: one, Y-vine: two).
"""
from __future__ import annotations

import numpy as np

from .copula import EPS, PairCopula, select_family


def clamp(x):
    return np.clip(x, EPS, 1.0 - EPS)


class PathState:
    """Pseudo-observations of a predictor path, grown one node at a time."""

    def __init__(self, n: int):
        self.n = n
        self.m = 0
        self.a: dict[tuple[int, int], np.ndarray] = {}
        self.b0: dict[int, np.ndarray] = {}

    def copy(self) -> "PathState":
        new = PathState(self.n)
        new.m = self.m
        new.a = dict(self.a)
        new.b0 = dict(self.b0)
        return new

    def extend(self, x, edges=None, candidates=None):
        """Append a node with u-values ``x``.

        With ``edges`` (mapping i -> PairCopula for edge (i, m+1)) the stored
        copulas are replayed; otherwise each new edge is chosen with
        :func:`select_family` over ``candidates``.  Returns the mapping of
        edges used and the new ``b0`` value.  ``self`` is updated in place.
        """
        m = self.m
        x = clamp(np.asarray(x, dtype=float))
        used = {}
        new_a = {(1, m + 1): x}
        second = x
        for i in range(m, 0, -1):
            j = m + 1 - i
            first = self.a[(j, i)]
            cop = edges[i] if edges is not None else select_family(first, second, candidates)
            used[i] = cop
            new_a[(j + 1, i)] = clamp(cop.hfunc1(first, second))
            second = clamp(cop.hfunc2(first, second))
        self.a.update(new_a)
        self.m = m + 1
        self.b0[m + 1] = second
        return used, second

    def invert_node(self, w, edges):
        """u-values of the next node whose conditional C(x | path) equals ``w``."""
        m = self.m
        t = clamp(np.asarray(w, dtype=float))
        for i in range(1, m + 1):
            j = m + 1 - i
            t = clamp(edges[i].hinv2(t, self.a[(j, i)]))
        return t


class Arm:
    """Running conditional C(v | u_1..u_k) of one response along the path."""

    def __init__(self, v):
        self.cur = clamp(np.asarray(v, dtype=float))
        self.logdens = np.zeros(self.cur.shape)

    def copy(self) -> "Arm":
        new = Arm.__new__(Arm)
        new.cur = self.cur
        new.logdens = self.logdens
        return new

    def step(self, cop: PairCopula, b0k):
        self.logdens = self.logdens + cop.logpdf(self.cur, b0k)
        self.cur = clamp(cop.hfunc1(self.cur, b0k))


def replay_path(u_cols, pred_edges, q):
    """``b0[k]`` for k = 1..q on new data; ``u_cols`` is a list of arrays."""
    state = PathState(len(u_cols[0]) if q else 0)
    b0 = []
    for k in range(1, q + 1):
        edges = {i: pred_edges[(i, k)] for i in range(1, k)}
        _, b = state.extend(u_cols[k - 1], edges)
        b0.append(b)
    return state, b0


def arm_forward(v, arm_edges, b0):
    """Return (C(v | u), log c(v | u)) along an arm."""
    arm = Arm(v)
    for cop, b in zip(arm_edges, b0):
        arm.step(cop, b)
    return arm.cur, arm.logdens


def arm_inverse(w, arm_edges, b0):
    """Invert :func:`arm_forward` in ``v``: v with C(v | u) = w."""
    t = clamp(np.asarray(w, dtype=float))
    for cop, b in zip(reversed(arm_edges), reversed(b0)):
        t = clamp(cop.hinv1(t, b))
    return t


def as_matrix(u, q: int, order=None):
    """Normalise conditioning values to an (n, q) array.

    Accepts a 1-d vector (single point), an (n, q) array, or a mapping from
    predictor name to values (requires ``order``).
    """
    if isinstance(u, dict) or hasattr(u, "keys"):
        if order is None:
            raise ValueError("named conditioning values need the model order")
        missing = [name for name in order if name not in u]
        if missing:
            raise KeyError(f"missing predictor column(s): {missing}")
        cols = [np.atleast_1d(np.asarray(u[name], dtype=float)) for name in order]
        return np.column_stack(cols) if cols else np.zeros((len(next(iter(u.values()), [])), 0))
    arr = np.asarray(u, dtype=float)
    if arr.ndim <= 1:
        arr = arr.reshape(1, -1) if arr.size else np.zeros((1, 0))
    if arr.shape[1] != q:
        raise ValueError(f"conditioning vector has length {arr.shape[1]}, model order has {q}")
    return arr


def broadcast_rows(x, n):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.full(n, float(x))
    if n == 1:
        return x.ravel()
    if x.size != n and x.size != 1:
        raise ValueError(f"length mismatch: {x.size} values for {n} conditioning rows")
    return np.broadcast_to(x.ravel(), (n,)).copy()
