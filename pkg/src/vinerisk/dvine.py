"""D-vine copula regression for a single response.

The response is a leaf of every tree, so its conditional distribution given
the ordered predictors follows from h-function recursions over the stored pair
copulas; no numerical integration is involved.
"""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from . import _path
from .copula import ALL_FAMILIES, PairCopula, parse_families, select_family
from .marginals import EPS


class VineFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class DVineModel:
    """Fitted D-vine regression model.

    ``pred_edges[(i, k)]`` is the copula between ordered predictors ``i < k``
    (1-based) given those in between; ``arm[k - 1]`` couples the response with
    predictor ``k`` given predictors ``1..k-1``.
    """

    order: tuple[str, ...]
    arm: tuple[PairCopula, ...]
    pred_edges: dict = field(default_factory=dict)
    cll_trace: tuple[float, ...] = ()
    response: str = "response"

    @property
    def q(self) -> int:
        return len(self.order)

    @property
    def trees(self) -> list[list[PairCopula]]:
        """Pair copulas by tree; the response edge comes first in each tree."""
        q = self.q
        return [[self.arm[j - 1]] + [self.pred_edges[(i, i + j)] for i in range(1, q - j + 1)]
                for j in range(1, q + 1)]

    @property
    def pair_copulas(self) -> list[PairCopula]:
        return [c for tree in self.trees for c in tree]

    def cond_cdf(self, v, u):
        return cond_cdf(self, v, u)

    def cond_quantile(self, alpha, u):
        return cond_quantile(self, alpha, u)

    def cond_density(self, v, u):
        return cond_density(self, v, u)

    def to_dict(self) -> dict:
        names = (self.response,) + self.order
        trees = []
        for j in range(1, self.q + 1):
            tree = []
            for i in range(0, self.q - j + 1):
                cop = self.arm[j - 1] if i == 0 else self.pred_edges[(i, i + j)]
                d = cop.to_dict()
                d["edge"] = [names[i], names[i + j]]
                d["given"] = list(names[i + 1:i + j])
                tree.append(d)
            trees.append(tree)
        return {"response": self.response, "order": list(self.order), "trees": trees,
                "cll_trace": list(self.cll_trace)}

    @classmethod
    def from_dict(cls, d) -> "DVineModel":
        order = tuple(d["order"])
        arm, pred = [], {}
        for j, tree in enumerate(d["trees"], start=1):
            arm.append(PairCopula.from_dict(tree[0]))
            for i, cd in enumerate(tree[1:], start=1):
                pred[(i, i + j)] = PairCopula.from_dict(cd)
        return cls(order, tuple(arm), pred, tuple(d.get("cll_trace", ())),
                   d.get("response", "response"))


def _validate_columns(response_u, predictors_u: Mapping, max_p: int, min_n: int = 50):
    v = np.asarray(response_u, dtype=float).ravel()
    n = v.size
    if n < min_n:
        raise VineFitError(f"at least {min_n} observations required, got {n}")
    if max_p < 0:
        raise VineFitError("max_p must be >= 0")
    if max_p > len(predictors_u):
        raise VineFitError(f"max_p={max_p} exceeds the number of predictors ({len(predictors_u)})")
    cols = {}
    for name in sorted(predictors_u):
        x = np.asarray(predictors_u[name], dtype=float).ravel()
        if x.size != n:
            raise VineFitError(f"predictor {name!r} has {x.size} values, response has {n}")
        if np.ptp(x) == 0:
            raise VineFitError(f"predictor {name!r} is constant")
        cols[name] = _path.clamp(x)
    if np.ptp(v) == 0:
        raise VineFitError("response is constant")
    return _path.clamp(v), cols


def fit_dvine(response_u, predictors_u: Mapping, max_p: int = 5,
              candidates=ALL_FAMILIES, response_name: str = "response") -> DVineModel:
    """Greedy forward selection of ``max_p`` predictors.

    Each step tries every remaining predictor as the next path node, fits its
    new pair copulas on h-transformed pseudo-observations and keeps the
    candidate with the largest conditional log-likelihood of the response.
    Ties go to the lexicographically smaller name.
    """
    cands = parse_families(candidates)
    v, cols = _validate_columns(response_u, predictors_u, max_p)
    state = _path.PathState(v.size)
    arm = _path.Arm(v)
    order, arm_cops, pred, trace = [], [], {}, []
    for step in range(1, max_p + 1):
        best = None
        for name in cols:
            if name in order:
                continue
            st = state.copy()
            try:
                edges, b0 = st.extend(cols[name], candidates=cands)
                cop = select_family(arm.cur, b0, cands)
            except Exception as exc:
                raise VineFitError(f"step {step}, candidate {name!r}: {exc}") from exc
            new_arm = arm.copy()
            new_arm.step(cop, b0)
            cll = float(np.sum(new_arm.logdens))
            if best is None or cll > best[0]:
                best = (cll, name, st, edges, cop, new_arm)
        cll, name, state, edges, cop, arm = best
        k = len(order) + 1
        order.append(name)
        arm_cops.append(cop)
        pred.update({(i, k): c for i, c in edges.items()})
        trace.append(cll)
    return DVineModel(tuple(order), tuple(arm_cops), pred, tuple(trace), response_name)


def _eval_inputs(model: DVineModel, v, u):
    U = _path.as_matrix(u, model.q, model.order)
    n = U.shape[0]
    _, b0 = _path.replay_path([_path.clamp(U[:, k]) for k in range(model.q)],
                              model.pred_edges, model.q)
    return _path.broadcast_rows(v, n), b0


def _out(x, v, u):
    x = np.asarray(x)
    return float(x.ravel()[0]) if x.size == 1 and np.ndim(v) == 0 else x


def cond_cdf(model: DVineModel, v, u):
    """C(v | u) by h-function recursion along the response arm."""
    vv, b0 = _eval_inputs(model, v, u)
    if model.q == 0:
        return _out(np.clip(vv, 0.0, 1.0), v, u)
    cur, _ = _path.arm_forward(vv, model.arm, b0)
    return _out(cur, v, u)


def cond_density(model: DVineModel, v, u):
    """Conditional density c(v | u): product of the response-edge densities."""
    vv, b0 = _eval_inputs(model, v, u)
    _, logd = _path.arm_forward(vv, model.arm, b0)
    return _out(np.exp(logd), v, u)


def cond_quantile(model: DVineModel, alpha, u):
    """Inverse of :func:`cond_cdf` in ``v`` (applies the arm's h-inverses in reverse)."""
    a = np.asarray(alpha, dtype=float)
    if np.any((a <= 0) | (a >= 1)):
        raise ValueError("alpha must lie in (0, 1)")
    aa, b0 = _eval_inputs(model, alpha, u)
    if model.q == 0:
        return _out(aa, alpha, u)
    out = _path.arm_inverse(aa, model.arm, b0)
    return _out(out, alpha, u)


def cond_loglik(model: DVineModel, response_u, predictors_u) -> float:
    """Sum of log c(v_i | u_i) over the sample."""
    v = np.asarray(response_u, dtype=float).ravel()
    U = _path.as_matrix(predictors_u, model.q, model.order)
    if model.q and U.shape[0] != v.size:
        raise ValueError(f"length mismatch: {v.size} responses, {U.shape[0]} predictor rows")
    _, b0 = _path.replay_path([_path.clamp(U[:, k]) for k in range(model.q)],
                              model.pred_edges, model.q)
    _, logd = _path.arm_forward(v, model.arm, b0)
    return float(np.sum(logd))


def simulate_dvine(model: DVineModel, n: int, seed=None) -> dict:
    """Draw from the joint D-vine; returns a mapping of column name -> u-values."""
    rng = np.random.default_rng(seed)
    w = rng.random((n, model.q + 1))
    state = _path.PathState(n)
    out = {}
    for k in range(1, model.q + 1):
        edges = {i: model.pred_edges[(i, k)] for i in range(1, k)}
        x = state.invert_node(w[:, k], edges)
        state.extend(x, edges)
        out[model.order[k - 1]] = x
    b0 = [state.b0[k] for k in range(1, model.q + 1)]
    out[model.response] = _path.arm_inverse(np.clip(w[:, 0], EPS, 1 - EPS), model.arm, b0)
    return out
