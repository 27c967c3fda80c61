"""Conditional exceedance risk, extreme-year flags, survival and return periods.

A risk surface holds, for one year, the probability at each grid cell that
the response (or both responses) falls at or below a threshold given that
cell's predictor values.  Survival over a window is one minus the accumulated
annual probabilities; the return period is the interpolated waiting time
until survival first drops to one half.
"""
from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import dvine, yvine
from .marginals import KernelMarginal, cdf_eval

KINDS = ("frost", "drought", "joint")
NOT_REACHED = "NA"

DEFAULT_YF = -2.0
DEFAULT_YD = -1.5
DEFAULT_FLAG_QUANTILE = 0.95
DEFAULT_FLAG_CUTOFF = 0.2
DEFAULT_RP_THRESHOLD = 0.5


class RiskError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdPair:
    y_f: float = DEFAULT_YF
    y_d: float = DEFAULT_YD

    def __post_init__(self):
        if not (math.isfinite(self.y_f) and math.isfinite(self.y_d)):
            raise RiskError("thresholds must be finite")


@dataclass(frozen=True)
class RiskSurface:
    """Per-cell conditional probabilities for one year and one event kind."""

    year: int
    cell_ids: np.ndarray
    probs: np.ndarray
    kind: str
    lat: np.ndarray | None = None
    lon: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RiskError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        ids = np.asarray(self.cell_ids)
        p = np.asarray(self.probs, dtype=float)
        if ids.shape != p.shape or p.ndim != 1:
            raise RiskError("one probability per cell required")
        if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
            raise RiskError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "cell_ids", ids)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.size

    def prob(self, cell) -> float:
        idx = np.flatnonzero(self.cell_ids == cell)
        if idx.size == 0:
            raise RiskError(f"cell {cell} missing from {self.kind} surface of {self.year}")
        return float(self.probs[idx[0]])

    def to_frame(self) -> pd.DataFrame:
        nan = np.full(len(self), np.nan)
        return pd.DataFrame({
            "year": np.full(len(self), int(self.year)),
            "cell_id": self.cell_ids,
            "lat": nan if self.lat is None else np.asarray(self.lat, float),
            "lon": nan if self.lon is None else np.asarray(self.lon, float),
            "prob": self.probs,
            "kind": self.kind,
        })

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "RiskSurface":
        years = df["year"].unique()
        kinds = df["kind"].unique()
        if len(years) != 1 or len(kinds) != 1:
            raise RiskError("a surface frame must hold exactly one year and one kind")
        return cls(int(years[0]), df["cell_id"].to_numpy(), df["prob"].to_numpy(float),
                   str(kinds[0]), df["lat"].to_numpy(float), df["lon"].to_numpy(float))


@dataclass(frozen=True)
class SurvivalSeries:
    """Survival of one cell from start year ``s``; ``raw`` keeps unclamped values."""

    cell_id: object
    s: int
    T: np.ndarray
    values: np.ndarray
    raw: np.ndarray = field(default=None)


@dataclass(frozen=True)
class ReturnPeriodMap:
    """Return period per cell: years (float) or ``None`` when not reached."""

    start: int
    cell_ids: np.ndarray
    years: list

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"cell_id": self.cell_ids,
                             "years": [NOT_REACHED if y is None else y for y in self.years]})


def _predictor_u(order, x_rows, predictor_marginals) -> np.ndarray:
    """u-values of each cell for the ordered predictors, shape (n_cells, q)."""
    cols = []
    for name in order:
        if name not in x_rows:
            raise RiskError(f"missing predictor column {name!r}")
        if name not in predictor_marginals:
            raise RiskError(f"no marginal for predictor {name!r}")
        cols.append(np.atleast_1d(cdf_eval(predictor_marginals[name],
                                           np.asarray(x_rows[name], dtype=float))))
    return np.column_stack(cols) if cols else None


def _n_cells(x_rows, cell_ids):
    if cell_ids is not None:
        return len(cell_ids)
    for v in x_rows.values():
        return len(np.atleast_1d(v))
    raise RiskError("cannot infer the number of cells")


def univariate_risk(model: dvine.DVineModel, marginal: KernelMarginal, threshold: float,
                    x_rows: Mapping, predictor_marginals: Mapping, *, year: int = 0,
                    cell_ids=None, kind: str = "frost", lat=None, lon=None) -> RiskSurface:
    """P(Y <= threshold | X = x) at every cell."""
    n = _n_cells(x_rows, cell_ids)
    ids = np.arange(n) if cell_ids is None else np.asarray(cell_ids)
    v = cdf_eval(marginal, threshold)
    U = _predictor_u(model.order, x_rows, predictor_marginals)
    if U is None:
        probs = np.full(n, v)
    else:
        probs = np.asarray(dvine.cond_cdf(model, np.full(n, v), U), dtype=float)
    return RiskSurface(year, ids, np.clip(probs, 0.0, 1.0), kind, lat, lon)


def joint_risk(model: yvine.YVineModel, marginals: Sequence[KernelMarginal],
               thresholds: ThresholdPair, x_rows: Mapping, predictor_marginals: Mapping, *,
               year: int = 0, cell_ids=None, lat=None, lon=None) -> RiskSurface:
    """P(Y_f <= y_f, Y_d <= y_d | X = x) at every cell."""
    m_f, m_d = marginals
    n = _n_cells(x_rows, cell_ids)
    ids = np.arange(n) if cell_ids is None else np.asarray(cell_ids)
    v1 = np.full(n, cdf_eval(m_f, thresholds.y_f))
    v2 = np.full(n, cdf_eval(m_d, thresholds.y_d))
    U = _predictor_u(model.order, x_rows, predictor_marginals)
    if U is None:
        U = np.zeros((1, 0))
    probs = np.broadcast_to(np.asarray(yvine.bivariate_cond_cdf(model, v1, v2, U), float), (n,))
    return RiskSurface(year, ids, np.clip(probs, 0.0, 1.0), "joint", lat, lon)


def empirical_quantile(x, q: float) -> float:
    """Linear interpolation between order statistics (type 7)."""
    return float(np.quantile(np.asarray(x, dtype=float), q, method="linear"))


def flag_extreme_year(surface: RiskSurface, quantile: float = DEFAULT_FLAG_QUANTILE,
                      cutoff: float = DEFAULT_FLAG_CUTOFF) -> bool:
    """True when the ``quantile`` of the cell probabilities exceeds ``cutoff``."""
    probs = surface.probs if isinstance(surface, RiskSurface) else np.asarray(surface, float)
    if probs.size == 0:
        raise RiskError("empty surface")
    return empirical_quantile(probs, quantile) > cutoff


def _series(surfaces, cell, s: int, T: int) -> np.ndarray:
    by_year = {int(sf.year): sf for sf in surfaces}
    out = []
    for t in range(s, T + 1):
        if t not in by_year:
            raise RiskError(f"year {t} missing from surfaces")
        out.append(by_year[t].prob(cell))
    return np.asarray(out)


def survival_series(surfaces, cell, s: int, T: int) -> SurvivalSeries:
    """Survival after each year of ``s..T``; negative values are clamped to 0."""
    if s > T:
        raise RiskError("start year after end year")
    raw = 1.0 - np.cumsum(_series(surfaces, cell, s, T))
    return SurvivalSeries(cell, s, np.arange(s, T + 1), np.clip(raw, 0.0, 1.0), raw)


def survival(surfaces, cell, s: int, T: int) -> float:
    """1 - sum of the cell's probabilities over years s..T, clamped at 0.

    ``T = s - 1`` is the empty window and gives 1.
    """
    if T == s - 1:
        return 1.0
    return float(survival_series(surfaces, cell, s, T).values[-1])


def _crossing(surv: np.ndarray, threshold: float):
    """Interpolated number of years until ``surv`` first reaches ``threshold``."""
    prev = 1.0
    for n, cur in enumerate(surv, start=1):
        if cur <= threshold:
            if prev == cur:
                return float(n)
            return float((n - 1) + (prev - threshold) / (prev - cur))
        prev = cur
    return None


def return_period(surfaces, cell, start: int, threshold: float = DEFAULT_RP_THRESHOLD,
                  end: int | None = None):
    """Waiting time (years) until survival from ``start`` first drops to ``threshold``.

    Linear interpolation between the bracketing whole years; returns ``None``
    (written as ``"NA"``) when the threshold is never reached in the window.
    """
    if end is None:
        end = max(int(sf.year) for sf in surfaces)
    raw = 1.0 - np.cumsum(_series(surfaces, cell, start, end))
    return _crossing(raw, threshold)


def probability_matrix(surfaces, start: int, end: int, cell_ids=None):
    """(cell_ids, matrix) with one row per cell and one column per year."""
    by_year = {int(sf.year): sf for sf in surfaces}
    if cell_ids is None:
        cell_ids = by_year[start].cell_ids if start in by_year else next(iter(by_year.values())).cell_ids
    cell_ids = np.asarray(cell_ids)
    cols = []
    for t in range(start, end + 1):
        if t not in by_year:
            raise RiskError(f"year {t} missing from surfaces")
        sf = by_year[t]
        pos = pd.Index(sf.cell_ids).get_indexer(cell_ids)
        if np.any(pos < 0):
            raise RiskError(f"cell {cell_ids[pos < 0][0]} missing from {sf.kind} surface of {t}")
        cols.append(sf.probs[pos])
    return cell_ids, np.column_stack(cols)


def return_period_map(surfaces, start: int, threshold: float = DEFAULT_RP_THRESHOLD,
                      end: int | None = None) -> ReturnPeriodMap:
    """:func:`return_period` for every cell of the surfaces."""
    surfaces = list(surfaces)
    if end is None:
        end = max(int(sf.year) for sf in surfaces)
    ids, P = probability_matrix(surfaces, start, end)
    raw = 1.0 - np.cumsum(P, axis=1)
    return ReturnPeriodMap(start, ids, [_crossing(row, threshold) for row in raw])
