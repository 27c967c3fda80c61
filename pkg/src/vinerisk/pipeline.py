"""Gridded panel data: ingestion, annual model fitting, order analytics, synthetic data.

Each year is fitted separately, treating every grid cell of that year as an
observation.  Kernel marginals are fitted once per variable and year and
shared by the three models of that year (frost D-vine, drought D-vine and the
joint Y-vine).
"""
from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import norm

from . import _io, _path
from .copula import GAUSSIAN, INDEP, FamilyId, PairCopula, parse_families
from .dependence import kendall_tau
from .dvine import DVineModel, fit_dvine
from .marginals import KernelMarginal, cdf_eval, fit_kde
from .yvine import YVineModel, fit_yvine

log = logging.getLogger(__name__)

BASE_COLUMNS = ("year", "cell_id", "lat", "lon", "frost", "drought")
RESPONSES = ("frost", "drought")
MODEL_KINDS = ("dvine_frost", "dvine_drought", "yvine")
MAX_ORDER = 5


class DataError(ValueError):
    """Malformed or missing input data."""


class FitError(RuntimeError):
    """Model fitting failed for a (year, model kind)."""

    def __init__(self, year, kind, cause):
        super().__init__(f"year {year}, {kind}: {cause}")
        self.year = year
        self.kind = kind


# --------------------------------------------------------------------------- data


@dataclass
class GridDataset:
    """Validated panel of (year, cell) records.

    ``frame`` has the base columns followed by the predictor columns;
    ``dropped`` counts rows removed for missing values at ingestion.
    """

    frame: pd.DataFrame
    predictors: tuple[str, ...]
    dropped: int = 0

    def __len__(self):
        return len(self.frame)

    @property
    def years(self) -> list[int]:
        return sorted(int(y) for y in self.frame["year"].unique())

    @property
    def model_predictors(self) -> tuple[str, ...]:
        """Candidate predictors for the vines: coordinates plus the named covariates."""
        return ("lat", "lon") + tuple(self.predictors)

    def year_slice(self, year: int) -> pd.DataFrame:
        sl = self.frame[self.frame["year"] == year]
        if sl.empty:
            raise DataError(f"year {year} not present in dataset")
        return sl.sort_values("cell_id", kind="stable").reset_index(drop=True)

    def to_csv(self, path) -> None:
        _io.write_csv(self.frame, path)


def _parse_numeric(raw: pd.DataFrame, col: str, integer: bool):
    s = raw[col].str.strip()
    blank = s == ""
    vals = pd.to_numeric(s.where(~blank), errors="coerce")
    bad = vals.isna() & ~blank
    if integer:
        nonint = ~bad & ~blank & (vals != np.round(vals))
        bad = bad | nonint
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataError(f"unparseable value {raw[col].iloc[row]!r} at row {row + 2}, column {col!r}")
    # to_numeric's fast parser can be one ulp off; reparse exactly so written files round-trip
    vals = s.where(~blank, "nan").astype(float)
    return vals, blank


def load_grid_csv(path, schema: Mapping[str, str] | None = None) -> GridDataset:
    """Read and validate a gridded panel CSV.

    ``schema`` maps the canonical names ``year, cell_id, lat, lon, frost,
    drought`` to the file's column names; every other column is a predictor.
    Rows with a blank value are dropped and counted.  Row numbers in error
    messages are file line numbers (the header is line 1).
    """
    schema = dict(schema or {})
    names = {c: schema.get(c, c) for c in BASE_COLUMNS}
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: no header") from None
    raw.columns = [c.strip() for c in raw.columns]
    missing = [v for v in names.values() if v not in raw.columns]
    if missing:
        raise DataError(f"missing column(s): {', '.join(missing)}")
    rename = {v: k for k, v in names.items()}
    raw = raw.rename(columns=rename)
    predictors = tuple(c for c in raw.columns if c not in BASE_COLUMNS)
    cols, any_blank = {}, np.zeros(len(raw), dtype=bool)
    for c in BASE_COLUMNS + predictors:
        vals, blank = _parse_numeric(raw, c, integer=c in ("year", "cell_id"))
        cols[c] = vals
        any_blank |= blank.to_numpy()
    df = pd.DataFrame(cols)[~any_blank].reset_index(drop=True)
    df["year"] = df["year"].astype(np.int64)
    df["cell_id"] = df["cell_id"].astype(np.int64)
    dup = df.duplicated(["year", "cell_id"])
    if dup.any():
        r = df[dup].iloc[0]
        raise DataError(f"duplicate record for (year, cell_id) = ({int(r.year)}, {int(r.cell_id)})")
    dropped = int(any_blank.sum())
    if dropped:
        log.info("dropped %d incomplete row(s) from %s", dropped, path)
    return GridDataset(df, predictors, dropped)


# --------------------------------------------------------------------------- fitting


@dataclass(frozen=True)
class FitConfig:
    max_p: int = 5
    families: object = "all"


@dataclass
class AnnualModelSet:
    year: int
    dvine_frost: DVineModel
    dvine_drought: DVineModel
    yvine: YVineModel
    marginals: dict[str, KernelMarginal]
    tau_unconditional: float = float("nan")

    def model(self, kind: str):
        return getattr(self, kind)

    def to_dict(self) -> dict:
        return {
            "year": self.year,
            "dvine_frost": self.dvine_frost.to_dict(),
            "dvine_drought": self.dvine_drought.to_dict(),
            "yvine": self.yvine.to_dict(),
            "marginals": {k: m.to_dict() for k, m in self.marginals.items()},
            "tau_unconditional": self.tau_unconditional,
        }

    @classmethod
    def from_dict(cls, d) -> "AnnualModelSet":
        tau = d.get("tau_unconditional")
        return cls(int(d["year"]), DVineModel.from_dict(d["dvine_frost"]),
                   DVineModel.from_dict(d["dvine_drought"]), YVineModel.from_dict(d["yvine"]),
                   {k: KernelMarginal.from_dict(m) for k, m in d["marginals"].items()},
                   float("nan") if tau is None else float(tau))

    def save(self, path) -> None:
        _io.write_json(self.to_dict(), path)

    @classmethod
    def load(cls, path) -> "AnnualModelSet":
        return cls.from_dict(_io.read_json(path))


def _config_value(config, key, default):
    if config is None:
        return default
    if isinstance(config, Mapping):
        return config.get(key, default)
    return getattr(config, key, default)


def fit_annual_models(ds: GridDataset, year: int, config=None) -> AnnualModelSet:
    """Fit marginals, both D-vines and the Y-vine on one year of the panel."""
    sl = ds.year_slice(year)
    if len(sl) < 50:
        raise DataError(f"year {year} has {len(sl)} cells; at least 50 required")
    max_p = int(_config_value(config, "max_p", 5))
    cands = parse_families(_config_value(config, "families", "all"))
    preds = ds.model_predictors
    max_p = min(max_p, len(preds))
    marg, u = {}, {}
    for name in RESPONSES + preds:
        try:
            marg[name] = fit_kde(sl[name].to_numpy(float))
        except Exception as exc:
            raise FitError(year, f"marginal {name}", exc) from exc
        u[name] = cdf_eval(marg[name], sl[name].to_numpy(float))
    pu = {name: u[name] for name in preds}
    models = {}
    jobs = {
        "dvine_frost": lambda: fit_dvine(u["frost"], pu, max_p, cands, "frost"),
        "dvine_drought": lambda: fit_dvine(u["drought"], pu, max_p, cands, "drought"),
        "yvine": lambda: fit_yvine(u["frost"], u["drought"], pu, max_p, cands, RESPONSES),
    }
    for kind, job in jobs.items():
        try:
            models[kind] = job()
        except Exception as exc:
            raise FitError(year, kind, exc) from exc
    tau = kendall_tau(sl["frost"].to_numpy(float), sl["drought"].to_numpy(float))
    return AnnualModelSet(year, models["dvine_frost"], models["dvine_drought"], models["yvine"],
                          marg, tau)


def fit_all_years(ds: GridDataset, years=None, config=None, threads: int = 1) -> list:
    """Fit every requested year; results come back in year order whatever ``threads`` is."""
    years = ds.years if years is None else list(years)
    if threads <= 1 or len(years) <= 1:
        return [fit_annual_models(ds, y, config) for y in years]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda y: fit_annual_models(ds, y, config), years))


# --------------------------------------------------------------------------- analytics


def _check_orders(orders):
    for o in orders:
        if len(o) > MAX_ORDER:
            raise ValueError(f"order {list(o)} has more than {MAX_ORDER} entries")


def position_counts(orders: Sequence[Sequence[str]], predictors=()) -> pd.DataFrame:
    """n_k^i: how often predictor i sits at position k (rows: predictors, columns 1..5)."""
    _check_orders(orders)
    names = sorted(set(predictors) | {p for o in orders for p in o})
    counts = pd.DataFrame(0, index=pd.Index(names, name="predictor"),
                          columns=range(1, MAX_ORDER + 1))
    for o in orders:
        for k, p in enumerate(o, start=1):
            counts.loc[p, k] += 1
    return counts


def predictor_ranks(orders: Sequence[Sequence[str]], predictors=(), n_years=None) -> dict:
    """rank(X_i) = sum_k n_k^i (6 - k) / N with N the number of fitted years.

    Predictors listed in ``predictors`` but never chosen get rank 0.
    """
    counts = position_counts(orders, predictors)
    n = len(orders) if n_years is None else n_years
    if n <= 0:
        raise ValueError("number of years must be positive")
    weights = np.array([MAX_ORDER + 1 - k for k in counts.columns], dtype=float)
    ranks = counts.to_numpy(float) @ weights / n
    return {name: float(r) for name, r in zip(counts.index, ranks)}


def optimal_order_with_ties(orders: Sequence[Sequence[str]]):
    """Modal predictor per position among those not yet chosen.

    Returns ``(order, ties)``; each tie is ``(position, tied names, winner)``
    and is resolved lexicographically.  If every predictor seen at a position
    is already placed, the position is filled from the remaining predictors
    by their total number of appearances (also reported as a tie).
    """
    if not orders:
        raise ValueError("no orders given")
    _check_orders(orders)
    length = max(len(o) for o in orders)
    total = Counter(p for o in orders for p in o)
    chosen, ties = [], []
    for k in range(length):
        cnt = Counter(o[k] for o in orders if len(o) > k and o[k] not in chosen)
        if not cnt:
            cnt = Counter({p: c for p, c in total.items() if p not in chosen})
            if not cnt:
                break
        top = max(cnt.values())
        best = sorted(p for p, c in cnt.items() if c == top)
        if len(best) > 1:
            ties.append((k + 1, tuple(best), best[0]))
            log.info("position %d: tie between %s (%d each); chose %s", k + 1, best, top, best[0])
        chosen.append(best[0])
    return chosen, ties


def optimal_order(orders: Sequence[Sequence[str]]) -> list[str]:
    return optimal_order_with_ties(orders)[0]


def _count_families(cops) -> dict:
    g = sum(c.family == GAUSSIAN for c in cops)
    i = sum(c.family == INDEP for c in cops)
    return {"gaussian": g, "nongaussian": len(cops) - g - i, "independence": i, "total": len(cops)}


def family_counts(modelset: AnnualModelSet) -> dict:
    """Gaussian / non-Gaussian / Independence pair-copula counts per model kind."""
    return {kind: _count_families(modelset.model(kind).pair_copulas) for kind in MODEL_KINDS}


@dataclass
class OrderAnalytics:
    counts: dict[str, pd.DataFrame]
    ranks: dict[str, dict]
    optimal: dict[str, list]
    ties: dict[str, list]
    family_counts: pd.DataFrame
    tau_series: pd.DataFrame

    def frames(self) -> dict[str, pd.DataFrame]:
        """Plot-ready tables keyed by file stem."""
        orders = []
        for kind, c in self.counts.items():
            for name, row in c.iterrows():
                orders.append({"model": kind, "predictor": name,
                               **{f"n{k}": int(row[k]) for k in c.columns},
                               "rank": self.ranks[kind][name]})
        opt = [{"model": kind, "position": k, "predictor": p,
                "tie": any(t[0] == k for t in self.ties[kind])}
               for kind, o in self.optimal.items() for k, p in enumerate(o, start=1)]
        return {"ranks": pd.DataFrame(orders), "optimal_order": pd.DataFrame(opt),
                "family_counts": self.family_counts, "tau_series": self.tau_series}


def order_frame(modelsets: Sequence[AnnualModelSet]) -> pd.DataFrame:
    rows = []
    for ms in modelsets:
        for kind in MODEL_KINDS:
            order = ms.model(kind).order
            rows.append({"year": ms.year, "model": kind,
                         **{f"pos{k}": (order[k - 1] if k <= len(order) else "")
                            for k in range(1, MAX_ORDER + 1)}})
    return pd.DataFrame(rows)


def order_analytics(modelsets: Sequence[AnnualModelSet], predictors=()) -> OrderAnalytics:
    counts, ranks, optimal, ties = {}, {}, {}, {}
    for kind in MODEL_KINDS:
        orders = [ms.model(kind).order for ms in modelsets]
        counts[kind] = position_counts(orders, predictors)
        ranks[kind] = predictor_ranks(orders, predictors)
        optimal[kind], ties[kind] = optimal_order_with_ties(orders)
    fam = pd.DataFrame([{"year": ms.year, "model": kind, **c}
                        for ms in modelsets for kind, c in family_counts(ms).items()])
    taus = []
    for ms in modelsets:
        top = ms.yvine.top_copula
        taus.append({"year": ms.year, "tau_unconditional": ms.tau_unconditional,
                     "tau_conditional": top.tau, "top_family": top.family.token,
                     "top_theta": top.theta})
    return OrderAnalytics(counts, ranks, optimal, ties, fam, pd.DataFrame(taus))


# --------------------------------------------------------------------------- synthetic data


def default_generating_model(predictors=("x1", "x2", "x3")) -> YVineModel:
    """Y-vine used by :func:`generate_synthetic` unless one is supplied.

    Predictors are mutually independent; both responses depend most strongly
    on the first predictor, and the responses stay dependent given all
    predictors.
    """
    q = len(predictors)
    ind = PairCopula.from_param(INDEP)
    strengths1 = [0.7, 0.4, 0.2, 0.1, 0.1][:q] + [0.0] * max(0, q - 5)
    strengths2 = [0.6, 0.3, 0.3, 0.1, 0.1][:q] + [0.0] * max(0, q - 5)
    e1 = tuple(PairCopula.from_param(GAUSSIAN, r) if r else ind for r in strengths1)
    e2 = tuple(PairCopula.from_param(FamilyId("clayton"), 2 * t / (1 - t)) if t else ind
               for t in np.asarray(strengths2) * 0.75)
    pred = {(i, k): ind for k in range(1, q + 1) for i in range(1, k)}
    top = PairCopula.from_param(FamilyId("gumbel"), 1.0 / (1.0 - 0.3))
    return YVineModel(tuple(predictors), e1, e2, top, pred, (), RESPONSES)


@dataclass
class SyntheticConfig:
    nx: int = 10
    ny: int = 10
    years: Sequence[int] = (2001, 2002, 2003, 2004, 2005)
    predictors: Sequence[str] = ("x1", "x2", "x3")
    model: YVineModel | Mapping[int, YVineModel] | None = None
    seed: int = 0
    n_basis: int = 3
    noise: float = 0.5


@dataclass
class SyntheticData:
    dataset: GridDataset
    models: dict[int, YVineModel] = field(default_factory=dict)


def year_rng(seed: int, year: int) -> np.random.Generator:
    """Independent stream per year, identical whatever order years are processed in."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(year),)))


def _smooth_field(rng, sx, sy, n_basis: int, noise: float):
    """Standard-normal field: random low-frequency cosine basis plus white noise."""
    f = np.zeros_like(sx)
    var = 0.0
    for a in range(n_basis):
        for b in range(n_basis):
            if a == b == 0:
                continue
            c = rng.normal() / (1 + a + b)
            phase = rng.uniform(0, 2 * np.pi)
            f += c * np.sqrt(2) * np.cos(np.pi * (a * sx + b * sy) + phase)
            var += c * c
    f += noise * rng.normal(size=sx.shape)
    var += noise ** 2
    return f / np.sqrt(var)


def generate_synthetic(config: SyntheticConfig | None = None) -> SyntheticData:
    """Simulate a gridded panel whose responses follow a known Y-vine.

    Predictor fields are smooth random surfaces plus noise, standardised so
    that Phi(x) is uniform; responses are drawn from the Y-vine given the
    predictors' u-values and reported on the standard normal scale.
    """
    cfg = config or SyntheticConfig()
    preds = tuple(cfg.predictors)
    nx, ny = cfg.nx, cfg.ny
    iy, ix = np.divmod(np.arange(nx * ny), nx)
    sx = ix / max(nx - 1, 1)
    sy = iy / max(ny - 1, 1)
    lat = 47.0 + 3.0 * sy
    lon = 9.0 + 4.0 * sx
    frames, models = [], {}
    for year in cfg.years:
        model = cfg.model
        if isinstance(model, Mapping):
            model = model[year]
        if model is None:
            model = default_generating_model(preds)
        missing = [p for p in model.order if p not in preds]
        if missing:
            raise ValueError(f"generating model uses unknown predictors {missing}")
        rng = year_rng(cfg.seed, year)
        x = {p: _smooth_field(rng, sx, sy, cfg.n_basis, cfg.noise) for p in preds}
        u = [_path.clamp(norm.cdf(x[p])) for p in model.order]
        _, b0 = _path.replay_path(u, model.predictor_edges, model.q)
        w = _path.clamp(rng.random((nx * ny, 2)))
        a1 = _path.clamp(model.top_copula.hinv1(w[:, 0], w[:, 1]))
        v2 = _path.arm_inverse(w[:, 1], model.edges_v2, b0)
        v1 = _path.arm_inverse(a1, model.edges_v1, b0)
        frames.append(pd.DataFrame({"year": year, "cell_id": np.arange(nx * ny), "lat": lat,
                                    "lon": lon, "frost": norm.ppf(v1), "drought": norm.ppf(v2),
                                    **x}))
        models[int(year)] = model
    df = pd.concat(frames, ignore_index=True)
    return SyntheticData(GridDataset(df, preds, 0), models)

