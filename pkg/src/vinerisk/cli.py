"""Command-line front end: ``vinerisk {simulate,fit,risk,survival,eda}``.

Settings are resolved as command-line flags over a JSON ``--config`` file
over the built-in defaults, and the resolved settings are echoed to
``<out>/config.json``.  Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import pandas as pd

from . import _io, pipeline, risk
from .copula import ConvergenceError, CopulaError, CopulaFitError, parse_families
from .dependence import DependenceError, tau_matrix, tau_series
from .dvine import VineFitError
from .marginals import MarginalError

log = logging.getLogger("vinerisk")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    input: str | None = None
    out: str = "vinerisk_out"
    years: str | None = None
    max_p: int = 5
    yf: float = risk.DEFAULT_YF
    yd: float = risk.DEFAULT_YD
    flag_quantile: float = risk.DEFAULT_FLAG_QUANTILE
    flag_cutoff: float = risk.DEFAULT_FLAG_CUTOFF
    rp_threshold: float = risk.DEFAULT_RP_THRESHOLD
    families: str = "all"
    seed: int = 0
    threads: int = 1
    models: str | None = None
    surfaces: str | None = None
    grid: str = "10x10"

    def validate(self) -> None:
        if self.max_p < 0:
            raise UsageError("--max-p must be >= 0")
        for name in ("yf", "yd", "flag_quantile", "flag_cutoff", "rp_threshold"):
            if not math.isfinite(getattr(self, name)):
                raise UsageError(f"{name} must be finite")
        if not 0.0 <= self.flag_quantile <= 1.0:
            raise UsageError("--flag-quantile must lie in [0, 1]")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        try:
            parse_families(self.families)
        except CopulaError as exc:
            raise UsageError(str(exc)) from None
        self.year_range()
        self.grid_shape()

    def year_range(self):
        if self.years is None:
            return None
        try:
            a, b = (int(x) for x in str(self.years).split(":"))
        except ValueError:
            raise UsageError(f"--years expects A:B, got {self.years!r}") from None
        if a > b:
            raise UsageError(f"empty year range {self.years!r}")
        return a, b

    def grid_shape(self):
        try:
            nx, ny = (int(x) for x in self.grid.lower().split("x"))
        except ValueError:
            raise UsageError(f"--grid expects NXxNY, got {self.grid!r}") from None
        if nx < 1 or ny < 1:
            raise UsageError("grid dimensions must be positive")
        return nx, ny


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CASTS = {"int": int, "float": float}


def _cast(name, value):
    kind = str(_TYPES[name]).split(" ")[0]
    if value is None or kind not in _CASTS:
        return value
    try:
        return _CASTS[kind](value)
    except (TypeError, ValueError):
        raise UsageError(f"invalid value for {name}: {value!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="gridded panel CSV")
    common.add_argument("--out", help="output directory")
    common.add_argument("--years", metavar="A:B", help="inclusive year range")
    common.add_argument("--max-p", type=int, dest="max_p", help="predictors per model (default 5)")
    common.add_argument("--yf", type=float, help="frost threshold (default -2)")
    common.add_argument("--yd", type=float, help="drought threshold (default -1.5)")
    common.add_argument("--flag-quantile", type=float, dest="flag_quantile",
                        help="quantile of cell risks used for flagging (default 0.95)")
    common.add_argument("--flag-cutoff", type=float, dest="flag_cutoff",
                        help="flag a year when that quantile exceeds this (default 0.2)")
    common.add_argument("--rp-threshold", type=float, dest="rp_threshold",
                        help="survival level defining the return period (default 0.5)")
    common.add_argument("--families", help="comma-separated family tokens or 'all'")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--threads", type=int, help="worker threads (env VINERISK_THREADS)")
    common.add_argument("--config", help="JSON file with default settings")
    common.add_argument("--models", help="model directory (risk)")
    common.add_argument("--surfaces", help="risk surface directory (survival)")
    common.add_argument("--grid", help="synthetic grid size NXxNY (simulate)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="vinerisk", description="Vine-copula regression risk toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in [
        ("fit", "fit annual D-vine and Y-vine models"),
        ("risk", "evaluate conditional risk surfaces and flag extreme years"),
        ("survival", "survival probabilities and return periods"),
        ("simulate", "write a synthetic dataset drawn from a known Y-vine"),
        ("eda", "Kendall's tau matrices and the frost-drought tau series"),
    ]:
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    """Flags over config file over defaults; ``VINERISK_THREADS`` backs ``--threads``."""
    values = asdict(RunConfig())
    file_values = {}
    if args.config:
        try:
            file_values = _io.read_json(args.config)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        if not isinstance(file_values, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(file_values) - set(values))
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    if "threads" not in file_values and environ.get("VINERISK_THREADS"):
        values["threads"] = environ["VINERISK_THREADS"]
    values.update(file_values)
    for name in values:
        given = getattr(args, name, None)
        if given is not None:
            values[name] = given
    values["command"] = args.command
    cfg = RunConfig(**{k: _cast(k, v) for k, v in values.items()})
    cfg.validate()
    return cfg


def _echo(cfg: RunConfig, out: Path) -> None:
    """Write the resolved settings to config.json and config_<command>.json."""
    out.mkdir(parents=True, exist_ok=True)
    _io.write_json(asdict(cfg), out / "config.json")
    _io.write_json(asdict(cfg), out / f"config_{cfg.command}.json")


def _load_dataset(cfg: RunConfig) -> pipeline.GridDataset:
    if not cfg.input:
        raise UsageError("--input is required")
    if not Path(cfg.input).is_file():
        raise pipeline.DataError(f"input file not found: {cfg.input}")
    ds = pipeline.load_grid_csv(cfg.input)
    yr = cfg.year_range()
    if yr is not None:
        frame = ds.frame[(ds.frame["year"] >= yr[0]) & (ds.frame["year"] <= yr[1])]
        ds = pipeline.GridDataset(frame.reset_index(drop=True), ds.predictors, ds.dropped)
    if len(ds) == 0:
        raise pipeline.DataError("no records")
    return ds


# --------------------------------------------------------------------------- commands


def cmd_simulate(cfg: RunConfig) -> int:
    nx, ny = cfg.grid_shape()
    a, b = cfg.year_range() or (2001, 2005)
    syn = pipeline.generate_synthetic(pipeline.SyntheticConfig(
        nx=nx, ny=ny, years=tuple(range(a, b + 1)), seed=cfg.seed))
    out = Path(cfg.out)
    _echo(cfg, out)
    syn.dataset.to_csv(out / "data.csv")
    _io.write_json({str(y): m.to_dict() for y, m in syn.models.items()},
                   out / "generating_models.json")
    log.info("wrote %d records to %s", len(syn.dataset), out / "data.csv")
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    ds = _load_dataset(cfg)
    out = Path(cfg.out)
    _echo(cfg, out)
    mdir = out / "models"
    mdir.mkdir(exist_ok=True)
    fit_cfg = pipeline.FitConfig(cfg.max_p, cfg.families)

    def one(year):
        try:
            return pipeline.fit_annual_models(ds, year, fit_cfg)
        except pipeline.FitError as exc:
            log.warning("skipping %s", exc)
            return exc

    years = ds.years
    if cfg.threads > 1 and len(years) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(one, years))
    else:
        results = [one(y) for y in years]
    sets = [r for r in results if isinstance(r, pipeline.AnnualModelSet)]
    failed = [r for r in results if not isinstance(r, pipeline.AnnualModelSet)]
    if not sets:
        raise pipeline.FitError("all", "all models", f"{len(failed)} year(s) failed")
    for ms in sets:
        ms.save(mdir / f"models_{ms.year}.json")
    an = pipeline.order_analytics(sets, ds.model_predictors)
    _io.write_csv(pipeline.order_frame(sets), out / "orders.csv")
    for stem, frame in an.frames().items():
        _io.write_csv(frame, out / f"{stem}.csv")
    lines = [f"years fitted: {len(sets)}", f"years skipped: {len(failed)}",
             f"rows dropped at ingestion: {ds.dropped}"]
    for kind in pipeline.MODEL_KINDS:
        lines.append(f"{kind} optimal order: {', '.join(an.optimal[kind])}")
        for pos, names, winner in an.ties[kind]:
            lines.append(f"  tie at position {pos}: {', '.join(names)} -> {winner}")
    for exc in failed:
        lines.append(f"failed: {exc}")
    (out / "fit_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def _model_path(mdir: Path, year: int) -> Path:
    return mdir / f"models_{year}.json"


def cmd_risk(cfg: RunConfig) -> int:
    ds = _load_dataset(cfg)
    out = Path(cfg.out)
    mdir = Path(cfg.models) if cfg.models else out / "models"
    _echo(cfg, out)
    sdir = out / "surfaces"
    sdir.mkdir(exist_ok=True)
    th = risk.ThresholdPair(cfg.yf, cfg.yd)
    flags = []
    for year in ds.years:
        path = _model_path(mdir, year)
        if not path.is_file():
            raise pipeline.DataError(f"missing model file for year {year}, "
                                     f"kinds {', '.join(pipeline.MODEL_KINDS)}: {path}")
        ms = pipeline.AnnualModelSet.load(path)
        sl = ds.year_slice(year)
        x_rows = {c: sl[c].to_numpy(float) for c in ds.model_predictors}
        common = dict(year=year, cell_ids=sl["cell_id"].to_numpy(),
                      lat=sl["lat"].to_numpy(float), lon=sl["lon"].to_numpy(float))
        surfaces = [
            risk.univariate_risk(ms.dvine_frost, ms.marginals["frost"], th.y_f, x_rows,
                                 ms.marginals, kind="frost", **common),
            risk.univariate_risk(ms.dvine_drought, ms.marginals["drought"], th.y_d, x_rows,
                                 ms.marginals, kind="drought", **common),
            risk.joint_risk(ms.yvine, (ms.marginals["frost"], ms.marginals["drought"]), th,
                            x_rows, ms.marginals, **common),
        ]
        for sf in surfaces:
            _io.write_csv(sf.to_frame(), sdir / f"{sf.kind}_{year}.csv")
            q = risk.empirical_quantile(sf.probs, cfg.flag_quantile)
            flags.append({"year": year, "kind": sf.kind, "quantile_value": q,
                          "flagged": risk.flag_extreme_year(sf, cfg.flag_quantile,
                                                            cfg.flag_cutoff)})
    _io.write_csv(pd.DataFrame(flags), out / "extreme_years.csv")
    return EXIT_OK


def _load_surfaces(sdir: Path) -> dict[str, list]:
    if not sdir.is_dir():
        raise pipeline.DataError(f"surface directory not found: {sdir}")
    by_kind = {k: [] for k in risk.KINDS}
    for path in sorted(sdir.glob("*.csv")):
        sf = risk.RiskSurface.from_frame(pd.read_csv(path, float_precision="round_trip"))
        by_kind[sf.kind].append(sf)
    if not any(by_kind.values()):
        raise pipeline.DataError("no records")
    return by_kind


def cmd_survival(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    sdir = Path(cfg.surfaces) if cfg.surfaces else out / "surfaces"
    by_kind = _load_surfaces(sdir)
    _echo(cfg, out)
    for kind, surfaces in by_kind.items():
        if not surfaces:
            continue
        years = sorted(int(sf.year) for sf in surfaces)
        s, T = cfg.year_range() or (years[0], years[-1])
        try:
            ids, P = risk.probability_matrix(surfaces, s, T)
        except risk.RiskError as exc:
            raise pipeline.DataError(str(exc)) from None
        raw = 1.0 - np.cumsum(P, axis=1)
        n_years = T - s + 1
        surv = pd.DataFrame({"cell_id": np.repeat(ids, n_years), "s": s,
                             "T": np.tile(np.arange(s, T + 1), ids.size),
                             "survival": np.clip(raw, 0.0, 1.0).ravel()})
        _io.write_csv(surv, out / f"survival_{kind}.csv")
        neg = raw.ravel() < 0
        if neg.any():
            diag = surv[neg].assign(survival_raw=raw.ravel()[neg])
            _io.write_csv(diag, out / f"survival_{kind}_clamped.csv")
        rp = risk.return_period_map(surfaces, s, cfg.rp_threshold, T)
        _io.write_csv(rp.to_frame(), out / f"return_period_{kind}.csv")
    return EXIT_OK


def cmd_eda(cfg: RunConfig) -> int:
    ds = _load_dataset(cfg)
    out = Path(cfg.out)
    _echo(cfg, out)
    cols = ("frost", "drought") + ds.model_predictors
    for year in ds.years:
        sl = ds.year_slice(year)
        tm = tau_matrix({c: sl[c].to_numpy(float) for c in cols})
        tm.index.name = "variable"
        tm.reset_index().to_csv(out / f"tau_matrix_{year}.csv", index=False,
                                float_format=_io.FLOAT_FORMAT, lineterminator="\n")
    sls = {y: ds.year_slice(y) for y in ds.years}
    series = tau_series(ds.years, {y: s["frost"].to_numpy(float) for y, s in sls.items()},
                        {y: s["drought"].to_numpy(float) for y, s in sls.items()})
    _io.write_csv(series, out / "tau_series.csv")
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "risk": cmd_risk, "survival": cmd_survival,
            "simulate": cmd_simulate, "eda": cmd_eda}

_DATA_ERRORS = (pipeline.DataError, DependenceError, MarginalError, risk.RiskError,
                FileNotFoundError, KeyError)
_NUMERIC_ERRORS = (pipeline.FitError, VineFitError, CopulaFitError, ConvergenceError,
                   FloatingPointError, ArithmeticError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"vinerisk: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERIC_ERRORS as exc:
        print(f"vinerisk: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        print(f"vinerisk: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
