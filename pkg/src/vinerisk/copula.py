"""One-parameter bivariate copula families.

All evaluation functions are vectorised over ``u`` and ``v``.  Arguments are
clamped to ``[EPS, 1 - EPS]`` before evaluation.

Conventions
-----------
``hfunc(..., which="first")`` is the conditional distribution of the *first*
argument given the second, ``dC(u, v)/dv``.  ``which="second"`` is the
conditional distribution of the second argument given the first,
``dC(u, v)/du``.  ``hinv`` inverts ``hfunc`` in the free coordinate.

Rotations follow the usual convention: the 180 degree rotation is the survival
copula, the 90 and 270 degree rotations reflect one argument and therefore
model negative dependence.  The parameter of a rotated family always lives in
the parameter space of the base family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special
from scipy.stats import norm, qmc

EPS = 1e-10

KINDS = ("indep", "gaussian", "clayton", "gumbel", "frank", "joe")
ROTATIONS = (0, 90, 180, 270)
_ROTATABLE = ("clayton", "gumbel", "joe")

# closed numerical intervals used for maximum likelihood
FIT_BOUNDS = {
    "gaussian": (-0.9999, 0.9999),
    "clayton": (1e-4, 50.0),
    "gumbel": (1.0 + 1e-4, 50.0),
    "joe": (1.0 + 1e-4, 50.0),
    "frank": (-35.0, 35.0),
}
FRANK_MIN_ABS = 1e-4


class CopulaError(ValueError):
    """Invalid family, parameter or data."""


class CopulaFitError(RuntimeError):
    """Maximum likelihood estimation did not produce a usable estimate."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class FamilyId:
    kind: str
    rotation: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CopulaError(f"unknown copula family {self.kind!r}")
        if self.rotation not in ROTATIONS:
            raise CopulaError(f"rotation must be one of {ROTATIONS}, got {self.rotation}")
        if self.rotation and self.kind not in _ROTATABLE:
            raise CopulaError(f"{self.kind} is not rotated (rotation must be 0)")

    @property
    def token(self) -> str:
        return self.kind if self.rotation == 0 else f"{self.kind}{self.rotation}"

    @property
    def n_params(self) -> int:
        return 0 if self.kind == "indep" else 1

    @classmethod
    def from_token(cls, token: str) -> "FamilyId":
        token = token.strip().lower()
        for rot in (270, 180, 90):
            suffix = str(rot)
            if token.endswith(suffix) and token[: -len(suffix)] in _ROTATABLE:
                return cls(token[: -len(suffix)], rot)
        if token == "independence":
            token = "indep"
        return cls(token, 0)

    def __str__(self):
        return self.token


INDEP = FamilyId("indep")
GAUSSIAN = FamilyId("gaussian")
FRANK = FamilyId("frank")

# enumeration order doubles as the tie-break order in select_family
ALL_FAMILIES = (
    (INDEP, GAUSSIAN)
    + tuple(FamilyId("clayton", r) for r in ROTATIONS)
    + tuple(FamilyId("gumbel", r) for r in ROTATIONS)
    + (FRANK,)
    + tuple(FamilyId("joe", r) for r in ROTATIONS)
)


def parse_families(tokens) -> tuple[FamilyId, ...]:
    """Parse a comma separated list of tokens (or an iterable of tokens).

    The shorthands ``all``, ``clayton*``, ``gumbel*`` and ``joe*`` expand to
    every rotation.
    """
    if isinstance(tokens, str):
        tokens = [s for s in tokens.split(",") if s.strip()]
    out = []
    for tok in tokens:
        if isinstance(tok, FamilyId):
            out.append(tok)
            continue
        tok = tok.strip().lower()
        if tok == "all":
            out.extend(ALL_FAMILIES)
        elif tok.endswith("*"):
            out.extend(FamilyId(tok[:-1], r) for r in ROTATIONS)
        else:
            out.append(FamilyId.from_token(tok))
    order = {f: i for i, f in enumerate(ALL_FAMILIES)}
    return tuple(sorted(set(out), key=order.__getitem__))


# ---------------------------------------------------------------------------
# parameter checks

def _check_theta(kind: str, theta):
    if kind == "indep":
        return None
    if theta is None or not np.isfinite(theta):
        raise CopulaError(f"{kind}: parameter must be a finite number, got {theta!r}")
    theta = float(theta)
    if kind == "gaussian" and not -1.0 < theta < 1.0:
        raise CopulaError(f"gaussian: rho={theta} outside (-1, 1)")
    if kind == "clayton" and not theta > 0.0:
        raise CopulaError(f"clayton: theta={theta} must be > 0")
    if kind in ("gumbel", "joe") and not theta >= 1.0:
        raise CopulaError(f"{kind}: theta={theta} must be >= 1")
    if kind == "frank" and abs(theta) < FRANK_MIN_ABS:
        raise CopulaError(
            f"frank: |theta|={abs(theta)} below {FRANK_MIN_ABS} (use the independence copula)")
    return theta


def _clamp(x):
    return np.clip(np.asarray(x, dtype=float), EPS, 1.0 - EPS)


# ---------------------------------------------------------------------------
# base (unrotated) families; h0(u, v) = dC(u, v)/dv

def _bvn_cdf(x, y, rho):
    """Bivariate standard normal CDF via Owen's T function."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    s = math.sqrt(1.0 - rho * rho)
    out = np.empty(x.shape)
    nx, ny = norm.cdf(x), norm.cdf(y)
    both0 = (x == 0) & (y == 0)
    out[both0] = 0.25 + math.asin(rho) / (2 * math.pi)
    x0 = (x == 0) & ~both0
    y0 = (y == 0) & ~both0
    out[x0] = 0.5 * ny[x0] - special.owens_t(y[x0], -rho / s)
    out[y0] = 0.5 * nx[y0] - special.owens_t(x[y0], -rho / s)
    gen = ~(both0 | x0 | y0)
    xg, yg = x[gen], y[gen]
    tx = special.owens_t(xg, (yg - rho * xg) / (xg * s))
    ty = special.owens_t(yg, (xg - rho * yg) / (yg * s))
    beta = np.where(xg * yg > 0, 0.0, 0.5)
    out[gen] = 0.5 * (nx[gen] + ny[gen]) - tx - ty - beta
    return np.clip(out, 0.0, 1.0)


def _gauss_cdf(t, u, v):
    return _bvn_cdf(norm.ppf(u), norm.ppf(v), t)


def _gauss_logpdf(t, u, v):
    x, y = norm.ppf(u), norm.ppf(v)
    r2 = 1.0 - t * t
    return -0.5 * math.log(r2) - (t * t * (x * x + y * y) - 2 * t * x * y) / (2 * r2)


def _gauss_h(t, u, v):
    return norm.cdf((norm.ppf(u) - t * norm.ppf(v)) / math.sqrt(1.0 - t * t))


def _gauss_hinv(t, w, v):
    return norm.cdf(norm.ppf(w) * math.sqrt(1.0 - t * t) + t * norm.ppf(v))


def _clayton_logs(t, u, v):
    # log(u^-t + v^-t - 1), overflow safe
    m = np.logaddexp(-t * np.log(u), -t * np.log(v))
    return m + np.log1p(-np.exp(-m))


def _clayton_cdf(t, u, v):
    return np.exp(-_clayton_logs(t, u, v) / t)


def _clayton_logpdf(t, u, v):
    return (math.log1p(t) + (-1.0 - t) * (np.log(u) + np.log(v))
            + (-2.0 - 1.0 / t) * _clayton_logs(t, u, v))


def _clayton_h(t, u, v):
    return np.exp((-t - 1.0) * np.log(v) + (-1.0 - 1.0 / t) * _clayton_logs(t, u, v))


def _clayton_hinv(t, w, v):
    m = -t * np.log(v) + np.log(np.expm1(-t / (1.0 + t) * np.log(w)))
    return np.exp(-np.logaddexp(0.0, m) / t)


def _gumbel_parts(t, u, v):
    x, y = -np.log(u), -np.log(v)
    loga = np.logaddexp(t * np.log(x), t * np.log(y))
    return x, y, loga, np.exp(loga / t)


def _gumbel_cdf(t, u, v):
    return np.exp(-_gumbel_parts(t, u, v)[3])


def _gumbel_logpdf(t, u, v):
    x, y, loga, a1 = _gumbel_parts(t, u, v)
    return (-a1 + x + y + (t - 1.0) * (np.log(x) + np.log(y))
            + (1.0 / t - 2.0) * loga + np.log(a1 + t - 1.0))


def _gumbel_h(t, u, v):
    x, y, loga, a1 = _gumbel_parts(t, u, v)
    return np.exp(-a1 + (1.0 / t - 1.0) * loga + (t - 1.0) * np.log(y) + y)


def _frank_parts(t, u, v):
    return np.expm1(-t * u), np.expm1(-t * v), math.expm1(-t)


def _frank_cdf(t, u, v):
    a, b, d = _frank_parts(t, u, v)
    return -np.log1p(a * b / d) / t


def _frank_logpdf(t, u, v):
    a, b, d = _frank_parts(t, u, v)
    return math.log(-t * d) - t * (u + v) - 2.0 * np.log(np.abs(d + a * b))


def _frank_h(t, u, v):
    a, b, d = _frank_parts(t, u, v)
    return np.exp(-t * v) * a / (d + a * b)


def _frank_hinv(t, w, v):
    b = np.expm1(-t * v)
    d = math.expm1(-t)
    a = w * d / (1.0 + b * (1.0 - w))
    return -np.log1p(a) / t


def _joe_parts(t, u, v):
    lu, lv = np.log1p(-u), np.log1p(-v)
    mx = -np.expm1(t * lu)  # 1 - (1-u)^t
    my = -np.expm1(t * lv)
    # log((1-u)^t + (1-v)^t (1 - (1-u)^t)), safe when both terms underflow
    loga = np.logaddexp(t * lu, t * lv + np.log(mx))
    return lu, lv, mx, my, loga


def _joe_cdf(t, u, v):
    loga = _joe_parts(t, u, v)[4]
    return -np.expm1(loga / t)


def _joe_logpdf(t, u, v):
    lu, lv, mx, my, loga = _joe_parts(t, u, v)
    return ((1.0 / t - 2.0) * loga + (t - 1.0) * (lu + lv)
            + np.log(t - 1.0 + np.exp(loga)))


def _joe_h(t, u, v):
    lu, lv, mx, my, loga = _joe_parts(t, u, v)
    return np.exp((1.0 / t - 1.0) * loga + (t - 1.0) * lv) * mx


def _bisect_hinv(h, t, w, v, iters=64):
    # h(., v) is increasing in its first argument
    w, v = np.broadcast_arrays(np.asarray(w, float), np.asarray(v, float))
    lo = np.zeros(w.shape)
    hi = np.ones(w.shape)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = h(t, _clamp(mid), v) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _frank_debye1(t):
    if t == 0:
        return 1.0
    f = lambda s: s / math.expm1(s) if s != 0 else 1.0
    val, _ = integrate.quad(f, 0.0, t, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val / t


def _tau_gauss(t):
    return 2.0 / math.pi * math.asin(t)


def _tau_clayton(t):
    return t / (t + 2.0)


def _tau_gumbel(t):
    return 1.0 - 1.0 / t


def _tau_frank(t):
    return 1.0 - 4.0 / t + 4.0 * _frank_debye1(t) / t


def _tau_joe_closed(t):
    return 1.0 + 2.0 / (2.0 - t) * (special.digamma(2.0) - special.digamma(2.0 / t + 1.0))


def _tau_joe(t):
    if t == 1.0:
        return 0.0
    d = t - 2.0
    if abs(d) < 1e-3:
        # removable singularity at t=2: quadratic through the exact limit and two closed-form values
        mid = 2.0 - math.pi ** 2 / 6.0
        lo, hi = _tau_joe_closed(2.0 - 1e-3), _tau_joe_closed(2.0 + 1e-3)
        s = d / 1e-3
        return mid + 0.5 * s * (hi - lo) + 0.5 * s * s * (hi + lo - 2.0 * mid)
    return _tau_joe_closed(t)


_BASE = {
    "gaussian": dict(cdf=_gauss_cdf, logpdf=_gauss_logpdf, h=_gauss_h, hinv=_gauss_hinv,
                     tau=_tau_gauss),
    "clayton": dict(cdf=_clayton_cdf, logpdf=_clayton_logpdf, h=_clayton_h,
                    hinv=_clayton_hinv, tau=_tau_clayton),
    "gumbel": dict(cdf=_gumbel_cdf, logpdf=_gumbel_logpdf, h=_gumbel_h,
                   hinv=lambda t, w, v: _bisect_hinv(_gumbel_h, t, w, v), tau=_tau_gumbel),
    "frank": dict(cdf=_frank_cdf, logpdf=_frank_logpdf, h=_frank_h, hinv=_frank_hinv,
                  tau=_tau_frank),
    "joe": dict(cdf=_joe_cdf, logpdf=_joe_logpdf, h=_joe_h,
                hinv=lambda t, w, v: _bisect_hinv(_joe_h, t, w, v), tau=_tau_joe),
}


# ---------------------------------------------------------------------------
# public evaluation API

def _prep(family, theta, u, v):
    if not isinstance(family, FamilyId):
        family = FamilyId.from_token(family)
    theta = _check_theta(family.kind, theta)
    u, v = np.broadcast_arrays(_clamp(u), _clamp(v))
    return family, theta, u, v


def _scalar(x, *args):
    if all(np.ndim(a) == 0 for a in args):
        return float(x)
    return x


def cop_cdf(family, theta, u, v):
    """Copula distribution function C(u, v)."""
    family, t, uu, vv = _prep(family, theta, u, v)
    if family.kind == "indep":
        out = uu * vv
    else:
        c0 = _BASE[family.kind]["cdf"]
        r = family.rotation
        if r == 0:
            out = c0(t, uu, vv)
        elif r == 90:
            out = vv - c0(t, 1.0 - uu, vv)
        elif r == 180:
            out = uu + vv - 1.0 + c0(t, 1.0 - uu, 1.0 - vv)
        else:
            out = uu - c0(t, uu, 1.0 - vv)
    return _scalar(np.clip(out, 0.0, 1.0), u, v)


def cop_logpdf(family, theta, u, v):
    family, t, uu, vv = _prep(family, theta, u, v)
    if family.kind == "indep":
        out = np.zeros(uu.shape)
    else:
        f = _BASE[family.kind]["logpdf"]
        r = family.rotation
        if r == 90:
            uu = 1.0 - uu
        elif r == 180:
            uu, vv = 1.0 - uu, 1.0 - vv
        elif r == 270:
            vv = 1.0 - vv
        out = f(t, uu, vv)
    return _scalar(out, u, v)


def cop_pdf(family, theta, u, v):
    """Copula density c(u, v)."""
    return np.exp(cop_logpdf(family, theta, u, v))


def hfunc(family, theta, u, v, which="first"):
    """Conditional distribution function of one argument given the other.

    ``which="first"`` returns P(U <= u | V = v); ``which="second"`` returns
    P(V <= v | U = u).
    """
    family, t, uu, vv = _prep(family, theta, u, v)
    if which not in ("first", "second"):
        raise ValueError("which must be 'first' or 'second'")
    if which == "second":
        # exchangeable base families: dC/du (u, v) is h0(v, u) of the transposed rotation
        uu, vv = vv, uu
        r = {0: 0, 90: 270, 180: 180, 270: 90}[family.rotation]
    else:
        r = family.rotation
    if family.kind == "indep":
        out = uu
    else:
        h0 = _BASE[family.kind]["h"]
        if r == 0:
            out = h0(t, uu, vv)
        elif r == 90:
            out = 1.0 - h0(t, 1.0 - uu, vv)
        elif r == 180:
            out = 1.0 - h0(t, 1.0 - uu, 1.0 - vv)
        else:
            out = h0(t, uu, 1.0 - vv)
    return _scalar(np.clip(out, 0.0, 1.0), u, v)


def hinv(family, theta, w, v, which="first"):
    """Inverse of :func:`hfunc` in the free coordinate.

    With ``which="first"`` returns ``u`` such that ``hfunc(u, v, "first") == w``.
    With ``which="second"`` the conditioning value is the first argument: the
    result ``x`` satisfies ``hfunc(v, x, "second") == w``.
    """
    family, t, ww, vv = _prep(family, theta, w, v)
    if which not in ("first", "second"):
        raise ValueError("which must be 'first' or 'second'")
    r = family.rotation
    if which == "second":
        r = {0: 0, 90: 270, 180: 180, 270: 90}[r]
    if family.kind == "indep":
        out = ww
    else:
        hi0 = _BASE[family.kind]["hinv"]
        if r == 0:
            out = hi0(t, ww, vv)
        elif r == 90:
            out = 1.0 - hi0(t, 1.0 - ww, vv)
        elif r == 180:
            out = 1.0 - hi0(t, 1.0 - ww, 1.0 - vv)
        else:
            out = hi0(t, ww, 1.0 - vv)
    out = np.clip(out, 0.0, 1.0)
    if not np.all(np.isfinite(out)):
        raise ConvergenceError(f"{family.token}: h-inverse produced non-finite values")
    return _scalar(out, w, v)


def param_to_tau(family, theta) -> float:
    """Population Kendall's tau of the family."""
    if not isinstance(family, FamilyId):
        family = FamilyId.from_token(family)
    t = _check_theta(family.kind, theta)
    if family.kind == "indep":
        return 0.0
    tau = float(_BASE[family.kind]["tau"](t))
    return -tau if family.rotation in (90, 270) else tau


def tau_range(family) -> tuple[float, float]:
    """Open interval of Kendall's tau values reachable by the family."""
    if not isinstance(family, FamilyId):
        family = FamilyId.from_token(family)
    if family.kind == "indep":
        return (0.0, 0.0)
    if family.kind in ("gaussian", "frank"):
        return (-1.0, 1.0)
    return (-1.0, 0.0) if family.rotation in (90, 270) else (0.0, 1.0)


def tau_to_param(family, tau: float) -> float:
    """Parameter with population Kendall's tau equal to ``tau``."""
    if not isinstance(family, FamilyId):
        family = FamilyId.from_token(family)
    tau = float(tau)
    lo, hi = tau_range(family)
    if family.kind == "indep":
        if tau != 0.0:
            raise CopulaError(f"indep: tau must be 0, got {tau}")
        return None
    if family.kind == "frank" and abs(tau) <= abs(_tau_frank(FRANK_MIN_ABS)):
        raise CopulaError(f"frank: |tau|={abs(tau)} too close to 0 (theta=0 excluded)")
    if not lo < tau < hi:
        raise CopulaError(f"{family.token}: tau={tau} outside attainable range ({lo}, {hi})")
    base_tau = -tau if family.rotation in (90, 270) else tau
    k = family.kind
    if k == "gaussian":
        return math.sin(math.pi * base_tau / 2.0)
    if k == "clayton":
        return 2.0 * base_tau / (1.0 - base_tau)
    if k == "gumbel":
        return 1.0 / (1.0 - base_tau)
    if k == "frank":
        sgn = 1.0 if base_tau > 0 else -1.0
        f = lambda t: _tau_frank(sgn * t) - base_tau
        return sgn * optimize.brentq(f, FRANK_MIN_ABS, 700.0, xtol=1e-13, rtol=1e-15)
    f = lambda t: _tau_joe(t) - base_tau
    return optimize.brentq(f, 1.0, 1e6, xtol=1e-13, rtol=1e-15)


# ---------------------------------------------------------------------------
# fitted pair copula

def _nan_to_none(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


@dataclass(frozen=True)
class PairCopula:
    """A bivariate copula with a fixed parameter and its fit statistics."""

    family: FamilyId
    theta: float | None = None
    n_obs: int = 0
    loglik: float = float("nan")
    aic: float = float("nan")
    tau: float = field(default=float("nan"))

    @classmethod
    def from_param(cls, family, theta=None) -> "PairCopula":
        if not isinstance(family, FamilyId):
            family = FamilyId.from_token(family)
        theta = _check_theta(family.kind, theta)
        return cls(family, theta, 0, float("nan"), float("nan"), param_to_tau(family, theta))

    @classmethod
    def independence(cls) -> "PairCopula":
        return cls.from_param(INDEP)

    def cdf(self, u, v):
        return cop_cdf(self.family, self.theta, u, v)

    def pdf(self, u, v):
        return cop_pdf(self.family, self.theta, u, v)

    def logpdf(self, u, v):
        return cop_logpdf(self.family, self.theta, u, v)

    def hfunc1(self, u, v):
        """P(U <= u | V = v)."""
        return hfunc(self.family, self.theta, u, v, "first")

    def hfunc2(self, u, v):
        """P(V <= v | U = u)."""
        return hfunc(self.family, self.theta, u, v, "second")

    def hinv1(self, w, v):
        return hinv(self.family, self.theta, w, v, "first")

    def hinv2(self, w, u):
        return hinv(self.family, self.theta, w, u, "second")

    def simulate(self, n, seed=None):
        return simulate_pair(self, n, seed)

    def to_dict(self) -> dict:
        return {
            "family": self.family.token,
            "theta": self.theta,
            "loglik": _nan_to_none(self.loglik),
            "aic": _nan_to_none(self.aic),
            "tau": self.tau,
            "n_obs": self.n_obs,
        }

    @classmethod
    def from_dict(cls, d) -> "PairCopula":
        fam = FamilyId.from_token(d["family"])
        theta = d.get("theta")
        return cls(
            fam,
            None if theta is None else float(theta),
            int(d.get("n_obs", 0)),
            float("nan") if d.get("loglik") is None else float(d["loglik"]),
            float("nan") if d.get("aic") is None else float(d["aic"]),
            param_to_tau(fam, theta),
        )


def _as_pairs(u, v=None):
    if v is None:
        arr = np.asarray(u, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise CopulaError("expected an (n, 2) array of u-data")
        u, v = arr[:, 0], arr[:, 1]
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise CopulaError(f"length mismatch: {u.size} vs {v.size}")
    return u, v


def _check_fit_data(u, v):
    if u.size < 10:
        raise CopulaError(f"at least 10 observations required, got {u.size}")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise CopulaError("u-data contain non-finite values")
    if np.ptp(u) == 0 or np.ptp(v) == 0:
        raise CopulaError("degenerate data: constant column")
    return _clamp(u), _clamp(v)


def _empirical_tau(u, v):
    from .dependence import kendall_tau

    return kendall_tau(u, v)


def fit_mle(u, v=None, family=GAUSSIAN, *, tau_hat=None) -> PairCopula:
    """Maximum likelihood fit of a single family.

    ``u`` may be an (n, 2) array, in which case ``v`` is omitted.
    """
    if isinstance(v, (FamilyId, str)):
        family, v = v, None
    if not isinstance(family, FamilyId):
        family = FamilyId.from_token(family)
    u, v = _as_pairs(u, v)
    u, v = _check_fit_data(u, v)
    n = u.size
    if family.kind == "indep":
        return PairCopula(family, None, n, 0.0, 0.0, 0.0)

    lo, hi = FIT_BOUNDS[family.kind]
    logpdf = _BASE[family.kind]["logpdf"]
    r = family.rotation
    a, b = u, v
    if r == 90:
        a = 1.0 - u
    elif r == 180:
        a, b = 1.0 - u, 1.0 - v
    elif r == 270:
        b = 1.0 - v

    def nll(t):
        if family.kind == "frank" and abs(t) < FRANK_MIN_ABS:
            t = math.copysign(FRANK_MIN_ABS, t if t != 0 else 1.0)
        val = logpdf(t, a, b)
        s = float(np.sum(val))
        return -s if np.isfinite(s) else 1e300

    if tau_hat is None:
        tau_hat = _empirical_tau(u, v)
    try:
        init = float(np.clip(tau_to_param(family, tau_hat), lo, hi))
    except CopulaError:
        init = 0.5 * (lo + hi)

    res = optimize.minimize_scalar(nll, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-8, "maxiter": 500})
    theta, best = float(res.x), float(res.fun)
    if nll(init) < best:
        theta, best = init, nll(init)
    if family.kind == "frank" and abs(theta) < FRANK_MIN_ABS:
        theta = math.copysign(FRANK_MIN_ABS, theta if theta != 0 else tau_hat or 1.0)
        best = nll(theta)
    if best >= 1e300:
        raise CopulaFitError(f"{family.token}: log-likelihood not finite on the parameter interval")
    edge = 1e-6 * (hi - lo)
    if theta - lo < edge or hi - theta < edge:
        raise CopulaFitError(
            f"{family.token}: estimate theta={theta:.6g} on the boundary of [{lo}, {hi}] "
            f"(loglik={-best:.6g}, n={n}, tau_hat={tau_hat:.4f})")
    loglik = -best
    return PairCopula(family, theta, n, loglik, -2.0 * loglik + 2.0, param_to_tau(family, theta))


def select_family(u, v=None, candidates=ALL_FAMILIES) -> PairCopula:
    """Fit every candidate family and return the one with the smallest AIC.

    Rotated families whose dependence sign contradicts the empirical Kendall's
    tau are skipped; their fits would end on the parameter boundary anyway.
    """
    if v is not None and not isinstance(v, np.ndarray) and not np.ndim(v):
        candidates, v = v, None
    u, v = _as_pairs(u, v)
    cands = parse_families(candidates)
    if not cands:
        raise CopulaError("candidate family set is empty")
    uu, vv = _check_fit_data(u, v)
    tau_hat = _empirical_tau(uu, vv)
    best = None
    errors = []
    for fam in cands:
        if fam.kind in _ROTATABLE and len(cands) > 1:
            lo_t, hi_t = tau_range(fam)
            if (tau_hat > 0 and hi_t <= 0) or (tau_hat < 0 and lo_t >= 0):
                continue
        try:
            fit = fit_mle(uu, vv, fam, tau_hat=tau_hat)
        except (CopulaFitError, CopulaError) as exc:
            errors.append(str(exc))
            continue
        if best is None or fit.aic < best.aic:
            best = fit
    if best is None:
        raise CopulaFitError("all candidate families failed: " + "; ".join(errors))
    return best


def simulate_pair(model: PairCopula, n: int, seed=None, method: str = "random") -> np.ndarray:
    """Draw ``n`` pairs by conditional inversion; returns an (n, 2) array.

    Parameters
    ----------
    method : {"random", "sobol"}
        Source of the driving uniforms.  ``"sobol"`` uses a scrambled Sobol
        sequence (randomised quasi-Monte Carlo), which keeps draws unbiased
        but makes sample statistics far less noisy than independent draws.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if method == "random":
        w = rng.random((n, 2))
    elif method == "sobol":
        m = max(int(math.ceil(math.log2(n))), 1)
        w = qmc.Sobol(2, scramble=True, seed=rng).random_base2(m)[:n]
    else:
        raise ValueError(f"unknown method {method!r}")
    u = _clamp(w[:, 0])
    v = model.hinv2(_clamp(w[:, 1]), u)
    return np.column_stack([u, v])
