"""Regularly varying functions: index estimation, generalized inverses,
Potter bounds, Karamata ratios and index calculus."""

import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DomainError,
    InsufficientDataError,
    ParameterError,
    SingularityError,
    UnsupportedError,
)
from .numerics import Bracket, Tolerance, integrate, invert_monotone

__all__ = [
    "RegFunc",
    "RVIndex",
    "PotterReport",
    "EquivReport",
    "estimate_rv0_index",
    "minus_inverse",
    "arrow_inverse",
    "check_potter",
    "karamata_ratio",
    "index_calculus",
    "check_asymptotic_equiv",
    "default_grid",
]

_TINY = 1e-300
_MIN_NORMAL = sys.float_info.min


@dataclass(frozen=True)
class RegFunc:
    """A positive monotone function of one variable with optional metadata.

    Parameters
    ----------
    eval : callable
        ``eval(t) -> float``.
    domain_lo, domain_hi : float
        Domain endpoints; ``domain_lo`` is excluded when it equals 0.
    monotone : {"nondecreasing", "nonincreasing", "unknown"}
    at : {"zero", "infinity"}
        Where the asymptotic behaviour of interest lives.
    index : float, optional
        Known index of regular variation, if any.
    inverse : callable, optional
        Closed form of the minus (``at="zero"``) or arrow inverse.
    name : str
    """

    eval: Callable[[float], float]
    domain_lo: float = 0.0
    domain_hi: float = math.inf
    monotone: str = "nondecreasing"
    at: str = "zero"
    index: Optional[float] = None
    inverse: Optional[Callable[[float], float]] = field(default=None, repr=False)
    name: str = ""

    def __post_init__(self):
        if self.monotone not in ("nondecreasing", "nonincreasing", "unknown"):
            raise ParameterError(f"unknown monotonicity {self.monotone!r}")
        if self.at not in ("zero", "infinity"):
            raise ParameterError(f"unknown asymptotic point {self.at!r}")
        if not self.domain_lo < self.domain_hi:
            raise ParameterError("empty domain")

    def __call__(self, t):
        return self.eval(t)


@dataclass(frozen=True)
class RVIndex:
    """Estimated index of regular variation.

    ``value`` may be ``+inf`` or ``-inf`` for rapid variation. ``residual`` is
    the RMS misfit of the log-ratio regression and ``n_points`` the number of
    grid points used.
    """

    value: float
    residual: float = 0.0
    n_points: int = 0
    truncated: bool = False


def default_grid(f, n_max=1100):
    """Geometric grid ``t_j = a 2^{-j}`` towards the asymptotic point.

    At zero ``a`` is half the domain's upper end (or 0.5 when unbounded) and
    the grid stops before ``1e-300``. At infinity the grid is ``a 2^{j}``
    starting from ``max(2 lo, 2)`` and stops before ``1e300``.
    """
    if f.at == "zero":
        a = 0.5 * f.domain_hi if math.isfinite(f.domain_hi) else 0.5
        j = np.arange(n_max)
        t = a * 2.0 ** (-j)
        return t[t > _TINY]
    a = max(2.0 * f.domain_lo, 2.0)
    j = np.arange(n_max)
    t = a * 2.0 ** j
    return t[t < 1e300]


def _log_ratios(f, grid, lam):
    out = np.full(len(grid), np.nan)
    for j, t in enumerate(grid):
        s = lam * t
        if not (f.domain_lo < s <= f.domain_hi):
            continue
        try:
            num, den = f(s), f(t)
        except (ArithmeticError, ValueError):
            continue
        # Subnormal values carry too few digits for a log-ratio.
        if num >= _MIN_NORMAL and den >= _MIN_NORMAL and math.isfinite(num) and math.isfinite(den):
            out[j] = math.log(num) - math.log(den)
    return out


def estimate_rv0_index(f, lambdas=(2.0, 4.0, 8.0), grid=None, n_fit=10,
                       rapid_threshold=50.0):
    """Estimate the index of regular variation of ``f`` at its asymptotic point.

    The log-ratios ``ln f(lambda t) - ln f(t)`` are regressed on ``ln lambda``
    over the last ``n_fit`` usable grid points (those closest to the
    asymptotic point).

    Parameters
    ----------
    f : RegFunc
    lambdas : sequence of float
        Scaling factors, all ``> 1``.
    grid : array_like, optional
        Evaluation points ordered towards the asymptotic point. Defaults to
        :func:`default_grid`.
    n_fit : int
        Number of trailing points used in the regression.
    rapid_threshold : float
        A per-lambda slope exceeding this in magnitude and still growing is
        reported as rapid variation (index ``+inf`` or ``-inf``).

    Returns
    -------
    RVIndex

    Raises
    ------
    InsufficientDataError
        If fewer than 4 usable grid points remain.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas <= 1):
        raise ParameterError("scaling factors must exceed 1")
    grid = default_grid(f) if grid is None else np.asarray(grid, dtype=float)
    # slopes[i, j] estimates the index from lambdas[i] at grid point j.
    slopes = np.vstack([_log_ratios(f, grid, lam) / math.log(lam) for lam in lambdas])
    usable = np.all(np.isfinite(slopes), axis=0)
    cols = np.flatnonzero(usable)
    truncated = len(cols) < len(grid)

    # Rapid variation: slopes large in magnitude and still growing.
    if len(cols) >= 3:
        tail = slopes[:, cols[-5:]] if len(cols) >= 5 else slopes[:, cols]
        mean_tail = tail.mean(axis=0)
        if abs(mean_tail[-1]) > rapid_threshold:
            growing = np.all(np.diff(np.abs(mean_tail)) > 0)
            if growing:
                return RVIndex(math.copysign(math.inf, mean_tail[-1]), 0.0,
                               len(cols), truncated)
    if len(cols) < 4:
        raise InsufficientDataError(
            f"only {len(cols)} usable grid points for index estimation")
    fit = cols[-n_fit:]
    logl = np.log(lambdas)
    y = slopes[:, fit] * logl[:, None]
    x = np.broadcast_to(logl[:, None], y.shape)
    rho = float(np.sum(x * y) / np.sum(x * x))
    resid = float(np.sqrt(np.mean((y - rho * x) ** 2)))
    return RVIndex(rho, resid, len(fit), truncated)


def _numeric_minus_inverse(f, y, tol):
    hi = f.domain_hi
    if not math.isfinite(hi):
        hi = 1.0
        while f(hi) < y:
            hi *= 2.0
            if hi > 1e300:
                return math.inf
        # sup of {f < y} lies below hi now
    elif f(hi) < y:
        return hi
    lo = hi
    while True:
        lo *= 0.5
        if lo < _TINY:
            return 0.0
        if f(lo) < y:
            break
    # Bisection in ln t on the boundary between {f < y} and {f >= y}.
    a, b = math.log(lo), math.log(min(2.0 * lo, hi))
    for _ in range(tol.max_iter):
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        if f(math.exp(m)) < y:
            a = m
        else:
            b = m
        if b - a <= 1e-15:
            break
    return math.exp(a)


def _envelope_minus_inverse(f, y, n=257, levels=40):
    # First crossing of y by the running maximum of f, on refining log grids.
    hi = f.domain_hi if math.isfinite(f.domain_hi) else 1e300
    a, b = math.log(_TINY), math.log(hi)
    if f(math.exp(a)) >= y:
        return 0.0
    for _ in range(levels):
        taus = np.linspace(a, b, n)
        vals = np.array([f(math.exp(t)) for t in taus])
        hit = np.flatnonzero(vals >= y)
        if not len(hit):
            return math.exp(b)
        j = int(hit[0])
        a, b = taus[j - 1], taus[j]
        if b - a <= 1e-15 * max(1.0, abs(a)):
            break
    return math.exp(a)


def minus_inverse(f, y, *, method="auto", tol=Tolerance(max_iter=400)):
    """Generalized inverse ``sup{x in (0, hi] : f(x) < y}`` of a nondecreasing ``f``.

    Parameters
    ----------
    f : RegFunc
        Nondecreasing with ``f(t) -> 0`` as ``t -> 0``. With
        ``monotone="unknown"`` the running maximum of ``f`` is inverted
        instead, which locates the first crossing of ``y``.
    y : float
        Positive level.
    method : {"auto", "closed_form", "bisect"}
        ``auto`` uses ``f.inverse`` when present.

    Returns
    -------
    float
        ``domain_hi`` when ``f < y`` everywhere.
    """
    if not y > 0:
        raise DomainError(f"minus inverse needs y > 0, got {y!r}")
    if f.monotone == "nonincreasing":
        raise ParameterError("minus inverse requires a nondecreasing function")
    if f.monotone == "unknown":
        return _envelope_minus_inverse(f, y)
    if method == "closed_form" or (method == "auto" and f.inverse is not None):
        if f.inverse is None:
            raise UnsupportedError("function has no closed-form inverse")
        return min(f.inverse(y), f.domain_hi)
    if method not in ("auto", "bisect"):
        raise ParameterError(f"unknown method {method!r}")
    return _numeric_minus_inverse(f, y, tol)


def arrow_inverse(f, y, *, tol=Tolerance(max_iter=400)):
    """Generalized inverse ``inf{x >= lo : f(x) > y}`` of a nondecreasing ``f``.

    Parameters
    ----------
    f : RegFunc
        Nondecreasing on ``[domain_lo, inf)`` and unbounded above.
    y : float

    Returns
    -------
    float
        ``domain_lo`` when ``f(lo) > y``.
    """
    lo = f.domain_lo
    if f(lo) > y:
        return lo
    hi = max(2.0 * lo, 1.0) if lo > 0 else 1.0
    while f(hi) <= y:
        lo_known = hi
        hi *= 2.0
        if hi > 1e300:
            raise SingularityError("function stays below the level up to 1e300")
        lo = lo_known
    a, b = lo, hi
    for _ in range(tol.max_iter):
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        if f(m) > y:
            b = m
        else:
            a = m
    return b


@dataclass(frozen=True)
class PotterReport:
    """Outcome of a Potter-bound check.

    ``threshold`` is the point beyond which every grid pair satisfies the
    bound (``None`` if no such threshold exists on the grid). ``violations``
    lists ``(x, y, ratio, bound)`` for pairs beyond the reported or the
    last examined threshold.
    """

    threshold: Optional[float]
    violations: list
    holds: bool


def check_potter(f, rho, A, eps, grid, *, min_span=10.0):
    """Check the Potter inequality on all pairs of a grid.

    Verifies ``f(x)/f(y) <= A max((x/y)^(rho-eps), (x/y)^(rho+eps))`` for all
    grid pairs beyond a threshold ``M`` (``x, y <= M`` at zero, ``x, y >= M``
    at infinity). Candidate thresholds are grid points whose tail spans at
    least a factor ``min_span``, so that the check is never vacuous.

    Returns
    -------
    PotterReport
        With the threshold nearest the asymptotic point's opposite end, i.e.
        the widest tail on which the bound holds.
    """
    if A <= 1 or eps <= 0:
        raise ParameterError("Potter bounds need A > 1 and eps > 0")
    pts = np.sort(np.asarray(grid, dtype=float))
    if f.at == "zero":
        pts = pts[::-1]  # towards zero
    vals = np.array([f(t) for t in pts])
    n = len(pts)

    def violations_from(i):
        out = []
        x, v = pts[i:], vals[i:]
        r = x[:, None] / x[None, :]
        ratio = v[:, None] / v[None, :]
        bound = A * np.maximum(r ** (rho - eps), r ** (rho + eps))
        bad = np.argwhere(ratio > bound * (1 + 1e-12))
        for a, b in bad:
            out.append((float(x[a]), float(x[b]), float(ratio[a, b]), float(bound[a, b])))
        return out

    candidates = [i for i in range(n)
                  if max(pts[i], pts[-1]) / min(pts[i], pts[-1]) >= min_span]
    last = []
    for i in candidates:
        viol = violations_from(i)
        if not viol:
            return PotterReport(float(pts[i]), [], True)
        last = viol
    return PotterReport(None, last, False)


def karamata_ratio(f, sigma, x, tol=Tolerance(abs_tol=0.0, rel_tol=1e-11)):
    """Karamata ratio ``x^(sigma+1) f(x) / int_lo^x t^sigma f(t) dt``.

    For ``f`` regularly varying at infinity with index ``rho`` and
    ``sigma > -rho - 1`` the ratio tends to ``sigma + 1 + rho``. The integral
    is computed in the variable ``ln t``; ``f.domain_lo`` must be positive.
    """
    lo = f.domain_lo
    if not lo > 0:
        raise ParameterError("karamata_ratio needs a positive lower domain end")
    if not x > lo:
        raise DomainError("x must exceed the lower domain end")
    lx = math.log(x)
    # Scale by x^(sigma+1) f(x) inside the integral to stay in range.
    scale = f(x)

    def integrand(tau):
        return math.exp((sigma + 1.0) * (tau - lx)) * f(math.exp(tau)) / scale

    total = integrate(integrand, Bracket(math.log(lo), lx), tol)
    if not total > 0:
        raise SingularityError("non-positive Karamata integral")
    return 1.0 / total


def index_calculus(op, rho1, rho2=None, alpha=None, at="zero"):
    """Index of a combination of regularly varying functions.

    Parameters
    ----------
    op : {"product", "sum", "power", "compose"}
        ``compose`` is ``f1(f2(t))``; at zero this requires ``f2 -> 0``.
    rho1, rho2 : float
        Indices (``+-inf`` allowed).
    alpha : float
        Exponent for ``power``.
    at : {"zero", "infinity"}
        Sums are dominated by the smaller index at zero, the larger at
        infinity.
    """
    def check(v):
        if math.isnan(v):
            raise UnsupportedError(f"index combination {op} is indeterminate")
        return v

    if op == "product":
        return check(rho1 + rho2)
    if op == "sum":
        return min(rho1, rho2) if at == "zero" else max(rho1, rho2)
    if op == "power":
        if alpha is None:
            raise ParameterError("power needs alpha")
        if alpha == 0 or rho1 == 0:
            if math.isinf(rho1) or math.isinf(alpha):
                raise UnsupportedError("0 * inf in power index")
        return check(alpha * rho1)
    if op == "compose":
        if (rho1 == 0 and math.isinf(rho2)) or (rho2 == 0 and math.isinf(rho1)):
            raise UnsupportedError("0 * inf in composition index")
        return check(rho1 * rho2)
    raise ParameterError(f"unknown operation {op!r}")


@dataclass(frozen=True)
class EquivReport:
    """Outcome of an asymptotic-equivalence check.

    ``mu`` estimates ``lim f/g``; ``residual`` is the largest relative
    deviation of ``f/(mu g)`` from 1 over the tail; ``divergent`` flags a
    ratio that tends to 0 or infinity.
    """

    mu: float
    residual: float
    divergent: bool


def check_asymptotic_equiv(f, g, grid=None, *, n_tail=20, slope_tol=0.01, log_slope_tol=0.1):
    """Estimate ``mu = lim f/g`` at the asymptotic point of ``f``.

    The ratio is extrapolated quadratically in ``u = 1/|ln t|`` over the
    tail, which removes the leading slowly varying corrections. Divergence
    is flagged when the slope of ``ln(f/g)`` against ``ln t`` exceeds
    ``slope_tol`` (power-type drift) or its slope against ``ln u`` exceeds
    ``log_slope_tol`` (logarithmic drift such as ``|ln t|^p``).
    """
    grid = default_grid(f) if grid is None else np.asarray(grid, dtype=float)
    ratios, ts = [], []
    for t in grid:
        try:
            a, b = f(t), g(t)
        except (ArithmeticError, ValueError):
            continue
        if a > 0 and b > 0 and math.isfinite(a / b):
            ratios.append(a / b)
            ts.append(t)
    if len(ratios) < 4:
        raise InsufficientDataError("too few points with finite positive ratios")
    r = np.array(ratios[-n_tail:])
    t = np.array(ts[-n_tail:])
    lt = np.log(t)
    slope = np.polyfit(lt, np.log(r), 1)[0]
    if abs(slope) > slope_tol:
        return EquivReport(math.inf if r[-1] > r[0] else 0.0, math.inf, True)
    u = 1.0 / np.abs(lt)
    if np.ptp(u) > 0:
        log_slope = np.polyfit(np.log(u), np.log(r), 1)[0]
        if abs(log_slope) > log_slope_tol:
            return EquivReport(math.inf if log_slope < 0 else 0.0, math.inf, True)
    if np.ptp(u) > 0 and np.ptp(r) > 1e-14 * np.max(r):
        coef = np.polyfit(u, r, 2 if len(r) >= 6 else 1)
        mu = float(coef[-1])
    else:
        mu = float(np.median(r))
    if not mu > 0:
        return EquivReport(mu, math.inf, True)
    resid = float(np.max(np.abs(r / mu - 1.0)))
    return EquivReport(mu, resid, False)
