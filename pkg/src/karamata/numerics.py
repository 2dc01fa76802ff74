"""Scalar numerical building blocks.

Real branches of the Lambert W function, adaptive quadrature with
endpoint-singularity handling and inversion of monotone scalar functions.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _spi

from .errors import (
    AccuracyError,
    BracketError,
    DomainError,
    MonotonicityError,
    ParameterError,
)

__all__ = [
    "Bracket",
    "Tolerance",
    "lambert_w0",
    "lambert_wm1",
    "integrate",
    "invert_monotone",
]

_INV_E = math.exp(-1.0)
_EPS = np.finfo(float).eps
# Inputs this close below -1/e are treated as the branch point itself.
_BRANCH_SLACK = 4 * _EPS


@dataclass(frozen=True)
class Bracket:
    """Closed real interval ``[lo, hi]`` with finite ``lo <= hi``."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ParameterError(f"bracket ends must be finite, got [{self.lo}, {self.hi}]")
        if not (self.lo <= self.hi):
            raise ParameterError(f"bracket requires lo <= hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative tolerance pair and an iteration cap."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0 or self.max_iter < 1:
            raise ParameterError("tolerances must be non-negative and max_iter positive")
        if self.abs_tol + self.rel_tol <= 0:
            raise ParameterError("abs_tol + rel_tol must be positive")


# --------------------------------------------------------------------------
# Lambert W
# --------------------------------------------------------------------------

def _branch_series(x, sign):
    # Expansion about the branch point -1/e in p = sqrt(2(ex + 1)).
    p = sign * math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def _halley(w, x, max_iter=60):
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            break
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 4 * _EPS * max(abs(w), 1e-300):
            break
    return w


def _newton_log(w, log_target, max_iter=60):
    # Solves w + ln|w| = log_target, which is w e^w = x rewritten in logs.
    for _ in range(max_iter):
        g = w + math.log(abs(w)) - log_target
        dw = g / (1.0 + 1.0 / w)
        w -= dw
        if abs(dw) <= 4 * _EPS * abs(w):
            break
    return w


def _bisect_w(x, lo, hi):
    # lo and hi bracket the root of w e^w - x on a monotone piece.
    flo = lo * math.exp(lo) - x
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fmid = mid * math.exp(mid) - x
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _identity_ok(w, x):
    return abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))


def _w0_scalar(x):
    if math.isnan(x):
        return math.nan
    if x < -_INV_E:
        if x >= -_INV_E - _BRANCH_SLACK:
            return -1.0
        raise DomainError(f"W0 is defined on [-1/e, inf), got {x!r}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    if x > 3.0:
        lx = math.log(x)
        llx = math.log(lx)
        w = _newton_log(lx - llx + llx / lx, lx)
    else:
        w0 = _branch_series(x, 1.0) if x < -0.25 else math.log1p(x)
        w = _halley(w0, x)
    if w < -1.0:
        w = -1.0
    if x <= 3.0 and not _identity_ok(w, x):
        hi = max(1.0, math.log1p(abs(x)) + 1.0)
        w = _bisect_w(x, -1.0, hi)
    return w


def _wm1_scalar(x):
    if math.isnan(x):
        return math.nan
    if x < -_INV_E:
        if x >= -_INV_E - _BRANCH_SLACK:
            return -1.0
        raise DomainError(f"W-1 is defined on [-1/e, 0), got {x!r}")
    if x >= 0.0:
        raise DomainError(f"W-1 is defined on [-1/e, 0), got {x!r}")
    if x < -0.25:
        w = _halley(_branch_series(x, -1.0), x)
    else:
        lx = math.log(-x)
        llx = math.log(-lx)
        w = _newton_log(lx - llx + llx / lx, lx)
    if w > -1.0:
        w = -1.0
    if x < -0.25 and not _identity_ok(w, x):
        w = _bisect_w(x, -1.0, -50.0)
    return w


def _apply(core, x):
    if np.ndim(x) == 0:
        return core(float(x))
    arr = np.asarray(x, dtype=float)
    out = np.fromiter((core(v) for v in arr.ravel()), dtype=float, count=arr.size)
    return out.reshape(arr.shape)


def lambert_w0(x):
    """Principal real branch of the Lambert W function.

    Parameters
    ----------
    x : float or array_like
        Arguments in ``[-1/e, inf)``.

    Returns
    -------
    float or ndarray
        ``w >= -1`` with ``w * exp(w) == x`` to about 1e-12 relative accuracy.

    Raises
    ------
    DomainError
        If any argument is below ``-1/e``.

    Notes
    -----
    Halley iteration on ``w e^w - x`` started from the branch-point series
    near ``-1/e`` and from ``log1p(x)`` elsewhere. For ``x > 3`` Newton's method
    is applied to ``w + ln w = ln x``, which cannot overflow.
    """
    return _apply(_w0_scalar, x)


def lambert_wm1(x):
    """Lower real branch ``W_{-1}`` of the Lambert W function.

    Parameters
    ----------
    x : float or array_like
        Arguments in ``[-1/e, 0)``.

    Returns
    -------
    float or ndarray
        ``w <= -1`` with ``w * exp(w) == x``.

    Raises
    ------
    DomainError
        If any argument lies outside ``[-1/e, 0)``.
    """
    return _apply(_wm1_scalar, x)


# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------

def _quad(f, a, b, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = _spi.quad(f, a, b, epsabs=tol.abs_tol, epsrel=tol.rel_tol,
                        limit=tol.max_iter, full_output=1)
    value, err, info = out[0], out[1], out[2]
    ok = len(out) == 3 or not out[3]
    return value, err, ok and math.isfinite(value), info


def integrate(f, bracket, tol=Tolerance()):
    """Adaptive quadrature of a scalar function over a closed interval.

    Parameters
    ----------
    f : callable
        Integrand ``f(t) -> float``. May have an integrable singularity at
        either endpoint.
    bracket : Bracket
        Integration interval.
    tol : Tolerance, optional
        Absolute/relative error targets and the subdivision limit.

    Returns
    -------
    float
        The integral.

    Raises
    ------
    AccuracyError
        If the error estimate exceeds the tolerance; the exception carries
        the best estimate.

    Notes
    -----
    Uses adaptive Gauss-Kronrod (QUADPACK). When ``0 < lo`` and the interval
    spans many decades it is first split geometrically so that behaviour
    near ``lo`` is resolved on its own scale.
    """
    lo, hi = float(bracket.lo), float(bracket.hi)
    if lo == hi:
        return 0.0
    if lo > 0 and hi / lo > 1e3:
        n = int(math.ceil(math.log10(hi / lo)))
        nodes = np.geomspace(lo, hi, n + 1)
        nodes[0], nodes[-1] = lo, hi
    else:
        nodes = np.array([lo, hi])
    total, total_err, failed = 0.0, 0.0, False
    for a, b in zip(nodes[:-1], nodes[1:]):
        value, err, ok, _ = _quad(f, a, b, tol)
        total += value
        total_err += err
        failed |= not ok
    if failed or total_err > max(tol.abs_tol, tol.rel_tol * abs(total)) * 10:
        raise AccuracyError(
            f"quadrature on [{lo}, {hi}] did not reach tolerance", total, total_err)
    return total


# --------------------------------------------------------------------------
# Monotone inversion
# --------------------------------------------------------------------------

def invert_monotone(f, y, bracket, tol=Tolerance(), *, log_scale=False, n_check=9):
    """Solve ``f(x) = y`` for a monotone ``f`` on a bracket.

    Parameters
    ----------
    f : callable
        Monotone scalar function.
    y : float
        Target value.
    bracket : Bracket
        Interval whose endpoint values straddle ``y``.
    tol : Tolerance, optional
        Success when ``|f(x) - y| <= abs_tol + rel_tol * |y|`` or when the
        bracket collapses to adjacent floating-point numbers.
    log_scale : bool, optional
        Search in ``ln x`` (requires ``lo > 0``); preferable when the root
        may be many orders of magnitude smaller than ``hi``.
    n_check : int, optional
        Number of interior points sampled to verify monotonicity.

    Returns
    -------
    float

    Raises
    ------
    BracketError
        If ``f(lo) - y`` and ``f(hi) - y`` have the same strict sign.
    MonotonicityError
        If the interior samples are not ordered consistently.
    AccuracyError
        If ``max_iter`` is exhausted.
    """
    lo, hi = float(bracket.lo), float(bracket.hi)
    if log_scale:
        if lo <= 0:
            raise ParameterError("log_scale requires a positive lower bracket end")
        a, b = math.log(lo), math.log(hi)

        def g(z):
            return f(math.exp(z)) - y

        back = math.exp
    else:
        a, b = lo, hi

        def g(z):
            return f(z) - y

        def back(z):
            return z

    target = tol.abs_tol + tol.rel_tol * abs(y)
    ga, gb = g(a), g(b)
    if abs(ga) <= target:
        return back(a)
    if abs(gb) <= target:
        return back(b)
    if (ga > 0) == (gb > 0):
        raise BracketError(f"f - y has the same sign at both ends of [{lo}, {hi}]")
    increasing = gb > ga
    if n_check:
        zs = np.linspace(a, b, n_check + 2)[1:-1]
        vals = np.array([ga] + [g(z) for z in zs] + [gb])
        d = np.diff(vals) if increasing else -np.diff(vals)
        if np.any(d < -1e-12 * np.max(np.abs(vals))):
            raise MonotonicityError("sampled values are not monotone on the bracket")

    # Illinois-modified regula falsi with a bisection safeguard.
    side = 0
    for _ in range(tol.max_iter):
        z = (a * gb - b * ga) / (gb - ga)
        if not (min(a, b) < z < max(a, b)) or not math.isfinite(z):
            z = 0.5 * (a + b)
        width = abs(b - a)
        gz = g(z)
        if abs(gz) <= target:
            return back(z)
        if (gz > 0) == (ga > 0):
            a, ga = z, gz
            if side == -1:
                gb *= 0.5
            side = -1
        else:
            b, gb = z, gz
            if side == 1:
                ga *= 0.5
            side = 1
        if abs(b - a) > 0.5 * width:
            # Slow progress: force a bisection step.
            m = 0.5 * (a + b)
            gm = g(m)
            if abs(gm) <= target:
                return back(m)
            if (gm > 0) == (ga > 0):
                a, ga = m, gm
            else:
                b, gb = m, gm
            side = 0
        if abs(b - a) <= 2 * _EPS * max(abs(a), abs(b), 1e-300):
            return back(a if abs(ga) < abs(gb) else b)
    best = a if abs(ga) < abs(gb) else b
    raise AccuracyError("invert_monotone exhausted max_iter", back(best), abs(b - a))
