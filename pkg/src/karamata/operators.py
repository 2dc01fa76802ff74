"""Closed convex sets, their projections and fixed-point operators.

Sets are small immutable descriptors with ``project``, ``contains`` and
``distance`` methods. Operators wrap a map together with its averagedness
constant and, when known, a descriptor of its fixed-point set.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ParameterError
from .numerics import lambert_wm1

__all__ = [
    "gamma",
    "gamma_inv",
    "GAMMA_HALF",
    "Affine",
    "Halfspace",
    "CoordinatePlane",
    "ExpCone",
    "ExpConeFace",
    "GammaEpigraph",
    "FlatEpigraph",
    "PowerEpigraph",
    "DRFixRay",
    "Singleton",
    "FixedPointOperator",
    "project",
    "distance_to",
    "projector",
    "dr_operator",
    "average",
    "residual",
    "set_from_dict",
    "line",
]


# --------------------------------------------------------------------------
# The function gamma(x) = exp(2 W_{-1}(-|x|/2)) and its inverse -sqrt(y) ln y
# --------------------------------------------------------------------------

def gamma(x):
    """``exp(2 W_{-1}(-|x|/2))`` on ``[-1/2, 1/2]``, with ``gamma(0) = 0``.

    Even, convex and increasing in ``|x|``; it is the inverse of
    ``y -> -sqrt(y) ln y`` on ``(0, gamma(1/2)]``.
    """
    if np.ndim(x):
        return np.array([gamma(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
    ax = abs(float(x))
    if ax > 0.5:
        # Accept round-off from gamma_inv(gamma(1/2)).
        if ax > 0.5 * (1 + 1e-12):
            raise DomainError(f"gamma is defined on [-1/2, 1/2], got {x!r}")
        ax = 0.5
    if ax < 1e-300:
        # exp(2 W_{-1}(-x/2)) is below e^{-1390} here.
        return 0.0
    return math.exp(2.0 * lambert_wm1(-ax / 2.0))


def gamma_inv(y):
    """``-sqrt(y) ln y`` on ``[0, e^{-2}]``, where it is increasing.

    Restricted to ``[0, gamma(1/2)]`` it inverts :func:`gamma`.
    """
    if np.ndim(y):
        return np.array([gamma_inv(float(v)) for v in np.ravel(y)]).reshape(np.shape(y))
    y = float(y)
    if y < 0 or y > math.exp(-2.0) * (1 + 1e-12):
        raise DomainError(f"gamma_inv is defined on [0, e^-2], got {y!r}")
    return 0.0 if y == 0 else -math.sqrt(y) * math.log(y)


GAMMA_HALF = math.exp(2.0 * lambert_wm1(-0.25))


def _as_point(p):
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise DomainError("points must have finite coordinates")
    return p


# --------------------------------------------------------------------------
# Set descriptors
# --------------------------------------------------------------------------

class _Set:
    kind = "set"

    def contains(self, p, tol=1e-12):
        p = _as_point(p)
        return bool(np.linalg.norm(self.project(p) - p) <= tol * max(1.0, np.linalg.norm(p)))

    def distance(self, p):
        p = _as_point(p)
        return float(np.linalg.norm(p - self.project(p)))

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class Affine(_Set):
    """Affine set ``{x : A x = b}``; ``A`` must have full row rank."""

    A: np.ndarray
    b: np.ndarray
    _pinv: np.ndarray = field(init=False, repr=False)
    kind = "affine"

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise ParameterError("A and b have incompatible shapes")
        if np.linalg.matrix_rank(A) < A.shape[0]:
            raise ParameterError("A must have full row rank")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "_pinv", np.linalg.pinv(A))

    def project(self, p):
        p = _as_point(p)
        return p - self._pinv @ (self.A @ p - self.b)

    def to_dict(self):
        return {"kind": self.kind, "A": self.A.tolist(), "b": self.b.tolist()}


def line(theta):
    """The line through the origin at angle ``theta`` in the plane."""
    return Affine([[-math.sin(theta), math.cos(theta)]], [0.0])


@dataclass(frozen=True, eq=False)
class Halfspace(_Set):
    """Halfspace ``{x : <a, x> <= beta}``."""

    a: np.ndarray
    beta: float
    kind = "halfspace"

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if not np.any(a):
            raise ParameterError("normal vector must be nonzero")
        object.__setattr__(self, "a", a)

    def project(self, p):
        p = _as_point(p)
        excess = self.a @ p - self.beta
        if excess <= 0:
            return p.copy()
        return p - excess / (self.a @ self.a) * self.a

    def to_dict(self):
        return {"kind": self.kind, "a": self.a.tolist(), "beta": self.beta}


@dataclass(frozen=True)
class CoordinatePlane(_Set):
    """``{x : x[axis] = 0}``; in the plane with ``axis=1`` this is the x-axis."""

    axis: int = 1
    kind = "x_axis_plane"

    def project(self, p):
        q = np.array(_as_point(p), dtype=float)
        q[self.axis] = 0.0
        return q

    def distance(self, p):
        return abs(float(p[self.axis]))

    def to_dict(self):
        return {"kind": self.kind, "axis": self.axis}


@dataclass(frozen=True)
class Singleton(_Set):
    """A single point."""

    point: tuple
    kind = "singleton"

    def project(self, p):
        return np.array(self.point, dtype=float)

    def to_dict(self):
        return {"kind": self.kind, "point": list(self.point)}


@dataclass(frozen=True)
class DRFixRay(_Set):
    """The ray ``{(0, mu) : mu >= 0}``."""

    kind = "dr_fix_ray"

    def project(self, p):
        p = _as_point(p)
        return np.array([0.0, max(p[1], 0.0)])

    def distance(self, p):
        return math.hypot(p[0], min(p[1], 0.0))


@dataclass(frozen=True)
class ExpConeFace(_Set):
    """The face ``{x : x1 <= 0, x2 = 0, x3 >= 0}`` of the exponential cone."""

    kind = "exp_face"

    def project(self, p):
        p = _as_point(p)
        return np.array([min(p[0], 0.0), 0.0, max(p[2], 0.0)])


# --------------------------------------------------------------------------
# Exponential cone
# --------------------------------------------------------------------------

def _ray_dir(r):
    # Unit vector along (r, 1, e^r), scaled to avoid overflow for large r.
    if r > 0:
        s = math.exp(-r)
        d = (r * s, s, 1.0)
    else:
        d = (r, 1.0, math.exp(r))
    n = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
    return np.array(d) / n


def _ray_slope(p, r):
    # Sign of d/dr <p, d(r)/|d(r)|>; d(r) and d'(r) are rescaled by e^{-r}
    # for r > 0, which leaves the sign unchanged.
    if r > 0:
        s = math.exp(-r)
        d, dd = (r * s, s, 1.0), (s, 0.0, 1.0)
    else:
        e = math.exp(r)
        d, dd = (r, 1.0, e), (1.0, 0.0, e)
    pd = p[0] * d[0] + p[1] * d[1] + p[2] * d[2]
    pdd = p[0] * dd[0] + p[2] * dd[2]
    nn = d[0] ** 2 + d[1] ** 2 + d[2] ** 2
    ddd = d[0] * dd[0] + d[2] * dd[2]
    return pdd * nn - pd * ddd


_EXP_GRID = np.sinh(np.linspace(-12.0, 12.0, 481))
_EXP_DIRS = np.array([_ray_dir(r) for r in _EXP_GRID])


@dataclass(frozen=True)
class ExpCone(_Set):
    """Exponential cone ``cl{x : x2 > 0, x3 >= x2 exp(x1 / x2)}``.

    The projection of ``p`` is the nearest of three candidates: the nearest
    point on the curved surface ``{(r y, y, y e^r) : y > 0}`` (a global
    maximisation over the ray parameter ``r``), the projection onto the flat
    face ``{x1 <= 0, x2 = 0, x3 >= 0}``, and the origin. Because the boundary
    of the cone is the union of those pieces this is exact up to the
    accuracy of the one-dimensional solve.
    """

    kind = "exp_cone"

    def contains(self, p, tol=0.0):
        x1, x2, x3 = (float(v) for v in p)
        if x2 > 0:
            return x3 > 0 and math.log(x3) >= math.log(x2) + x1 / x2 - tol
        return x2 == 0 and x1 <= 0 and x3 >= 0

    def in_polar(self, p):
        """Membership in the polar cone ``{x1 > 0, -e x3 >= x1 exp(x2 / x1)} U {x1 = 0, x2 <= 0, x3 <= 0}``."""
        x1, x2, x3 = (float(v) for v in p)
        if x1 > 0:
            return x3 < 0 and math.log(-math.e * x3) >= math.log(x1) + x2 / x1
        return x1 == 0 and x2 <= 0 and x3 <= 0

    def project(self, p):
        p = _as_point(p)
        if self.contains(p):
            return p.copy()
        if self.in_polar(p):
            return np.zeros(3)
        candidates = [np.zeros(3), np.array([min(p[0], 0.0), 0.0, max(p[2], 0.0)])]
        surf = self._surface_projection(p)
        if surf is not None:
            candidates.append(surf)
        dists = [np.linalg.norm(p - c) for c in candidates]
        return candidates[int(np.argmin(dists))]

    @staticmethod
    def _surface_projection(p):
        scores = _EXP_DIRS @ p
        i = int(np.argmax(scores))
        if scores[i] <= 0:
            return None
        lo = _EXP_GRID[max(i - 1, 0)]
        hi = _EXP_GRID[min(i + 1, len(_EXP_GRID) - 1)]
        flo, fhi = _ray_slope(p, lo), _ray_slope(p, hi)
        if flo > 0 > fhi:
            r = brentq(lambda r: _ray_slope(p, r), lo, hi, xtol=1e-15, rtol=1e-15)
        else:
            # Maximiser at the end of the parameter grid.
            r = _EXP_GRID[i]
        u = _ray_dir(r)
        t = float(u @ p)
        return t * u if t > 0 else None


# --------------------------------------------------------------------------
# Epigraphs of flat even convex functions with vertical walls
# --------------------------------------------------------------------------

class _EvenEpigraph(_Set):
    """Epigraph of an even convex ``f`` on ``[-x_max, x_max]`` with ``f(0) = 0``.

    Subclasses parametrise the right half of the graph by a monotone
    parameter ``s`` and supply ``point(s) -> (x, f(x))``, ``slope(s) -> f'(x)``,
    ``s_of_x`` and ``level_x(mu)``, the largest ``x`` with ``f(x) <= mu``.
    """

    x_max = 0.5
    s_lo = -1.0

    def contains(self, p, tol=0.0):
        x, mu = abs(float(p[0])), float(p[1])
        if x > self.x_max:
            return False
        return x <= self.level_x(mu) + tol

    def project(self, p):
        p = _as_point(p)
        px, pmu = float(p[0]), float(p[1])
        sign = -1.0 if px < 0 else 1.0
        ax = abs(px)
        if self.contains((ax, pmu)):
            return p.copy()
        top = self.f_max
        if ax > self.x_max and pmu >= top:
            return np.array([sign * self.x_max, pmu])
        if ax < 1e-300:
            return np.array([0.0, 0.0])
        x_hi = min(ax, self.x_max)
        s_hi = self.s_of_x(x_hi)

        def stationarity(s):
            x, fx = self.point(s)
            return (x - ax) + (fx - pmu) * self.slope(s)

        if stationarity(s_hi) <= 0:
            s = s_hi
        else:
            s_lo = self.s_lo
            if stationarity(s_lo) >= 0:
                return np.array([sign * self.point(s_lo)[0], self.point(s_lo)[1]])
            s = brentq(stationarity, s_lo, s_hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        x, fx = self.point(s)
        return np.array([sign * x, fx])


@dataclass(frozen=True)
class GammaEpigraph(_EvenEpigraph):
    """``{(x, mu) : |x| <= 1/2, gamma(x) <= mu}``.

    The graph is parametrised by ``s = ln mu``: ``x = -s e^{s/2}``, which
    keeps the projection free of Lambert W evaluations and of underflow.
    """

    kind = "gamma_epigraph"
    x_max = 0.5
    s_lo = -1400.0

    @property
    def f_max(self):
        return GAMMA_HALF

    @staticmethod
    def point(s):
        e = math.exp(0.5 * s)
        return -s * e, e * e

    @staticmethod
    def slope(s):
        return -math.exp(0.5 * s) / (1.0 + 0.5 * s)

    @staticmethod
    def s_of_x(x):
        return 2.0 * lambert_wm1(-x / 2.0) if x > 0 else -math.inf

    def level_x(self, mu):
        if mu <= 0:
            return 0.0 if mu == 0 else -1.0
        if mu >= GAMMA_HALF:
            return self.x_max
        return -math.sqrt(mu) * math.log(mu)


@dataclass(frozen=True)
class FlatEpigraph(_EvenEpigraph):
    """``{(x, mu) : |x| <= x_max, exp(-|x|^{-q}) <= mu}`` with ``q = 1/gamma``.

    The function is convex for ``|x| <= (q/(q+1))^{1/q}``, which is the
    default ``x_max``. Its distance to the x-axis gives a logarithmic error
    bound ``dist <= (-1/ln d)^gamma`` near the origin.
    """

    gamma_log: float = 1.0
    kind = "flat_epigraph"

    @property
    def q(self):
        return 1.0 / self.gamma_log

    @property
    def x_max(self):
        q = self.q
        return (q / (q + 1.0)) ** (1.0 / q)

    @property
    def f_max(self):
        return math.exp(-self.x_max ** -self.q)

    @property
    def s_lo(self):
        return 1e-6 * self.x_max

    def point(self, x):
        return x, (math.exp(-x ** -self.q) if x > 0 else 0.0)

    def slope(self, x):
        if x <= 0:
            return 0.0
        z = x ** -self.q
        return self.q * z / x * math.exp(-z) if z < 745 else 0.0

    def s_of_x(self, x):
        return x

    def level_x(self, mu):
        if mu <= 0:
            return 0.0 if mu == 0 else -1.0
        if mu >= self.f_max:
            return self.x_max
        return (-math.log(mu)) ** -self.gamma_log

    def to_dict(self):
        return {"kind": self.kind, "gamma_log": self.gamma_log}


@dataclass(frozen=True)
class PowerEpigraph(_EvenEpigraph):
    """``{(x, mu) : |x| <= x_max, |x|^p <= mu}`` with ``p = 1/gamma >= 1``."""

    gamma_holder: float = 0.5
    x_max: float = 1.0
    kind = "power_epigraph"

    @property
    def p(self):
        return 1.0 / self.gamma_holder

    @property
    def f_max(self):
        return self.x_max ** self.p

    s_lo = 0.0

    def point(self, x):
        return x, x ** self.p

    def slope(self, x):
        return self.p * x ** (self.p - 1.0)

    def s_of_x(self, x):
        return x

    def level_x(self, mu):
        if mu < 0:
            return -1.0
        return min(mu ** self.gamma_holder, self.x_max)

    def to_dict(self):
        return {"kind": self.kind, "gamma_holder": self.gamma_holder, "x_max": self.x_max}


# --------------------------------------------------------------------------
# Operators
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedPointOperator:
    """An ``alpha``-averaged map with an optional fixed-set descriptor."""

    apply: Callable[[np.ndarray], np.ndarray]
    alpha: float = 0.5
    fix_set: Optional[_Set] = None
    name: str = ""

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterError("alpha must lie in (0, 1)")

    def __call__(self, x):
        return self.apply(x)


def project(set_, p):
    """Euclidean projection of ``p`` onto ``set_``."""
    return set_.project(p)


def distance_to(set_, x):
    """Euclidean distance from ``x`` to ``set_``."""
    return set_.distance(x)


def projector(set_, name=None):
    """The projection onto ``set_`` as a 1/2-averaged operator."""
    return FixedPointOperator(set_.project, 0.5, set_, name or set_.kind)


def dr_operator(PA, PB, fix_set=None):
    """Douglas-Rachford operator ``w + PB(2 PA(w) - w) - PA(w)``.

    Parameters
    ----------
    PA, PB : callable or FixedPointOperator
        Projections; ``PA`` is applied first.
    fix_set : set descriptor, optional
        Known fixed-point set of the composite map.
    """
    def apply(w):
        w = np.asarray(w, dtype=float)
        a = PA(w)
        return w + PB(2.0 * a - w) - a

    return FixedPointOperator(apply, 0.5, fix_set, "douglas_rachford")


def average(ops, weights):
    """Weighted average ``x -> sum_i w_i T_i(x)`` with ``w >= 0``, ``sum w = 1``."""
    w = np.asarray(weights, dtype=float)
    if len(w) != len(ops) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ParameterError("weights must be non-negative, sum to 1 and match ops")

    def apply(x):
        x = np.asarray(x, dtype=float)
        return sum(wi * op(x) for wi, op in zip(w, ops) if wi > 0)

    alpha = max(op.alpha for op, wi in zip(ops, w) if wi > 0)
    return FixedPointOperator(apply, alpha, None, "average")


def residual(x, ops):
    """Largest fixed-point residual ``max_i |x - T_i x|``."""
    x = np.asarray(x, dtype=float)
    return max(float(np.linalg.norm(x - op(x))) for op in ops)


_KINDS = {
    "affine": lambda d: Affine(d["A"], d["b"]),
    "line": lambda d: line(float(d["theta"])),
    "halfspace": lambda d: Halfspace(d["a"], float(d["beta"])),
    "exp_cone": lambda d: ExpCone(),
    "exp_face": lambda d: ExpConeFace(),
    "gamma_epigraph": lambda d: GammaEpigraph(),
    "flat_epigraph": lambda d: FlatEpigraph(float(d.get("gamma_log", 1.0))),
    "power_epigraph": lambda d: PowerEpigraph(float(d.get("gamma_holder", 0.5)),
                                              float(d.get("x_max", 1.0))),
    "x_axis_plane": lambda d: CoordinatePlane(int(d.get("axis", 1))),
    "dr_fix_ray": lambda d: DRFixRay(),
    "singleton": lambda d: Singleton(tuple(float(v) for v in d["point"])),
}


def set_from_dict(d):
    """Build a set descriptor from ``{"kind": ..., **params}``."""
    if isinstance(d, str):
        d = {"kind": d}
    try:
        return _KINDS[d["kind"]](d)
    except KeyError as exc:
        raise ParameterError(f"unknown or incomplete set descriptor {d!r}") from exc
