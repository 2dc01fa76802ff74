"""Convergence-rate bounds built from a regularity function.

Given a gauge ``psi_B`` bounding the distance to the common fixed-point set
by the largest fixed-point residual, the bound for an ``alpha``-averaged
quasi-cyclic iteration is

    phi(u)    = psi_B(sqrt(c u))**2,     c = 2 alpha (1 + 4 nu s) / (nu (1 - alpha))
    Phi(u)    = int_u^delta dt / phi^-(t)
    R(k)      = sqrt(Phi^{-1}(Phi(d0^2) + floor(k / s)))

This module evaluates ``Phi`` and its inverse numerically, classifies the
resulting rate by the index of regular variation of ``phi`` and provides the
closed-form asymptotic profiles used to compare against.
"""

import bisect
import math
import threading
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import (
    DomainError,
    ParameterError,
    SingularityError,
    UnderflowError,
)
from .numerics import Bracket, Tolerance, integrate, lambert_w0, lambert_wm1
from .regvar import RegFunc, RVIndex, estimate_rv0_index, minus_inverse

__all__ = [
    "PhiSpec",
    "RateClass",
    "RateProfile",
    "PhiIntegral",
    "RateBound",
    "phi_constant",
    "build_phi",
    "phi_big",
    "invert_phi_big",
    "rate_bound",
    "classify_rate",
    "g_function",
    "g_hat",
    "asymptotic_profile",
    "compose_psi",
    "UNDERFLOW_FLOOR",
    "holder_psi",
    "holder_entropic_psi",
    "entropic_psi",
    "logarithmic_psi",
    "linear_psi",
    "default_delta",
]

UNDERFLOW_FLOOR = 1e-300
_LOG_FLOOR = math.log(UNDERFLOW_FLOOR)
_QUAD_TOL = Tolerance(abs_tol=0.0, rel_tol=1e-12, max_iter=200)


def phi_constant(alpha, nu, s):
    """Scaling constant ``c = 2 alpha (1 + 4 nu s) / (nu (1 - alpha))``."""
    if not 0 < alpha < 1:
        raise ParameterError(f"averagedness alpha must lie in (0, 1), got {alpha}")
    if not 0 < nu <= 1:
        raise ParameterError(f"nu must lie in (0, 1], got {nu}")
    if s < 1 or int(s) != s:
        raise ParameterError(f"s must be a positive integer, got {s}")
    return 2.0 * alpha * (1.0 + 4.0 * nu * s) / (nu * (1.0 - alpha))


@dataclass(frozen=True)
class PhiSpec:
    """Ingredients of the rate bound.

    Parameters
    ----------
    psi_B : RegFunc
        Nondecreasing gauge with ``psi_B(0+) = 0``.
    alpha : float
        Averagedness constant of the operators, in ``(0, 1)``.
    nu : float
        Lower bound on the positive weights, in ``(0, 1]``.
    s : int
        Covering window of the weight schedule.
    a_hat : float
        Right end of the domain of ``phi``; must exceed the initial squared
        distance.
    delta : float, optional
        Upper limit of the rate integral. Defaults to ``min(a_hat, phi(a_hat))``.
    """

    psi_B: RegFunc
    alpha: float = 0.5
    nu: float = 1.0
    s: int = 2
    a_hat: float = 1.0
    delta: Optional[float] = None

    def __post_init__(self):
        phi_constant(self.alpha, self.nu, self.s)
        if not self.a_hat > 0:
            raise ParameterError("a_hat must be positive")
        if self.delta is not None and not self.delta > 0:
            raise ParameterError("delta must be positive")

    @property
    def c(self):
        return phi_constant(self.alpha, self.nu, self.s)


def build_phi(spec):
    """Construct ``phi(u) = psi_B(sqrt(c u))**2`` restricted to ``(0, a_hat]``.

    When ``psi_B`` carries a closed-form minus inverse, ``phi`` gets one too:
    ``phi^-(t) = min(psi_B^-(sqrt t)**2 / c, a_hat)``.
    """
    psi, c, a_hat = spec.psi_B, spec.c, spec.a_hat
    if psi.monotone != "nondecreasing":
        raise ParameterError("psi_B must be nondecreasing")

    def phi(u):
        return psi(math.sqrt(c * u)) ** 2

    inverse = None
    if psi.inverse is not None:
        def inverse(t):
            return min(psi.inverse(math.sqrt(t)) ** 2 / c, a_hat)

    name = f"phi[{psi.name}]" if psi.name else "phi"
    return RegFunc(phi, 0.0, a_hat, "nondecreasing", "zero", psi.index, inverse, name)


def default_delta(phi):
    """``min(a_hat, phi(a_hat))``, the default upper limit of the rate integral."""
    return min(phi.domain_hi, phi(phi.domain_hi))


class PhiIntegral:
    """The decreasing function ``Phi(u) = int_u^delta dt / phi^-(t)`` and its inverse.

    Values are computed in the variable ``tau = ln t``. A table of ``Phi`` at
    the nodes ``ln delta - j`` is extended on demand and reused to bracket
    inversions; the final step is a safeguarded Newton iteration using
    ``dPhi/d ln u = -u / phi^-(u)``.

    Parameters
    ----------
    phi : RegFunc
        Nondecreasing, ``phi(0+) = 0``.
    delta : float, optional
        Defaults to :func:`default_delta`.
    step : float
        Node spacing in ``ln u``.
    """

    def __init__(self, phi, delta=None, step=1.0):
        self.phi = phi
        self.delta = default_delta(phi) if delta is None else float(delta)
        if not self.delta > 0:
            raise ParameterError("delta must be positive")
        self.step = step
        self._ltop = math.log(self.delta)
        # _taus descending, _cum ascending (Phi at the nodes).
        self._taus = [self._ltop]
        self._cum = [0.0]
        self._exhausted = False
        # The node table grows lazily; the lock makes sharing across threads safe.
        self._lock = threading.RLock()

    def integrand(self, tau):
        """``e^tau / phi^-(e^tau)``, the integrand in log variable."""
        t = math.exp(tau)
        inv = minus_inverse(self.phi, t)
        if not inv > 0:
            raise SingularityError(f"phi^- vanishes at t = {t!r}")
        val = t / inv
        if not math.isfinite(val):
            raise SingularityError(f"rate integrand overflows at t = {t!r}")
        return val

    def _segment(self, tau_lo, tau_hi):
        return integrate(self.integrand, Bracket(tau_lo, tau_hi), _QUAD_TOL)

    def _extend(self):
        if self._exhausted:
            return False
        tau_hi = self._taus[-1]
        tau_lo = tau_hi - self.step
        if tau_lo < _LOG_FLOOR:
            self._exhausted = True
            return False
        try:
            seg = self._segment(tau_lo, tau_hi)
        except SingularityError:
            self._exhausted = True
            return False
        total = self._cum[-1] + seg
        if not math.isfinite(total):
            self._exhausted = True
            return False
        self._taus.append(tau_lo)
        self._cum.append(total)
        return True

    def value(self, u):
        """``Phi(u)``; negative for ``u > delta``."""
        with self._lock:
            return self._value(u)

    def _value(self, u):
        if not u > 0:
            raise DomainError("Phi is defined for u > 0")
        tau = math.log(u)
        if tau >= self._ltop:
            return -self._segment(self._ltop, tau) if tau > self._ltop else 0.0
        while self._taus[-1] > tau:
            if not self._extend():
                return self._cum[-1] + self._segment(tau, self._taus[-1])
        j = self._node_above(tau)
        return self._cum[j] + self._segment(tau, self._taus[j])

    __call__ = value

    def _node_above(self, tau):
        # Index j of the node with taus[j] >= tau > taus[j + 1].
        neg = [-t for t in self._taus]
        return max(bisect.bisect_right(neg, -tau) - 1, 0)

    def inverse(self, y):
        """Solve ``Phi(u) = y`` for ``u``.

        Raises
        ------
        UnderflowError
            If the solution lies below ``1e-300``; ``bracket`` holds the
            last valid bracket in ``ln u``.
        """
        with self._lock:
            return self._inverse(y)

    def _inverse(self, y):
        if y <= 0:
            return self._inverse_above(y)
        while self._cum[-1] < y:
            if not self._extend():
                if self._taus[-1] - self.step < _LOG_FLOOR:
                    raise UnderflowError(
                        f"Phi^-1({y!r}) lies below {UNDERFLOW_FLOOR}",
                        (-math.inf, self._taus[-1]))
                raise SingularityError(f"Phi cannot be extended to reach {y!r}")
        j = bisect.bisect_left(self._cum, y)
        if self._cum[j] == y:
            return math.exp(self._taus[j])
        # Phi(taus[j-1]) < y < Phi(taus[j]); solve within that segment.
        hi_tau, base = self._taus[j - 1], self._cum[j - 1]
        lo_tau = self._taus[j]
        return math.exp(self._solve(lambda tau: base + self._segment(tau, hi_tau) - y,
                                    lo_tau, hi_tau))

    def _inverse_above(self, y):
        if y == 0:
            return self.delta
        hi_tau = self._ltop + 1.0
        while -self._segment(self._ltop, hi_tau) > y:
            hi_tau += 1.0
            if hi_tau > math.log(self.phi.domain_hi) + 60:
                raise DomainError(f"Phi does not reach {y!r} on its domain")
        return math.exp(self._solve(lambda tau: -self._segment(self._ltop, tau) - y,
                                    hi_tau - 1.0, hi_tau))

    def _solve(self, fn, lo, hi):
        # fn is decreasing in tau with fn(lo) >= 0 >= fn(hi); derivative -integrand.
        tau = 0.5 * (lo + hi)
        for _ in range(100):
            val = fn(tau)
            if val > 0:
                lo = tau
            else:
                hi = tau
            if val == 0 or hi - lo <= 1e-15 * max(1.0, abs(tau)):
                return tau
            d = self.integrand(tau)
            new = tau + val / d
            if not lo < new < hi:
                new = 0.5 * (lo + hi)
            if abs(new - tau) <= 1e-14 * max(1.0, abs(tau)):
                return new
            tau = new
        return tau


def phi_big(phi, delta, u):
    """``Phi(u) = int_u^delta dt / phi^-(t)`` (oriented; negative for ``u > delta``)."""
    return PhiIntegral(phi, delta).value(u)


def invert_phi_big(phi, delta, y):
    """The ``u`` with ``Phi(u) = y``."""
    return PhiIntegral(phi, delta).inverse(y)


class RateBound:
    """The bound ``R(k) = sqrt(Phi^{-1}(Phi(d0^2) + floor(k / s)))``.

    Parameters
    ----------
    phi : RegFunc
    d0_sq : float
        Squared initial distance to the fixed-point set.
    s : int
        Covering window.
    delta : float, optional

    Notes
    -----
    Evaluations are memoised per window index ``floor(k / s)``.
    """

    def __init__(self, phi, d0_sq, s, delta=None):
        if not 0 < d0_sq <= phi.domain_hi:
            raise DomainError("d0_sq must lie in (0, a_hat]")
        self.phi = phi
        self.d0_sq = float(d0_sq)
        self.s = int(s)
        self.integral = PhiIntegral(phi, delta)
        self.phi_d0 = self.integral.value(self.d0_sq)
        self._memo = {0: math.sqrt(self.d0_sq)}

    @classmethod
    def from_spec(cls, spec, d0_sq):
        """Build from a :class:`PhiSpec`, enlarging ``a_hat`` to ``2 d0_sq`` if needed."""
        if d0_sq >= spec.a_hat:
            spec = replace(spec, a_hat=2.0 * d0_sq)
        return cls(build_phi(spec), d0_sq, spec.s, spec.delta)

    def __call__(self, k):
        if np.ndim(k):
            return np.array([self(int(v)) for v in np.ravel(k)]).reshape(np.shape(k))
        if k < 0:
            raise DomainError("k must be non-negative")
        m = int(k) // self.s
        if m not in self._memo:
            self._memo[m] = math.sqrt(self.integral.inverse(self.phi_d0 + m))
        return self._memo[m]

    def log_slope(self, k, rel=0.05):
        """Local slope ``d ln R / d ln k`` by a centred difference in ``ln k``."""
        k1, k2 = int(k * (1 - rel)), int(k * (1 + rel))
        return (math.log(self(k2)) - math.log(self(k1))) / (math.log(k2) - math.log(k1))


def rate_bound(spec, d0_sq, k):
    """Convergence-rate bound ``R(k)`` for the iteration described by ``spec``."""
    return RateBound.from_spec(spec, d0_sq)(k)


@dataclass(frozen=True)
class RateClass:
    """Rate regime implied by the index ``rho`` of ``phi``.

    ``phi_index`` and ``inverse_index`` are the indices of ``Phi`` (at zero)
    and of ``Phi^{-1}`` (at infinity). ``exponent`` is the supremum of the
    exponents ``r`` for which ``sqrt(Phi^{-1}(k)) = o(k^{-r})`` fails to be
    excluded, i.e. every ``r < exponent`` gives a valid o-bound.
    """

    regime: str
    phi_index: float
    inverse_index: float
    exponent: float


def classify_rate(rho, linear_floor=False):
    """Classify the convergence regime from the index ``rho`` in ``[0, 1]``.

    Parameters
    ----------
    rho : RVIndex or float
    linear_floor : bool
        Whether ``phi(t) >= c t`` near zero, needed for the almost-linear case.
    """
    r = rho.value if isinstance(rho, RVIndex) else float(rho)
    if not 0 <= r <= 1:
        raise ParameterError(f"index must lie in [0, 1], got {r}")
    if r == 0:
        return RateClass("sub_polynomial", -math.inf, 0.0, 0.0)
    if r == 1:
        if linear_floor:
            return RateClass("almost_linear", 0.0, -math.inf, math.inf)
        return RateClass("unclassified", 0.0, math.nan, math.nan)
    return RateClass("sublinear", 1.0 - 1.0 / r, r / (r - 1.0), -r / (2.0 * (r - 1.0)))


def g_function(phi, s):
    """``g(s) = 1 / (s phi^-(1/s))``."""
    if not s > 0:
        raise DomainError("s must be positive")
    return 1.0 / (s * minus_inverse(phi, 1.0 / s))


def g_hat(phi, s, alpha=1.0):
    """Shifted ``s**alpha * g(s)`` used for sub-polynomial gauges."""
    return s ** alpha * g_function(phi, s)


@dataclass(frozen=True)
class RateProfile:
    """A closed-form asymptotic rate ``k -> eval(k)``."""

    name: str
    eval: Callable
    regime: str

    def __call__(self, k):
        return self.eval(k)


def _vec(fn):
    def wrapped(k):
        if np.ndim(k):
            return np.array([fn(float(v)) for v in np.ravel(k)]).reshape(np.shape(k))
        return fn(float(k))
    return wrapped


def asymptotic_profile(case, **params):
    """Closed-form asymptotic rate profiles.

    Parameters
    ----------
    case : {"holder", "holder_entropic", "entropic_envelope", "logarithmic", "linear"}
    params
        ``gamma`` for ``holder``; ``c`` for ``entropic_envelope``;
        ``gamma`` for ``logarithmic``; ``rate`` for ``linear``.

    Returns
    -------
    RateProfile
        ``holder``: ``k^{-gamma/(2(1-gamma))}``, or the linear profile when
        ``gamma == 1``. ``holder_entropic``: ``W0(sqrt k)**2 / sqrt k``.
        ``entropic_envelope``: ``sqrt(k) c^{-sqrt k}``.
        ``logarithmic``: ``(1/ln k)^gamma``, held at 1 for ``k < e``. ``linear``: ``rate**k``.
    """
    if case == "holder":
        g = float(params.get("gamma", 0.5))
        if not 0 < g <= 1:
            raise ParameterError("holder exponent must lie in (0, 1]")
        if g == 1:
            return asymptotic_profile("linear", rate=params.get("rate", 0.5))
        e = g / (2.0 * (1.0 - g))
        return RateProfile(f"holder({g})", _vec(lambda k: k ** -e), f"sublinear({e})")
    if case == "linear":
        q = float(params.get("rate", 0.5))
        if not 0 < q < 1:
            raise ParameterError("linear rate must lie in (0, 1)")
        return RateProfile(f"linear({q})", _vec(lambda k: q ** k), "linear")
    if case == "holder_entropic":
        def he(k):
            r = math.sqrt(k)
            return lambert_w0(r) ** 2 / r
        return RateProfile("holder_entropic", _vec(he), "sublinear(0.5)")
    if case == "entropic_envelope":
        c = float(params.get("c", math.e))
        if not c > 1:
            raise ParameterError("envelope base c must exceed 1")
        lc = math.log(c)

        def env(k):
            r = math.sqrt(k)
            return math.exp(0.5 * math.log(k) - r * lc) if k > 0 else 0.0
        return RateProfile(f"entropic_envelope({c})", _vec(env), "almost_linear")
    if case == "logarithmic":
        g = float(params.get("gamma", 1.0))
        if not g > 0:
            raise ParameterError("logarithmic exponent must be positive")
        return RateProfile(f"logarithmic({g})", _vec(lambda k: math.log(max(k, math.e)) ** -g),
                           "sub_polynomial")
    raise ParameterError(f"unknown profile {case!r}")


def compose_psi(theta, gammas):
    """Compose a gauge ``psi(t) = theta(sum_i gamma_i(t))``.

    The index metadata is ``theta.index * min_i gamma_i.index``; indices
    missing from the metadata are estimated numerically.
    """
    gammas = list(gammas)
    if not gammas:
        raise ParameterError("at least one inner function is required")

    def index_of(f):
        return f.index if f.index is not None else estimate_rv0_index(f).value

    rho = index_of(theta) * min(index_of(g) for g in gammas)

    def psi(t):
        return theta(sum(g(t) for g in gammas))

    hi = min(g.domain_hi for g in gammas)
    return RegFunc(psi, 0.0, hi, "nondecreasing", "zero", rho, None,
                   f"{theta.name}o({'+'.join(g.name for g in gammas)})")


# ---------------------------------------------------------------------------
# Gauge catalogue
# ---------------------------------------------------------------------------

def holder_psi(kappa, gamma):
    """``psi(t) = kappa t^gamma`` with its closed-form inverse."""
    return RegFunc(lambda t: kappa * t ** gamma, 0.0, math.inf, index=gamma,
                   inverse=lambda y: (y / kappa) ** (1.0 / gamma),
                   name=f"{kappa}*t^{gamma}")


def holder_entropic_psi(kappa, c, r):
    """Three-piece gauge: ``-kappa sqrt(t) ln t`` on ``(0, c]``, then constant.

    The constant is ``max(r, -kappa sqrt(c) ln c)``; ``c`` must lie in
    ``(0, e^{-2})`` so that the first piece is increasing.
    """
    if not 0 < c < math.exp(-2):
        raise ParameterError("c must lie in (0, e^-2)")
    top = max(r, -kappa * math.sqrt(c) * math.log(c))
    edge = -kappa * math.sqrt(c) * math.log(c)

    def psi(t):
        if t <= 0:
            return 0.0
        if t <= c:
            return -kappa * math.sqrt(t) * math.log(t)
        return top

    def inverse(y):
        if y <= edge:
            # -kappa sqrt(t) ln t = y  <=>  t = exp(2 W_{-1}(-y / (2 kappa)))
            return math.exp(2.0 * lambert_wm1(-y / (2.0 * kappa)))
        if y <= top:
            return c
        return math.inf

    return RegFunc(psi, 0.0, math.inf, index=0.5, inverse=inverse,
                   name=f"holder_entropic({kappa},{c})")


def entropic_psi(kappa, c=math.exp(-1)):
    """``psi(t) = -kappa t ln t`` on ``(0, c]`` with ``c <= 1/e``, constant after."""
    if not 0 < c <= math.exp(-1):
        raise ParameterError("c must lie in (0, 1/e]")
    edge = -kappa * c * math.log(c)

    def psi(t):
        if t <= 0:
            return 0.0
        return -kappa * t * math.log(t) if t <= c else edge

    def inverse(y):
        if y < edge:
            # -kappa t ln t = y  <=>  t = exp(W_{-1}(-y / kappa))
            return math.exp(lambert_wm1(-y / kappa))
        return math.inf

    return RegFunc(psi, 0.0, math.inf, index=1.0, inverse=inverse,
                   name=f"entropic({kappa})")


def logarithmic_psi(kappa, gamma, c=0.5):
    """``psi(t) = kappa (-1/ln t)^gamma`` on ``(0, c]`` with ``c < 1``, constant after."""
    if not 0 < c < 1:
        raise ParameterError("c must lie in (0, 1)")
    edge = kappa * (-1.0 / math.log(c)) ** gamma

    def psi(t):
        if t <= 0:
            return 0.0
        return kappa * (-1.0 / math.log(t)) ** gamma if t <= c else edge

    def inverse(y):
        if y < edge:
            z = (kappa / y) ** (1.0 / gamma)
            return math.exp(-z) if z < 745 else 0.0
        return math.inf

    return RegFunc(psi, 0.0, math.inf, index=0.0, inverse=inverse,
                   name=f"logarithmic({kappa},{gamma})")


def linear_psi(kappa):
    """``psi(t) = kappa t``."""
    return holder_psi(kappa, 1.0)
