"""Quasi-cyclic fixed-point iterations, Fejer audits and empirical gauges."""

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import qmc

from .errors import ParameterError
from .operators import residual as _residual

__all__ = [
    "QuasiCyclicSchedule",
    "StopCriteria",
    "IterationTrace",
    "FejerReport",
    "EmpiricalGauge",
    "ap_schedule",
    "dr_schedule",
    "parallel_schedule",
    "run",
    "audit_fejer",
    "estimate_empirical_psi",
]


@dataclass(frozen=True)
class QuasiCyclicSchedule:
    """Weights ``w^k`` for the update ``x^{k+1} = sum_i w_i^k T_i(x^k)``.

    ``nu`` is a lower bound on every positive weight and every ``s``
    consecutive steps give each operator a positive weight at least once.
    """

    m: int
    weights_at: Callable[[int], np.ndarray]
    nu: float
    s: int

    def validate(self, n_steps=None):
        """Check normalisation, ``nu`` and the covering window over ``n_steps``."""
        n_steps = n_steps or 4 * self.s
        seen = []
        for k in range(n_steps):
            w = np.asarray(self.weights_at(k), dtype=float)
            if w.shape != (self.m,) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
                raise ParameterError(f"invalid weights at step {k}: {w}")
            pos = w[w > 0]
            if pos.min() < self.nu - 1e-15:
                raise ParameterError(f"weight below nu at step {k}")
            seen.append(w > 0)
        seen = np.array(seen)
        for k in range(n_steps - self.s + 1):
            if not np.all(seen[k:k + self.s].any(axis=0)):
                raise ParameterError(f"window starting at {k} misses an operator")
        return True


def ap_schedule(m=2):
    """Cyclic projections: step ``k`` applies operator ``k mod m`` alone."""
    eye = np.eye(m)
    return QuasiCyclicSchedule(m, lambda k: eye[k % m], 1.0, m)


def dr_schedule():
    """A single operator applied at every step."""
    one = np.ones(1)
    return QuasiCyclicSchedule(1, lambda k: one, 1.0, 1)


def parallel_schedule(m, weights):
    """Fixed averaging weights at every step."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (m,) or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
        raise ParameterError("parallel weights must be positive and sum to 1")
    return QuasiCyclicSchedule(m, lambda k: w, float(w.min()), 1)


@dataclass(frozen=True)
class StopCriteria:
    """Stop after ``max_iter`` steps or once the residual drops to ``residual_tol``."""

    max_iter: int = 1_000_000
    residual_tol: float = 1e-12
    dist_tol: float = 0.0


@dataclass
class IterationTrace:
    """Recorded iterates.

    All iterations below ``dense_until`` are stored; beyond that only
    ``k = floor(1.05^j)`` and the final iterate. ``dist`` is NaN when no
    target set was supplied.
    """

    k: np.ndarray
    points: np.ndarray
    residual: np.ndarray
    dist: np.ndarray
    stop_reason: str
    wallclock: float
    nu: float = 1.0
    s: int = 1

    def __len__(self):
        return len(self.k)


def _sparse_ks(limit):
    ks, j = set(), 0
    while True:
        k = int(math.floor(1.05 ** j))
        if k > limit:
            return ks
        ks.add(k)
        j += 1


def run(ops, schedule, x0, stop=StopCriteria(), target=None, dense_until=100_000):
    """Iterate ``x^{k+1} = sum_i w_i^k T_i(x^k)``.

    Parameters
    ----------
    ops : sequence of FixedPointOperator
    schedule : QuasiCyclicSchedule
    x0 : array_like
    stop : StopCriteria
    target : set descriptor, optional
        The common fixed-point set, used for the recorded distances.
    dense_until : int
        Iterations recorded without thinning.

    Returns
    -------
    IterationTrace
        Row ``k`` holds ``x^k``, ``max_i |x^k - T_i x^k|`` and
        ``dist(x^k, target)``.
    """
    if len(ops) != schedule.m:
        raise ParameterError("number of operators does not match the schedule")
    x = np.asarray(x0, dtype=float).copy()
    sparse = _sparse_ks(stop.max_iter) if stop.max_iter > dense_until else set()
    rec_k, rec_x, rec_r, rec_d = [], [], [], []
    t0 = time.perf_counter()
    reason = "max_iter"
    k = 0
    while True:
        images = [op(x) for op in ops]
        res = max(float(np.linalg.norm(x - y)) for y in images)
        dist = target.distance(x) if target is not None else math.nan
        if not (math.isfinite(res) and np.all(np.isfinite(x))):
            reason = "numeric_failure"
            break
        last = (k >= stop.max_iter or res <= stop.residual_tol
                or (target is not None and dist <= stop.dist_tol))
        if k < dense_until or k in sparse or last:
            rec_k.append(k)
            rec_x.append(x.copy())
            rec_r.append(res)
            rec_d.append(dist)
        if last:
            if res <= stop.residual_tol:
                reason = "residual_tol"
            elif target is not None and dist <= stop.dist_tol:
                reason = "dist_tol"
            break
        w = schedule.weights_at(k)
        x = sum(wi * y for wi, y in zip(w, images) if wi > 0)
        k += 1
    return IterationTrace(np.array(rec_k), np.array(rec_x), np.array(rec_r),
                          np.array(rec_d), reason, time.perf_counter() - t0,
                          schedule.nu, schedule.s)


@dataclass(frozen=True)
class FejerReport:
    """Pairs ``(k, y, excess)`` where ``|x^{k+1} - y| > |x^k - y| + slack``."""

    violations: list
    n_checked: int

    @property
    def ok(self):
        return not self.violations


def audit_fejer(trace, y_samples, slack=1e-10, ops=None, member_tol=1e-10):
    """Check Fejer monotonicity of a trace with respect to sample fixed points.

    Consecutive stored iterates are compared, which is valid for thinned
    traces since Fejer monotonicity is transitive in ``k``.

    Parameters
    ----------
    trace : IterationTrace
    y_samples : array_like
        Points of the common fixed-point set.
    slack : float
        Allowed increase per step.
    ops : sequence of FixedPointOperator, optional
        When given, membership of each sample is verified.
    """
    ys = np.atleast_2d(np.asarray(y_samples, dtype=float))
    if ops is not None:
        for y in ys:
            if _residual(y, ops) > member_tol:
                raise ParameterError(f"sample {y} is not a common fixed point")
    viol = []
    pts = trace.points
    for y in ys:
        d = np.linalg.norm(pts - y, axis=1)
        inc = d[1:] - d[:-1]
        for i in np.flatnonzero(inc > slack):
            viol.append((int(trace.k[i]), tuple(y), float(inc[i])))
    return FejerReport(viol, len(ys) * max(len(pts) - 1, 0))


@dataclass(frozen=True)
class EmpiricalGauge:
    """Sampled staircase ``a -> Phi_hat(a)``.

    ``Phi_hat(a)`` is the largest distance to the fixed-point set among
    sampled points ``y`` with ``|y| <= r`` and largest residual at most ``a``;
    it is a lower estimate of the exact regularity function.
    """

    a: np.ndarray
    values: np.ndarray
    witnesses: np.ndarray

    def __call__(self, t):
        i = np.searchsorted(self.a, t, side="right") - 1
        if np.ndim(t):
            return np.where(i >= 0, self.values[np.maximum(i, 0)], 0.0)
        return float(self.values[i]) if i >= 0 else 0.0


def _sphere(u):
    # Map points of [0, 1)^{n-1} to unit vectors (n = 2 or 3) or via Gaussians.
    n = u.shape[1] + 1
    if n == 2:
        ang = 2 * np.pi * u[:, 0]
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if n == 3:
        z = 2 * u[:, 0] - 1
        ang = 2 * np.pi * u[:, 1]
        rr = np.sqrt(1 - z * z)
        return np.column_stack([rr * np.cos(ang), rr * np.sin(ang), z])
    raise ParameterError("direction sampling is implemented for dimensions 2 and 3")


def estimate_empirical_psi(ops, intersection, r, a_grid, samples_per_a=10_000,
                           seed=0, refine=4, base_points=None):
    """Sample the regularity function ``Phi(a) = max{dist(y, F) : res(y) <= a, |y| <= r}``.

    Each sample is a ray ``y0 + t u`` from a point ``y0`` of the fixed-point
    set along a low-discrepancy direction ``u``. The sample point is where
    the ray first leaves ``{res <= a}`` (found by bisection), i.e. it is
    biased towards the boundary of the feasible region. The best few
    directions are then refined by a bounded one-dimensional search over the
    direction angle (planar problems) before the maximum is taken. Every
    reported witness is verified to be feasible.

    Parameters
    ----------
    ops : sequence of FixedPointOperator
    intersection : set descriptor
        The common fixed-point set ``F``.
    r : float
        Radius of the ball containing the samples.
    a_grid : array_like
        Increasing residual levels.
    samples_per_a : int
        Number of ray directions per level.
    seed : int
        Seed of the scrambled Sobol sequence.
    refine : int
        Number of best directions refined per level.
    base_points : array_like, optional
        Points of ``F`` to shoot rays from; defaults to the projection of the
        origin onto ``F``.

    Returns
    -------
    EmpiricalGauge
    """
    a_grid = np.sort(np.asarray(a_grid, dtype=float))
    dim = _infer_dim(ops, intersection, base_points)
    if base_points is None:
        y0s = np.atleast_2d(intersection.project(np.zeros(dim)))
    else:
        y0s = np.atleast_2d(np.asarray(base_points, dtype=float))
    sob = qmc.Sobol(d=dim - 1, scramble=True, seed=seed)
    m = int(math.ceil(math.log2(max(samples_per_a, 2))))
    dirs = _sphere(sob.random_base2(m)[:samples_per_a])

    def res(y):
        return _residual(y, ops)

    def shoot(y0, u, a):
        # Largest t with res(y0 + t u) <= a along the ray, within |y| <= r.
        bu = float(y0 @ u)
        disc = bu * bu - (float(y0 @ y0) - r * r)
        if disc < 0:
            return y0
        t_hi = -bu + math.sqrt(disc)
        if res(y0 + t_hi * u) <= a:
            return y0 + t_hi * u
        lo, hi = 0.0, t_hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if res(y0 + mid * u) <= a:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-14 * max(hi, 1e-300):
                break
        return y0 + lo * u

    values, witnesses = [], []
    for a in a_grid:
        best_d, best_y = 0.0, y0s[0]
        scored = []
        for y0 in y0s:
            for i, u in enumerate(dirs):
                y = shoot(y0, u, a)
                d = intersection.distance(y)
                scored.append((d, i, tuple(y0)))
                if d > best_d:
                    best_d, best_y = d, y
        if dim == 2 and refine:
            scored.sort(reverse=True)
            step = 2 * np.pi / len(dirs)
            for d0, i, y0 in scored[:refine]:
                y0 = np.array(y0)
                ang0 = math.atan2(dirs[i][1], dirs[i][0])

                def neg(ang):
                    y = shoot(y0, np.array([math.cos(ang), math.sin(ang)]), a)
                    return -intersection.distance(y)

                out = minimize_scalar(neg, bounds=(ang0 - step, ang0 + step),
                                      method="bounded", options={"xatol": 1e-13})
                y = shoot(y0, np.array([math.cos(out.x), math.sin(out.x)]), a)
                d = intersection.distance(y)
                if d > best_d and res(y) <= a:
                    best_d, best_y = d, y
        values.append(best_d)
        witnesses.append(np.asarray(best_y, dtype=float))
    return EmpiricalGauge(a_grid, np.maximum.accumulate(np.array(values)),
                          np.array(witnesses))


def _infer_dim(ops, intersection, base_points):
    if base_points is not None:
        return np.atleast_2d(base_points).shape[1]
    for dim in (2, 3):
        try:
            q = intersection.project(np.zeros(dim))
            for op in ops:
                op(q)
            return len(q)
        except (IndexError, ValueError):
            continue
    raise ParameterError("cannot infer the dimension; pass base_points")
