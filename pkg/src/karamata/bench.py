"""Benchmark scenarios: run an iteration, compare it with its rate bound
and asymptotic profile, fit empirical rates and write reports."""

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InsufficientDataError, ParameterError, UnderflowError
from .numerics import lambert_wm1
from .operators import (
    CoordinatePlane,
    DRFixRay,
    ExpCone,
    ExpConeFace,
    FlatEpigraph,
    GammaEpigraph,
    PowerEpigraph,
    Singleton,
    dr_operator,
    line,
    projector,
)
from .rates import (
    PhiSpec,
    RateBound,
    asymptotic_profile,
    classify_rate,
    entropic_psi,
    holder_entropic_psi,
    holder_psi,
    logarithmic_psi,
)
from .solver import StopCriteria, ap_schedule, audit_fejer, dr_schedule, run

__all__ = [
    "Scenario",
    "ScenarioConfig",
    "RateReport",
    "FitResult",
    "SCENARIOS",
    "build_scenario",
    "run_scenario",
    "fit_rate",
    "check_profile_dominance",
    "emit",
    "report_ks",
]


@dataclass
class Scenario:
    """A concrete fixed-point problem together with its rate ingredients.

    ``explicit_bound`` is true when the gauge constants are proven for the
    ball containing the iterates, so that ``dist <= bound`` must hold.
    """

    name: str
    ops: list
    schedule: object
    target: object
    psi_B: object
    x0: np.ndarray
    profile: object
    fejer_samples: np.ndarray
    explicit_bound: bool
    linear_floor: bool = False
    alpha: float = 0.5
    max_iter: int = 10_000


def _gamma_lipschitz():
    # gamma'(1/2): the largest slope of gamma on [-1/2, 1/2].
    s = 2.0 * lambert_wm1(-0.25)
    return -math.exp(0.5 * s) / (1.0 + 0.5 * s)


def _holder_lines(theta=math.pi / 4, x0=None):
    theta = float(theta)
    if not 0 < theta < math.pi / 2:
        raise ParameterError("theta must lie in (0, pi/2)")
    x0 = np.array([1.0, 0.0]) if x0 is None else np.asarray(x0, dtype=float)
    # dist(y, {0}) <= max_i dist(y, L_i) / sin(theta / 2)
    psi = holder_psi(1.0 / math.sin(theta / 2.0), 1.0)
    return Scenario(
        "holder_lines", [projector(line(0.0)), projector(line(theta))], ap_schedule(),
        Singleton((0.0, 0.0)), psi, x0,
        asymptotic_profile("linear", rate=math.cos(theta)),
        np.zeros((1, 2)), True, linear_floor=True, max_iter=400)


def _holder_power(gamma=0.5, x0=None):
    gamma = float(gamma)
    if not 0 < gamma <= 1:
        raise ParameterError("gamma must lie in (0, 1]")
    x0 = np.array([0.6, 0.3]) if x0 is None else np.asarray(x0, dtype=float)
    if np.linalg.norm(x0) > 1:
        raise ParameterError("x0 must lie in the unit ball for the explicit constants")
    # On the unit ball: dist(y, 0) <= (2^{1+gamma} + 1) max_i dist(y, C_i)^gamma.
    psi = holder_psi(2.0 ** (1.0 + gamma) + 1.0, gamma)
    profile = (asymptotic_profile("holder", gamma=gamma) if gamma < 1
               else asymptotic_profile("linear", rate=0.5))
    return Scenario(
        "holder_power", [projector(PowerEpigraph(gamma, 1.0)), projector(CoordinatePlane(1))],
        ap_schedule(), Singleton((0.0, 0.0)), psi, x0, profile,
        np.zeros((1, 2)), True, linear_floor=gamma == 1)


def _holder_entropic_ap(c=0.01, x0=None):
    x0 = np.array([0.3, 0.2]) if x0 is None else np.asarray(x0, dtype=float)
    kappa = (2.0 * math.sqrt(2.0) + 1.0) * max(_gamma_lipschitz(), 1.0)
    psi = holder_entropic_psi(kappa, float(c), float(np.linalg.norm(x0)))
    return Scenario(
        "holder_entropic_ap", [projector(GammaEpigraph()), projector(CoordinatePlane(1))],
        ap_schedule(), Singleton((0.0, 0.0)), psi, x0,
        asymptotic_profile("holder_entropic"), np.zeros((1, 2)), False)


def _dr_gamma(c=0.01, x0=None):
    x0 = np.array([0.3, 0.2]) if x0 is None else np.asarray(x0, dtype=float)
    kappa = 2.0 * math.sqrt(2.0) * max(_gamma_lipschitz(), 1.0)
    psi = holder_entropic_psi(kappa, float(c), float(np.linalg.norm(x0)))
    C1, C2 = GammaEpigraph(), CoordinatePlane(1)
    T = dr_operator(C2.project, C1.project, DRFixRay())
    samples = np.array([[0.0, 0.0], [0.0, 0.1], [0.0, 0.5], [0.0, 2.0]])
    return Scenario(
        "dr_gamma", [T], dr_schedule(), DRFixRay(), psi, x0,
        asymptotic_profile("holder_entropic"), samples, False)


def _expcone_entropic_ap(kappa_B=1.0, x0=None):
    x0 = np.array([1.0, 0.5, 1.0]) if x0 is None else np.asarray(x0, dtype=float)
    kappa_B = float(kappa_B)
    psi = entropic_psi(kappa_B)
    kappa = 4.5 * kappa_B ** 2
    profile = asymptotic_profile("entropic_envelope", c=math.exp(0.5 / math.sqrt(kappa)))
    samples = np.array([[0.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [-0.5, 0.0, 2.0]])
    return Scenario(
        "expcone_entropic_ap", [projector(ExpCone()), projector(CoordinatePlane(1))],
        ap_schedule(), ExpConeFace(), psi, x0, profile, samples, False)


def _logarithmic(gamma_log=1.0, kappa=1.0, x0=None):
    gamma_log = float(gamma_log)
    x0 = np.array([0.4, 0.1]) if x0 is None else np.asarray(x0, dtype=float)
    psi = logarithmic_psi(float(kappa), gamma_log)
    return Scenario(
        "logarithmic", [projector(FlatEpigraph(gamma_log)), projector(CoordinatePlane(1))],
        ap_schedule(), Singleton((0.0, 0.0)), psi, x0,
        asymptotic_profile("logarithmic", gamma=gamma_log), np.zeros((1, 2)), False)


SCENARIOS = {
    "holder_lines": _holder_lines,
    "holder_power": _holder_power,
    "holder_entropic_ap": _holder_entropic_ap,
    "expcone_entropic_ap": _expcone_entropic_ap,
    "dr_gamma": _dr_gamma,
    "logarithmic": _logarithmic,
}


def build_scenario(name, **params):
    """Instantiate a catalogue scenario by name."""
    try:
        factory = SCENARIOS[name]
    except KeyError:
        raise ParameterError(
            f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name}: {exc}") from None


@dataclass
class ScenarioConfig:
    """Run configuration; ``None`` fields take scenario defaults."""

    scenario: str
    params: dict = field(default_factory=dict)
    x0: Optional[list] = None
    max_iter: Optional[int] = None
    residual_tol: float = 0.0
    fit_window: Optional[tuple] = None
    profile: Optional[dict] = None
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        """Parse ``{scenario, params, x0, stop{max_iter, residual_tol}, report{fit_window, profile}, seed}``."""
        if not isinstance(d, dict) or "scenario" not in d:
            raise ParameterError("config needs a 'scenario' entry")
        known = {"scenario", "params", "x0", "stop", "report", "seed"}
        extra = set(d) - known
        if extra:
            raise ParameterError(f"unknown config keys {sorted(extra)}")
        stop = d.get("stop", {}) or {}
        rep = d.get("report", {}) or {}
        window = rep.get("fit_window")
        if window is not None:
            if len(window) != 2 or not 0 < window[0] < window[1]:
                raise ParameterError("fit_window must be [lo, hi] with 0 < lo < hi")
            window = (float(window[0]), float(window[1]))
        max_iter = stop.get("max_iter")
        if max_iter is not None and (int(max_iter) != max_iter or max_iter < 1):
            raise ParameterError("max_iter must be a positive integer")
        if window is not None and (window[0] < 1 or (max_iter and window[1] > max_iter)):
            raise ParameterError("fit_window must lie within [1, max_iter]")
        x0 = d.get("x0")
        if x0 is not None and not np.all(np.isfinite(np.asarray(x0, dtype=float))):
            raise ParameterError("x0 must be finite")
        return cls(d["scenario"], dict(d.get("params", {}) or {}), d.get("x0"),
                   None if max_iter is None else int(max_iter),
                   float(stop.get("residual_tol", 0.0)), window,
                   rep.get("profile"), int(d.get("seed", 0)))


@dataclass
class FitResult:
    """Fitted rate parameter over a window of iteration counts."""

    model: str
    value: float
    spread: float
    n_points: int
    window: tuple


@dataclass
class RateReport:
    """Per-iteration comparison table plus fits and flags.

    ``rows`` has columns ``k, dist, residual, bound, profile``. Bound values
    at or beyond ``crossover_k`` come from the asymptotic profile, rescaled
    to match the last computable bound.
    """

    scenario: str
    rows: np.ndarray
    fits: dict
    regime: object
    profile_name: str
    crossover_k: Optional[int]
    bound_dominates: Optional[bool]
    fejer_violations: int
    stop_reason: str
    trace: object = field(repr=False, default=None)

    COLUMNS = ("k", "dist", "residual", "bound", "profile")

    def column(self, name):
        return self.rows[:, self.COLUMNS.index(name)]


def report_ks(k_max, ratio=1.02, dense=100):
    """Iteration counts reported: all ``k <= dense``, then ``floor(ratio^j)``, then ``k_max``."""
    ks = set(range(min(dense, k_max) + 1))
    j = 0
    while True:
        k = int(math.floor(ratio ** j))
        if k > k_max:
            break
        ks.add(k)
        j += 1
    ks.add(k_max)
    return np.array(sorted(ks))


def _bounds(scn, d0_sq, ks, profile):
    out = np.full(len(ks), np.nan)
    crossover = None
    if not d0_sq > 0:
        return np.zeros(len(ks)), None
    spec = PhiSpec(scn.psi_B, scn.alpha, scn.schedule.nu, scn.schedule.s, a_hat=2.0 * d0_sq)
    rb = RateBound.from_spec(spec, d0_sq)
    last_k, last_v = None, None
    for i, k in enumerate(ks):
        if crossover is None:
            try:
                out[i] = rb(int(k))
                last_k, last_v = k, out[i]
                continue
            except UnderflowError:
                crossover = int(k)
        scale = last_v / profile(max(last_k, 1)) if last_k is not None else 1.0
        out[i] = scale * profile(max(int(k), 1))
    return out, crossover


def run_scenario(config):
    """Run a scenario and build its :class:`RateReport`.

    Parameters
    ----------
    config : ScenarioConfig or dict
    """
    if isinstance(config, dict):
        config = ScenarioConfig.from_dict(config)
    params = dict(config.params)
    if config.x0 is not None:
        params["x0"] = config.x0
    scn = build_scenario(config.scenario, **params)
    max_iter = config.max_iter or scn.max_iter
    trace = run(scn.ops, scn.schedule, scn.x0,
                StopCriteria(max_iter=max_iter, residual_tol=config.residual_tol),
                target=scn.target)
    profile = scn.profile
    if config.profile:
        spec = dict(config.profile)
        profile = asymptotic_profile(spec.pop("case"), **spec)

    k_last = int(trace.k[-1])
    ks = report_ks(k_last)
    idx = np.searchsorted(trace.k, ks)
    ks = ks[(idx < len(trace.k))]
    idx = np.searchsorted(trace.k, ks)
    keep = trace.k[idx] == ks
    ks, idx = ks[keep], idx[keep]
    d0_sq = float(trace.dist[0]) ** 2
    bounds, crossover = _bounds(scn, d0_sq, ks, profile)
    prof = np.array([profile(max(int(k), 1)) for k in ks])
    rows = np.column_stack([ks.astype(float), trace.dist[idx], trace.residual[idx], bounds, prof])

    window = config.fit_window or (max(1.0, k_last / 100.0), float(k_last))
    fits = {}
    for model in ("loglog_slope", "linear_factor", "profile_constant"):
        try:
            fits[model] = fit_rate(rows, model, window)
        except InsufficientDataError:
            pass
    rho = scn.psi_B.index if scn.psi_B.index is not None else 0.0
    regime = classify_rate(rho, scn.linear_floor)
    dominates = None
    if scn.explicit_bound:
        dominates = bool(np.all(rows[:, 1] <= rows[:, 3] * (1 + 1e-9) + 1e-15))
    fejer = audit_fejer(trace, scn.fejer_samples)
    return RateReport(config.scenario, rows, fits, regime, profile.name, crossover,
                      dominates, len(fejer.violations), trace.stop_reason, trace)


def fit_rate(rows, model, window):
    """Fit an empirical rate over ``lo <= k <= hi``.

    Parameters
    ----------
    rows : ndarray or RateReport
        Columns ``k, dist, ...`` (and ``profile`` in column 4 for
        ``profile_constant``).
    model : {"loglog_slope", "linear_factor", "profile_constant"}
        ``loglog_slope``: slope of ``ln dist`` against ``ln k``.
        ``linear_factor``: slope of ``ln dist`` against ``k`` (the log of the
        per-step contraction factor). ``profile_constant``: median of
        ``dist / profile``; ``spread`` is the max/min ratio.
    window : (float, float)

    Raises
    ------
    InsufficientDataError
        If fewer than 10 usable rows remain after discarding non-positive
        distances.
    """
    if isinstance(rows, RateReport):
        rows = rows.rows
    lo, hi = window
    k, d = rows[:, 0], rows[:, 1]
    m = (k >= lo) & (k <= hi) & (k > 0) & np.isfinite(d) & (d > 0)
    if model == "profile_constant":
        m &= np.isfinite(rows[:, 4]) & (rows[:, 4] > 0)
    if m.sum() < 10:
        raise InsufficientDataError(f"fewer than 10 usable rows in window {window}")
    k, d = k[m], d[m]
    if model == "loglog_slope":
        coef, res = np.polyfit(np.log(k), np.log(d), 1, full=True)[:2]
        spread = float(np.sqrt(res[0] / len(k))) if len(res) else 0.0
        return FitResult(model, float(coef[0]), spread, len(k), window)
    if model == "linear_factor":
        coef, res = np.polyfit(k, np.log(d), 1, full=True)[:2]
        spread = float(np.sqrt(res[0] / len(k))) if len(res) else 0.0
        return FitResult(model, float(coef[0]), spread, len(k), window)
    if model == "profile_constant":
        ratio = d / rows[m, 4]
        return FitResult(model, float(np.median(ratio)), float(ratio.max() / ratio.min()),
                         len(k), window)
    raise ParameterError(f"unknown fit model {model!r}")


def check_profile_dominance(rows, fit_window, check_window, factor=1.5):
    """One-sided check of an asymptotic shape.

    Fits the profile constant (median of ``dist / profile``) over
    ``fit_window`` and tests ``dist <= factor * constant * profile`` at every
    row in ``check_window``.

    Returns
    -------
    (FitResult, bool, float)
        The fit, whether the bound holds, and the largest ratio
        ``dist / (constant * profile)`` seen in ``check_window``.
    """
    if isinstance(rows, RateReport):
        rows = rows.rows
    fit = fit_rate(rows, "profile_constant", fit_window)
    lo, hi = check_window
    m = (rows[:, 0] >= lo) & (rows[:, 0] <= hi) & np.isfinite(rows[:, 4]) & (rows[:, 4] > 0)
    if not m.any():
        raise InsufficientDataError(f"no rows in check window {check_window}")
    worst = float(np.max(rows[m, 1] / (fit.value * rows[m, 4])))
    return fit, worst <= factor, worst


def emit(report, fmt, out_dir):
    """Write a report to ``out_dir``.

    ``csv`` writes ``<scenario>.csv`` with header ``k,dist,residual,bound,profile``
    and shortest round-trip float formatting. ``plotdata`` writes one
    ``<scenario>_<curve>.dat`` file per curve with at least one positive
    value, holding ``log10 k`` and ``log10 value`` columns for ``k >= 1``.

    Returns
    -------
    list of str
        Paths written.
    """
    os.makedirs(out_dir, exist_ok=True)
    rows = report.rows
    if fmt == "csv":
        path = os.path.join(out_dir, f"{report.scenario}.csv")
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(RateReport.COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join([str(int(row[0]))] + [repr(float(v)) for v in row[1:]]) + "\n")
        return [path]
    if fmt == "plotdata":
        paths = []
        for j, name in enumerate(RateReport.COLUMNS[1:], start=1):
            col = rows[:, j]
            m = (rows[:, 0] >= 1) & np.isfinite(col) & (col > 0)
            if not m.any():
                continue
            path = os.path.join(out_dir, f"{report.scenario}_{name}.dat")
            with open(path, "w", newline="\n") as fh:
                for k, v in zip(rows[m, 0], col[m]):
                    fh.write(f"{math.log10(k)!r} {math.log10(v)!r}\n")
            paths.append(path)
        return paths
    raise ParameterError(f"unknown output format {fmt!r}")
