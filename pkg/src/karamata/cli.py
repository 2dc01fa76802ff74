"""Command-line interface.

Subcommands::

    karamata solve --config cfg.json [--out DIR]
    karamata project --set exp_cone --point 1,2,3
    karamata rv-index --function power:rho=0.3
    karamata predict --psi holder:kappa=1,gamma=0.5 --d0 1 --k-max 1e6
    karamata bench holder_lines --param theta=0.5 --out DIR

Exit codes: 0 on success, 2 for configuration or parameter errors, 3 for
numeric failures.
"""

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import bench
from .errors import (
    AccuracyError,
    BracketError,
    InsufficientDataError,
    KaramataError,
    MonotonicityError,
    ParameterError,
    SingularityError,
    UnderflowError,
)
from .operators import set_from_dict
from .rates import (
    PhiSpec,
    RateBound,
    classify_rate,
    entropic_psi,
    holder_entropic_psi,
    holder_psi,
    linear_psi,
    logarithmic_psi,
)
from .regvar import RegFunc, estimate_rv0_index

__all__ = ["main", "FUNCTIONS", "GAUGES", "parse_catalog_id"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_NUMERIC_ERRORS = (AccuracyError, BracketError, InsufficientDataError, MonotonicityError,
                   SingularityError, UnderflowError, ArithmeticError)


def _power(rho=0.5):
    return RegFunc(lambda t: t ** rho, index=rho, name=f"t^{rho}")


def _t_log():
    return RegFunc(lambda t: -t * math.log(t), 0.0, math.exp(-1), index=1.0, name="-t ln t")


def _sqrt_t_log2():
    return RegFunc(lambda t: math.sqrt(t) * math.log(t) ** 2, 0.0, math.exp(-4), index=0.5,
                   name="sqrt(t) ln(t)^2")


def _inv_log(gamma=1.0):
    return RegFunc(lambda t: (-1.0 / math.log(t)) ** gamma, 0.0, 0.5, index=0.0,
                   name=f"(-1/ln t)^{gamma}")


def _exp_inv():
    return RegFunc(lambda t: math.exp(-1.0 / t), 0.0, 1.0, name="exp(-1/t)")


FUNCTIONS = {
    "power": _power,
    "t_log": _t_log,
    "sqrt_t_log2": _sqrt_t_log2,
    "inv_log": _inv_log,
    "exp_inv": _exp_inv,
}

GAUGES = {
    "holder": holder_psi,
    "holder_entropic": holder_entropic_psi,
    "entropic": entropic_psi,
    "logarithmic": logarithmic_psi,
    "linear": linear_psi,
}


def _number(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_catalog_id(text):
    """Split ``name:k=v,k=v`` into ``(name, {k: v})``."""
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise ParameterError(f"expected key=value, got {item!r}")
        params[key.strip()] = _number(value.strip())
    return name, params


def _from_catalog(catalog, text, what):
    name, params = parse_catalog_id(text)
    if name not in catalog:
        raise ParameterError(f"unknown {what} {name!r}; choose from {sorted(catalog)}")
    try:
        return catalog[name](**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name}: {exc}") from None


def _table_function(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    try:
        data = np.array([[float(v) for v in r[:2]] for r in rows])
    except ValueError:
        data = np.array([[float(v) for v in r[:2]] for r in rows[1:]])
    if data.ndim != 2 or len(data) < 8:
        raise ParameterError("table needs at least 8 rows of t,f(t)")
    data = data[np.argsort(data[:, 0])]
    if np.any(data <= 0):
        raise ParameterError("table values must be positive")
    lt, lf = np.log(data[:, 0]), np.log(data[:, 1])

    def f(t):
        return math.exp(np.interp(math.log(t), lt, lf))

    fn = RegFunc(f, float(data[0, 0]) * (1 - 1e-12), float(data[-1, 0]), name=path)
    return fn, data[::-1, 0]


def _cmd_solve(args):
    with open(args.config) as fh:
        try:
            cfg = bench.ScenarioConfig.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ParameterError(f"invalid JSON in {args.config}: {exc}") from None
    report = bench.run_scenario(cfg)
    if args.out:
        bench.emit(report, "csv", args.out)
        bench.emit(report, "plotdata", args.out)
    _print_summary(report)


def _print_summary(report):
    summary = {
        "scenario": report.scenario,
        "iterations": int(report.rows[-1, 0]),
        "final_dist": float(report.rows[-1, 1]),
        "final_bound": float(report.rows[-1, 3]),
        "stop_reason": report.stop_reason,
        "regime": report.regime.regime,
        "profile": report.profile_name,
        "crossover_k": report.crossover_k,
        "bound_dominates": report.bound_dominates,
        "fejer_violations": report.fejer_violations,
        "fits": {k: {"value": v.value, "spread": v.spread, "n_points": v.n_points}
                 for k, v in report.fits.items()},
    }
    print(json.dumps(summary, indent=2))


def _cmd_project(args):
    text = args.set.strip()
    desc = json.loads(text) if text.startswith("{") else text
    S = set_from_dict(desc)
    try:
        point = np.array([float(v) for v in args.point.split(",")])
    except ValueError:
        raise ParameterError(f"cannot parse point {args.point!r}") from None
    p = S.project(point)
    print(",".join(repr(float(v)) for v in p))


def _cmd_rv_index(args):
    if args.function.endswith(".csv"):
        f, grid = _table_function(args.function)
        est = estimate_rv0_index(f, lambdas=(2.0,), grid=grid)
    else:
        f = _from_catalog(FUNCTIONS, args.function, "function")
        est = estimate_rv0_index(f)
    print(json.dumps({"function": f.name, "index": est.value, "residual": est.residual,
                      "n_points": est.n_points, "truncated": est.truncated}))


def _cmd_predict(args):
    psi = _from_catalog(GAUGES, args.psi, "gauge")
    if not args.d0 > 0:
        raise ParameterError("d0 must be positive")
    k_max = int(args.k_max)
    if k_max < 1:
        raise ParameterError("k-max must be at least 1")
    d0_sq = args.d0 ** 2
    spec = PhiSpec(psi, args.alpha, args.nu, args.s, a_hat=2.0 * d0_sq)
    rb = RateBound.from_spec(spec, d0_sq)
    ks = np.unique(np.concatenate(
        [[0], np.floor(np.logspace(0, math.log10(k_max), args.points)).astype(int), [k_max]]))
    regime = classify_rate(psi.index if psi.index is not None else 0.0)
    print(f"# gauge={psi.name} c={spec.c!r} regime={regime.regime}")
    print("k,bound")
    for k in ks:
        print(f"{int(k)},{rb(int(k))!r}")


def _cmd_bench(args):
    params = {}
    for item in args.param:
        key, eq, value = item.partition("=")
        if not eq:
            raise ParameterError(f"expected key=value, got {item!r}")
        params[key] = _number(value)
    cfg = {"scenario": args.scenario, "params": params, "seed": args.seed}
    if args.max_iter is not None:
        cfg["stop"] = {"max_iter": args.max_iter}
    report = bench.run_scenario(cfg)
    paths = bench.emit(report, "csv", args.out) + bench.emit(report, "plotdata", args.out)
    _print_summary(report)
    for p in paths:
        print(p, file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(prog="karamata", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a scenario from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="directory for CSV and plot data")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("project", help="project a point onto a set")
    p.add_argument("--set", required=True, help="set kind or JSON descriptor")
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("rv-index", help="estimate an index of regular variation at zero")
    p.add_argument("--function", required=True,
                   help=f"catalog id ({', '.join(FUNCTIONS)}) or a t,f(t) CSV table")
    p.set_defaults(func=_cmd_rv_index)

    p = sub.add_parser("predict", help="tabulate the rate bound R(k)")
    p.add_argument("--psi", required=True, help=f"gauge id ({', '.join(GAUGES)}) with params")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--d0", type=float, default=1.0)
    p.add_argument("--k-max", type=float, default=1e6)
    p.add_argument("--points", type=int, default=25)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("bench", help="run a catalog scenario and write its report")
    p.add_argument("scenario", choices=sorted(bench.SCENARIOS))
    p.add_argument("--param", action="append", default=[], help="scenario parameter k=v")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        args.func(args)
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KaramataError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
