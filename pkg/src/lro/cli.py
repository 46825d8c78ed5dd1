"""Command-line front end.

Subcommands: newsvendor, portfolio, backtest, calibrate, band. Every report is
JSON with ``schema: 1``, the full configuration, the seed and the package
version; floats carry 12 significant digits so reruns diff cleanly.

Exit codes: 0 ok, 2 configuration/input error, 3 infeasible, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional

import numpy as np

from . import __version__
from .band import ks_band, ks_critical_value
from .calibration import coverage_standard_error, dirichlet_coverage, select_gamma, user_gamma
from .core import EmptySet, IntervalEmpty, NumericalFailure, ObservationSet

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4


class ConfigError(Exception):
    pass


# -- output helpers ---------------------------------------------------------------

def _clean(obj):
    """Round floats to 12 significant digits and map numpy scalars/arrays to JSON types."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.12g}")
    return obj


def render_report(command: str, config: dict, results: dict) -> str:
    report = {
        "schema": 1,
        "version": __version__,
        "command": command,
        "seed": config.get("seed"),
        "config": config,
        "results": results,
    }
    return json.dumps(_clean(report), indent=2) + "\n"


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _read(path: str) -> str:
    try:
        with open(path, newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _pair(text: str, name: str):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--{name} expects two comma-separated numbers, got {text!r}") from None
    if not lo < hi:
        raise ConfigError(f"--{name} needs lo < hi")
    return lo, hi


def _vector(text: Optional[str], name: str):
    if text is None:
        return None
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"--{name} expects comma-separated numbers") from None


def _dof_rule(text: str):
    try:
        return int(text)
    except ValueError:
        return text


# output destinations are not part of the run's identity
OUTPUT_ARGS = ("func", "out", "worst_case_csv", "save_data", "weights_csv", "band_csv")


def _config(args, drop=OUTPUT_ARGS) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in drop}


# -- newsvendor ---------------------------------------------------------------------

def cmd_newsvendor(args) -> int:
    from .apps.newsvendor import DemandModel, NewsvendorInstance, compare_methods

    true_pmf = None
    if args.demand is not None:
        obs = ObservationSet.from_csv(_read(args.demand))
        if obs.support.ndim != 1:
            raise ConfigError("demand CSV must have a scalar value column")
    elif args.synthetic is not None:
        lo, hi = _pair(args.bounds, "bounds")
        model = DemandModel.parse(args.synthetic, lo, hi)
        if args.n < 1:
            raise ConfigError("--n must be positive")
        samples = model.sample(args.n, args.seed)
        obs = ObservationSet.from_samples(samples, support=model.grid())
        true_pmf = model.pmf()
        if args.save_data:
            _write(args.save_data, obs.to_csv())
    else:
        raise ConfigError("give --demand CSV or --synthetic SPEC")

    inst = NewsvendorInstance(args.b, args.h, obs)
    if args.gamma is not None:
        user_gamma(obs, args.gamma)
    comp = compare_methods(inst, alpha=args.alpha, dof_rule=_dof_rule(args.dof), true_pmf=true_pmf, gamma=args.gamma)

    def rel(col, m):
        best = min(col.values())
        return (col[m] - best) / abs(best) if best != 0 else 0.0

    rows = []
    for m, x in comp.decisions.items():
        row = {"method": m, "decision": x, "lro_cost": comp.lro_cost[m], "lro_cost_rel": rel(comp.lro_cost, m)}
        if comp.true_cost is not None:
            row["true_cost"] = comp.true_cost[m]
            row["true_cost_rel"] = rel(comp.true_cost, m)
        rows.append(row)
    results = {
        "gamma": comp.gamma,
        "dof": comp.dof,
        "mu_hat": comp.mu_hat,
        "sigma_hat": comp.sigma_hat,
        "scarf_unrounded": comp.scarf_raw,
        "methods": rows,
        "tv_to_empirical": comp.tv_to_empirical,
    }
    _write(args.out, render_report("newsvendor", _config(args), results))
    if args.worst_case_csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "demand", "probability"])
        emp = obs.mle()
        for d, p in zip(obs.support, emp):
            w.writerow(["Empirical", f"{d:.12g}", f"{p:.12g}"])
        for m, (pts, probs) in comp.worst_cases.items():
            for d, p in zip(pts, probs):
                w.writerow([m, f"{d:.12g}", f"{p:.12g}"])
        _write(args.worst_case_csv, buf.getvalue())
    return EXIT_OK


# -- portfolio / backtest ---------------------------------------------------------------

def _load_returns(args):
    from .apps.portfolio import read_returns_csv, synthetic_returns, write_returns_csv

    if args.returns is not None:
        return read_returns_csv(_read(args.returns))
    if args.synthetic_days is not None:
        if args.synthetic_days < 1:
            raise ConfigError("--synthetic-days must be positive")
        names, r = synthetic_returns(args.synthetic_days, args.seed)
        if args.save_data:
            _write(args.save_data, write_returns_csv(names, r))
        return names, r
    raise ConfigError("give --returns CSV or --synthetic-days N")


def cmd_portfolio(args) -> int:
    from .apps.portfolio import BallSupport, BoxSupport, PortfolioInstance, default_box, portfolio_lro

    names, r = _load_returns(args)
    if args.support == "box":
        lo, hi = _vector(args.box_lo, "box-lo"), _vector(args.box_hi, "box-hi")
        sm = default_box(r, args.widen) if lo is None and hi is None else BoxSupport(lo, hi)
        if sm.lo is None or sm.hi is None:
            raise ConfigError("--box-lo and --box-hi go together")
    elif args.support == "ball":
        c = _vector(args.ball_center, "ball-center")
        if c is None or args.ball_radius is None:
            raise ConfigError("ball support needs --ball-center and --ball-radius")
        sm = BallSupport(c, args.ball_radius)
    else:
        sm = None
    inst = PortfolioInstance(r, sm, gamma=args.gamma, alpha=args.alpha)
    res = portfolio_lro(inst)
    results = {
        "assets": names,
        "weights": dict(zip(names, res.decision)),
        "worst_case_expected_return": res.value,
        "iterations": res.iterations,
        "optimality_gap": res.gap,
    }
    _write(args.out, render_report("portfolio", _config(args), results))
    return EXIT_OK


def cmd_backtest(args) -> int:
    from .apps.portfolio import backtest, worker_count

    names, r = _load_returns(args)
    try:
        threads = worker_count()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = backtest(r, window=args.window, alpha=args.alpha, widen=args.widen, threads=threads)
    results = {"assets": names, "days": int(r.shape[0] - args.window), "reports": out.to_json_obj()}
    _write(args.out, render_report("backtest", _config(args), results))
    if args.weights_csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["day", "strategy"] + list(names))
        for s, W in out.weights.items():
            for t, row in enumerate(W):
                w.writerow([t + args.window, s] + [f"{v:.12g}" for v in row])
        _write(args.weights_csv, buf.getvalue())
    return EXIT_OK


# -- calibrate --------------------------------------------------------------------------

def cmd_calibrate(args) -> int:
    if args.obs is not None:
        obs = ObservationSet.from_csv(_read(args.obs))
    elif args.counts is not None:
        try:
            counts = [int(v) for v in args.counts.split(",")]
        except ValueError:
            raise ConfigError("--counts expects comma-separated integers") from None
        obs = ObservationSet(np.arange(1, len(counts) + 1, dtype=float), counts)
    else:
        raise ConfigError("give --obs CSV or --counts")
    if args.samples < 1:
        raise ConfigError("--samples must be positive")
    if args.gamma is not None:
        choice = user_gamma(obs, args.gamma)
    else:
        choice = select_gamma(obs, args.alpha, _dof_rule(args.dof))
    cov = dirichlet_coverage(obs, choice.gamma, args.samples, args.seed)
    results = {
        "gamma": choice.gamma,
        "dof": choice.dof,
        "basis": choice.basis,
        "coverage": cov,
        "coverage_mc_error": coverage_standard_error(cov, args.samples),
    }
    _write(args.out, render_report("calibrate", _config(args), results))
    return EXIT_OK


# -- band -------------------------------------------------------------------------------

def _read_samples(text: str) -> np.ndarray:
    reader = csv.reader(io.StringIO(text))
    values = []
    for lineno, row in enumerate(reader, start=1):
        if not row or not row[0].strip():
            continue
        try:
            values.append(float(row[0]))
        except ValueError:
            if lineno == 1:
                continue  # header
            raise ConfigError(f"line {lineno}: not a number: {row[0]!r}") from None
    if not values:
        raise ConfigError("sample CSV has no values")
    return np.array(values)


def cmd_band(args) -> int:
    from .apps.newsvendor import newsvendor_band

    x = np.sort(_read_samples(_read(args.samples)))
    dup = x[1:][np.diff(x) == 0]
    if len(dup):
        raise ConfigError(f"duplicate sample values are not supported (first: {dup[0]:g})")
    lo, hi = _pair(args.support, "support")
    if x[0] < lo or x[-1] > hi:
        raise ConfigError("support bounds must enclose every sample")
    band = ks_band(x, args.alpha, D=args.D)
    res = newsvendor_band(band, (lo, hi), args.b, args.h)
    results = {
        "n": len(x),
        "D": args.D if args.D is not None else ks_critical_value(len(x), args.alpha),
        "decision": res.decision,
        "worst_case_cost": res.value,
        "active_knots": res.inner.active_knots,
        "interval_masses": res.inner.masses,
    }
    _write(args.out, render_report("band", _config(args), results))
    if args.band_csv:
        _write(args.band_csv, band.to_csv())
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lro", description="Likelihood robust optimization toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    nv = sub.add_parser("newsvendor", help="newsvendor decisions of every method")
    nv.add_argument("--demand", help="demand CSV (value,count)")
    nv.add_argument("--synthetic", help="trunc-normal:MEAN,SD or trunc-exp:RATE")
    nv.add_argument("--bounds", default="0,200", help="synthetic demand bounds lo,hi")
    nv.add_argument("--n", type=int, default=1000, help="synthetic sample size")
    nv.add_argument("--b", type=float, default=1.0, help="underage cost per unit")
    nv.add_argument("--h", type=float, default=1.0, help="overage cost per unit")
    nv.add_argument("--alpha", type=float, default=0.05)
    nv.add_argument("--dof", default="100", help="dof rule: integer, support-minus-one or observation-count")
    nv.add_argument("--gamma", type=float, help="override the calibrated threshold")
    nv.add_argument("--seed", type=int, default=0)
    nv.add_argument("--out", help="report path (default stdout)")
    nv.add_argument("--worst-case-csv", help="write the worst-case distributions here")
    nv.add_argument("--save-data", help="write the synthetic observations CSV here")
    nv.set_defaults(func=cmd_newsvendor)

    def returns_args(sp):
        sp.add_argument("--returns", help="returns CSV: header of asset names, one row per day")
        sp.add_argument("--synthetic-days", type=int, help="generate this many synthetic days instead")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--alpha", type=float, default=0.05)
        sp.add_argument("--widen", type=float, default=0.5, help="box support widening as a fraction of the range")
        sp.add_argument("--out", help="report path (default stdout)")
        sp.add_argument("--save-data", help="write the synthetic returns CSV here")

    pf = sub.add_parser("portfolio", help="one likelihood-robust portfolio on all rows")
    returns_args(pf)
    pf.add_argument("--gamma", type=float)
    pf.add_argument("--support", choices=("box", "ball", "observed"), default="box")
    pf.add_argument("--box-lo")
    pf.add_argument("--box-hi")
    pf.add_argument("--ball-center")
    pf.add_argument("--ball-radius", type=float)
    pf.set_defaults(func=cmd_portfolio)

    bt = sub.add_parser("backtest", help="rolling-window backtest of LRO, SS and EQ")
    returns_args(bt)
    bt.add_argument("--window", type=int, default=30)
    bt.add_argument("--weights-csv", help="write daily weights here")
    bt.set_defaults(func=cmd_backtest)

    cal = sub.add_parser("calibrate", help="threshold and Dirichlet coverage")
    cal.add_argument("--obs", help="observation CSV (value,count)")
    cal.add_argument("--counts", help="comma-separated counts on support 1..n")
    cal.add_argument("--alpha", type=float, default=0.05)
    cal.add_argument("--dof", default="support-minus-one")
    cal.add_argument("--gamma", type=float)
    cal.add_argument("--samples", type=int, default=10_000)
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--out")
    cal.set_defaults(func=cmd_calibrate)

    bd = sub.add_parser("band", help="KS band and the band-robust newsvendor decision")
    bd.add_argument("--samples", required=True, help="CSV of sample values (first column)")
    bd.add_argument("--alpha", type=float, default=0.05)
    bd.add_argument("--D", type=float, help="band half-width (default: asymptotic KS value)")
    bd.add_argument("--support", required=True, help="demand bounds lo,hi")
    bd.add_argument("--b", type=float, default=1.0)
    bd.add_argument("--h", type=float, default=1.0)
    bd.add_argument("--seed", type=int, default=None, help="recorded only; the band is deterministic")
    bd.add_argument("--out")
    bd.add_argument("--band-csv", help="write the band as x,lower,upper here")
    bd.set_defaults(func=cmd_band)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (EmptySet, IntervalEmpty) as exc:
        print(f"lro: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalFailure as exc:
        print(f"lro: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"lro: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
