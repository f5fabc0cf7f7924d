"""Command-line front end: ``peakaoi eval | optimize | sweep``.

Exit status: 0 success, 1 usage or validation error, 2 when simulation and
closed form disagree (``eval``) or the optimal-threshold fixed-point check fails (``optimize``).
"""

from __future__ import annotations

import argparse
import copy
import csv
import logging
import math
import os
import sys

from . import analytic
from .config import build, load_raw
from .errors import AoiError
from .model import SCHEMES, ScDistribution
from .optimizer import (
    SIM_W_TOL,
    best_prob,
    best_threshold_sim,
    best_window,
    theorem1_residual,
)
from .simulator import default_workers, simulate_parallel
from .sweep import FIGURES, CSV_COLUMNS, SweepResult, agreement, run_sweep, write_csv

log = logging.getLogger("peakaoi")

EXIT_OK, EXIT_USAGE, EXIT_DISAGREE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float(text):
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _common(p):
    p.add_argument("--config", metavar="PATH", help="YAML run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--cycles", type=int, help="renewal cycles per simulation")
    p.add_argument("--workers", type=int,
                   help="worker threads (default: $PEAKAOI_WORKERS or 1)")
    p.add_argument("--out", metavar="PATH", help="write results as CSV")
    p.add_argument("--lambda", dest="lam", type=_float, help="energy arrival rate")
    p.add_argument("--pe", type=_float, help="erasure probability")
    p.add_argument("--D", type=_float, help="transmission time")
    p.add_argument("--theta", type=_float, help="S/C law parameter (mean 5, var 20+4*theta)")
    p.add_argument("-v", "--verbose", action="store_true")


def _policy_flags(p):
    p.add_argument("--scheme", help=f"one of: {', '.join(SCHEMES)}")
    p.add_argument("--W", type=_float, help="age threshold (inf allowed with feedback)")
    p.add_argument("--B", type=int, help="attempts per committed update (window)")
    p.add_argument("--ptx", type=_float, help="transmission probability (probabilistic)")


def make_parser():
    parser = _Parser(prog="peakaoi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_eval = sub.add_parser("eval", help="closed form vs simulation for one policy")
    _common(p_eval)
    _policy_flags(p_eval)
    p_eval.add_argument("--trace", metavar="PATH", help="write per-cycle records")

    p_opt = sub.add_parser("optimize", help="search the parameters of one scheme")
    _common(p_opt)
    _policy_flags(p_opt)
    p_opt.add_argument("--B-max", dest="B_max", type=int, default=12)
    p_opt.add_argument("--ptx-resolution", dest="ptx_resolution", type=int, default=32)
    p_opt.add_argument("--w-tol", dest="w_tol", type=_float, default=SIM_W_TOL,
                       help="threshold tolerance for simulated searches")

    p_sweep = sub.add_parser("sweep", help="re-optimise all schemes along one axis")
    p_sweep.add_argument("figure", choices=sorted(FIGURES))
    _common(p_sweep)
    p_sweep.add_argument("--grid", help="comma-separated values of the swept variable")
    return parser


def _raw_config(args):
    raw = load_raw(args.config) if args.config else {}
    raw = copy.deepcopy(raw)
    params = raw.setdefault("params", {})
    for flag, key in (("lam", "lambda"), ("pe", "pe"), ("D", "D")):
        if getattr(args, flag) is not None:
            params[key] = getattr(args, flag)
    if args.theta is not None:
        raw["dist"] = {"theta": args.theta}
    for flag, key in (("scheme", "scheme"), ("W", "W"), ("B", "B"), ("ptx", "pTx")):
        if getattr(args, flag, None) is not None:
            raw.setdefault("policy", {})[key] = getattr(args, flag)
    sim = raw.setdefault("simulation", {})
    for flag in ("cycles", "seed", "workers"):
        if getattr(args, flag) is not None:
            sim[flag] = getattr(args, flag)
    return raw


def _resolve(args):
    base = os.path.dirname(os.path.abspath(args.config)) if args.config else "."
    cfg = build(_raw_config(args), base)
    workers = cfg.workers if cfg.workers is not None else default_workers()
    return cfg, workers


def _write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow(r.row())


def cmd_eval(args) -> int:
    cfg, workers = _resolve(args)
    if cfg.policy is None:
        raise AoiError("no policy given: set policy.scheme in the config or pass --scheme")
    policy = cfg.policy
    if args.trace:
        est, trace = simulate_parallel(policy, cfg.params, cfg.dist, cfg.cycles, cfg.seed,
                                       workers, return_trace=True)
        trace.write_csv(args.trace)
    else:
        est = simulate_parallel(policy, cfg.params, cfg.dist, cfg.cycles, cfg.seed, workers)
    closed = policy.has_closed_form and isinstance(cfg.dist, ScDistribution)
    exact = analytic.peak_aoi(cfg.params, cfg.dist, policy) if closed else None

    print(f"policy     {policy.render()}")
    print(f"params     lambda={cfg.params.lam:g} pe={cfg.params.pe:g} D={cfg.params.D:g}")
    if not policy.has_closed_form:
        print("analytic   n/a (simulation-only)")
    elif exact is None:
        print("analytic   n/a (empirical S/C law)")
    else:
        print(f"analytic   {exact:.6f}")
    print(f"simulated  {est.mean:.6f} +/- {est.stderr:.6f}  ({est.n_cycles} cycles, seed {est.seed})")
    print(f"mean Y     {est.mean_Y:.6f}")
    print(f"mean S     {est.mean_S:.6f}")
    ok = True if exact is None else agreement(est.mean, est.stderr, exact)
    print(f"verdict    {'OK' if ok else 'DISAGREE'}")
    if args.out:
        _write_rows(args.out, [SweepResult("", math.nan, policy.scheme, policy, exact,
                                           est.mean, est.stderr, est.n_cycles, est.seed)])
    return EXIT_OK if ok else EXIT_DISAGREE


def cmd_optimize(args) -> int:
    cfg, workers = _resolve(args)
    scheme = args.scheme or (cfg.policy.scheme if cfg.policy else None)
    if scheme is None:
        raise AoiError("no scheme given: pass --scheme")
    if scheme not in SCHEMES:
        raise AoiError(f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}")
    kind, _, fb = scheme.partition("-")
    if kind == "threshold":
        res = best_threshold_sim(cfg.params, cfg.dist, fb == "fb", n_cycles=cfg.cycles,
                                 seed=cfg.seed, tol=args.w_tol, n_workers=workers,
                                 keep_trace=args.verbose)
        exact = None
    elif kind == "window":
        res = best_window(cfg.params, cfg.dist, fb, B_max=args.B_max, keep_trace=args.verbose)
        exact = res.value
    else:
        res = best_prob(cfg.params, cfg.dist, fb, pTx_grid_resolution=args.ptx_resolution,
                        keep_trace=args.verbose)
        exact = res.value

    if args.verbose and res.search_trace:
        for params, value in res.search_trace:
            print(f"  trace {params.render()} -> {value!r}")
    print(f"scheme       {scheme}")
    print(f"best         {res.best_params.render()}")
    print(f"value        {res.value:.6f}" + (f" +/- {res.stderr:.6f}" if exact is None else ""))
    print(f"evaluations  {res.evaluations}")
    status = EXIT_OK
    if scheme == "threshold-fb":
        resid = theorem1_residual(cfg.params, cfg.dist, res)
        bound = 3.0 * res.stderr + args.w_tol
        passed = resid <= bound
        target = analytic.theorem1_optimal_value(cfg.params, res.best_params.W)
        print(f"line         {target:.6f} at W={res.best_params.W:.6f}")
        print(f"residual     {resid:.6f} (bound {bound:.6f}) {'PASS' if passed else 'FAIL'}")
        status = EXIT_OK if passed else EXIT_DISAGREE
    if args.out:
        if exact is None:
            sim, se = res.value, res.stderr
        else:
            est = simulate_parallel(res.best_params, cfg.params, cfg.dist, cfg.cycles,
                                    cfg.seed, workers)
            sim, se = est.mean, est.stderr
        _write_rows(args.out, [SweepResult("", math.nan, scheme, res.best_params, exact,
                                           sim, se, cfg.cycles, cfg.seed)])
    return status


def cmd_sweep(args) -> int:
    if not args.out:
        raise AoiError("sweep needs --out PATH")
    cfg, workers = _resolve(args)
    grid = None
    if args.grid:
        try:
            grid = [float(v) for v in args.grid.split(",") if v.strip()]
        except ValueError:
            raise AoiError(f"--grid: not a comma-separated list of numbers: {args.grid!r}") from None
    rows = run_sweep(args.figure, grid=grid, n_cycles=cfg.cycles, seed=cfg.seed,
                     n_workers=workers, D=cfg.params.D)
    write_csv(rows, args.out)
    for r in rows:
        cells = r.row()
        print(f"{cells['sweep_var']}={cells['sweep_value']:<6} {r.scheme:<15} "
              f"{r.best_params.render():<40} sim={r.sim_value:.4f} {r.verdict}")
    return EXIT_OK


COMMANDS = {"eval": cmd_eval, "optimize": cmd_optimize, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except AoiError as exc:
        print(f"peakaoi: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
