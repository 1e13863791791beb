"""Command-line front end.

Subcommands: ``synthesize``, ``analyze``, ``simulate`` and ``sweep``.
Exit codes: 0 success, 1 numerical failure, 2 infeasible task, 3 divergent
field, 4 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from .controller import stability_margin, multi_stability_margin
from .lp import to_lp_text
from .scenario import (
    ScenarioError,
    controller_to_dict,
    dump_json,
    load_controller,
    load_scenario,
)
from .simulator import SimConfig, parameter_sweep, simulate, write_stats_csv, write_trace_csv
from .steady_state import analyze, write_profiles_csv
from .synthesis import FEASIBLE, INFEASIBLE, synthesize

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_INFEASIBLE = 2
EXIT_DIVERGENT = 3
EXIT_INPUT = 4

log = logging.getLogger("persistent_monitoring")

OBJECTIVES = ("feasible", "margin", "minmax", "multi", "multi-margin")


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _load_pair(args):
    scen = load_scenario(args.scenario)
    profiles = load_controller(args.controller)
    if len(profiles) != scen.n_robots:
        raise ScenarioError(f"controller has {len(profiles)} robots, scenario has {scen.n_robots}")
    data = scen.covered
    for r, p in enumerate(profiles):
        if p.n != data.basis_sizes[r]:
            raise ScenarioError(f"robot {r + 1}: controller has n={p.n}, scenario basis_size={data.basis_sizes[r]}")
    return scen, data, profiles


def cmd_synthesize(args):
    scen = load_scenario(args.scenario)
    single = scen.n_robots == 1
    if args.objective in ("feasible", "margin", "minmax") and not single:
        raise ScenarioError(f"objective {args.objective!r} needs exactly one robot; use multi or multi-margin")
    t0 = time.perf_counter()
    data = scen.covered
    res = synthesize(data, args.objective, method=args.method, delta=scen.delta, delta_f=scen.delta_f)
    wall = time.perf_counter() - t0
    print(f"{args.objective}: program {res.status} in {wall:.3f} s", file=sys.stderr)
    if args.lp_dump:
        with open(args.lp_dump, "w") as fh:
            fh.write(to_lp_text(res.lp))
    if res.status == INFEASIBLE or (res.feasible and not res.stabilizing):
        names = ", ".join(f"q{i + 1}" for i in res.unstable_points) or "unknown"
        _err(f"task is infeasible; points limiting the stability margin: {names}")
        diag = {"status": INFEASIBLE, "unstable_points": [i + 1 for i in res.unstable_points]}
        if args.output:
            dump_json({"robots": [], "diagnostics": diag}, args.output)
        return EXIT_INFEASIBLE
    if res.status != FEASIBLE:
        _err(f"solver returned {res.status}: {res.message}")
        return EXIT_NUMERICAL
    diag = {
        "status": res.status,
        "objective": args.objective,
        "B": res.objective,
        "slacks": [float(s) for s in res.slacks],
        "min_slack": float(np.min(res.slacks)),
    }
    out = controller_to_dict(res.profiles, diag)
    if args.output:
        dump_json(out, args.output)
    else:
        json.dump(out, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_OK


def cmd_analyze(args):
    scen, data, profiles = _load_pair(args)
    if len(profiles) != 1:
        raise ScenarioError("analyze needs a single-robot controller")
    prof = profiles[0]
    reports = analyze(data, prof)
    margins = stability_margin(prof, data)
    unstable = [r.point for r in reports if not r.stable]
    report = {
        "stable": not unstable,
        "points": [
            {
                "point": r.point + 1,
                "stable": r.stable,
                "margin": float(margins[r.point]),
                "H": float(r.peak) if r.stable else None,
                "argmax_theta": float(r.peak_theta) if r.stable else None,
                "endpoint_values": [float(v) for v in r.endpoint_values],
                "growth_per_cycle": None if r.stable else float(r.growth_per_cycle),
            }
            for r in reports
        ],
    }
    if unstable:
        report["unstable_points"] = [i + 1 for i in unstable]
        report["H"] = None
        print(f"divergent: {len(unstable)} of {data.n_points} points are not stabilized", file=sys.stderr)
    else:
        report["H"] = float(max(r.peak for r in reports))
        print(f"H = {report['H']:.12g}", file=sys.stderr)
        if args.curves:
            write_profiles_csv(args.curves, data, prof, resolution=args.resolution)
    if args.output:
        dump_json(report, args.output)
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_DIVERGENT if unstable else EXIT_OK


def _sim_config(args, **over):
    kw = dict(
        horizon=args.horizon,
        mode=args.mode,
        dt=args.dt,
        noise=args.noise,
        epsilon=args.epsilon,
        eta=args.eta,
        seed=args.seed,
    )
    if getattr(args, "theta0", None):
        kw["theta0"] = [float(v) for v in args.theta0.split(",")]
    kw.update(over)
    if kw["noise"] > 0:
        kw["mode"] = "fixed"
    cfg = SimConfig(**kw)
    bad = cfg.violations()
    if bad:
        raise ScenarioError("; ".join(bad))
    return cfg


def _default_horizon(profiles):
    return 12 * max(float(np.mean(p.cell_inverse_speed())) for p in profiles)


def cmd_simulate(args):
    scen, data, profiles = _load_pair(args)
    if args.horizon is None:
        args.horizon = _default_horizon(profiles)
    record = "full" if args.trace and not args.max_only else ("max" if args.trace else "none")
    cfg = _sim_config(args, record=record)
    tr = simulate(data, profiles, cfg)
    if args.trace:
        write_trace_csv(args.trace, tr, max_only=args.max_only)
    summary = tr.summary()
    summary["divergent_points"] = [i + 1 for i in summary["divergent_points"]]
    if data.n_robots == 1:
        summary["margin_min"] = float(np.min(stability_margin(profiles[0], data)))
    else:
        summary["margin_min"] = float(np.min(multi_stability_margin(profiles, data)))
    if args.summary:
        dump_json(summary, args.summary)
    else:
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_OK if tr.converged_periodic else EXIT_DIVERGENT


def cmd_sweep(args):
    scen, data, profiles = _load_pair(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ScenarioError(f"--values: {exc}") from exc
    if not values or args.trials < 1:
        raise ScenarioError("need at least one value and one trial")
    if args.horizon is None:
        args.horizon = _default_horizon(profiles)
    base = _sim_config(args, record="none", mode="fixed" if args.param == "noise" else args.mode)
    rows = parameter_sweep(data, profiles, args.param, values, trials=args.trials, seed=args.seed,
                           base=base, workers=args.workers)
    write_stats_csv(args.output or sys.stdout, rows, args.param)
    return EXIT_OK


def _add_sim_flags(p):
    p.add_argument("--horizon", type=float, default=None, help="seconds (default: 12 cycles)")
    p.add_argument("--mode", choices=("event", "fixed"), default="event")
    p.add_argument("--dt", type=float, default=None, help="fixed-step size (default: cell transit / 10)")
    p.add_argument("--noise", type=float, default=0.0, help="uniform production noise half-width")
    p.add_argument("--epsilon", type=float, default=0.0, help="constant production offset")
    p.add_argument("--eta", type=float, default=0.0, help="speed perturbation half-width")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta0", default=None, help="comma-separated initial positions, one per robot")


def build_parser():
    ap = argparse.ArgumentParser(prog="persistent-monitoring", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="solve a controller program")
    p.add_argument("scenario")
    p.add_argument("--objective", choices=OBJECTIVES, default="margin")
    p.add_argument("-o", "--output", help="controller JSON (default: stdout)")
    p.add_argument("--method", choices=("simplex", "highs"), default="simplex")
    p.add_argument("--lp-dump", help="write the program in LP text format")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("analyze", help="steady-state report for a single-robot controller")
    p.add_argument("scenario")
    p.add_argument("controller")
    p.add_argument("-o", "--output", help="report JSON (default: stdout)")
    p.add_argument("--curves", help="CSV of steady-state curves per point")
    p.add_argument("--resolution", type=int, default=200)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="simulate the field under a controller")
    p.add_argument("scenario")
    p.add_argument("controller")
    _add_sim_flags(p)
    p.add_argument("--trace", help="trace CSV")
    p.add_argument("--max-only", action="store_true", help="trace holds only the max over points")
    p.add_argument("--summary", help="summary JSON (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="statistics of the maximum field over a parameter")
    p.add_argument("scenario")
    p.add_argument("controller")
    p.add_argument("--param", choices=("noise", "epsilon", "eta"), default="noise")
    p.add_argument("--values", required=True, help="comma-separated parameter values")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", help="stats CSV (default: stdout)")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ScenarioError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
