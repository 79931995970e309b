"""Command line entry point: ``pspblemo {run,compare,plots,pf-cache}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .framework import RunConfig
from .problems import PROBLEM_IDS, generate_true_pf, make_problem

# CLI flag -> RunConfig field
_OVERRIDES = {
    "gamma": "gamma",
    "ds": "ds",
    "stop": "stop",
    "epsilon": "epsilon",
    "omega": "omega",
    "pop_ul": "pop_ul",
    "pop_ll": "pop_ll",
    "max_ll_fe": "max_ll_fe",
    "max_ul_fe": "max_ul_fe",
    "max_gen": "max_ul_gen",
    "pf_cache_dir": "pf_cache",
}


def _gamma(text: str):
    return "inf" if text.lower() in ("inf", "infinity") else int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pspblemo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run (problem, mode, seed) combinations")
    p.add_argument("--config", help="YAML/JSON experiment file; flags given explicitly override it")
    p.add_argument("--problem", nargs="+", choices=PROBLEM_IDS, metavar="ID", help=f"one or more of {', '.join(PROBLEM_IDS)}")
    p.add_argument("--set", dest="variable_set", default=None, choices=["default", "S1", "S2", "S3"])
    p.add_argument("--mode", nargs="+", choices=["psp", "os", "ne"])
    p.add_argument("--seed", nargs="+", type=int)
    p.add_argument("--gamma", type=_gamma, help="retrain gap in generations, or 'inf'")
    p.add_argument("--ds", type=int, help="training-set size threshold")
    p.add_argument("--stop", choices=["igd", "hv", "none"], help="UL termination monitor")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--omega", type=int)
    p.add_argument("--pop-ul", type=int)
    p.add_argument("--pop-ll", type=int)
    p.add_argument("--max-ll-fe", type=int)
    p.add_argument("--max-ul-fe", type=int)
    p.add_argument("--max-gen", type=int, help="cap on UL generations")
    p.add_argument("--pf-cache-dir", help="directory for cached true fronts")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")

    c = sub.add_parser("compare", help="aggregate finished runs into a comparison report")
    c.add_argument("--out", required=True, help="experiment root directory")
    c.add_argument("--alpha", type=float, default=0.05)

    pl = sub.add_parser("plots", help="emit plotting scripts next to run data")
    pl.add_argument("--out", required=True, help="a run directory or an experiment root")

    pf = sub.add_parser("pf-cache", help="sample and cache a true UL front")
    pf.add_argument("--problem", nargs="+", required=True, choices=PROBLEM_IDS, metavar="ID")
    pf.add_argument("--set", dest="variable_set", default="default", choices=["default", "S1", "S2", "S3"])
    pf.add_argument("-n", type=int, default=1025)
    pf.add_argument("--out", required=True, help="cache directory")
    return parser


def _spec_from_args(args) -> harness.ExperimentSpec:
    if args.config:
        spec = harness.load_experiment(args.config)
    else:
        if not args.problem:
            raise SystemExit("run: --problem or --config is required")
        spec = harness.ExperimentSpec(problems=list(args.problem), seeds=args.seed or [0])
    if args.problem:
        spec.problems = list(args.problem)
    if args.seed:
        spec.seeds = list(args.seed)
    if args.mode:
        spec.modes = list(args.mode)
    if args.variable_set:
        spec.variable_set = args.variable_set
    if args.out:
        spec.out = args.out
    if args.workers:
        spec.workers = args.workers
    for flag, name in _OVERRIDES.items():
        val = getattr(args, flag)
        if val is not None:
            spec.overrides[name] = val
    RunConfig(**spec.overrides)  # fail fast on a bad combination
    spec.__post_init__()
    return spec


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        report = harness.run_experiment(_spec_from_args(args))
        print(json.dumps(report, indent=2, default=float))
        return 1 if report["failed_runs"] else 0
    if args.command == "compare":
        report = harness.compare(args.out, alpha=args.alpha)
        harness.write_report(Path(args.out), report)
        print(json.dumps(report, indent=2, default=float))
        return 0
    if args.command == "plots":
        for path in harness.emit_plots(harness.find_run_dirs(args.out)):
            print(path)
        return 0
    if args.command == "pf-cache":
        for pid in args.problem:
            F = generate_true_pf(make_problem(pid, args.variable_set), args.n, args.out)
            print(f"{pid} {args.variable_set}: {len(F)} points")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
