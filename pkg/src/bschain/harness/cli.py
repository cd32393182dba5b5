"""Command-line entry point.

Subcommands: ``run`` executes a spec file and writes manifest.json,
summary.json plus CSV tables (exit status reflects pass/fail);
``validate`` checks a spec without running; ``list-experiments`` prints
the registry; ``bench`` times the numba kernels against the numpy
fallback. BSCHAIN_OUT sets the default output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ..errors import BudgetError, ConfigError
from . import experiments
from .config import load_spec
from .report import print_report, write_outputs
from .runner import default_workers, run

OUT_ENV = "BSCHAIN_OUT"


def _default_out(spec) -> Path:
    if spec.output:
        return Path(spec.output)
    base = os.environ.get(OUT_ENV, "bschain-out")
    return Path(base) / spec.experiment.lower()


def _cmd_run(args) -> int:
    spec = load_spec(args.spec, experiments.REGISTRY)
    if args.seed is not None:
        spec.seed = args.seed
    exp = experiments.REGISTRY[spec.experiment]
    params = exp.resolve_params(spec.params)
    projected = exp.projected_events(params)
    if args.check:
        print(f"{spec.experiment}: {exp.title}")
        print(f"  seed: {spec.seed}")
        print(f"  projected swap events: {projected:.3g} (budget {spec.budget_max_events:.3g})")
        for key in sorted(params):
            print(f"  {key}: {params[key]}")
        return 0
    workers = args.workers if args.workers else (spec.workers or default_workers())
    report = run(spec, workers=workers)
    out = Path(args.out) if args.out else _default_out(spec)
    write_outputs(report, out)
    print_report(report)
    print(f"outputs written to {out}")
    return 0 if report.passed else 1


def _cmd_validate(args) -> int:
    spec = load_spec(args.spec, experiments.REGISTRY)
    exp = experiments.REGISTRY[spec.experiment]
    params = exp.resolve_params(spec.params)
    print(f"{args.spec}: valid spec for {spec.experiment} ({exp.title})")
    print(f"projected swap events: {exp.projected_events(params):.3g}")
    return 0


def _cmd_list(_args) -> int:
    for exp_id in sorted(experiments.REGISTRY):
        exp = experiments.REGISTRY[exp_id]
        criteria = ", ".join(f"#{c}" for c in exp.criteria)
        print(f"{exp_id}: {exp.title} (acceptance {criteria})")
    return 0


def _cmd_bench(args) -> int:
    from .. import bench

    bench.main(n=args.n, events=args.events, repeats=args.repeats)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bschain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment spec")
    p_run.add_argument("spec", help="path to a YAML spec file")
    p_run.add_argument("--out", help="output directory (default: spec output or $BSCHAIN_OUT)")
    p_run.add_argument("--seed", type=int, help="override the spec seed")
    p_run.add_argument("--workers", type=int, help="replica worker threads")
    p_run.add_argument("--check", action="store_true",
                       help="validate, print the resolved plan and budget, do not run")
    p_run.set_defaults(fn=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a spec file")
    p_val.add_argument("spec")
    p_val.set_defaults(fn=_cmd_validate)

    p_list = sub.add_parser("list-experiments", help="list experiment ids")
    p_list.set_defaults(fn=_cmd_list)

    p_bench = sub.add_parser("bench", help="compare numba and numpy kernel paths")
    p_bench.add_argument("--n", type=int, default=64)
    p_bench.add_argument("--events", type=int, default=100_000)
    p_bench.add_argument("--repeats", type=int, default=3)
    p_bench.set_defaults(fn=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
