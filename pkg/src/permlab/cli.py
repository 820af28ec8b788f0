"""Command-line interface.

Subcommands:

  gen          generate a random instance suite plus manifest
  exact        exact permanent of a .pmat file (Ryser)
  estimate     MCMC estimate of a .pmat file's permanent
  params       sampling parameters for given n and epsilon
  feasibility  step totals versus Ryser operation count, with time projection
  crossover    smallest n where the estimator beats Ryser's operation count
  trials       run a batch of trials from a manifest and a config file
  report       aggregate a results file into summary rows

Every JSON document printed or written carries a schema_version field.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import feasibility as feas
from .exact import permanent_ryser
from .fpras import estimate_permanent
from .harness import (
    SCHEMA_VERSION,
    aggregate,
    configs_from_manifest,
    default_workers,
    generate_suite,
    read_results,
    run_trials,
    write_results,
    write_summary_csv,
)
from .matrix import load_matrix
from .params import RelaxationFactors, compute_params
from .rng import RNG_ALGORITHM


def _emit(payload: dict) -> None:
    payload.setdefault("schema_version", SCHEMA_VERSION)
    json.dump(payload, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


def _parse_relax(text: str) -> RelaxationFactors:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("relax needs four comma-separated factors")
    values = []
    for part in parts:
        value = float(part)
        values.append(int(value) if value.is_integer() else value)
    return RelaxationFactors.from_sequence(values)


def _parse_density(text: str) -> tuple[int, int]:
    num, _, den = text.partition("/")
    if not den:
        raise argparse.ArgumentTypeError(f"density must look like 3/4, got {text!r}")
    return int(num), int(den)


def cmd_gen(args) -> int:
    manifest = generate_suite(
        sizes=[int(s) for s in args.sizes.split(",")],
        densities=[_parse_density(d) for d in args.densities.split(",")],
        count=args.count,
        seed=args.seed,
        out_dir=args.out,
    )
    _emit({"manifest": str(args.out) + "/manifest.json", "count": manifest["count"]})
    return 0


def cmd_exact(args) -> int:
    m = load_matrix(args.matrix)
    _emit({"n": m.n, "permanent": str(permanent_ryser(m))})
    return 0


def cmd_estimate(args) -> int:
    m = load_matrix(args.matrix)
    estimate = estimate_permanent(
        m,
        args.epsilon,
        args.relax,
        seed=args.seed,
        progress=not args.quiet,
    )
    _emit(
        {
            "n": m.n,
            "epsilon": args.epsilon,
            "relax": list(dataclasses.astuple(args.relax)),
            "seed": args.seed,
            "rng": RNG_ALGORITHM,
            "value": estimate.value,
            "log_value": estimate.log_value,
            "y_bar": estimate.y_bar,
            "steps_taken": estimate.steps_taken,
            "failed": estimate.failed,
            "failed_phase": estimate.failed_phase,
            "failure_reason": estimate.failure_reason,
        }
    )
    return 0


def cmd_params(args) -> int:
    params = compute_params(args.n, args.epsilon)
    record = dataclasses.asdict(params)
    record["relax"] = list(dataclasses.astuple(params.relax))
    record["phase_steps"] = params.phase_steps()
    record["final_steps"] = params.final_steps()
    record["total_steps"] = params.total_steps()
    _emit(record)
    return 0


def cmd_feasibility(args) -> int:
    steps = feas.total_steps(args.n, args.epsilon)
    ops = feas.ryser_ops(args.n)
    _emit(
        {
            "n": args.n,
            "epsilon": args.epsilon,
            "total_steps": str(steps),
            "ryser_ops": str(ops),
            "ratio": steps / ops,
            "projected_years": feas.projected_time(steps, args.rate),
            "rate": args.rate,
        }
    )
    return 0


def cmd_crossover(args) -> int:
    _emit({"epsilon": args.epsilon, "crossover": feas.crossover(args.epsilon)})
    return 0


def cmd_trials(args) -> int:
    with open(args.config, "r", encoding="ascii") as fh:
        raw = json.load(fh)
    entries = raw if isinstance(raw, list) else [raw]
    configs = []
    for entry in entries:
        configs.extend(
            configs_from_manifest(
                args.manifest,
                epsilon=entry["epsilon"],
                relax=RelaxationFactors.from_sequence(entry.get("relax", [1, 1, 1, 1])),
                base_seed=entry.get("seed", 0),
                label=entry.get("label", ""),
            )
        )
    count = write_results(run_trials(configs, workers=args.workers), args.out)
    _emit({"trials": count, "out": args.out})
    return 0


def cmd_report(args) -> int:
    rows = aggregate(read_results(args.results), group_by=args.group_by)
    for row in rows:
        _emit(row.to_dict())
    if args.csv:
        write_summary_csv(rows, args.csv)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permlab",
        description="Exact and MCMC-approximate {0,1} matrix permanents",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance suite")
    p.add_argument("--sizes", default="4,6,8,10", help="comma-separated side lengths")
    p.add_argument("--densities", default="3/4,7/8", help="comma-separated fractions of n^2")
    p.add_argument("--count", type=int, default=10, help="instances per (size, density) cell")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("exact", help="exact permanent of a .pmat file")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("estimate", help="MCMC estimate of a .pmat file")
    p.add_argument("matrix")
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument(
        "--relax",
        type=_parse_relax,
        default=RelaxationFactors.identity(),
        help="four divisors: s_phase,t_phase,s_final,t_final",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quiet", action="store_true", help="suppress stage progress on stderr")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("params", help="sampling parameters for n and epsilon")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("feasibility", help="step totals vs Ryser operation count")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--rate", type=float, default=1e9, help="chain steps per second")
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("crossover", help="first n where the estimator beats Ryser")
    p.add_argument("--epsilon", type=float, default=0.5)
    p.set_defaults(func=cmd_crossover)

    p = sub.add_parser("trials", help="run a trial batch from manifest and config")
    p.add_argument("manifest")
    p.add_argument("config", help="JSON object or list: epsilon, relax, seed, label")
    p.add_argument(
        "--workers",
        type=int,
        default=None,
        help="worker processes; default from PERMLAB_WORKERS, else 1",
    )
    p.add_argument("--out", required=True, help="JSONL results path")
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("report", help="aggregate a JSONL results file")
    p.add_argument("results")
    p.add_argument("--group-by", default="n", dest="group_by")
    p.add_argument("--csv", default=None, help="also write summary rows as CSV")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
