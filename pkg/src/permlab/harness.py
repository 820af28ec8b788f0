"""Batch experiment runner: suite generation, trials, aggregation, persistence.

A suite is a directory of .pmat files plus a JSON manifest recording each
instance's seed, ones count, and exact permanent. Trials pair a matrix with
an error bound, relaxation factors, and a seed; each trial computes the
exact permanent (Ryser), runs the estimator, and emits one TrialResult.
Results persist as JSON Lines, one record per line, which stays append-safe
when long runs are interrupted; a CSV export serves table-building.

Error accounting: a trial's relative error is max(estimate/exact,
exact/estimate) - 1, the multiplicative form matching the estimator's
(1+eps) guarantee. The ratio is evaluated in exact rational arithmetic
against the integer permanent, never against a float copy of it. Aggregate
rows report the mean error excluding failures, the count of estimates
outside the (1+eps) band excluding failures, the failure count, and the
mean wall time, grouped by instance size.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .exact import permanent_ryser
from .fpras import estimate_permanent
from .matrix import generate_random, load_matrix, save_matrix
from .params import RelaxationFactors
from .rng import RNG_ALGORITHM

SCHEMA_VERSION = "1"

WORKERS_ENV_VAR = "PERMLAB_WORKERS"


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV_VAR)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return 1


@dataclass(frozen=True)
class TrialConfig:
    matrix_path: str
    epsilon: float
    relax: RelaxationFactors
    seed: int
    label: str = ""

    def __post_init__(self) -> None:
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class TrialResult:
    n: int
    ones_count: int
    seed: int
    exact: int
    estimate: float
    rel_error: float | None
    failed: bool
    within_bound: bool | None
    steps_taken: int
    wall_seconds: float
    label: str = ""
    matrix_path: str = ""
    error: str | None = None

    def to_json(self) -> str:
        record = asdict(self)
        record["schema_version"] = SCHEMA_VERSION
        return json.dumps(record, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "TrialResult":
        record = json.loads(line)
        record.pop("schema_version", None)
        return cls(**record)


def relative_error(estimate: float, exact: int) -> float | None:
    """Multiplicative error max(est/exact, exact/est) - 1, or None if undefined."""
    if estimate <= 0 or exact <= 0:
        return None
    ratio = Fraction(estimate) / exact
    worse = max(ratio, 1 / ratio)
    return float(worse - 1)


def within_multiplicative_bound(estimate: float, exact: int, epsilon: float) -> bool | None:
    """Whether exact/(1+eps) <= estimate <= (1+eps) * exact, in exact arithmetic."""
    if estimate <= 0 or exact <= 0:
        return None
    bound = 1 + Fraction(epsilon)
    est = Fraction(estimate)
    return exact / bound <= est <= exact * bound


def run_single_trial(config: TrialConfig) -> TrialResult:
    """One matrix: exact permanent, then a timed estimator run."""
    try:
        m = load_matrix(config.matrix_path)
    except (OSError, ValueError) as exc:
        return TrialResult(
            n=0,
            ones_count=0,
            seed=config.seed,
            exact=0,
            estimate=-1.0,
            rel_error=None,
            failed=True,
            within_bound=None,
            steps_taken=0,
            wall_seconds=0.0,
            label=config.label,
            matrix_path=config.matrix_path,
            error=f"unreadable matrix: {exc}",
        )
    exact = permanent_ryser(m)
    started = time.perf_counter()
    estimate = estimate_permanent(m, config.epsilon, config.relax, config.seed)
    wall = time.perf_counter() - started
    return TrialResult(
        n=m.n,
        ones_count=m.ones_count(),
        seed=config.seed,
        exact=exact,
        estimate=estimate.value,
        rel_error=None if estimate.failed else relative_error(estimate.value, exact),
        failed=estimate.failed,
        within_bound=(
            None
            if estimate.failed
            else within_multiplicative_bound(estimate.value, exact, config.epsilon)
        ),
        steps_taken=estimate.steps_taken,
        wall_seconds=wall,
        label=config.label,
        matrix_path=config.matrix_path,
    )


def run_trials(configs: Sequence[TrialConfig], workers: int | None = None) -> Iterator[TrialResult]:
    """Run trials on a bounded worker pool, yielding results in config order.

    Each trial is seeded independently, so the result set is identical for
    any worker count; yielding in input order keeps persisted output
    byte-stable apart from wall times.
    """
    workers = workers or default_workers()
    if workers <= 1 or len(configs) <= 1:
        for config in configs:
            yield run_single_trial(config)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_single_trial, config) for config in configs]
        for future in futures:
            yield future.result()


def write_results(results: Iterable[TrialResult], path) -> int:
    """Append-safe JSONL writer; returns the number of records written."""
    count = 0
    with open(path, "w", encoding="ascii") as fh:
        for result in results:
            fh.write(result.to_json() + "\n")
            count += 1
    return count


def read_results(path) -> list[TrialResult]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(TrialResult.from_json(line))
    return out


@dataclass(frozen=True)
class SummaryRow:
    group: int
    trials: int
    mean_rel_error: float | None
    misestimates: int
    failures: int
    mean_wall_seconds: float

    def to_dict(self) -> dict:
        record = asdict(self)
        record["schema_version"] = SCHEMA_VERSION
        return record


def aggregate(results: Sequence[TrialResult], group_by: str = "n") -> list[SummaryRow]:
    """Per-group summary rows in ascending group order.

    Failures are excluded from the error mean and the out-of-bound count and
    reported separately. Trials whose error is undefined for benign reasons
    (exact permanent zero) contribute to neither.
    """
    if not results:
        raise ValueError("no results to aggregate")
    if group_by != "n":
        raise ValueError(f"unsupported group key {group_by!r}")
    groups: dict[int, list[TrialResult]] = {}
    for result in results:
        groups.setdefault(result.n, []).append(result)
    rows = []
    for key in sorted(groups):
        bucket = groups[key]
        errors = [r.rel_error for r in bucket if not r.failed and r.rel_error is not None]
        misses = sum(1 for r in bucket if not r.failed and r.within_bound is False)
        failures = sum(1 for r in bucket if r.failed)
        rows.append(
            SummaryRow(
                group=key,
                trials=len(bucket),
                mean_rel_error=(sum(errors) / len(errors)) if errors else None,
                misestimates=misses,
                failures=failures,
                mean_wall_seconds=sum(r.wall_seconds for r in bucket) / len(bucket),
            )
        )
    return rows


def write_summary_csv(rows: Sequence[SummaryRow], path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["group", "trials", "mean_rel_error", "misestimates", "failures", "mean_wall_seconds"]
        )
        for row in rows:
            writer.writerow(
                [
                    row.group,
                    row.trials,
                    "" if row.mean_rel_error is None else f"{row.mean_rel_error:.6f}",
                    row.misestimates,
                    row.failures,
                    f"{row.mean_wall_seconds:.6f}",
                ]
            )


def ones_for_density(n: int, numerator: int, denominator: int) -> int:
    """Ones count for a density fraction of n^2, rounded half to even."""
    return round(Fraction(numerator * n * n, denominator))


def generate_suite(
    sizes: Sequence[int],
    densities: Sequence[tuple[int, int]],
    count: int,
    seed: int,
    out_dir,
) -> dict:
    """Write a suite of random instances plus a manifest.

    ``densities`` holds (numerator, denominator) fractions of n^2. Instance
    seeds derive deterministically from the master seed and the instance
    index. Exact permanents are computed with Ryser and recorded; instances
    are never filtered on the permanent, a zero simply stays in the suite.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    index = 0
    for n in sizes:
        for num, den in densities:
            ones = ones_for_density(n, num, den)
            for _ in range(count):
                instance_seed = seed * 1_000_003 + index
                m = generate_random(n, ones, instance_seed)
                name = f"n{n}_d{num}-{den}_i{index:04d}.pmat"
                save_matrix(m, out_dir / name)
                entries.append(
                    {
                        "path": name,
                        "n": n,
                        "ones": ones,
                        "density": f"{num}/{den}",
                        "seed": instance_seed,
                        "exact_permanent": str(permanent_ryser(m)),
                    }
                )
                index += 1
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "rng": RNG_ALGORITHM,
        "master_seed": seed,
        "count": len(entries),
        "matrices": entries,
    }
    with open(out_dir / "manifest.json", "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def configs_from_manifest(
    manifest_path,
    epsilon: float,
    relax: RelaxationFactors,
    base_seed: int,
    label: str = "",
) -> list[TrialConfig]:
    """One TrialConfig per manifest instance, with derived per-trial seeds."""
    manifest_path = Path(manifest_path)
    with open(manifest_path, "r", encoding="ascii") as fh:
        manifest = json.load(fh)
    configs = []
    for i, entry in enumerate(manifest["matrices"]):
        configs.append(
            TrialConfig(
                matrix_path=str(manifest_path.parent / entry["path"]),
                epsilon=epsilon,
                relax=relax,
                seed=base_seed + i,
                label=label,
            )
        )
    return configs
