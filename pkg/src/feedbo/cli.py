"""Command line entry points.

Three subcommands::

    feedbo run --phase convergence --config exp.txt --out results/ [--workers 4] [--seeds 0,1,2]
    feedbo compare --runs results/ [--mfp reference.txt] [--cumulative]
    feedbo validate-instance --file instance.txt

Exit codes: 0 on success, 1 when any run in a phase failed, 2 for
configuration or instance errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .blocktext import parse_file
from .errors import SchemaError, ValidationError
from .fixtures import MFP_OBJECTIVES
from .harness import (
    CATEGORIES,
    ExperimentConfig,
    compare_with_reference,
    load_experiment_config,
    run_phase,
    validate_instance_file,
)
from .pareto import ParetoArchive
from .problem import ObjectiveVector
from .records import IterationStats, RunRecord
from .reports import load_history_csv


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feedbo",
        description="Multi-objective feed formulation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment phase")
    p_run.add_argument("--phase", required=True,
                       help="convergence, hparam-grid, mfp-compare or batch")
    p_run.add_argument("--config", required=True, help="experiment config file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes (default 1)")
    p_run.add_argument("--seeds", default=None,
                       help="comma-separated seed override, e.g. 0,1,2")

    p_cmp = sub.add_parser("compare", help="classify phase output against the reference diet")
    p_cmp.add_argument("--runs", required=True, help="phase output directory")
    p_cmp.add_argument("--mfp", default=None,
                       help="reference objectives file (defaults to the bundled diet)")
    p_cmp.add_argument("--cumulative", action="store_true",
                       help="count each mix toward every improved-objective subset")

    p_val = sub.add_parser("validate-instance", help="check an instance file")
    p_val.add_argument("--file", required=True, help="instance file path")
    return parser


def _parse_seeds(raw: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(tok.strip()) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise SchemaError(f"bad --seeds value {raw!r}") from exc
    if not seeds:
        raise SchemaError("--seeds must name at least one seed")
    return seeds


def _cmd_run(args) -> int:
    config = load_experiment_config(args.config)
    if config.phase != args.phase:
        # the flag wins; the config file just has to agree or stay silent
        config = replace(config, phase=args.phase)
    if args.seeds is not None:
        config = replace(config, seeds=_parse_seeds(args.seeds))
    if args.workers < 1:
        raise SchemaError("--workers must be >= 1")
    result = run_phase(config, args.out, workers=args.workers)
    n = len(result.records)
    print(f"phase {config.phase}: {n} run(s) complete, "
          f"{len(result.failures)} failed, reports in {args.out}")
    for task, message in result.failures:
        print(f"  FAILED {task.engine} {task.grid} seed={task.seed}: {message}",
              file=sys.stderr)
    return 0 if result.ok else 1


def load_reference_objectives(path: str | Path) -> ObjectiveVector:
    """Read a [reference] block with cost, lysine and energy entries."""
    sections = parse_file(path)
    if "reference" not in sections:
        raise SchemaError(f"{path}: missing [reference] section")
    entries = sections["reference"].entries
    try:
        raw = [float(entries[name]) for name in ("cost", "lysine", "energy")]
    except KeyError as exc:
        raise SchemaError(f"{path}: [reference] is missing {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise SchemaError(f"{path}: bad reference value ({exc})") from exc
    return ObjectiveVector(np.array(raw))


def _records_from_dir(runs_dir: Path) -> list[tuple[str, RunRecord]]:
    """Rebuild comparable records from history CSVs under a phase directory."""
    found = sorted(runs_dir.glob("*/*/history_*.csv"))
    records = []
    for path in found:
        engine = path.parent.name
        seed = int(path.stem.split("_")[1])
        data = load_history_csv(path)
        k_last = int(np.max(data["iteration_of"])) if data["iteration_of"].size else 0
        stats = [IterationStats(
            iteration=k_last, evaluations=int(data["Y"].shape[0]),
            hypervolume=float("nan"), cardinality=0, diversity=float("nan"),
            no_improvement=0, trust_region_lengths=(), restarts=0)]
        records.append((engine, RunRecord(
            algorithm=engine, instance_name="(history)", seed=seed,
            ref_point=data["ref_point"], stats=stats,
            X=data["X"], Y=data["Y"], iteration_of=data["iteration_of"],
            origin=data["origin"], archive=ParetoArchive(ref_point=data["ref_point"]),
        )))
    if not records:
        raise ValidationError(f"{runs_dir}: no history_<seed>.csv files found")
    return records


def _print_comparison(engine: str, report) -> None:
    print(f"engine {engine}: {report.n_runs} run(s), "
          f"checkpoints {', '.join(map(str, report.checkpoints))}")
    chk = report.checkpoints[-1]
    stats = report.tables[chk]
    print(f"  at k={chk}: {report.dominating_runs[chk]}/{report.n_runs} "
          f"run(s) contain a mix dominating the reference diet")
    header = f"  {'category':>8} {'share %':>8} {'mixes':>6} " \
             f"{'d_cost':>8} {'d_lysine':>9} {'d_energy':>9}"
    print(header)
    for cat in CATEGORIES:
        st = stats[cat]
        imps = " ".join(
            f"{v:>8.4f}" if not math.isnan(v) else f"{'-':>8}"
            for v in st.improvements)
        print(f"  {cat:>8} {st.percentage:>8.2f} {st.count:>6} {imps}")


def _cmd_compare(args) -> int:
    runs_dir = Path(args.runs)
    if not runs_dir.is_dir():
        raise SchemaError(f"{runs_dir}: not a directory")
    mfp = MFP_OBJECTIVES if args.mfp is None else load_reference_objectives(args.mfp)
    tagged = _records_from_dir(runs_dir)
    engines = sorted({engine for engine, _ in tagged})
    for engine in engines:
        records = [rec for eng, rec in tagged if eng == engine]
        report = compare_with_reference(records, mfp, cumulative=args.cumulative)
        _print_comparison(engine, report)
    return 0


def _cmd_validate(args) -> int:
    for line in validate_instance_file(args.file):
        print(line)
    print("instance OK")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_validate(args)
    except (SchemaError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
