"""Experiment orchestration: phased runs, seeding, reference comparison.

Four phases cover the usual benchmarking questions:

* ``convergence``: long runs over a grid of Thompson sample counts.
* ``hparam-grid``: trust-region count x initial edge length grid, with
  per-count boxplot data of final hypervolume.
* ``mfp-compare``: both engines at the default budget, classified
  against the published reference diet.
* ``batch``: batch sizes q in {1,2,3} at matched evaluation budgets.

Each (grid point, engine, seed) run is independent and deterministic,
so phases can fan out over processes; results are ordered by task
index before any report is written.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .blocktext import parse_file
from .errors import SchemaError, ValidationError
from .fixtures import MFP_OBJECTIVES, load_reference_instance, mfp_solution
from .mobo import MoboConfig, run_mobo
from .morbo import MorboConfig, run_morbo
from .pareto import nondominated_mask
from .problem import (
    OBJECTIVE_NAMES,
    ObjectiveVector,
    ProblemInstance,
    load_instance,
    standardize,
)
from .records import RunRecord
from . import reports

PHASES = ("convergence", "hparam-grid", "mfp-compare", "batch")
CATEGORIES = ("none", "C", "L", "E", "CL", "CE", "LE", "CLE")
_DEFAULT_SEEDS = tuple(range(30))
_NTS_GRID = (512, 1024, 2048, 4096)
_NTR_GRID = (2, 5, 8)
_LINIT_GRID = (0.1, 0.2, 0.4)
_Q_GRID = (1, 2, 3)


@dataclass(frozen=True)
class ExperimentConfig:
    phase: str
    engine: str = "morbo"  # morbo, mobo or both
    instance_path: str = "reference"
    seeds: tuple[int, ...] = _DEFAULT_SEEDS
    k: int | None = None   # per-phase default when None
    morbo: MorboConfig = MorboConfig()
    mobo: MoboConfig = MoboConfig()
    n_ts_grid: tuple[int, ...] = _NTS_GRID
    n_tr_grid: tuple[int, ...] = _NTR_GRID
    l_init_grid: tuple[float, ...] = _LINIT_GRID
    q_grid: tuple[int, ...] = _Q_GRID

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ValidationError(f"unknown phase {self.phase!r}; expected one of {PHASES}")
        if self.engine not in ("morbo", "mobo", "both"):
            raise ValidationError(f"unknown engine {self.engine!r}")
        if len(set(self.seeds)) != len(self.seeds) or not self.seeds:
            raise ValidationError("seeds must be non-empty and distinct")
        for grid in (self.n_ts_grid, self.n_tr_grid, self.l_init_grid, self.q_grid):
            if not grid:
                raise ValidationError("grids must be non-empty")

    @property
    def iterations(self) -> int:
        if self.k is not None:
            return self.k
        return 150 if self.phase == "convergence" else 50

    def load_problem(self) -> ProblemInstance:
        if self.instance_path == "reference":
            return load_reference_instance()
        return load_instance(self.instance_path)


def _parse_int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(tok.strip()) for tok in raw.split(",") if tok.strip())


def _parse_float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(tok.strip()) for tok in raw.split(",") if tok.strip())


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Read an experiment file (same block format as instance files)."""
    sections = parse_file(path)
    if "experiment" not in sections:
        raise SchemaError(f"{path}: missing [experiment] section")
    exp = sections["experiment"].entries
    known = {"experiment", "grids", "morbo", "mobo"}
    unknown = set(sections) - known
    if unknown:
        raise SchemaError(f"{path}: unknown section [{sorted(unknown)[0]}]")
    kwargs: dict = {}
    try:
        kwargs["phase"] = exp.get("phase", "")
        if "engine" in exp:
            kwargs["engine"] = exp["engine"]
        if "instance" in exp:
            kwargs["instance_path"] = exp["instance"]
        if "seeds" in exp:
            kwargs["seeds"] = _parse_int_list(exp["seeds"])
        if "k" in exp:
            kwargs["k"] = int(exp["k"])
        grids = sections["grids"].entries if "grids" in sections else {}
        if "n_ts" in grids:
            kwargs["n_ts_grid"] = _parse_int_list(grids["n_ts"])
        if "n_tr" in grids:
            kwargs["n_tr_grid"] = _parse_int_list(grids["n_tr"])
        if "l_init" in grids:
            kwargs["l_init_grid"] = _parse_float_list(grids["l_init"])
        if "q" in grids:
            kwargs["q_grid"] = _parse_int_list(grids["q"])
        morbo_kw: dict = {}
        for key, value in (sections["morbo"].entries if "morbo" in sections else {}).items():
            if key in ("n_trust_regions", "n_thompson", "q", "n_init", "n_features",
                       "thinning", "success_threshold", "failure_threshold"):
                morbo_kw[key] = int(value)
            elif key in ("length_init", "length_max", "length_min", "nu", "ref_margin"):
                morbo_kw[key] = float(value)
            elif key == "sampler":
                morbo_kw[key] = value
            else:
                raise SchemaError(f"{path}: unknown morbo option {key!r}")
        mobo_kw: dict = {}
        for key, value in (sections["mobo"].entries if "mobo" in sections else {}).items():
            if key in ("n_init", "q", "n_mc", "candidate_pool", "pool_thinning"):
                mobo_kw[key] = int(value)
            elif key in ("nu", "ref_margin"):
                mobo_kw[key] = float(value)
            else:
                raise SchemaError(f"{path}: unknown mobo option {key!r}")
        kwargs["morbo"] = MorboConfig(**morbo_kw)
        kwargs["mobo"] = MoboConfig(**mobo_kw)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{path}: bad experiment value ({exc})") from exc
    return ExperimentConfig(**kwargs)


# -- task construction ----------------------------------------------------------------

@dataclass(frozen=True)
class RunTask:
    grid: str
    engine: str
    seed: int
    morbo: MorboConfig | None = None
    mobo: MoboConfig | None = None


def build_tasks(config: ExperimentConfig) -> list[RunTask]:
    k = config.iterations
    tasks: list[RunTask] = []
    engines = ("morbo", "mobo") if config.engine == "both" else (config.engine,)
    if config.phase == "convergence":
        for n_ts in config.n_ts_grid:
            cfg = replace(config.morbo, n_thompson=n_ts, iterations=k)
            for seed in config.seeds:
                tasks.append(RunTask(f"n_ts={n_ts}", "morbo", seed, morbo=cfg))
    elif config.phase == "hparam-grid":
        for n_tr in config.n_tr_grid:
            for l_init in config.l_init_grid:
                cfg = replace(config.morbo, n_trust_regions=n_tr,
                              length_init=l_init, iterations=k)
                grid = f"n_tr={n_tr};l_init={l_init:g}"
                for seed in config.seeds:
                    tasks.append(RunTask(grid, "morbo", seed, morbo=cfg))
    elif config.phase == "mfp-compare":
        for engine in engines:
            for seed in config.seeds:
                if engine == "morbo":
                    tasks.append(RunTask("default", "morbo", seed,
                                         morbo=replace(config.morbo, iterations=k)))
                else:
                    tasks.append(RunTask("default", "mobo", seed,
                                         mobo=replace(config.mobo, iterations=k)))
    else:  # batch
        for q in config.q_grid:
            iters = max(1, math.ceil(k / q))
            cfg = replace(config.morbo, q=q, iterations=iters)
            for seed in config.seeds:
                tasks.append(RunTask(f"q={q}", "morbo", seed, morbo=cfg))
    return tasks


def _execute(args: tuple[str, RunTask]) -> tuple[RunTask, RunRecord | None, str, float]:
    instance_path, task = args
    if instance_path == "reference":
        instance = load_reference_instance()
    else:
        instance = load_instance(instance_path)
    start = time.perf_counter()
    try:
        if task.engine == "morbo":
            record = run_morbo(instance, task.morbo, seed=task.seed)
        else:
            record = run_mobo(instance, task.mobo, seed=task.seed)
        return task, record, "", time.perf_counter() - start
    except Exception as exc:  # noqa: BLE001 - failures are phase results
        return task, None, f"{type(exc).__name__}: {exc}", time.perf_counter() - start


@dataclass
class PhaseResult:
    config: ExperimentConfig
    records: list[tuple[RunTask, RunRecord]] = field(default_factory=list)
    failures: list[tuple[RunTask, str]] = field(default_factory=list)
    timings: list[tuple[RunTask, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_phase(config: ExperimentConfig, out_dir: str | Path,
              workers: int = 1) -> PhaseResult:
    """Execute every (grid point x seed) run and write all reports."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config.load_problem()  # fail fast on a bad instance
    tasks = build_tasks(config)
    args = [(config.instance_path, t) for t in tasks]
    result = PhaseResult(config=config)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_execute, args))
    else:
        outcomes = [_execute(a) for a in args]
    for task, record, error, seconds in outcomes:
        result.timings.append((task, seconds))
        if record is None:
            result.failures.append((task, error))
        else:
            result.records.append((task, record))
    _write_phase_reports(result, out)
    return result


def _series_by_grid(result: PhaseResult) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    groups: dict[str, list[np.ndarray]] = {}
    for task, record in result.records:
        label = task.grid if result.config.engine != "both" else f"{task.engine}"
        groups.setdefault(label, []).append(record.hypervolume_series)
    series = {}
    for label, runs in groups.items():
        n = min(len(r) for r in runs)
        stack = np.array([r[:n] for r in runs])
        series[label] = (stack.mean(axis=0), stack.std(axis=0))
    return series


def _write_phase_reports(result: PhaseResult, out: Path) -> None:
    config = result.config
    tagged = [(task.grid, record) for task, record in result.records]
    reports.write_runs_csv(out, tagged)
    reports.write_summary_csv(out, tagged, config.iterations)
    for task, record in result.records:
        sub = out / task.grid.replace(";", "_") / task.engine
        sub.mkdir(parents=True, exist_ok=True)
        reports.write_archive_csv(sub / f"archive_{task.seed}.csv", record)
        reports.write_history_csv(sub / f"history_{task.seed}.csv", record)
    provenance = (f"phase={config.phase} instance={config.instance_path} "
                  f"k={config.iterations} seeds={','.join(map(str, config.seeds))}")
    series = _series_by_grid(result)
    if series:
        reports.write_convergence_svg(out / f"{config.phase}.svg", series,
                                      title=f"{config.phase} mean hypervolume",
                                      provenance=provenance)
    if config.phase == "hparam-grid":
        _write_boxplot_csvs(result, out)
    if config.phase == "mfp-compare":
        _write_comparison_csv(result, out)
    if result.failures:
        rows = [[t.engine, t.grid, t.seed, msg] for t, msg in result.failures]
        reports.write_csv(out / "failures.csv", ["engine", "grid", "seed", "error"], rows)
    rows = [[t.engine, t.grid, t.seed, round(sec, 3)] for t, sec in result.timings]
    reports.write_csv(out / reports.TIMINGS_FILE, ["engine", "grid", "seed", "seconds"], rows)
    reports.write_manifest(out)


def _write_boxplot_csvs(result: PhaseResult, out: Path) -> None:
    by_ntr: dict[str, list[list]] = {}
    for task, record in result.records:
        ntr_part, linit_part = task.grid.split(";")
        by_ntr.setdefault(ntr_part, []).append(
            [linit_part.split("=")[1], task.seed, record.final.hypervolume])
    for ntr_part, rows in sorted(by_ntr.items()):
        name = f"boxplot_{ntr_part.replace('=', '')}.csv"
        reports.write_csv(out / name, ["l_init", "seed", "hv_final"], rows)


def _write_comparison_csv(result: PhaseResult, out: Path) -> None:
    rows = []
    engines = sorted({task.engine for task, _ in result.records})
    for engine in engines:
        records = [rec for task, rec in result.records if task.engine == engine]
        report = compare_with_reference(records, MFP_OBJECTIVES)
        for chk in report.checkpoints:
            stats = report.tables[chk]
            for cat in CATEGORIES:
                st = stats[cat]
                rows.append([engine, chk, cat, st.percentage, st.count,
                             st.improvements[0], st.improvements[1], st.improvements[2],
                             report.dominating_runs[chk], report.n_runs])
    header = ["engine", "checkpoint", "category", "percentage", "solutions",
              "improvement_cost", "improvement_lysine", "improvement_energy",
              "dominating_runs", "runs"]
    reports.write_csv(out / "comparison.csv", header, rows)


# -- reference comparison ---------------------------------------------------------------

@dataclass(frozen=True)
class CategoryStats:
    percentage: float             # mean over runs of the per-run share
    count: int                    # pooled solutions over all runs
    improvements: tuple[float, float, float]  # mean normalized gain per objective


@dataclass(frozen=True)
class ComparisonReport:
    n_runs: int
    checkpoints: tuple[int, ...]
    ranges: np.ndarray                       # (3, 2) raw min/max per objective
    dominating_runs: dict[int, int]          # checkpoint -> runs with a dominating mix
    tables: dict[int, dict[str, CategoryStats]]
    cumulative: bool


def classify(y_raw, mfp_raw) -> str:
    """Exclusive improvement category of a raw objective vector vs MFP."""
    name = ""
    if y_raw[0] < mfp_raw[0]:
        name += "C"
    if y_raw[1] > mfp_raw[1]:
        name += "L"
    if y_raw[2] > mfp_raw[2]:
        name += "E"
    return name or "none"


def _front_at(record: RunRecord, k: int) -> np.ndarray:
    """Raw objective rows of the non-dominated set after iteration ``k``."""
    keep = record.iteration_of <= k
    Y = record.Y[keep]
    S = standardize(Y)
    above = np.all(S > record.ref_point[None, :], axis=1)
    Y, S = Y[above], S[above]
    if Y.shape[0] == 0:
        return Y
    return Y[nondominated_mask(S)]


def compare_with_reference(records: list[RunRecord], mfp: ObjectiveVector,
                           ranges=None, checkpoints: tuple[int, ...] | None = None,
                           cumulative: bool = False) -> ComparisonReport:
    """Classify each run's non-dominated mixes against the reference diet.

    Categories partition each front by the set of objectives strictly
    improved (``cumulative=True`` instead counts a mix toward every
    subset of its improved set, for comparison with cumulative tables).
    Improvement distances are normalized by the ranges observed across
    all runs unless ``ranges`` is given.
    """
    if not records:
        raise ValidationError("compare_with_reference needs at least one run record")
    names = {r.instance_name for r in records}
    if len(names) > 1:
        raise ValidationError(f"records mix instances: {sorted(names)}")
    if checkpoints is None:
        k_max = min(r.stats[-1].iteration for r in records)
        checkpoints = tuple(c for c in (10, 20, 30, 40, 50) if c <= k_max) or (k_max,)
    if ranges is None:
        all_Y = np.vstack([r.Y for r in records])
        ranges = np.column_stack([all_Y.min(axis=0), all_Y.max(axis=0)])
    ranges = np.asarray(ranges, dtype=float)
    span = ranges[:, 1] - ranges[:, 0]
    if np.any(span <= 0):
        raise ValidationError("comparison ranges must have max > min per objective")
    mfp_raw = mfp.raw
    mfp_std = mfp.standardized
    senses = np.array([-1.0, 1.0, 1.0])

    tables: dict[int, dict[str, CategoryStats]] = {}
    dominating: dict[int, int] = {}
    for chk in checkpoints:
        shares = {cat: [] for cat in CATEGORIES}
        gains: dict[str, list[np.ndarray]] = {cat: [] for cat in CATEGORIES}
        dom_runs = 0
        for record in records:
            front = _front_at(record, chk)
            counts = {cat: 0 for cat in CATEGORIES}
            run_dominates = False
            for y in front:
                cat = classify(y, mfp_raw)
                gain = senses * (y - mfp_raw) / span
                if cumulative and cat != "none":
                    for target in CATEGORIES[1:]:
                        if set(target) <= set(cat):
                            counts[target] += 1
                            gains[target].append(gain)
                else:
                    counts[cat] += 1
                    gains[cat].append(gain)
                s = standardize(y[None, :])[0]
                if np.all(s >= mfp_std) and np.any(s > mfp_std):
                    run_dominates = True
            total = front.shape[0]
            for cat in CATEGORIES:
                shares[cat].append(100.0 * counts[cat] / total if total else 0.0)
            dom_runs += int(run_dominates)
        dominating[chk] = dom_runs
        tables[chk] = {}
        for cat in CATEGORIES:
            pooled = gains[cat]
            if pooled:
                imp = tuple(float(v) for v in np.mean(pooled, axis=0))
            else:
                imp = (float("nan"),) * 3
            tables[chk][cat] = CategoryStats(
                percentage=float(np.mean(shares[cat])),
                count=len(pooled),
                improvements=imp,
            )
    return ComparisonReport(
        n_runs=len(records),
        checkpoints=checkpoints,
        ranges=ranges,
        dominating_runs=dominating,
        tables=tables,
        cumulative=cumulative,
    )


def validate_instance_file(path: str | Path) -> list[str]:
    """Load an instance and run consistency checks; returns report lines.

    Raises on a malformed or infeasible instance.  When the file carries
    the bundled reference ingredients the published baseline diet is
    checked against its known objectives.
    """
    from .polytope import PolytopeSpec, find_interior_point  # local import, cheap

    instance = load_instance(path)
    lines = [f"instance {instance.name}: {instance.dim} ingredients, "
             f"{instance.n_nutrients} nutrient constraints"]
    spec = PolytopeSpec.from_instance(instance)
    x0 = find_interior_point(spec, np.random.default_rng(0))
    lines.append(f"feasible region non-empty (interior point, min slack "
                 f"{float(np.min(spec.slacks(x0))):.2e})")
    reference = load_reference_instance()
    if instance.ingredient_names == reference.ingredient_names:
        x = mfp_solution(instance)
        total = float(np.sum(x))
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"baseline diet proportions sum to {total!r}, not 1")
        from .problem import evaluate as _evaluate  # noqa: PLC0415
        y = _evaluate(instance, x).raw
        target = MFP_OBJECTIVES.raw
        for j, nm in enumerate(OBJECTIVE_NAMES):
            rel = abs(y[j] - target[j]) / abs(target[j])
            if rel > 0.005:
                raise ValidationError(
                    f"baseline diet {nm} is {y[j]:.4f}, expected {target[j]:.4f} "
                    f"({100 * rel:.2f}% off)")
            lines.append(f"baseline {nm}: {y[j]:.4f} vs published {target[j]:.4f} "
                         f"({100 * rel:.3f}% off)")
        lines.append("baseline diet feasible and consistent with published objectives")
    return lines
