"""Report emission: CSV tables, convergence SVGs and a hashed manifest.

Everything written here is a pure function of the run records, so
re-running a phase with the same config and seeds reproduces every file
byte for byte.  The one exception, wall-clock timings, goes to a
``timings.csv`` sidecar that is excluded from the manifest.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .problem import OBJECTIVE_NAMES
from .records import RunRecord

TIMINGS_FILE = "timings.csv"
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
            "#17becf", "#bcbd22", "#e377c2")


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise ValidationError(f"cannot write report file {path}: {exc}") from exc


def run_rows(grid: str, record: RunRecord) -> list[list]:
    rows = []
    for s in record.stats:
        rows.append([record.seed, record.algorithm, grid, s.iteration, s.evaluations,
                     s.hypervolume, s.cardinality, s.diversity])
    return rows


def write_runs_csv(out_dir: Path, tagged: list[tuple[str, RunRecord]]) -> None:
    header = ["seed", "engine", "grid", "iteration", "evaluations",
              "hypervolume", "cardinality", "dir"]
    rows: list[list] = []
    for grid, record in tagged:
        rows.extend(run_rows(grid, record))
    write_csv(out_dir / "runs.csv", header, rows)


def write_archive_csv(path: Path, record: RunRecord) -> None:
    d = record.X.shape[1]
    header = [f"x{i}" for i in range(d)] + list(OBJECTIVE_NAMES)
    rows = []
    for entry in record.archive.entries:
        x = entry.solution
        rows.append([float(v) for v in x] + [float(v) for v in entry.objectives.raw])
    write_csv(path, header, rows)


def write_history_csv(path: Path, record: RunRecord) -> None:
    d = record.X.shape[1]
    header = (["iteration", "origin"] + [f"x{i}" for i in range(d)]
              + list(OBJECTIVE_NAMES) + ["ref_cost", "ref_lysine", "ref_energy"])
    rows = []
    for i in range(record.X.shape[0]):
        rows.append([int(record.iteration_of[i]), int(record.origin[i])]
                    + [float(v) for v in record.X[i]]
                    + [float(v) for v in record.Y[i]]
                    + [float(v) for v in record.ref_point])
    write_csv(path, header, rows)


def load_history_csv(path: Path) -> dict:
    """Inverse of write_history_csv, for the standalone compare command."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    d = sum(1 for h in header if h.startswith("x"))
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if data.size == 0:
        raise ValidationError(f"history file {path} has no observations")
    return {
        "iteration_of": data[:, 0].astype(int),
        "origin": data[:, 1].astype(int),
        "X": data[:, 2:2 + d],
        "Y": data[:, 2 + d:5 + d],
        "ref_point": data[0, 5 + d:8 + d],
    }


def checkpoints_for(k: int) -> tuple[int, ...]:
    pts = [c for c in range(10, k + 1, 10)]
    if not pts or pts[-1] != k:
        pts.append(k)
    return tuple(pts)


def write_summary_csv(out_dir: Path, tagged: list[tuple[str, RunRecord]], k: int) -> None:
    header = ["engine", "grid", "checkpoint", "runs",
              "hv_mean", "hv_std", "cardinality_mean", "cardinality_std",
              "dir_mean", "dir_std"]
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for grid, record in tagged:
        groups.setdefault((record.algorithm, grid), []).append(record)
    rows = []
    for (engine, grid) in sorted(groups):
        records = groups[(engine, grid)]
        for chk in checkpoints_for(k):
            stats = [r.stats[min(chk, len(r.stats) - 1)] for r in records]
            hv = np.array([s.hypervolume for s in stats])
            card = np.array([s.cardinality for s in stats], dtype=float)
            div = np.array([s.diversity for s in stats])
            rows.append([engine, grid, chk, len(records),
                         float(hv.mean()), float(hv.std()),
                         float(card.mean()), float(card.std()),
                         float(div.mean()), float(div.std())])
    write_csv(out_dir / "summary.csv", header, rows)


# -- SVG ---------------------------------------------------------------------------

def _polyline(points: list[tuple[float, float]]) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in points)


def write_convergence_svg(path: Path, series: dict[str, tuple[np.ndarray, np.ndarray]],
                          title: str, provenance: str,
                          ylabel: str = "hypervolume") -> None:
    """Mean line with a +-1 std band per labelled series.

    ``series`` maps label -> (mean, std) arrays over iterations.
    """
    width, height = 720.0, 480.0
    left, right, top, bottom = 70.0, 690.0, 50.0, 420.0
    labels = sorted(series)
    n_pts = max((len(series[lb][0]) for lb in labels), default=2)
    all_lo = [series[lb][0] - series[lb][1] for lb in labels]
    all_hi = [series[lb][0] + series[lb][1] for lb in labels]
    y_min = min((float(np.nanmin(a)) for a in all_lo), default=0.0)
    y_max = max((float(np.nanmax(a)) for a in all_hi), default=1.0)
    if not (y_max > y_min):
        y_max = y_min + 1.0
    pad = 0.05 * (y_max - y_min)
    y_min, y_max = y_min - pad, y_max + pad

    def sx(i: float) -> float:
        return left + (right - left) * (i / max(n_pts - 1, 1))

    def sy(v: float) -> float:
        return bottom - (bottom - top) * ((v - y_min) / (y_max - y_min))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width:.0f} {height:.0f}">',
        f"<!-- {provenance} -->",
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<text x="{(left + right) / 2:.2f}" y="28" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
        f'<line x1="{left:.2f}" y1="{bottom:.2f}" x2="{right:.2f}" y2="{bottom:.2f}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{left:.2f}" y1="{top:.2f}" x2="{left:.2f}" y2="{bottom:.2f}" '
        'stroke="black" stroke-width="1"/>',
        f'<text x="{(left + right) / 2:.2f}" y="{height - 12:.2f}" text-anchor="middle" '
        'font-family="sans-serif" font-size="13">iteration</text>',
        f'<text x="20" y="{(top + bottom) / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 20 {(top + bottom) / 2:.2f})">{ylabel}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        yv = y_min + frac * (y_max - y_min)
        yy = sy(yv)
        xv = frac * (n_pts - 1)
        xx = sx(xv)
        parts.append(f'<line x1="{left - 4:.2f}" y1="{yy:.2f}" x2="{left:.2f}" y2="{yy:.2f}" '
                     'stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{left - 8:.2f}" y="{yy + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{yv:.3g}</text>')
        parts.append(f'<line x1="{xx:.2f}" y1="{bottom:.2f}" x2="{xx:.2f}" y2="{bottom + 4:.2f}" '
                     'stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{xx:.2f}" y="{bottom + 18:.2f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{xv:.0f}</text>')
    for pos, label in enumerate(labels):
        mean, std = series[label]
        color = _PALETTE[pos % len(_PALETTE)]
        idx = [i for i in range(len(mean)) if not math.isnan(mean[i])]
        if not idx:
            continue
        band = ([(sx(i), sy(mean[i] + std[i])) for i in idx]
                + [(sx(i), sy(mean[i] - std[i])) for i in reversed(idx)])
        parts.append(f'<polygon points="{_polyline(band)}" fill="{color}" opacity="0.15"/>')
        line = [(sx(i), sy(mean[i])) for i in idx]
        parts.append(f'<polyline points="{_polyline(line)}" fill="none" '
                     f'stroke="{color}" stroke-width="1.8"/>')
        ly = top + 16 + 18 * pos
        parts.append(f'<line x1="{right - 150:.2f}" y1="{ly:.2f}" x2="{right - 126:.2f}" '
                     f'y2="{ly:.2f}" stroke="{color}" stroke-width="3"/>')
        parts.append(f'<text x="{right - 120:.2f}" y="{ly + 4:.2f}" '
                     f'font-family="sans-serif" font-size="12">{label}</text>')
    parts.append("</svg>")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(parts) + "\n")
    except OSError as exc:
        raise ValidationError(f"cannot write report file {path}: {exc}") from exc


# -- manifest -----------------------------------------------------------------------

def write_manifest(out_dir: Path) -> Path:
    """Hash every report file except the timing sidecar."""
    entries = []
    for path in sorted(out_dir.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(out_dir).as_posix()
        if rel in ("manifest.csv", TIMINGS_FILE):
            continue
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        entries.append([rel, digest])
    write_csv(out_dir / "manifest.csv", ["path", "sha256"], entries)
    return out_dir / "manifest.csv"
