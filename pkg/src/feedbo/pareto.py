"""Pareto tooling: dominance, archive, exact hypervolume, diversity.

All functions operate on *standardized* objective vectors (every
coordinate maximized).  Hypervolume is computed exactly for two or
three objectives:

* m = 2: staircase sweep over points sorted by the first coordinate.
* m = 3: sweep over the sorted third coordinate; each slab contributes
  the 2-D staircase area of the points above it times its thickness.

The same 3-D sweep yields every point's exclusive contribution (HVC) in
one pass, and a box decomposition of the region *not* dominated by a
front supports vectorized hypervolume improvement (HVI) over large
candidate batches.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ValidationError
from .problem import ObjectiveVector


def dominates(a, b) -> bool:
    """Weak Pareto dominance for maximization: a >= b and a != b somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return bool(np.all(a >= b) and np.any(a > b))


def nondominated_mask(Y) -> np.ndarray:
    """Boolean mask of rows of ``Y`` not dominated by any other row.

    Exact duplicates are all kept (they do not dominate each other).
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Y.shape[0]
    if n == 0:
        return np.zeros(0, dtype=bool)
    ge = np.all(Y[:, None, :] >= Y[None, :, :], axis=2)
    gt = np.any(Y[:, None, :] > Y[None, :, :], axis=2)
    dominated = np.any(ge & gt, axis=0)  # dominated[j]: some i dominates j
    return ~dominated


def _check_front(front, r, what: str) -> tuple[np.ndarray, np.ndarray]:
    front = np.atleast_2d(np.asarray(front, dtype=float))
    r = np.asarray(r, dtype=float)
    if front.size == 0:
        front = front.reshape(0, r.size)
    m = front.shape[1]
    if m != r.size:
        raise ValidationError(f"{what}: front has {m} objectives, reference point {r.size}")
    if m not in (2, 3):
        raise ValidationError(f"{what}: only 2 or 3 objectives supported, got {m}")
    bad = np.nonzero(np.any(front < r, axis=1))[0]
    if bad.size:
        raise ValidationError(
            f"{what}: point {front[bad[0]].tolist()} does not dominate the "
            f"reference point {r.tolist()}"
        )
    return front, r


def _hv2d(points: np.ndarray, r: np.ndarray) -> float:
    """Area dominated by ``points`` above ``r`` (handles dominated rows)."""
    if points.shape[0] == 0:
        return 0.0
    order = np.lexsort((-points[:, 1], -points[:, 0]))  # x desc, then y desc
    hv = 0.0
    y_best = r[1]
    for i in order:
        x, y = points[i]
        if y > y_best:
            hv += (x - r[0]) * (y - y_best)
            y_best = y
    return float(hv)


def _staircase(points: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Indices of the strictly non-dominated 2-D staircase, x descending.

    A row weakly dominated by any *other* row (including an exact
    duplicate) is excluded.
    """
    n = points.shape[0]
    ge = np.all(points[:, None, :] >= points[None, :, :], axis=2)
    np.fill_diagonal(ge, False)
    keep = ~np.any(ge, axis=0)
    idx = np.nonzero(keep)[0]
    if idx.size == 0:
        return idx
    order = np.argsort(-points[idx, 0], kind="stable")
    return idx[order]


def _exclusive_areas(pts: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exclusive 2-D area of each strict-staircase member of ``pts``.

    The staircase rectangle between a member's neighbours is not all
    exclusive: other points of ``pts`` (including ones the member
    dominates) may cover part of it, and that part survives when the
    member is removed.  Clip the others into the rectangle and subtract
    their union.  Exact 2-D duplicates are off the strict staircase and
    own nothing.
    """
    stair = _staircase(pts, r)
    areas = np.zeros(stair.size)
    if stair.size == 0:
        return stair, areas
    xs = pts[stair, 0]
    ys = pts[stair, 1]
    x_next = np.append(xs[1:], r[0])
    y_prev = np.concatenate(([r[1]], ys[:-1]))
    for i in range(stair.size):
        rect = (xs[i] - x_next[i]) * (ys[i] - y_prev[i])
        cx = np.minimum(pts[:, 0], xs[i])
        cy = np.minimum(pts[:, 1], ys[i])
        keep = (cx > x_next[i]) & (cy > y_prev[i])
        keep[stair[i]] = False
        if np.any(keep):
            inner = np.column_stack([cx[keep], cy[keep]])
            rect -= _hv2d(inner, np.array([x_next[i], y_prev[i]]))
        areas[i] = max(rect, 0.0)
    return stair, areas


def _sweep3d(front: np.ndarray, r: np.ndarray) -> tuple[float, np.ndarray]:
    """One z-descending sweep returning (hypervolume, per-point HVC)."""
    n = front.shape[0]
    contrib = np.zeros(n)
    if n == 0:
        return 0.0, contrib
    z = front[:, 2]
    levels = np.unique(z)[::-1]
    hv = 0.0
    for k, level in enumerate(levels):
        lower = levels[k + 1] if k + 1 < levels.size else r[2]
        thickness = level - lower
        if thickness <= 0:
            continue
        active = np.nonzero(z >= level)[0]
        pts = front[active, :2]
        hv += _hv2d(pts, r[:2]) * thickness
        stair, areas = _exclusive_areas(pts, r[:2])
        contrib[active[stair]] += areas * thickness
    return float(hv), contrib


def hypervolume_exact(front, r) -> float:
    """Exact hypervolume of the region dominated by ``front`` above ``r``.

    Every point must weakly dominate ``r``; dominated and duplicate
    points are permitted (they simply add no volume).
    """
    front, r = _check_front(front, r, "hypervolume_exact")
    if front.shape[0] == 0:
        return 0.0
    if front.shape[1] == 2:
        return _hv2d(front, r)
    return _sweep3d(front, r)[0]


def hypervolume_mc(front, r, n: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo hypervolume estimate with its standard error.

    Samples uniformly in the bounding box spanned by ``r`` and the
    componentwise maximum of the front.
    """
    front, r = _check_front(front, r, "hypervolume_mc")
    if front.shape[0] == 0:
        return 0.0, 0.0
    upper = front.max(axis=0)
    vol_box = float(np.prod(upper - r))
    if vol_box <= 0:
        return 0.0, 0.0
    draws = r + rng.random((n, r.size)) * (upper - r)
    dominated = np.any(np.all(draws[:, None, :] <= front[None, :, :], axis=2), axis=1)
    p = dominated.mean()
    est = vol_box * float(p)
    se = vol_box * float(np.sqrt(p * (1 - p) / n))
    return est, se


def hvi(front, y, r) -> float:
    """Hypervolume improvement HV(front + {y}) - HV(front); ``y`` must
    weakly dominate ``r``."""
    front, r = _check_front(front, r, "hvi")
    y = np.asarray(y, dtype=float)
    if np.any(y < r):
        raise ValidationError(f"hvi: point {y.tolist()} does not dominate {r.tolist()}")
    base = hypervolume_exact(front, r) if front.shape[0] else 0.0
    joint = hypervolume_exact(np.vstack([front, y[None, :]]), r)
    return max(joint - base, 0.0)


def hvc(front, r) -> np.ndarray:
    """Exclusive hypervolume contribution of every front member.

    Equals ``HV(front) - HV(front without the point)``; exact duplicates
    both get zero.
    """
    front, r = _check_front(front, r, "hvc")
    n = front.shape[0]
    if n == 0:
        return np.zeros(0)
    if front.shape[1] == 3:
        return _sweep3d(front, r)[1]
    contrib = np.zeros(n)
    stair, areas = _exclusive_areas(front, r)
    contrib[stair] = areas
    return contrib


@dataclass(frozen=True)
class NondominatedBoxes:
    """Axis-aligned box decomposition of the region above ``r`` that is
    *not* dominated by a front.

    ``hvi_many`` then scores arbitrary candidate batches: the HVI of a
    candidate is the volume of the part of its dominated box that falls
    inside these boxes.  Upper box corners may be ``+inf``; candidates
    below the reference point in any coordinate score zero.
    """

    lo: np.ndarray  # (K, m)
    hi: np.ndarray  # (K, m)
    r: np.ndarray
    front: np.ndarray  # deduplicated non-dominated rows, for the dominance pre-filter

    @classmethod
    def build(cls, front, r) -> "NondominatedBoxes":
        front, r = _check_front(front, r, "NondominatedBoxes")
        m = front.shape[1]
        front = front[nondominated_mask(front)]
        if front.shape[0]:
            front = np.unique(front, axis=0)  # duplicates would break the staircase
        los: list[np.ndarray] = []
        his: list[np.ndarray] = []
        inf = np.inf
        if front.shape[0] == 0:
            los.append(r.copy())
            his.append(np.full(m, inf))
        elif m == 2:
            stair = _staircase(front, r)
            xs = front[stair, 0]
            ys = front[stair, 1]
            los.append(np.array([xs[0], r[1]]))
            his.append(np.array([inf, inf]))
            x_next = np.append(xs[1:], r[0])
            for i in range(stair.size):
                los.append(np.array([x_next[i], ys[i]]))
                his.append(np.array([xs[i], inf]))
        else:
            z = front[:, 2]
            levels = np.unique(z)[::-1]
            for k, level in enumerate(levels):
                z_lo = levels[k + 1] if k + 1 < levels.size else r[2]
                active = front[z >= level, :2]
                stair = _staircase(active, r[:2])
                xs = active[stair, 0]
                ys = active[stair, 1]
                los.append(np.array([xs[0], r[1], z_lo]))
                his.append(np.array([inf, inf, level]))
                x_next = np.append(xs[1:], r[0])
                for i in range(stair.size):
                    los.append(np.array([x_next[i], ys[i], z_lo]))
                    his.append(np.array([xs[i], inf, level]))
            # everything above the top level is undominated
            los.append(np.array([r[0], r[1], levels[0]]))
            his.append(np.array([inf, inf, inf]))
        return cls(lo=np.array(los), hi=np.array(his), r=r, front=front)

    def hvi_many(self, Y) -> np.ndarray:
        """HVI of each row of ``Y`` against the decomposed front.

        Candidates weakly dominated by the front (or not strictly above
        the reference point) score zero and skip the box sums, which is
        the common case for posterior draws once the front has filled in.
        """
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        n = Y.shape[0]
        out = np.zeros(n)
        if n == 0:
            return out
        alive = np.all(Y > self.r, axis=1)
        if self.front.shape[0]:
            idx = np.nonzero(alive)[0]
            chunk = max(1, int(3_000_000 // max(self.front.shape[0], 1)))
            for start in range(0, idx.size, chunk):
                rows = idx[start:start + chunk]
                ge = np.all(self.front[None, :, :] >= Y[rows, None, :], axis=2)
                alive[rows] &= ~np.any(ge, axis=1)
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            return out
        chunk = max(1, int(2_000_000 // max(self.lo.shape[0], 1)))
        lo = np.maximum(self.lo, self.r)
        for start in range(0, idx.size, chunk):
            rows = idx[start:start + chunk]
            hi = np.minimum(Y[rows, None, :], self.hi[None, :, :])
            edge = np.clip(hi - lo[None, :, :], 0.0, None)
            out[rows] = np.prod(edge, axis=2).sum(axis=1)
        return out


@dataclass(frozen=True)
class ArchiveEntry:
    solution: np.ndarray | None
    objectives: ObjectiveVector


@dataclass(frozen=True)
class ParetoArchive:
    """Immutable archive of mutually non-dominated standardized vectors,
    all strictly above the fixed reference point."""

    ref_point: np.ndarray
    entries: tuple[ArchiveEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ref_point", np.asarray(self.ref_point, dtype=float))

    @property
    def cardinality(self) -> int:
        return len(self.entries)

    @property
    def front(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, self.ref_point.size))
        return np.array([e.objectives.standardized for e in self.entries])

    @property
    def solutions(self) -> np.ndarray | None:
        if not self.entries or self.entries[0].solution is None:
            return None
        return np.array([e.solution for e in self.entries])

    def hypervolume(self) -> float:
        return hypervolume_exact(self.front, self.ref_point) if self.entries else 0.0


def update_archive(archive: ParetoArchive, objectives: ObjectiveVector,
                   solution: np.ndarray | None = None) -> tuple[ParetoArchive, str]:
    """Insert a candidate, returning the new archive and a status flag.

    Flags: ``added``, ``dominated`` (an entry weakly dominates it),
    ``duplicate`` (standardized vector already present, keeps the
    archive idempotent) and ``below_reference`` (does not strictly
    dominate the reference point; rejected, not an error).
    """
    y = objectives.standardized
    if y.size != archive.ref_point.size:
        raise ValidationError("candidate dimension does not match the archive")
    if not np.all(y > archive.ref_point):
        return archive, "below_reference"
    for entry in archive.entries:
        other = entry.objectives.standardized
        if np.array_equal(other, y):
            return archive, "duplicate"
        if dominates(other, y):
            return archive, "dominated"
    kept = tuple(e for e in archive.entries if not dominates(y, e.objectives.standardized))
    entry = ArchiveEntry(
        solution=None if solution is None else np.asarray(solution, dtype=float).copy(),
        objectives=objectives,
    )
    return ParetoArchive(ref_point=archive.ref_point, entries=kept + (entry,)), "added"


def reference_point(observations, margin: float = 0.1) -> np.ndarray:
    """Reference point below all observations.

    ``r_j = min_j - margin * (range_j + 1e-6)``; the tiny offset keeps
    ``r`` strictly below even a single repeated observation.
    """
    Y = np.atleast_2d(np.asarray(observations, dtype=float))
    if Y.shape[0] == 0:
        raise ValidationError("reference_point needs at least one observation")
    lo = Y.min(axis=0)
    rng_ = Y.max(axis=0) - lo
    return lo - margin * (rng_ + 1e-6)


def reference_vectors(u: int, m: int = 3) -> np.ndarray:
    """Unit reference vectors from a simplex lattice.

    Uses the lattice resolution whose point count is closest to ``u``
    (ties resolved toward the coarser lattice); ``u = 78`` with three
    objectives hits resolution 11 exactly.
    """
    if m < 2:
        raise ValidationError("reference_vectors needs m >= 2")
    if u < m:
        raise ValidationError(f"need at least m = {m} reference vectors, got u = {u}")
    def count(h: int) -> int:
        return comb(h + m - 1, m - 1)
    h = 1
    best_h, best_gap = 1, abs(count(1) - u)
    while count(h) < u + 1:
        gap = abs(count(h) - u)
        if gap < best_gap:
            best_h, best_gap = h, gap
        h += 1
    if abs(count(h) - u) < best_gap:
        best_h = h
    h = best_h
    pts = []
    if m == 2:
        for i in range(h + 1):
            pts.append((i, h - i))
    else:
        for i in range(h + 1):
            for j in range(h - i + 1):
                pts.append((i, j, h - i - j))
    V = np.array(pts, dtype=float) / h
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    return V


def coverage(front, vectors) -> np.ndarray:
    """Count, per front member, the reference vectors nearest to it.

    The front is min-max normalized per objective before measuring
    angular distance; a zero-range objective normalizes to 0.  Ties go
    to the lowest front index.
    """
    front = np.atleast_2d(np.asarray(front, dtype=float))
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    t = front.shape[0]
    lo = front.min(axis=0)
    span = front.max(axis=0) - lo
    normed = np.where(span > 1e-12, (front - lo) / np.where(span > 1e-12, span, 1.0), 0.0)
    norms = np.linalg.norm(normed, axis=1)
    safe = np.where(norms > 1e-12, norms, 1.0)
    cos = (normed @ V.T) / (safe[:, None] * np.linalg.norm(V, axis=1)[None, :])
    cos = np.where(norms[:, None] > 1e-12, cos, -1.0)
    nearest = np.argmax(cos, axis=0)  # first maximum wins ties
    counts = np.zeros(t, dtype=int)
    for i in nearest:
        counts[i] += 1
    return counts


def dir_from_coverage(counts, u: int) -> float:
    """Diversity indicator from a coverage vector (lower is better).

    ``DIR = population_std(counts) / ((u / t) * sqrt(t - 1))``.
    """
    counts = np.asarray(counts, dtype=float)
    t = counts.size
    if t < 2:
        raise ValidationError("DIR is undefined for fronts with fewer than 2 points")
    std = float(np.sqrt(np.mean((counts - counts.mean()) ** 2)))
    return std / ((u / t) * np.sqrt(t - 1))


def dir_metric(front, vectors) -> float:
    """DIR diversity of a front against a reference vector set."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    return dir_from_coverage(coverage(front, V), V.shape[0])


def improvement_distance(y, baseline, ranges, senses=(-1.0, 1.0, 1.0)) -> np.ndarray:
    """Per-objective improvement of ``y`` over ``baseline`` in raw units.

    ``d_j = (y_j - baseline_j) / (max_j - min_j)``, sign-flipped for
    minimized objectives so positive always means better.
    """
    y = np.asarray(y, dtype=float)
    baseline = np.asarray(baseline, dtype=float)
    ranges = np.atleast_2d(np.asarray(ranges, dtype=float))
    span = ranges[:, 1] - ranges[:, 0]
    if np.any(span <= 0):
        raise ValidationError("improvement_distance needs max > min per objective")
    return np.asarray(senses, dtype=float) * (y - baseline) / span
