"""Geometry of the feasible set and uniform sampling inside it.

The feasible set of an instance is the simplex slice

    { x : sum(x) = 1,  lo <= x <= hi,  A x <= b }

where the box holds the per-ingredient caps (optionally tightened by a
trust-region hypercube) and ``A x <= b`` stacks the two-sided nutrient
constraints.  Sampling walks on the simplex hyperplane: every random
direction has zero coordinate sum, so the equality is preserved to
machine precision along each chord.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .problem import ProblemInstance

_EPS = 1e-14


@dataclass(frozen=True)
class PolytopeSpec:
    """Inequality description of a (possibly trust-region-clipped) feasible set."""

    lo: np.ndarray              # (d,) per-coordinate lower bounds
    hi: np.ndarray              # (d,) per-coordinate upper bounds
    A: np.ndarray               # (m, d) general inequality rows, A x <= b
    b: np.ndarray               # (m,)
    labels: tuple[str, ...]     # one label per row of A
    # rows of A scaled to unit norm, for scale-free slack comparisons
    A_unit: np.ndarray = field(init=False, repr=False)
    b_unit: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        A = np.asarray(self.A, dtype=float).reshape(-1, lo.size)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.size or A.shape[0] != len(self.labels):
            raise ValidationError("PolytopeSpec: A, b and labels disagree in length")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        norms = np.linalg.norm(A, axis=1) if A.size else np.zeros(0)
        norms = np.where(norms > 0, norms, 1.0)
        object.__setattr__(self, "A_unit", A / norms[:, None])
        object.__setattr__(self, "b_unit", b / norms)

    @property
    def dim(self) -> int:
        return self.lo.size

    @classmethod
    def from_instance(cls, instance: ProblemInstance,
                      center: np.ndarray | None = None,
                      length: float | None = None) -> "PolytopeSpec":
        """Build the feasible set, optionally intersected with the
        trust-region box of edge ``length`` around ``center`` (half-edge
        ``length / 2``), clipped to [0, 1]^d."""
        lo = np.zeros(instance.dim)
        hi = instance.max_proportion.copy()
        if center is not None:
            if length is None:
                raise ValidationError("trust-region box needs both center and length")
            center = np.asarray(center, dtype=float)
            lo = np.maximum(lo, center - length / 2.0)
            hi = np.minimum(hi, center + length / 2.0)
        A = np.vstack([instance.nutrients.T, -instance.nutrients.T]) \
            if instance.n_nutrients else np.zeros((0, instance.dim))
        b = np.concatenate([instance.upper, -instance.lower])
        labels = tuple(f"nutrient_upper:{n}" for n in instance.nutrient_names) + \
            tuple(f"nutrient_lower:{n}" for n in instance.nutrient_names)
        return cls(lo=lo, hi=hi, A=A, b=b, labels=labels)

    def slacks(self, x: np.ndarray) -> np.ndarray:
        """Scale-free slack of every constraint at ``x`` (negative = violated).

        Order: unit-normalized A rows, then lower bounds, then upper bounds.
        """
        parts = [self.b_unit - self.A_unit @ x] if self.A.size else []
        parts += [x - self.lo, self.hi - x]
        return np.concatenate(parts) if parts else np.zeros(0)

    def slack_labels(self) -> tuple[str, ...]:
        lower = tuple(f"coordinate_lower:{i}" for i in range(self.dim))
        upper = tuple(f"coordinate_upper:{i}" for i in range(self.dim))
        return self.labels + lower + upper

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return abs(float(np.sum(x)) - 1.0) <= tol and bool(np.min(self.slacks(x)) >= -tol)


def _zero_sum_direction(rng: np.random.Generator, d: int) -> np.ndarray:
    while True:
        u = rng.standard_normal(d)
        u -= u.mean()
        norm = np.linalg.norm(u)
        if norm > 1e-12:
            return u / norm


def _chord(spec: PolytopeSpec, x: np.ndarray, u: np.ndarray) -> tuple[float, float]:
    """Step range [t_lo, t_hi] keeping ``x + t u`` inside the inequalities."""
    t_lo, t_hi = -np.inf, np.inf
    if spec.A.size:
        au = spec.A @ u
        s = np.maximum(spec.b - spec.A @ x, 0.0)
        pos = au > _EPS
        neg = au < -_EPS
        if pos.any():
            t_hi = min(t_hi, float(np.min(s[pos] / au[pos])))
        if neg.any():
            t_lo = max(t_lo, float(np.max(s[neg] / au[neg])))
    s_hi = np.maximum(spec.hi - x, 0.0)
    s_lo = np.maximum(x - spec.lo, 0.0)
    pos = u > _EPS
    neg = u < -_EPS
    if pos.any():
        t_hi = min(t_hi, float(np.min(s_hi[pos] / u[pos])))
        t_lo = max(t_lo, float(np.max(-s_lo[pos] / u[pos])))
    if neg.any():
        t_hi = min(t_hi, float(np.min(s_lo[neg] / (-u[neg]))))
        t_lo = max(t_lo, float(np.max(s_hi[neg] / u[neg])))
    return t_lo, t_hi


def find_interior_point(spec: PolytopeSpec, rng: np.random.Generator,
                        budget: int | None = None) -> np.ndarray:
    """Find a strictly feasible point of ``spec`` on the simplex.

    Starts from a sum-one point inside the box, then repeatedly takes
    the random zero-sum chord direction step that maximizes the minimum
    scale-free slack (the 1-D max of a concave piecewise-linear
    function, located by ternary search).  Raises ``ValidationError``
    naming the most violated constraint if no strictly feasible point is
    found within the budget.
    """
    d = spec.dim
    lo_sum, hi_sum = float(spec.lo.sum()), float(spec.hi.sum())
    if hi_sum < 1.0 - 1e-12 or lo_sum > 1.0 + 1e-12:
        raise ValidationError(
            "infeasible: box bounds cannot reach the simplex "
            f"(sum of lower bounds {lo_sum:.6g}, sum of upper bounds {hi_sum:.6g})"
        )
    # sum-one start: midpoint plus headroom-proportional correction
    x = 0.5 * (spec.lo + spec.hi)
    delta = 1.0 - float(x.sum())
    room = (spec.hi - x) if delta > 0 else (x - spec.lo)
    total = float(room.sum())
    if total > 0:
        x = x + delta * room / total
    x = np.clip(x, spec.lo, spec.hi)
    x = x + (1.0 - x.sum()) / d

    n_rows = spec.A.shape[0] if spec.A.size else 1
    steps = budget if budget is not None else max(10 * d * n_rows, 100)
    best = float(np.min(spec.slacks(x)))
    goal = 1e-4
    for _ in range(steps):
        if best > goal:
            break
        u = _zero_sum_direction(rng, d)
        # search range: keep the box slacks no worse than now if already
        # inside the box, otherwise probe a unit-length window
        t_lo, t_hi = _chord(spec, x, u)
        if not np.isfinite(t_lo):
            t_lo = -1.0
        if not np.isfinite(t_hi):
            t_hi = 1.0
        if np.min(x - spec.lo) < 0 or np.min(spec.hi - x) < 0:
            t_lo, t_hi = -1.0, 1.0

        def f(t: float) -> float:
            return float(np.min(spec.slacks(x + t * u)))

        a_t, b_t = t_lo, t_hi
        for _ in range(48):
            m1 = a_t + (b_t - a_t) / 3.0
            m2 = b_t - (b_t - a_t) / 3.0
            if f(m1) < f(m2):
                a_t = m1
            else:
                b_t = m2
        t_star = 0.5 * (a_t + b_t)
        val = f(t_star)
        if val > best:
            best = val
            x = x + t_star * u
            x = x + (1.0 - x.sum()) / d
    best = float(np.min(spec.slacks(x)))
    if best <= 0.0:
        idx = int(np.argmin(spec.slacks(x)))
        raise ValidationError(
            f"no strictly feasible point found; most violated constraint: "
            f"{spec.slack_labels()[idx]} (scale-free slack {best:.3e})"
        )
    return x


def hit_and_run(spec: PolytopeSpec, x0: np.ndarray, n: int,
                rng: np.random.Generator, thinning: int | None = None) -> np.ndarray:
    """Uniform samples from ``spec`` restricted to the simplex hyperplane.

    Standard hit-and-run: from the current point, draw a zero-sum
    direction, intersect it with the inequalities to get a chord, and
    jump to a uniform point on the chord.  Every ``thinning``-th point
    is retained (default ``5 * d``).  Deterministic given ``rng``.
    """
    x0 = np.asarray(x0, dtype=float)
    if not spec.contains(x0, tol=1e-9):
        raise ValidationError("hit_and_run start point is not feasible")
    if n <= 0:
        return np.zeros((0, spec.dim))
    thin = int(thinning) if thinning is not None else 5 * spec.dim
    if thin < 1:
        raise ValidationError(f"thinning must be >= 1, got {thin}")
    out = np.empty((n, spec.dim))
    x = x0.copy()
    kept = 0
    stalled = 0
    while kept < n:
        for _ in range(thin):
            u = _zero_sum_direction(rng, spec.dim)
            t_lo, t_hi = _chord(spec, x, u)
            width = t_hi - t_lo
            if not np.isfinite(width) or width <= _EPS:
                stalled += 1
                if stalled > 100 * thin:
                    raise ValidationError("hit_and_run chain cannot move; degenerate polytope")
                continue
            x = x + rng.uniform(t_lo, t_hi) * u
        out[kept] = x
        kept += 1
    return out


@dataclass(frozen=True)
class TrustRegionSample:
    """Candidate locations from one trust region; ``stalled`` reports a
    degenerate chain (points may then repeat the center)."""

    points: np.ndarray
    stalled: bool


def sample_in_trust_region(spec: PolytopeSpec, center: np.ndarray, length: float,
                           n: int, rng: np.random.Generator,
                           thinning: int = 1) -> TrustRegionSample:
    """Feasible points inside ``spec`` intersected with the trust-region
    box of edge ``length`` (half-edge ``length / 2``) around ``center``.

    ``center`` must itself be feasible, so the intersection is never
    empty; if it has (numerically) no volume the chain cannot move and
    the center is replicated with ``stalled=True``.  Candidate batches
    feed a posterior-sample ranking step, so chain correlation is
    acceptable and the default thinning is 1; pass a larger value for
    uniformity-critical uses.
    """
    center = np.asarray(center, dtype=float)
    clipped = PolytopeSpec(
        lo=np.maximum(spec.lo, center - length / 2.0),
        hi=np.minimum(spec.hi, center + length / 2.0),
        A=spec.A, b=spec.b, labels=spec.labels,
    )
    if not clipped.contains(center, tol=1e-9):
        raise ValidationError("trust-region center is not feasible for the clipped set")
    x = center.copy()
    out = np.empty((n, spec.dim))
    kept = 0
    consecutive_stalls = 0
    stalled = False
    while kept < n:
        moved = False
        for _ in range(max(1, int(thinning))):
            u = _zero_sum_direction(rng, spec.dim)
            t_lo, t_hi = _chord(clipped, x, u)
            width = t_hi - t_lo
            if np.isfinite(width) and width > _EPS:
                x = x + rng.uniform(t_lo, t_hi) * u
                moved = True
        if moved:
            consecutive_stalls = 0
            out[kept] = x
            kept += 1
        else:
            consecutive_stalls += 1
            if consecutive_stalls >= 25:
                stalled = True
                out[kept:] = center
                kept = n
    return TrustRegionSample(points=out, stalled=stalled)
