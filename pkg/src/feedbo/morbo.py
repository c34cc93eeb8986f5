"""Trust-region Bayesian multi-objective optimizer.

The optimizer maintains several box trust regions clipped to the feed
polytope.  Each round it:

1. draws candidate mixes inside every live region with a constrained
   hit-and-run chain,
2. draws one joint Thompson sample per objective from that region's
   local GPs and scores every candidate by hypervolume improvement
   against the shared archive,
3. greedily accepts the top q candidates across all regions, inserting
   each accepted draw into a provisional front so duplicates of the
   same basin are not rewarded twice, and
4. evaluates the accepted mixes, updates the archive and adapts each
   region's edge length with the usual success/failure counters.

If no candidate improves the provisional front the round falls back to
the best posterior-mean scalarization and is flagged ``no_improvement``.
A region whose edge shrinks below the minimum restarts at a random
scalarization's best observed mix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .gp import GaussianProcessModel, KernelParams, PathwiseSampler, fit_gp
from .pareto import (
    NondominatedBoxes,
    ParetoArchive,
    dir_metric,
    hvc,
    reference_point,
    reference_vectors,
    update_archive,
)
from .polytope import PolytopeSpec, find_interior_point, hit_and_run, sample_in_trust_region
from .problem import ObjectiveVector, ProblemInstance, check_feasibility, evaluate
from .records import IterationStats, RunRecord


@dataclass(frozen=True)
class MorboConfig:
    n_trust_regions: int = 5
    n_thompson: int = 512
    q: int = 1
    iterations: int = 50
    n_init: int = 50
    length_init: float = 0.4
    length_max: float = 1.0
    length_min: float = 0.01
    success_threshold: int = 3
    failure_threshold: int | None = None  # ceil(d / q) unless overridden
    nu: float = 2.5
    n_features: int = 1024
    thinning: int = 1
    sampler: str = "pathwise"  # "pathwise" or "exact"
    ref_margin: float = 0.1
    n_ref_vectors: int = 78

    def __post_init__(self):
        if self.sampler not in ("pathwise", "exact"):
            raise ValidationError(f"unknown sampler {self.sampler!r}")
        if self.q < 1 or self.n_trust_regions < 1 or self.iterations < 0:
            raise ValidationError("q, n_trust_regions and iterations must be positive")
        if not (0 < self.length_min <= self.length_init <= self.length_max):
            raise ValidationError("need 0 < length_min <= length_init <= length_max")

    def resolved_failure_threshold(self, dim: int) -> int:
        if self.failure_threshold is not None:
            return self.failure_threshold
        return math.ceil(dim / self.q)


def update_length(length: float, successes: int, failures: int, *,
                  success_threshold: int, failure_threshold: int,
                  length_max: float, length_min: float) -> tuple[float, int, int, bool]:
    """One counter-driven edge update; returns (length, successes,
    failures, terminated).

    Doubling requires the success counter to *exceed* its threshold,
    halving the failure counter likewise; both counters reset after
    either move.  Shrinking below ``length_min`` terminates the region.
    """
    if successes > success_threshold:
        length = min(2.0 * length, length_max)
        successes = 0
        failures = 0
    elif failures > failure_threshold:
        length = 0.5 * length
        successes = 0
        failures = 0
    return length, successes, failures, length < length_min


def scalarize(Y, lam, r) -> np.ndarray:
    """Hypervolume-flavoured scalarization of standardized vectors.

    ``s(y) = (min_j max(0, (y_j - r_j) / lam_j))^m``: the volume of the
    largest hypercube-scaled box between r and y along direction lam.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    lam = np.asarray(lam, dtype=float)
    ratio = (Y - np.asarray(r)[None, :]) / lam[None, :]
    return np.min(np.maximum(ratio, 0.0), axis=1) ** Y.shape[1]


def random_weight(rng: np.random.Generator, m: int) -> np.ndarray:
    """Uniform direction on the positive unit sphere."""
    z = np.abs(rng.standard_normal(m))
    z = np.maximum(z, 1e-12)
    return z / np.linalg.norm(z)


@dataclass
class TrustRegion:
    index: int
    center: np.ndarray
    length: float
    successes: int = 0
    failures: int = 0
    restarts: int = 0
    models: list[GaussianProcessModel] = field(default_factory=list)


@dataclass(frozen=True)
class Proposal:
    x: np.ndarray
    tr_index: int
    drawn: np.ndarray  # standardized Thompson values used for selection
    no_improvement: bool


class MorboOptimizer:
    """Stateful engine; ``run`` drives it for a full budget, while
    ``propose_batch`` / ``observe`` expose single rounds for tests."""

    def __init__(self, instance: ProblemInstance, config: MorboConfig = MorboConfig(),
                 seed: int = 0):
        self.instance = instance
        self.config = config
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.spec = PolytopeSpec.from_instance(instance)
        self._failure_threshold = config.resolved_failure_threshold(instance.dim)
        self._ref_vectors = reference_vectors(config.n_ref_vectors)
        self.ref_point: np.ndarray | None = None
        self.archive: ParetoArchive | None = None
        self.X = np.zeros((0, instance.dim))
        self.Y = np.zeros((0, 3))           # raw observations
        self.S = np.zeros((0, 3))           # standardized observations
        self.iteration_of: list[int] = []
        self.origin: list[int] = []
        self.trust_regions: list[TrustRegion] = []
        self.iteration = 0
        self._stats: list[IterationStats] = []

    # -- setup -------------------------------------------------------------------

    def initialize(self):
        cfg = self.config
        x0 = find_interior_point(self.spec, self.rng)
        X = hit_and_run(self.spec, x0, cfg.n_init, self.rng)
        for x in X:
            self._record(x, origin=-1)
        self.ref_point = reference_point(self.S, margin=cfg.ref_margin)
        archive = ParetoArchive(ref_point=self.ref_point)
        for x, y in zip(self.X, self.Y):
            archive, _ = update_archive(archive, ObjectiveVector(y), solution=x)
        self.archive = archive
        self._spawn_trust_regions()
        self._push_stats(no_improvement=False)
        return self

    def _spawn_trust_regions(self):
        cfg = self.config
        centers: list[np.ndarray] = []
        front = self.archive.front
        if self.archive.cardinality:
            contrib = hvc(front, self.ref_point)
            order = np.argsort(-contrib, kind="stable")  # ties keep insertion order
            for i in order[:cfg.n_trust_regions]:
                centers.append(np.asarray(self.archive.entries[i].solution))
        while len(centers) < cfg.n_trust_regions:
            lam = random_weight(self.rng, 3)
            scores = scalarize(self.S, lam, self.ref_point)
            taken = {tuple(c) for c in centers}
            order = np.argsort(-scores, kind="stable")
            pick = next((i for i in order if tuple(self.X[i]) not in taken), order[0])
            centers.append(self.X[pick].copy())
        for i, center in enumerate(centers):
            tr = TrustRegion(index=i, center=center, length=cfg.length_init)
            self._refit(tr, warm=False)
            self.trust_regions.append(tr)

    # -- bookkeeping --------------------------------------------------------------

    def _record(self, x: np.ndarray, origin: int) -> ObjectiveVector:
        y = evaluate(self.instance, x, rng=self.rng)
        self.X = np.vstack([self.X, x[None, :]])
        self.Y = np.vstack([self.Y, y.raw[None, :]])
        self.S = np.vstack([self.S, y.standardized[None, :]])
        self.iteration_of.append(self.iteration)
        self.origin.append(origin)
        return y

    def _push_stats(self, no_improvement: bool):
        t = self.archive.cardinality
        diversity = float("nan")
        if t >= 2:
            diversity = dir_metric(self.archive.front, self._ref_vectors)
        self._stats.append(IterationStats(
            iteration=self.iteration,
            evaluations=self.X.shape[0],
            hypervolume=self.archive.hypervolume(),
            cardinality=t,
            diversity=diversity,
            no_improvement=no_improvement,
            trust_region_lengths=tuple(tr.length for tr in self.trust_regions),
            restarts=sum(tr.restarts for tr in self.trust_regions),
        ))

    def _window(self, tr: TrustRegion) -> np.ndarray:
        """Indices of observations in the local data window.

        The window is the hypercube of edge 2L around the center, padded
        with the nearest outside observations when fewer than two fall
        inside, so a refit is always possible.
        """
        gap = np.max(np.abs(self.X - tr.center[None, :]), axis=1)
        inside = np.nonzero(gap <= tr.length + 1e-12)[0]
        if inside.size >= 2:
            return inside
        order = np.argsort(gap, kind="stable")
        return order[:2]

    def _refit(self, tr: TrustRegion, warm: bool):
        idx = self._window(tr)
        models = []
        for j in range(3):
            warm_params: KernelParams | None = None
            if warm and tr.models:
                warm_params = tr.models[j].params
            models.append(fit_gp(self.X[idx], self.S[idx, j], nu=self.config.nu,
                                 warm_start=warm_params))
        tr.models = models

    # -- proposing ----------------------------------------------------------------

    def propose_batch(self) -> list[Proposal]:
        cfg = self.config
        cand_X: list[np.ndarray] = []
        cand_draws: list[np.ndarray] = []
        cand_tr: list[int] = []
        cand_means: list[np.ndarray] = []
        for tr in self.trust_regions:
            sample = sample_in_trust_region(self.spec, tr.center, tr.length,
                                            cfg.n_thompson, self.rng,
                                            thinning=cfg.thinning)
            draws = np.empty((cfg.n_thompson, 3))
            means = np.empty((cfg.n_thompson, 3))
            for j, model in enumerate(tr.models):
                if cfg.sampler == "pathwise":
                    path = PathwiseSampler(model, self.rng, n_features=cfg.n_features)
                    draws[:, j] = path.draw(sample.points)
                else:
                    draws[:, j] = model.sample_posterior(sample.points, 1, self.rng)[0]
                means[:, j] = model.posterior(sample.points)[0]
            cand_X.append(sample.points)
            cand_draws.append(draws)
            cand_tr.append(tr.index)
            cand_means.append(means)
        X = np.vstack(cand_X)
        D = np.vstack(cand_draws)
        M = np.vstack(cand_means)
        tr_of = np.repeat(cand_tr, cfg.n_thompson)

        front = self.archive.front
        boxes = NondominatedBoxes.build(front, self.ref_point)
        taken = np.zeros(X.shape[0], dtype=bool)
        proposals: list[Proposal] = []
        fallback_lam: np.ndarray | None = None
        for _ in range(cfg.q):
            scores = boxes.hvi_many(D)
            scores[taken] = -1.0
            best = int(np.argmax(scores))
            if scores[best] > 0.0:
                no_improvement = False
                front = np.vstack([front, D[best][None, :]])
                boxes = NondominatedBoxes.build(front, self.ref_point)
            else:
                # every remaining draw is dominated: take the best
                # posterior-mean scalarization instead
                no_improvement = True
                if fallback_lam is None:
                    fallback_lam = random_weight(self.rng, 3)
                fallback = scalarize(M, fallback_lam, self.ref_point)
                fallback[taken] = -1.0
                best = int(np.argmax(fallback))
            taken[best] = True
            x = X[best]
            report = check_feasibility(self.instance, x)
            if not report.feasible:
                raise ValidationError(
                    f"proposed mix violates {report.violations[0][0]}; "
                    "the candidate sampler must only produce feasible points"
                )
            proposals.append(Proposal(x=x.copy(), tr_index=int(tr_of[best]),
                                      drawn=D[best].copy(), no_improvement=no_improvement))
        return proposals

    # -- updating -----------------------------------------------------------------

    def observe(self, proposals: list[Proposal]):
        cfg = self.config
        self.iteration += 1
        pre_boxes = NondominatedBoxes.build(self.archive.front, self.ref_point)
        improved: dict[int, bool] = {}
        for prop in proposals:
            y = self._record(prop.x, origin=prop.tr_index)
            gain = pre_boxes.hvi_many(y.standardized[None, :])[0]
            improved[prop.tr_index] = improved.get(prop.tr_index, False) or gain > 0.0
            self.archive, _ = update_archive(self.archive, y, solution=prop.x)

        front = self.archive.front
        contrib = hvc(front, self.ref_point) if self.archive.cardinality else np.zeros(0)
        for tr in self.trust_regions:
            if tr.index in improved:
                if improved[tr.index]:
                    tr.successes += 1
                    tr.failures = 0
                else:
                    tr.failures += 1
                    tr.successes = 0
                tr.length, tr.successes, tr.failures, dead = update_length(
                    tr.length, tr.successes, tr.failures,
                    success_threshold=cfg.success_threshold,
                    failure_threshold=self._failure_threshold,
                    length_max=cfg.length_max, length_min=cfg.length_min,
                )
                if dead:
                    self._restart(tr)
                    continue
            self._recenter(tr, contrib)
            self._refit(tr, warm=True)
        self._push_stats(no_improvement=any(p.no_improvement for p in proposals))

    def _recenter(self, tr: TrustRegion, contrib: np.ndarray):
        """Move the center to the best archive member inside the window;
        keep it unchanged when none falls inside."""
        best, best_c = None, -np.inf
        for i, entry in enumerate(self.archive.entries):
            if entry.solution is None:
                continue
            if np.max(np.abs(entry.solution - tr.center)) <= tr.length + 1e-12:
                if contrib[i] > best_c:
                    best, best_c = entry.solution, contrib[i]
        if best is not None:
            tr.center = np.asarray(best).copy()

    def _restart(self, tr: TrustRegion):
        lam = random_weight(self.rng, 3)
        scores = scalarize(self.S, lam, self.ref_point)
        best = int(np.flatnonzero(scores == scores.max())[-1])  # most recent on ties
        tr.center = self.X[best].copy()
        tr.length = self.config.length_init
        tr.successes = 0
        tr.failures = 0
        tr.restarts += 1
        self._refit(tr, warm=False)

    # -- driving ------------------------------------------------------------------

    def step(self):
        self.observe(self.propose_batch())

    def run(self) -> RunRecord:
        if self.archive is None:
            self.initialize()
        while self.iteration < self.config.iterations:
            self.step()
        return RunRecord(
            algorithm="morbo",
            instance_name=self.instance.name,
            seed=self.seed,
            ref_point=self.ref_point.copy(),
            stats=tuple(self._stats),
            X=self.X.copy(),
            Y=self.Y.copy(),
            iteration_of=np.array(self.iteration_of),
            origin=np.array(self.origin),
            archive=self.archive,
        )


def run_morbo(instance: ProblemInstance, config: MorboConfig = MorboConfig(),
              seed: int = 0) -> RunRecord:
    return MorboOptimizer(instance, config, seed).run()
