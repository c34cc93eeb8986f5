"""Global Bayesian multi-objective baseline (noisy expected hypervolume
improvement, Monte Carlo, q-batch).

Each round fits one GP per objective on all observations, then scores a
pool of feasible candidate mixes by the expectation, over joint
posterior samples of the latent objective values at the observed mixes,
of the hypervolume improvement the candidate adds to the sampled front:

1. draw ``n_mc`` joint posterior samples of the latent values at every
   observed mix and build one non-dominated front per sample,
2. for every candidate, draw its objective values from the posterior
   conditioned on each of those samples (one scalar normal per
   objective per sample; exact, since the joint law of observed and
   candidate values is Gaussian),
3. score the candidate by its average hypervolume improvement over the
   per-sample fronts.

For q > 1 the batch is built greedily: a selected candidate's sampled
values join every per-sample front and the remaining candidates are
rescored against the enlarged fronts, approximating the joint batch
integral without re-drawing.

Candidate draws consume one fixed random block per candidate in pool
order, so scores for a pool prefix do not depend on the pool size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import ValidationError
from .gp import GaussianProcessModel, fit_gp
from .pareto import (
    NondominatedBoxes,
    ParetoArchive,
    dir_metric,
    nondominated_mask,
    reference_point,
    reference_vectors,
    update_archive,
)
from .polytope import PolytopeSpec, find_interior_point, hit_and_run
from .problem import ObjectiveVector, ProblemInstance, check_feasibility, evaluate
from .records import IterationStats, RunRecord


@dataclass(frozen=True)
class MoboConfig:
    iterations: int = 50
    n_init: int = 50
    q: int = 1
    n_mc: int = 128
    candidate_pool: int = 2048
    pool_thinning: int = 4
    nu: float = 2.5
    ref_margin: float = 0.1
    n_ref_vectors: int = 78

    def __post_init__(self):
        if self.q < 1 or self.n_mc < 1 or self.candidate_pool < 1:
            raise ValidationError("q, n_mc and candidate_pool must be positive")


class NehviScorer:
    """Monte Carlo acquisition over fixed posterior samples.

    One instance is built per round; it freezes the ``n_mc`` joint
    latent samples at the observed mixes, and ``score`` plus
    ``condition_on`` implement the greedy q-batch loop.
    """

    def __init__(self, models: list[GaussianProcessModel], r: np.ndarray,
                 rng: np.random.Generator, n_mc: int):
        self.models = models
        self.r = np.asarray(r, dtype=float)
        self.rng = rng
        self.n_mc = n_mc
        n = models[0].X.shape[0]
        self._obs_mean = np.empty((n, 3))
        self._obs_draws = np.empty((n_mc, n, 3))
        self._post_chol = []
        for j, model in enumerate(models):
            mean, cov = model.posterior(model.X, full_cov=True)
            self._obs_mean[:, j] = mean
            w, Q = np.linalg.eigh(cov)
            root = Q * np.sqrt(np.clip(w, 0.0, None))
            z = rng.standard_normal((n_mc, n))
            self._obs_draws[:, :, j] = mean[None, :] + z @ root.T
            # factor of the posterior covariance for exact conditioning
            jitter = max(1e-12, 1e-10 * float(np.trace(cov)) / n)
            self._post_chol.append(sla.cholesky(cov + jitter * np.eye(n), lower=True))
        self._fronts = [self._make_boxes(self._obs_draws[t]) for t in range(n_mc)]
        self._samples: np.ndarray | None = None  # (s, n_mc, 3) from the last score()

    def _make_boxes(self, Y: np.ndarray) -> NondominatedBoxes:
        above = Y[np.all(Y > self.r[None, :], axis=1)]
        if above.shape[0]:
            above = above[nondominated_mask(above)]
        return NondominatedBoxes.build(above, self.r)

    def score(self, X_cand) -> np.ndarray:
        """Mean HVI of each candidate over the frozen posterior samples."""
        X_cand = np.atleast_2d(np.asarray(X_cand, dtype=float))
        s = X_cand.shape[0]
        samples = np.empty((s, self.n_mc, 3))
        z = self.rng.standard_normal((s, self.n_mc, 3))
        for j, model in enumerate(self.models):
            mu, var = model.posterior(X_cand)
            Ks = model.cross_covariance(X_cand)
            # cross-covariance between candidate and observed latents
            # given the data: sigma^2 K_*X (K + sigma^2 I)^-1
            cross = model.params.noise_variance * model.solve(Ks.T).T
            G = sla.cho_solve((self._post_chol[j], True), cross.T).T
            resid = (self._obs_draws[:, :, j] - self._obs_mean[None, :, j])
            cond_mean = mu[:, None] + G @ resid.T
            cond_var = np.clip(var - np.sum(cross * G, axis=1), 0.0, None)
            samples[:, :, j] = cond_mean + np.sqrt(cond_var)[:, None] * z[:, :, j]
        self._samples = samples
        out = np.zeros(s)
        for t, boxes in enumerate(self._fronts):
            out += boxes.hvi_many(samples[:, t, :])
        return out / self.n_mc

    def rescore(self, mask: np.ndarray) -> np.ndarray:
        """Re-evaluate the last scored pool against the current fronts,
        skipping masked candidates."""
        if self._samples is None:
            raise ValidationError("rescore called before score")
        idx = np.nonzero(~mask)[0]
        out = np.zeros(self._samples.shape[0])
        for t, boxes in enumerate(self._fronts):
            out[idx] += boxes.hvi_many(self._samples[idx, t, :])
        return out / self.n_mc

    def condition_on(self, index: int):
        """Insert the chosen candidate's sampled values into every front."""
        if self._samples is None:
            raise ValidationError("condition_on called before score")
        y = self._samples[index]  # (n_mc, 3)
        new_fronts = []
        for t, boxes in enumerate(self._fronts):
            pts = np.vstack([boxes.front, y[t][None, :]]) if boxes.front.size else y[t][None, :]
            new_fronts.append(self._make_boxes(pts))
        self._fronts = new_fronts


def qnehvi(models: list[GaussianProcessModel], r, X_cand, rng: np.random.Generator,
           n_mc: int = 128) -> np.ndarray:
    """Acquisition values for one candidate batch (thin convenience wrapper)."""
    return NehviScorer(models, r, rng, n_mc).score(X_cand)


class MoboOptimizer:
    def __init__(self, instance: ProblemInstance, config: MoboConfig = MoboConfig(),
                 seed: int = 0):
        self.instance = instance
        self.config = config
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.spec = PolytopeSpec.from_instance(instance)
        self._ref_vectors = reference_vectors(config.n_ref_vectors)
        self.ref_point: np.ndarray | None = None
        self.archive: ParetoArchive | None = None
        self.X = np.zeros((0, instance.dim))
        self.Y = np.zeros((0, 3))
        self.S = np.zeros((0, 3))
        self.iteration_of: list[int] = []
        self.origin: list[int] = []
        self.models: list[GaussianProcessModel] = []
        self.iteration = 0
        self._stats: list[IterationStats] = []
        self._chain_start: np.ndarray | None = None

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
            trust_region_lengths=(),
            restarts=0,
        ))

    def initialize(self):
        cfg = self.config
        x0 = find_interior_point(self.spec, self.rng)
        self._chain_start = x0
        X = hit_and_run(self.spec, x0, cfg.n_init, self.rng)
        for x in X:
            self._record(x, origin=-1)
        self.ref_point = reference_point(self.S, margin=cfg.ref_margin)
        archive = ParetoArchive(ref_point=self.ref_point)
        for x, y in zip(self.X, self.Y):
            archive, _ = update_archive(archive, ObjectiveVector(y), solution=x)
        self.archive = archive
        self._refit(warm=False)
        self._push_stats(no_improvement=False)
        return self

    def _refit(self, warm: bool):
        models = []
        for j in range(3):
            warm_params = self.models[j].params if (warm and self.models) else None
            models.append(fit_gp(self.X, self.S[:, j], nu=self.config.nu,
                                 warm_start=warm_params))
        self.models = models

    def step(self):
        cfg = self.config
        self.iteration += 1
        pool = hit_and_run(self.spec, self._chain_start, cfg.candidate_pool,
                           self.rng, thinning=cfg.pool_thinning)
        scorer = NehviScorer(self.models, self.ref_point, self.rng, cfg.n_mc)
        scores = scorer.score(pool)
        taken = np.zeros(pool.shape[0], dtype=bool)
        chosen: list[int] = []
        any_fallback = False
        for _ in range(cfg.q):
            masked = np.where(taken, -1.0, scores)
            best = int(np.argmax(masked))
            if masked[best] <= 0.0:
                # nothing improves any sampled front; fall back to the
                # least explored candidate by maximum posterior variance
                any_fallback = True
                spread = np.zeros(pool.shape[0])
                for model in self.models:
                    spread += model.posterior(pool)[1]
                spread[taken] = -1.0
                best = int(np.argmax(spread))
            taken[best] = True
            chosen.append(best)
            if len(chosen) < cfg.q:
                scorer.condition_on(best)
                scores = scorer.rescore(taken)
        for best in chosen:
            x = pool[best]
            report = check_feasibility(self.instance, x)
            if not report.feasible:
                raise ValidationError(
                    f"proposed mix violates {report.violations[0][0]}; "
                    "the candidate sampler must only produce feasible points"
                )
            y = self._record(x, origin=0)
            self.archive, _ = update_archive(self.archive, y, solution=x)
        self._refit(warm=True)
        self._push_stats(no_improvement=any_fallback)

    def run(self) -> RunRecord:
        if self.archive is None:
            self.initialize()
        while self.iteration < self.config.iterations:
            self.step()
        return RunRecord(
            algorithm="mobo",
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


def run_mobo(instance: ProblemInstance, config: MoboConfig = MoboConfig(),
             seed: int = 0) -> RunRecord:
    return MoboOptimizer(instance, config, seed).run()
