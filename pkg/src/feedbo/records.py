"""Run records shared by both optimizers and the experiment harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pareto import ParetoArchive


@dataclass(frozen=True)
class IterationStats:
    """Archive metrics after one optimization round.

    ``diversity`` is NaN while the archive has fewer than two members.
    ``no_improvement`` marks rounds where every Thompson draw scored
    zero hypervolume improvement and the fallback rule picked the batch.
    """

    iteration: int
    evaluations: int
    hypervolume: float
    cardinality: int
    diversity: float
    no_improvement: bool
    trust_region_lengths: tuple[float, ...]
    restarts: int


@dataclass(frozen=True)
class RunRecord:
    algorithm: str
    instance_name: str
    seed: int
    ref_point: np.ndarray
    stats: tuple[IterationStats, ...]
    X: np.ndarray          # every evaluated mix, in evaluation order
    Y: np.ndarray          # raw objective observations for those mixes
    iteration_of: np.ndarray
    origin: np.ndarray     # proposing trust region, -1 for the initial design
    archive: ParetoArchive

    @property
    def hypervolume_series(self) -> np.ndarray:
        return np.array([s.hypervolume for s in self.stats])

    @property
    def final(self) -> IterationStats:
        return self.stats[-1]
