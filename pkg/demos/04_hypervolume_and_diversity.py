"""Exact hypervolume, contributions, archives and the diversity ratio."""

import numpy as np

from feedbo import ParetoArchive, update_archive
from feedbo.pareto import (
    dir_metric,
    hvc,
    hypervolume_exact,
    hypervolume_mc,
    reference_vectors,
)
from feedbo.problem import ObjectiveVector

# a three-point staircase in 2d: each point owns exactly one unit square
front = np.array([[3.0, 1.0], [2.0, 2.0], [1.0, 3.0]])
r = np.zeros(2)
print(f"staircase hypervolume: {hypervolume_exact(front, r)} (exact 6.0)")
print(f"per-point contributions: {hvc(front, r)}")

# Monte Carlo agrees within its standard error
rng = np.random.default_rng(1)
est, se = hypervolume_mc(front, r, n=100_000, rng=rng)
print(f"MC estimate: {est:.4f} +- {se:.4f}")

# archives keep only non-dominated entries above the reference point
archive = ParetoArchive(ref_point=np.full(3, -0.5))
flags = {}
for _ in range(300):
    y = rng.random(3) * 2.0
    archive, flag = update_archive(archive, ObjectiveVector(
        np.array([-y[0], y[1], y[2]])))  # raw cost is minimized
    flags[flag] = flags.get(flag, 0) + 1
print(f"\narchive after 300 random mixes: {archive.cardinality} members")
print(f"update outcomes: {flags}")
print(f"archive hypervolume: {archive.hypervolume():.3f}")

# DIR compares how evenly 78 reference directions map onto the front
vectors = reference_vectors(78)
spread = archive.front
clumped = spread.copy()
clumped[: len(clumped) // 2] = spread[0]  # pile half the front onto one point
print(f"\nDIR of the archive front: {dir_metric(spread, vectors):.3f}")
print(f"DIR after clumping half the points: {dir_metric(clumped, vectors):.3f}")
print("(0 = perfectly even coverage, 1 = all directions on one point)")
