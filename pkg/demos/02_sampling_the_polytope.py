"""Uniform sampling of the feasible mix polytope with hit-and-run."""

import numpy as np

from feedbo import check_feasibility, load_reference_instance
from feedbo.polytope import (
    PolytopeSpec,
    find_interior_point,
    hit_and_run,
    sample_in_trust_region,
)

rng = np.random.default_rng(0)
instance = load_reference_instance()
spec = PolytopeSpec.from_instance(instance)

# the feasible region is thin: a max-min-slack search finds a start point
x0 = find_interior_point(spec, rng)
print(f"interior point min slack: {spec.slacks(x0).min():.2e}")

X = hit_and_run(spec, x0, n=500, rng=rng)
feasible = sum(check_feasibility(instance, x).feasible for x in X)
print(f"hit-and-run: {feasible}/500 samples feasible")

# the chain spreads over the polytope; compare per-ingredient spans
span = X.max(axis=0) - X.min(axis=0)
widest = np.argsort(span)[::-1][:5]
print("widest ingredient ranges visited:")
for i in widest:
    print(f"  {instance.ingredient_names[i]:<22} {X[:, i].min():.3f} .. {X[:, i].max():.3f}")

# trust-region sampling clips the same walk to a box around a center
center = X[0]
for length in (0.4, 0.1, 0.02):
    sample = sample_in_trust_region(spec, center, length, 200, rng)
    gap = np.abs(sample.points - center).max()
    print(f"L={length:<5} max |x - center| = {gap:.4f}  stalled={sample.stalled}")
