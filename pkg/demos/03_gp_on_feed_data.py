"""Gaussian-process regression of diet cost over sampled mixes."""

import numpy as np

from feedbo import load_reference_instance
from feedbo.gp import PathwiseSampler, fit_gp
from feedbo.polytope import PolytopeSpec, find_interior_point, hit_and_run
from feedbo.problem import evaluate, standardize

rng = np.random.default_rng(3)
instance = load_reference_instance()
spec = PolytopeSpec.from_instance(instance)

X = hit_and_run(spec, find_interior_point(spec, rng), n=40, rng=rng)
Y = np.array([evaluate(instance, x, rng=rng).standardized for x in X])

# one GP per objective; hyperparameters by multi-start marginal likelihood
names = ("cost", "lysine", "energy")
models = [fit_gp(X, Y[:, j]) for j in range(3)]
for name, model in zip(names, models):
    p = model.params
    print(f"{name:<8} lengthscale={p.lengthscale:.3f} "
          f"signal={p.signal_variance:.4f} noise={p.noise_variance:.6f}")

# held-out check: predictions at fresh mixes
X_test = hit_and_run(spec, X[-1], n=10, rng=rng)
truth = np.array([standardize(np.array([
    instance.cost @ x, instance.lysine @ x, instance.energy @ x]))
    for x in X_test])
print("\nheld-out cost predictions (posterior mean +- sd vs noise-free truth):")
mu, var = models[0].posterior(X_test)
for k in range(5):
    print(f"  {mu[k]:8.3f} +- {np.sqrt(var[k]):.3f}   truth {truth[k, 0]:8.3f}")

# a pathwise draw is one consistent function: evaluating it twice at the
# same mix returns the same value, unlike independent posterior draws
sampler = PathwiseSampler(models[0], rng)
same_point = np.vstack([X_test[0], X_test[0]])
draw = sampler.draw(same_point)
print(f"\npathwise draw at a repeated mix: {draw[0]:.6f} == {draw[1]:.6f}")
