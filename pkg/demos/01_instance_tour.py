"""Tour of the bundled feed-formulation instance."""

import numpy as np

from feedbo import evaluate, load_reference_instance
from feedbo.fixtures import MFP_OBJECTIVES, mfp_solution
from feedbo.problem import nutrient_profile

instance = load_reference_instance()
print(f"instance: {instance.name}")
print(f"{instance.dim} ingredients, {instance.n_nutrients} nutrient constraints")
print(f"objective noise sd: {instance.noise} (zero = deterministic evaluations)")

# widest and narrowest ingredient caps
order = np.argsort(instance.max_proportion)
print("\ningredient caps (smallest and largest):")
for i in list(order[:3]) + list(order[-3:]):
    print(f"  {instance.ingredient_names[i]:<22} <= {instance.max_proportion[i]:.3f}")

# the published baseline diet and its objective values
x = mfp_solution(instance)
y = evaluate(instance, x)
print(f"\nbaseline diet uses {np.count_nonzero(x)} of {instance.dim} ingredients")
print(f"cost    {y.cost:8.2f}  (published {MFP_OBJECTIVES.cost})")
print(f"lysine  {y.lysine:8.3f}  (published {MFP_OBJECTIVES.lysine})")
print(f"energy  {y.energy:8.2f}  (published {MFP_OBJECTIVES.energy})")

# nutrient levels sit inside the two-sided bounds
profile = nutrient_profile(instance, x)
print("\nnutrient profile of the baseline diet:")
for j, name in enumerate(instance.nutrient_names):
    print(f"  {name:<14} {instance.lower[j]:8.2f} <= {profile[name]:8.2f} "
          f"<= {instance.upper[j]:8.2f}")
