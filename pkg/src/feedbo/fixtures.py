"""Bundled reference data for the swine grower instance.

The reference diet is the multi-objective fractional-programming (MFP)
solution published by Pena et al. (2009); it serves as the fixed
comparison baseline throughout the harness.  Proportions are mass
fractions and sum to one exactly.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .problem import ObjectiveVector, ProblemInstance, load_instance

#: Published reference diet, mass fraction per ingredient.
MFP_PROPORTIONS: dict[str, float] = {
    "Barley": 0.1353,
    "Wheat": 0.2225,
    "Corn": 0.0,
    "Alfalfa": 0.0,
    "Cassava Meal": 0.0,
    "Soybean meal": 0.1508,
    "Fish meal": 0.0,
    "Gluten feed": 0.0374,
    "Calcium Carbonate": 0.0094,
    "Lysine 78%": 0.0,
    "Sunflower meal": 0.0,
    "Animal fat": 0.0,
    "Beet pulp": 0.0,
    "Lupin": 0.10,
    "Peas": 0.1406,
    "Rye": 0.20,
    "Dicalcium": 0.004,
}

#: Published objective totals of the reference diet (cost, lysine, energy).
MFP_OBJECTIVES = ObjectiveVector(raw=np.array([151.4, 1.02, 14.31]))

#: Published nutrient totals of the reference diet (% of diet).
MFP_NUTRIENTS: dict[str, float] = {
    "crude_fibre": 5.09,
    "calcium": 0.60,
    "dry_matter": 89.15,
    "crude_protein": 19.33,
    "phosphorus": 0.48,
    "met_cys": 0.60,
    "tryptophan": 0.21,
    "threonine": 0.70,
    "avail_phosphorus": 0.16,
}


def reference_instance_path() -> str:
    """Filesystem path of the bundled swine grower instance file."""
    return str(resources.files("feedbo").joinpath("data/swine_grower.txt"))


def load_reference_instance() -> ProblemInstance:
    return load_instance(reference_instance_path())


def mfp_solution(instance: ProblemInstance) -> np.ndarray:
    """Reference diet as a vector aligned with ``instance`` ingredients.

    Raises ``KeyError`` if the instance names an ingredient the
    reference diet does not cover.
    """
    return np.array([MFP_PROPORTIONS[name] for name in instance.ingredient_names])
