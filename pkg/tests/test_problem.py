import numpy as np
import pytest

from feedbo.errors import SchemaError, ValidationError
from feedbo.fixtures import (MFP_NUTRIENTS, MFP_OBJECTIVES, MFP_PROPORTIONS,
                             mfp_solution)
from feedbo.problem import (ObjectiveVector, ProblemInstance, check_feasibility,
                            evaluate, load_instance, nutrient_profile,
                            standardize, write_instance)

from conftest import make_constrained_instance


def test_standardization_sign_convention():
    y = np.array([151.4, 1.02, 14.31])
    z = standardize(y)
    assert z[0] == -151.4 and z[1] == 1.02 and z[2] == 14.31
    # cost standardized value strictly decreases iff raw cost strictly increases
    z2 = standardize(y + np.array([1.0, 0, 0]))
    assert z2[0] < z[0]
    vec = ObjectiveVector(raw=y)
    np.testing.assert_allclose(vec.standardized, z)


def test_objective_vector_validation():
    with pytest.raises(ValidationError):
        ObjectiveVector(raw=np.array([1.0, 2.0]))
    with pytest.raises(ValidationError):
        ObjectiveVector(raw=np.array([1.0, np.nan, 2.0]))


def test_evaluate_is_linear_and_noiseless_when_sigma_zero(toy4):
    rng = np.random.default_rng(0)
    x1 = np.array([0.5, 0.2, 0.2, 0.1])
    x2 = np.array([0.1, 0.4, 0.3, 0.2])
    y1 = evaluate(toy4, x1, rng).raw
    y2 = evaluate(toy4, x2, rng).raw
    lam = 0.3
    ymix = evaluate(toy4, lam * x1 + (1 - lam) * x2, rng).raw
    np.testing.assert_allclose(ymix, lam * y1 + (1 - lam) * y2, atol=1e-12)


def test_evaluate_noise_statistics():
    inst = make_constrained_instance(noise=(2.0, 0.1, 0.5))
    x = np.array([0.5, 0.2, 0.2, 0.1])
    clean = make_constrained_instance()
    y0 = evaluate(clean, x).raw
    rng = np.random.default_rng(42)
    draws = np.array([evaluate(inst, x, rng).raw for _ in range(4000)])
    np.testing.assert_allclose(draws.mean(axis=0), y0, atol=0.15)
    np.testing.assert_allclose(draws.std(axis=0), [2.0, 0.1, 0.5], rtol=0.1)


def test_evaluate_requires_rng_when_noisy():
    inst = make_constrained_instance(noise=(1.0, 0.0, 0.0))
    with pytest.raises(ValidationError, match="rng"):
        evaluate(inst, np.array([0.5, 0.2, 0.2, 0.1]))


def test_evaluate_rejects_off_simplex(toy4):
    with pytest.raises(ValidationError, match="simplex"):
        evaluate(toy4, np.array([0.5, 0.2, 0.2, 0.2]))


def test_feasibility_zero_vector_reports_simplex(toy4):
    report = check_feasibility(toy4, np.zeros(4))
    assert not report.feasible
    assert report.violation("simplex") == pytest.approx(1.0)


def test_feasibility_single_cap_violation(toy4):
    # exceed exactly one ingredient cap while staying on the simplex
    x = np.array([0.0, 0.0, 0.7, 0.3])
    report = check_feasibility(toy4, x)
    labels = [name for name, _ in report.violations]
    assert labels == ["ingredient_upper:c"]
    assert report.violation("ingredient_upper:c") == pytest.approx(0.1)


def test_feasibility_nutrient_bounds(toy4):
    # all mass on 'a' gives fibre 2.0 < lower bound 3.0
    x = np.array([0.8, 0.2, 0.0, 0.0])
    report = check_feasibility(toy4, x)
    assert report.violation("nutrient_lower:fibre") == pytest.approx(3.0 - 2.8)
    # heavy 'b' and 'd' cross the upper bound: fibre = 3.0 + 4.0 = 7.0
    x = np.array([0.0, 0.5, 0.0, 0.5])
    profile = nutrient_profile(toy4, x)
    assert profile["fibre"] == pytest.approx(7.0)
    report = check_feasibility(toy4, x)
    assert report.violation("nutrient_upper:fibre") == pytest.approx(1.0)


def test_feasibility_tolerance_rounding(toy4):
    x = np.array([0.5, 0.2, 0.2, 0.1])
    x_eps = x + np.array([5e-10, 0, 0, 0])  # simplex off by 5e-10 only
    assert check_feasibility(toy4, x_eps).feasible


def test_instance_validation_errors():
    good = make_constrained_instance()
    with pytest.raises(ValidationError, match="lower bound exceeds"):
        ProblemInstance(
            name="bad", ingredient_names=good.ingredient_names,
            cost=good.cost, lysine=good.lysine, energy=good.energy,
            max_proportion=good.max_proportion,
            nutrient_names=("fibre",), nutrients=good.nutrients,
            lower=np.array([7.0]), upper=np.array([6.0]),
        )
    with pytest.raises(ValidationError, match="shape"):
        ProblemInstance(
            name="bad", ingredient_names=good.ingredient_names,
            cost=good.cost[:-1], lysine=good.lysine, energy=good.energy,
            max_proportion=good.max_proportion,
            nutrient_names=("fibre",), nutrients=good.nutrients,
            lower=good.lower, upper=good.upper,
        )
    with pytest.raises(ValidationError, match="max_proportion"):
        ProblemInstance(
            name="bad", ingredient_names=good.ingredient_names,
            cost=good.cost, lysine=good.lysine, energy=good.energy,
            max_proportion=np.array([0.5, 0.5, 0.5, 1.5]),
            nutrient_names=("fibre",), nutrients=good.nutrients,
            lower=good.lower, upper=good.upper,
        )


def test_write_then_load_round_trips(tmp_path, toy4):
    path = tmp_path / "toy.txt"
    write_instance(toy4, path)
    again = load_instance(path)
    np.testing.assert_array_equal(again.cost, toy4.cost)
    np.testing.assert_array_equal(again.nutrients, toy4.nutrients)
    np.testing.assert_array_equal(again.max_proportion, toy4.max_proportion)
    assert again.ingredient_names == toy4.ingredient_names
    assert again.nutrient_names == toy4.nutrient_names


def _write(tmp_path, text):
    path = tmp_path / "inst.txt"
    path.write_text(text)
    return path


GOOD = """
[ingredients]
name, cost, lysine, energy, max_proportion, fibre
a, 1.0, 0.5, 10.0, 0.8, 2.0
b, 2.0, 1.5, 12.0, 0.8, 6.0

[nutrients]
name, lower, upper
fibre, 3.0, 6.0

[noise]
cost = 0.0
lysine = 0.0
energy = 0.0
"""


def test_load_instance_happy_path(tmp_path):
    inst = load_instance(_write(tmp_path, GOOD))
    assert inst.dim == 2 and inst.nutrient_names == ("fibre",)
    np.testing.assert_array_equal(inst.nutrients[:, 0], [2.0, 6.0])


@pytest.mark.parametrize("mutate,fragment", [
    (lambda t: t.replace(", fibre", ", fibre, mystery").replace("0.8, 2.0", "0.8, 2.0, 1.0").replace("0.8, 6.0", "0.8, 6.0, 1.0"), "unknown column"),
    (lambda t: t.replace("[noise]", "[turbulence]"), "missing"),
    (lambda t: t.replace("10.0", "ten"), "not a number"),
    (lambda t: t.replace("name, cost", "cost, name"), "columns must start with"),
    (lambda t: t.replace("lysine = 0.0\n", ""), "missing 'lysine'"),
    (lambda t: t + "\n[extra]\nkey = 1\n", "unknown section"),
])
def test_load_instance_schema_errors(tmp_path, mutate, fragment):
    with pytest.raises(SchemaError, match=fragment):
        load_instance(_write(tmp_path, mutate(GOOD)))


def test_load_instance_crossed_bounds_is_validation_error(tmp_path):
    with pytest.raises(ValidationError, match="lower bound exceeds"):
        load_instance(_write(tmp_path, GOOD.replace("fibre, 3.0, 6.0", "fibre, 7.0, 6.0")))


def test_reference_diet_sums_to_one_and_reproduces_published_totals(ref_instance):
    x = mfp_solution(ref_instance)
    assert abs(x.sum() - 1.0) <= 1e-9
    assert set(MFP_PROPORTIONS) == set(ref_instance.ingredient_names)
    report = check_feasibility(ref_instance, x)
    assert report.feasible, report.violations
    y = evaluate(ref_instance, x).raw
    rel = np.abs(y - MFP_OBJECTIVES.raw) / np.abs(MFP_OBJECTIVES.raw)
    assert np.all(rel < 0.005)
    profile = nutrient_profile(ref_instance, x)
    for name, target in MFP_NUTRIENTS.items():
        assert abs(profile[name] - target) < 0.05, name
    assert abs(profile["crude_fibre"] - 5.09) < 0.05
