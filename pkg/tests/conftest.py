import numpy as np
import pytest

from feedbo.fixtures import load_reference_instance
from feedbo.problem import ProblemInstance

#: Acceptance tests append one "[criterion N] PASS/FAIL ..." line each;
#: the terminal summary below prints them after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ref_instance() -> ProblemInstance:
    return load_reference_instance()


def make_simplex_instance(d: int = 3, noise=(0.0, 0.0, 0.0)) -> ProblemInstance:
    """Unconstrained d-simplex with simple linear objectives."""
    rows = np.arange(1, d + 1, dtype=float)
    return ProblemInstance(
        name=f"simplex-{d}",
        ingredient_names=tuple(f"ing{i}" for i in range(d)),
        cost=rows,
        lysine=rows[::-1].copy(),
        energy=np.ones(d),
        max_proportion=np.ones(d),
        nutrient_names=(),
        nutrients=np.zeros((d, 0)),
        lower=np.zeros(0),
        upper=np.zeros(0),
        noise=np.asarray(noise, dtype=float),
    )


def make_constrained_instance(noise=(0.0, 0.0, 0.0)) -> ProblemInstance:
    """Small 4-ingredient instance with one two-sided nutrient constraint."""
    return ProblemInstance(
        name="toy-4",
        ingredient_names=("a", "b", "c", "d"),
        cost=np.array([1.0, 2.0, 3.0, 4.0]),
        lysine=np.array([0.5, 1.5, 1.0, 2.0]),
        energy=np.array([10.0, 12.0, 14.0, 11.0]),
        max_proportion=np.array([0.8, 0.8, 0.6, 0.5]),
        nutrient_names=("fibre",),
        nutrients=np.array([[2.0], [6.0], [4.0], [8.0]]),
        lower=np.array([3.0]),
        upper=np.array([6.0]),
        noise=np.asarray(noise, dtype=float),
    )


@pytest.fixture
def simplex3() -> ProblemInstance:
    return make_simplex_instance(3)


@pytest.fixture
def toy4() -> ProblemInstance:
    return make_constrained_instance()
