"""Constrained multi-objective Bayesian optimization for feed formulation.

The package provides:

* linear tri-objective feed-formulation instances (:mod:`feedbo.problem`),
* geometry and uniform sampling of the feasible polytope (:mod:`feedbo.polytope`),
* exact Gaussian-process regression with Matern kernels (:mod:`feedbo.gp`),
* exact hypervolume, archive and diversity tooling (:mod:`feedbo.pareto`),
* a trust-region multi-objective engine (:mod:`feedbo.morbo`),
* a global qNEHVI engine (:mod:`feedbo.mobo`),
* an experiment harness, reports and a CLI (:mod:`feedbo.harness`,
  :mod:`feedbo.reports`, :mod:`feedbo.cli`).
"""

__version__ = "0.1.0"

from .errors import SchemaError, ValidationError  # noqa: F401
from .problem import (  # noqa: F401
    OBJECTIVE_NAMES,
    OBJECTIVE_SENSES,
    ObjectiveVector,
    ProblemInstance,
    check_feasibility,
    evaluate,
    load_instance,
)
from .fixtures import load_reference_instance, mfp_solution  # noqa: F401
from .pareto import (  # noqa: F401
    ParetoArchive,
    dir_metric,
    hypervolume_exact,
    hypervolume_mc,
    reference_vectors,
    update_archive,
)
from .gp import GaussianProcessModel, KernelParams, fit_gp  # noqa: F401
from .morbo import MorboConfig, run_morbo  # noqa: F401
from .mobo import MoboConfig, run_mobo  # noqa: F401
from .harness import (  # noqa: F401
    ComparisonReport,
    ExperimentConfig,
    compare_with_reference,
    run_phase,
)
from .records import IterationStats, RunRecord  # noqa: F401
