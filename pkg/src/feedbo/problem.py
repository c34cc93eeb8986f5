"""Feed-formulation problem instances and their evaluation.

An instance is a linear tri-objective problem over ingredient
proportions ``x`` (one entry per ingredient, summing to one):

* minimize cost ``c @ x``
* maximize lysine content ``l @ x``
* maximize metabolizable energy ``e @ x``

subject to per-ingredient caps ``0 <= x <= s`` and two-sided nutrient
constraints ``lower <= A.T @ x <= upper``.  Objective evaluations may be
perturbed by independent Gaussian noise with per-objective standard
deviations carried by the instance.

Everything downstream works on the *standardized* objective vector
``(-cost, lysine, energy)`` so that all three objectives are maximized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import blocktext
from .errors import SchemaError, ValidationError

OBJECTIVE_NAMES = ("cost", "lysine", "energy")
# +1 for maximized objectives, -1 for minimized ones (cost).
OBJECTIVE_SENSES = np.array([-1.0, 1.0, 1.0])

SIMPLEX_TOL = 1e-9

_FIXED_COLUMNS = ("name", "cost", "lysine", "energy", "max_proportion")


def standardize(y) -> np.ndarray:
    """Map raw ``(cost, lysine, energy)`` rows to the all-maximize convention."""
    return np.asarray(y, dtype=float) * OBJECTIVE_SENSES


def destandardize(z) -> np.ndarray:
    """Inverse of :func:`standardize`."""
    return np.asarray(z, dtype=float) * OBJECTIVE_SENSES


@dataclass(frozen=True)
class ObjectiveVector:
    """One (possibly noisy) evaluation of the three objectives.

    ``raw`` stores ``(cost, lysine, energy)`` in problem units;
    ``standardized`` flips the cost sign so every coordinate is
    maximized.
    """

    raw: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float)
        if raw.shape != (3,):
            raise ValidationError(f"objective vector must have 3 entries, got shape {raw.shape}")
        if not np.all(np.isfinite(raw)):
            raise ValidationError("objective vector has non-finite entries")
        object.__setattr__(self, "raw", raw)

    @property
    def standardized(self) -> np.ndarray:
        return standardize(self.raw)

    @property
    def cost(self) -> float:
        return float(self.raw[0])

    @property
    def lysine(self) -> float:
        return float(self.raw[1])

    @property
    def energy(self) -> float:
        return float(self.raw[2])


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable data defining one feed-formulation problem."""

    name: str
    ingredient_names: tuple[str, ...]
    cost: np.ndarray            # (d,) currency per unit mass
    lysine: np.ndarray          # (d,) percent
    energy: np.ndarray          # (d,) MJ/kg
    max_proportion: np.ndarray  # (d,) upper bound on each x_i, in [0, 1]
    nutrient_names: tuple[str, ...]
    nutrients: np.ndarray       # (d, a) per-ingredient nutrient content
    lower: np.ndarray           # (a,)
    upper: np.ndarray           # (a,)
    noise: np.ndarray = field(default_factory=lambda: np.zeros(3))  # objective sigmas

    def __post_init__(self):
        for attr in ("cost", "lysine", "energy", "max_proportion", "nutrients",
                     "lower", "upper", "noise"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=float))
        d = len(self.ingredient_names)
        a = len(self.nutrient_names)
        for attr, shape in (("cost", (d,)), ("lysine", (d,)), ("energy", (d,)),
                            ("max_proportion", (d,)), ("nutrients", (d, a)),
                            ("lower", (a,)), ("upper", (a,)), ("noise", (3,))):
            got = getattr(self, attr).shape
            if got != shape:
                raise ValidationError(
                    f"instance '{self.name}': field '{attr}' has shape {got}, expected {shape}"
                )
        for attr in ("cost", "lysine", "energy", "max_proportion", "nutrients",
                     "lower", "upper", "noise"):
            if not np.all(np.isfinite(getattr(self, attr))):
                raise ValidationError(f"instance '{self.name}': field '{attr}' has non-finite entries")
        if np.any(self.max_proportion < 0) or np.any(self.max_proportion > 1):
            raise ValidationError(
                f"instance '{self.name}': field 'max_proportion' must lie in [0, 1]"
            )
        if np.any(self.lower > self.upper):
            bad = [self.nutrient_names[j] for j in np.nonzero(self.lower > self.upper)[0]]
            raise ValidationError(
                f"instance '{self.name}': nutrient lower bound exceeds upper bound for {bad}"
            )
        if np.any(self.noise < 0):
            raise ValidationError(f"instance '{self.name}': noise sigmas must be >= 0")
        if len(set(self.ingredient_names)) != d:
            raise ValidationError(f"instance '{self.name}': duplicate ingredient names")
        if len(set(self.nutrient_names)) != a:
            raise ValidationError(f"instance '{self.name}': duplicate nutrient names")

    @property
    def dim(self) -> int:
        return len(self.ingredient_names)

    @property
    def n_nutrients(self) -> int:
        return len(self.nutrient_names)

    def objective_matrix(self) -> np.ndarray:
        """Stack (cost, lysine, energy) coefficient rows into a (3, d) array."""
        return np.stack([self.cost, self.lysine, self.energy])


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of checking one proportion vector against an instance."""

    feasible: bool
    # (constraint label, positive violation magnitude) for every violated constraint
    violations: tuple[tuple[str, float], ...]

    def violation(self, label: str) -> float:
        for name, amount in self.violations:
            if name == label:
                return amount
        return 0.0


def check_feasibility(instance: ProblemInstance, x, tol: float = SIMPLEX_TOL) -> FeasibilityReport:
    """Check ``x`` against simplex, ingredient-cap and nutrient constraints.

    Inequalities are tolerance-rounded: a violation smaller than ``tol``
    counts as satisfied.  The simplex equality uses the same tolerance.
    Violation magnitudes are reported as positive numbers; the label
    says which side was crossed.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.dim,):
        raise ValidationError(f"x has shape {x.shape}, expected ({instance.dim},)")
    violations: list[tuple[str, float]] = []
    gap = abs(float(x.sum()) - 1.0)
    if gap > tol:
        violations.append(("simplex", gap))
    for i, name in enumerate(instance.ingredient_names):
        if x[i] < -tol:
            violations.append((f"ingredient_lower:{name}", float(-x[i])))
        if x[i] > instance.max_proportion[i] + tol:
            violations.append((f"ingredient_upper:{name}", float(x[i] - instance.max_proportion[i])))
    totals = instance.nutrients.T @ x
    for j, name in enumerate(instance.nutrient_names):
        if totals[j] < instance.lower[j] - tol:
            violations.append((f"nutrient_lower:{name}", float(instance.lower[j] - totals[j])))
        if totals[j] > instance.upper[j] + tol:
            violations.append((f"nutrient_upper:{name}", float(totals[j] - instance.upper[j])))
    return FeasibilityReport(feasible=not violations, violations=tuple(violations))


def evaluate(instance: ProblemInstance, x, rng: np.random.Generator | None = None) -> ObjectiveVector:
    """Evaluate the three objectives at ``x``, adding Gaussian noise.

    ``x`` must satisfy the simplex equality (tolerance 1e-9); bound and
    nutrient violations are the caller's concern, the linear objectives
    are defined everywhere on the simplex.  When ``rng`` is given, three
    normal draws are consumed even if all sigmas are zero, so seed
    streams stay aligned across noise profiles.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.dim,):
        raise ValidationError(f"x has shape {x.shape}, expected ({instance.dim},)")
    if abs(float(x.sum()) - 1.0) > SIMPLEX_TOL:
        raise ValidationError(f"x violates the simplex constraint: sum(x) = {x.sum()!r}")
    y = np.array([instance.cost @ x, instance.lysine @ x, instance.energy @ x])
    if rng is not None:
        y = y + instance.noise * rng.standard_normal(3)
    elif np.any(instance.noise > 0):
        raise ValidationError("instance has objective noise; evaluate() needs an rng")
    return ObjectiveVector(raw=y)


def nutrient_profile(instance: ProblemInstance, x) -> dict[str, float]:
    """Per-nutrient totals ``A.T @ x`` keyed by nutrient name."""
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.dim,):
        raise ValidationError(f"x has shape {x.shape}, expected ({instance.dim},)")
    totals = instance.nutrients.T @ x
    return {name: float(totals[j]) for j, name in enumerate(instance.nutrient_names)}


def load_instance(path) -> ProblemInstance:
    """Load an instance from a block-text file.

    The file needs an ``[ingredients]`` table whose columns are exactly
    ``name, cost, lysine, energy, max_proportion`` plus one column per
    nutrient declared in the ``[nutrients]`` table (columns ``name,
    lower, upper``), and a ``[noise]`` block with ``cost``, ``lysine``
    and ``energy`` sigmas.  Unknown columns or sections are rejected.
    """
    sections = blocktext.parse_file(path)
    src = str(path)
    for required in ("ingredients", "nutrients", "noise"):
        if required not in sections:
            raise SchemaError(f"{src}: missing [{required}] section")
    known = {"ingredients", "nutrients", "noise", "meta"}
    unknown = [s for s in sections if s not in known]
    if unknown:
        raise SchemaError(f"{src}: unknown section(s) {unknown}")

    nut = sections["nutrients"]
    if not nut.is_table or nut.header != ["name", "lower", "upper"]:
        raise SchemaError(f"{src}: [nutrients] must be a table with columns name, lower, upper")
    nutrient_names = tuple(row[0] for row in nut.rows)
    lower = np.array([blocktext.parse_float(nut, f"lower({row[0]})", row[1], src) for row in nut.rows])
    upper = np.array([blocktext.parse_float(nut, f"upper({row[0]})", row[2], src) for row in nut.rows])

    ing = sections["ingredients"]
    if not ing.is_table:
        raise SchemaError(f"{src}: [ingredients] must be a table")
    header = ing.header or []
    if tuple(header[: len(_FIXED_COLUMNS)]) != _FIXED_COLUMNS:
        raise SchemaError(
            f"{src}: [ingredients] columns must start with {', '.join(_FIXED_COLUMNS)}"
        )
    extra = header[len(_FIXED_COLUMNS):]
    unknown_cols = [c for c in extra if c not in nutrient_names]
    if unknown_cols:
        raise SchemaError(f"{src}: [ingredients] has unknown column(s) {unknown_cols}")
    missing_cols = [c for c in nutrient_names if c not in extra]
    if missing_cols:
        raise SchemaError(f"{src}: [ingredients] is missing nutrient column(s) {missing_cols}")
    col_of = {c: header.index(c) for c in header}
    if not ing.rows:
        raise SchemaError(f"{src}: [ingredients] table has no rows")

    names = tuple(row[col_of["name"]] for row in ing.rows)

    def column(key: str) -> np.ndarray:
        return np.array(
            [blocktext.parse_float(ing, f"{key}({row[col_of['name']]})", row[col_of[key]], src)
             for row in ing.rows]
        )

    nutrients = np.column_stack([column(c) for c in nutrient_names]) if nutrient_names \
        else np.zeros((len(names), 0))

    noise_sec = sections["noise"]
    if noise_sec.is_table:
        raise SchemaError(f"{src}: [noise] must hold key = value entries")
    sigma = np.zeros(3)
    for j, key in enumerate(OBJECTIVE_NAMES):
        if key not in noise_sec.entries:
            raise SchemaError(f"{src}: [noise] is missing '{key}'")
        sigma[j] = blocktext.parse_float(noise_sec, key, noise_sec.entries[key], src)
    unknown_keys = [k for k in noise_sec.entries if k not in OBJECTIVE_NAMES]
    if unknown_keys:
        raise SchemaError(f"{src}: [noise] has unknown key(s) {unknown_keys}")

    name = "instance"
    if "meta" in sections and "name" in sections["meta"].entries:
        name = sections["meta"].entries["name"]

    return ProblemInstance(
        name=name,
        ingredient_names=names,
        cost=column("cost"),
        lysine=column("lysine"),
        energy=column("energy"),
        max_proportion=column("max_proportion"),
        nutrient_names=nutrient_names,
        nutrients=nutrients,
        lower=lower,
        upper=upper,
        noise=sigma,
    )


def write_instance(instance: ProblemInstance, path) -> None:
    """Serialize an instance back to the block-text format (round-trips)."""
    header = list(_FIXED_COLUMNS) + list(instance.nutrient_names)
    rows = []
    for i, name in enumerate(instance.ingredient_names):
        row = [name, repr(float(instance.cost[i])), repr(float(instance.lysine[i])),
               repr(float(instance.energy[i])), repr(float(instance.max_proportion[i]))]
        row += [repr(float(v)) for v in instance.nutrients[i]]
        rows.append(row)
    nut_rows = [[n, repr(float(instance.lower[j])), repr(float(instance.upper[j]))]
                for j, n in enumerate(instance.nutrient_names)]
    text = blocktext.format_sections({
        "meta": {"name": instance.name},
        "ingredients": (header, rows),
        "nutrients": (["name", "lower", "upper"], nut_rows),
        "noise": {k: repr(float(instance.noise[j])) for j, k in enumerate(OBJECTIVE_NAMES)},
    })
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
