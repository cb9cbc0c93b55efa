"""Holling type II three-species food chain: equilibria, cycles, experiments."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    EPS_CLASS,
    EPS_NEG,
    DerivedParams,
    DimensionalParams,
    ParameterSet,
    derived,
    hp_convert,
    jacobian,
    p_poly,
    rescale,
    rhs,
)
from .equilibria import (  # noqa: E402
    Equilibrium,
    RouthHurwitzRecord,
    ClassificationCase,
    boundary_equilibria,
    classify,
    interior_equilibria,
    routh_hurwitz,
)
from .integrator import (  # noqa: E402
    AttractorVerdict,
    IntegratorConfig,
    Thresholds,
    Trajectory,
    attracting_set_check,
    classify_attractor,
    integrate,
)
from .cycles import FloquetResult, LimitCycle, f_condition, find_h2_cycle, floquet, monodromy  # noqa: E402

__all__ = [
    "EPS_CLASS",
    "EPS_NEG",
    "AttractorVerdict",
    "DerivedParams",
    "DimensionalParams",
    "Equilibrium",
    "FloquetResult",
    "IntegratorConfig",
    "LimitCycle",
    "ParameterSet",
    "RouthHurwitzRecord",
    "ClassificationCase",
    "Thresholds",
    "Trajectory",
    "attracting_set_check",
    "boundary_equilibria",
    "classify",
    "classify_attractor",
    "derived",
    "f_condition",
    "find_h2_cycle",
    "floquet",
    "hp_convert",
    "integrate",
    "interior_equilibria",
    "jacobian",
    "monodromy",
    "p_poly",
    "rescale",
    "rhs",
    "routh_hurwitz",
]
