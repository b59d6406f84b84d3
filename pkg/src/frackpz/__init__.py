"""Numerical workbench for the stationary fractional KPZ problem.

Solves and verifies (-Delta)^s u = |grad u|^q + lambda f with zero exterior
condition on interval and radial ball grids: constructive schemes (monotone
iteration over truncated problems, Riesz-potential Picard iteration,
Schauder-set parameterization) plus diagnostics for the kernel bounds,
supersolutions, comparison principle and regularity exponents.
"""

from .core import (
    CRITICAL,
    SUBCRITICAL,
    SUBCRITICAL_LOW,
    SUPERCRITICAL,
    DomainSpec,
    ExponentTable,
    GridFunction,
    ProblemParams,
    ball,
    boundary_distance,
    critical_exponents,
    finite_gradient,
    from_interior,
    gagliardo_seminorm,
    interval,
    lp_norm,
    remainder,
    truncate,
    weak_lp_norm,
)

__all__ = [
    "CRITICAL", "SUBCRITICAL", "SUBCRITICAL_LOW", "SUPERCRITICAL",
    "DomainSpec", "ExponentTable", "GridFunction", "ProblemParams",
    "ball", "boundary_distance", "critical_exponents", "finite_gradient",
    "from_interior", "gagliardo_seminorm", "interval", "lp_norm",
    "remainder", "truncate", "weak_lp_norm",
]

__version__ = "0.1.0"
