from .angular import (
    H_profile,
    bump_F_profile,
    getoor_constant,
    lam_factory,
    normalization_constant,
    power_eigenvalue_formula,
    power_eigenvalue_quadrature,
    pv_constant,
)
from .fraclap import (
    FracLapMatrix,
    build_matrix,
    drift_apply,
    drift_matrix,
    fraclap_direct,
    fraclap_periodic,
    fraclap_radial,
    fraclap_radial_reduction,
    interval_matrix,
    radial_matrix,
)
from .green import BallGreenKernel, ball_green_build, green_solve
from .riesz import RieszKernel, riesz_apply, riesz_kernel

__all__ = [
    "H_profile", "bump_F_profile", "getoor_constant", "lam_factory",
    "normalization_constant", "power_eigenvalue_formula",
    "power_eigenvalue_quadrature", "pv_constant",
    "FracLapMatrix", "build_matrix", "drift_apply", "drift_matrix",
    "fraclap_direct", "fraclap_periodic", "fraclap_radial",
    "fraclap_radial_reduction", "interval_matrix", "radial_matrix",
    "BallGreenKernel", "ball_green_build", "green_solve",
    "RieszKernel", "riesz_apply", "riesz_kernel",
]
