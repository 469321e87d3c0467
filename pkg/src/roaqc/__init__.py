"""Region-of-attraction estimation for quadratic systems via quadratic constraints."""

from .ellipsoids import Ellipsoid
from .monomials import (
    MonomialBasis,
    QuadForm,
    QuadraticSystem,
    bundled_system,
    bundled_system_names,
    load_system,
    make_system,
    monomial_count,
    quadform_from_coeffs,
    quadform_from_matrix,
)
from .qc import RECIPES, QcMatrix, build_qc_set, validate_qc_sampled
from .roa import (
    RoaCertificate,
    RoaResult,
    SweepResult,
    alpha_sweep,
    solve_roa,
    verify_certificate,
)
from .sdp import SdpBlock, SdpProblem, SdpSolution, SolverOptions, solve

__version__ = "0.1.0"

__all__ = [
    "Ellipsoid",
    "MonomialBasis",
    "QuadForm",
    "QuadraticSystem",
    "RECIPES",
    "QcMatrix",
    "RoaCertificate",
    "RoaResult",
    "SdpBlock",
    "SdpProblem",
    "SdpSolution",
    "SolverOptions",
    "SweepResult",
    "alpha_sweep",
    "build_qc_set",
    "bundled_system",
    "bundled_system_names",
    "load_system",
    "make_system",
    "monomial_count",
    "quadform_from_coeffs",
    "quadform_from_matrix",
    "solve",
    "solve_roa",
    "validate_qc_sampled",
    "verify_certificate",
]
