"""Carleman linearization of a 1D advection-diffusion-reaction lattice,
with Pauli-basis compression analysis and verified quantum block encodings."""

__version__ = "0.1.0"

from .adr_core import (
    AdrParams,
    DerivedNumbers,
    InitialBox,
    build_linear_matrix,
    derived_numbers,
    evolve_nonlinear,
    gaussian_velocity,
    logistic_carleman_truncated,
    logistic_exact,
    logistic_truncation_bound,
    relative_error_series,
)
from .block_encoding import (
    CirculantStep,
    QuadraticCoupling,
    build_be_circuit_B,
    build_be_circuit_L,
    check_applicability,
    p0_analytic_circulant,
    simulate_be,
)
from .carleman import (
    CarlemanOperator,
    assemble_carleman_sparse,
    carleman_dimension,
    convergence_study,
    evolve_carleman,
    initial_carleman_state,
    operator_for_params,
)
from .pauli import PauliExpansion, PauliTerm, decompose, reconstruct

__all__ = [
    "AdrParams",
    "CarlemanOperator",
    "CirculantStep",
    "DerivedNumbers",
    "InitialBox",
    "PauliExpansion",
    "PauliTerm",
    "QuadraticCoupling",
    "__version__",
    "assemble_carleman_sparse",
    "build_be_circuit_B",
    "build_be_circuit_L",
    "build_linear_matrix",
    "carleman_dimension",
    "check_applicability",
    "convergence_study",
    "decompose",
    "derived_numbers",
    "evolve_carleman",
    "evolve_nonlinear",
    "gaussian_velocity",
    "initial_carleman_state",
    "logistic_carleman_truncated",
    "logistic_exact",
    "logistic_truncation_bound",
    "operator_for_params",
    "p0_analytic_circulant",
    "reconstruct",
    "relative_error_series",
    "simulate_be",
]
