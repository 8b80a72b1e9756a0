"""High-precision s-wave scattering lengths for (12, s) Lennard-Jones potentials.

The scattering length is obtained exactly as a quotient of Wronskians of
power-series solutions with the solution regular at the origin, located
zeros and poles of the intensity included, and cross-validated against an
independent outward integration of the zero-energy radial equation.
"""

from .connection import (
    AtPoleError,
    GammaCoefficient,
    ScatteringResult,
    WronskianResult,
    gamma_p,
    scattering_length,
    wronskian,
)
from .mpkernel import (
    DomainError,
    PrecisionContext,
    PrecisionExhaustedError,
    escalate,
    gamma,
    make_context,
    pow_real,
)
from .oracle import (
    IntegrationAccuracyError,
    IntegrationSetup,
    MatchResult,
    PoleSignalError,
    StiffnessError,
    integrate_zero_energy,
    make_setup,
    match_coefficients,
    oracle_scattering_length,
)
from .roots import (
    QuasiLinearFit,
    RootRecord,
    ScanRangeError,
    bracket_roots,
    fit_quasilinear,
    refine_root,
    zeros_poles_table,
)
from .series import (
    PotentialSpec,
    SeriesTabulation,
    TermBudgetError,
    ThomeTabulation,
    ZTooLargeError,
    a_coeffs,
    b_coeffs,
    eval_w,
    thome_logderiv,
)

__version__ = "0.1.0"

__all__ = [
    "AtPoleError", "DomainError", "GammaCoefficient", "IntegrationAccuracyError",
    "IntegrationSetup", "MatchResult", "PoleSignalError", "PotentialSpec",
    "PrecisionContext", "PrecisionExhaustedError", "QuasiLinearFit",
    "RootRecord", "ScanRangeError", "ScatteringResult", "SeriesTabulation",
    "StiffnessError", "TermBudgetError", "ThomeTabulation", "WronskianResult",
    "ZTooLargeError", "a_coeffs", "b_coeffs", "bracket_roots", "escalate",
    "eval_w", "fit_quasilinear", "gamma", "gamma_p", "integrate_zero_energy",
    "make_context", "make_setup", "match_coefficients",
    "oracle_scattering_length", "pow_real", "refine_root",
    "scattering_length", "thome_logderiv", "wronskian", "zeros_poles_table",
    "__version__",
]
