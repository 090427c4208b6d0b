"""relosc: metastable levels and resonances of the 1D relativistic
(Dirac and Klein-Gordon) harmonic oscillators.

The separated second-order operators of the problem are PT-symmetric
quartic Hamiltonians; their eigenvalues, computed at arbitrary precision
by the block matrix-moment determinant recurrence in a scaled oscillator
basis, feed the implicit level equation E + Omega E^2 = lambda_n(E).
Real metastable levels come from the real and complex-translated frames,
complex resonance widths from the complex-dilated frame.
"""

from .scalars import (PrecisionContext, make_context, parse_decimal_string,
                      to_decimal_string)
from .hermite import (BasisSpec, OscillatorTables, derivative_column,
                      gauss_hermite_rule, kinetic_matrix_element,
                      position_power_column, quadrature_overlap_oracle,
                      raw_position_power_column)
from .operators import (DIRAC, KLEIN_GORDON, BlockTridiagonal, Frame,
                        ModelParams, QuarticOperator, apply_frame,
                        assemble_blocks, build_frame_operator,
                        build_operator, from_physical)
from .moments import (EigenvalueEstimate, MomentPolynomialState,
                      MomentSolverError, NoConvergenceError, NoPlateauError,
                      SingularBError, StabilizationResult,
                      dense_eigensolve_oracle, det_p, estimate_digit_loss,
                      find_eigenvalue, lower_bound_eigenvalue,
                      stabilization_scan)
from .levels import (LevelConfig, LevelResult, NegativeDiscriminantError,
                     ThetaPlateauFailError, asymptotic_lambda,
                     choose_variational_params, lambda_of, solve_level,
                     solve_resonance)
from .diagnostics import (ActionResult, GapResult, SaturationCurve,
                          SpinorReconstruction, action_S, extract_eigenvector,
                          fit_line, kappa_delta, lagrange_extrapolate,
                          lambda_gap, reconstruct_spinor, saturation_curve,
                          sector_of, spinor_from_level)

__version__ = "0.1.0"

__all__ = [
    "PrecisionContext", "make_context", "to_decimal_string",
    "parse_decimal_string",
    "BasisSpec", "OscillatorTables", "position_power_column",
    "kinetic_matrix_element", "derivative_column", "gauss_hermite_rule",
    "quadrature_overlap_oracle", "raw_position_power_column",
    "DIRAC", "KLEIN_GORDON", "Frame", "ModelParams", "QuarticOperator",
    "BlockTridiagonal", "from_physical", "build_operator", "apply_frame",
    "build_frame_operator", "assemble_blocks",
    "MomentPolynomialState", "EigenvalueEstimate", "StabilizationResult",
    "det_p", "find_eigenvalue", "lower_bound_eigenvalue",
    "dense_eigensolve_oracle", "stabilization_scan", "estimate_digit_loss",
    "MomentSolverError", "SingularBError", "NoConvergenceError",
    "NoPlateauError", "NegativeDiscriminantError", "ThetaPlateauFailError",
    "LevelConfig", "LevelResult", "lambda_of", "solve_level",
    "solve_resonance", "asymptotic_lambda", "choose_variational_params",
    "GapResult", "ActionResult", "SpinorReconstruction", "SaturationCurve",
    "lambda_gap", "kappa_delta", "fit_line", "lagrange_extrapolate",
    "reconstruct_spinor", "extract_eigenvector", "spinor_from_level",
    "sector_of", "action_S", "saturation_curve",
]
