"""Stable normalizers, inclusion probabilities, samplers and bandwidth
inference for fixed-size determinantal point processes, with saddlepoint
approximations of the elementary-symmetric-polynomial normalizer and
brute-force oracles to verify every approximation at desk scale.
"""
from .diagonal import (inclusion_basic, inclusion_corrected,
                       inclusion_corrected_all, inclusion_exact,
                       inclusion_exact_all, sample_diagonal_kdpp)
from .esp import (esp_exact, esp_leave_one_out, esp_recurrence,
                  esp_saddlepoint, esp_saddlepoint_all, first_overflow,
                  psi_derivatives, solve_saddlepoint)
from .estimators import KDPP, BandwidthMLE
from .exceptions import (BudgetError, ConvergenceError, DegenerateError,
                         DppError, InfeasibleError, NotPSDError)
from .inference import (LikelihoodCurve, curve_to_csv, fit_tau, loglik_kdpp,
                        profile_loglik_dpp, tau_grid)
from .kdpp import (MarginalKernel, first_order_inclusion, high_order_inclusion,
                   marginal_kernel, match_dpp, sample_dpp, sample_kdpp,
                   sample_projection_dpp)
from .oracle import (EnumeratedPmf, InclusionMeasure, enumerate_dpp,
                     enumerate_kdpp, exact_inclusion, mc_inclusion,
                     mc_inclusion_many, pmf_to_csv, tv_distance)
from .spectrum import (LEnsemble, Spectrum, as_spectrum, dof_diagnostic,
                       from_matrix, gaussian_l_ensemble, load_matrix_csv,
                       load_points_csv)

__version__ = "0.1.0"

__all__ = [
    "BandwidthMLE", "BudgetError", "ConvergenceError", "DegenerateError",
    "DppError", "EnumeratedPmf", "InclusionMeasure", "InfeasibleError",
    "KDPP", "LEnsemble", "LikelihoodCurve", "MarginalKernel", "NotPSDError",
    "Spectrum", "as_spectrum", "curve_to_csv", "dof_diagnostic",
    "enumerate_dpp", "enumerate_kdpp", "esp_exact", "esp_leave_one_out",
    "esp_recurrence", "esp_saddlepoint", "esp_saddlepoint_all",
    "exact_inclusion", "first_order_inclusion", "first_overflow", "fit_tau",
    "from_matrix", "gaussian_l_ensemble", "high_order_inclusion",
    "inclusion_basic", "inclusion_corrected", "inclusion_corrected_all",
    "inclusion_exact", "inclusion_exact_all", "load_matrix_csv",
    "load_points_csv", "loglik_kdpp", "marginal_kernel", "match_dpp",
    "mc_inclusion", "mc_inclusion_many", "pmf_to_csv", "profile_loglik_dpp",
    "psi_derivatives", "sample_diagonal_kdpp", "sample_dpp", "sample_kdpp",
    "sample_projection_dpp", "solve_saddlepoint", "tau_grid", "tv_distance",
]
