"""Analytic engine: intensity geometry, Toeplitz machinery, quadrature."""

from .engine import (
    DEFAULT_DELAY_CAP,
    DelayResult,
    ToeplitzLogCoeffs,
    UnsupportedRegimeError,
    analytic_strategy_values,
    backhaul_delay,
    delay_jt,
    delay_pt,
    delay_ut,
    interference_log_coeffs,
    objective_delay,
    objective_stp,
    omega_jt,
    stp_jt,
    stp_jt_smallbeta,
    stp_pt,
    stp_pt_smallbeta,
)
from .intensity import (
    intensity_density,
    intensity_inverse,
    intensity_measure,
    joint_pathloss_pdf,
    nth_pathloss_pdf,
)
from .quadrature import QuadratureError, QuadratureSpec, integrate_1d, integrate_2d, integrate_qmc
from .special import ConvergenceError, gauss_2f1, gauss_2f1_vec, interference_hyp_factor
from .toeplitz import toeplitz_exp_column, toeplitz_exp_l1

__all__ = [
    "DEFAULT_DELAY_CAP",
    "ConvergenceError",
    "DelayResult",
    "QuadratureError",
    "QuadratureSpec",
    "ToeplitzLogCoeffs",
    "UnsupportedRegimeError",
    "analytic_strategy_values",
    "backhaul_delay",
    "delay_jt",
    "delay_pt",
    "delay_ut",
    "gauss_2f1",
    "gauss_2f1_vec",
    "integrate_1d",
    "integrate_2d",
    "integrate_qmc",
    "intensity_density",
    "intensity_inverse",
    "intensity_measure",
    "interference_hyp_factor",
    "interference_log_coeffs",
    "joint_pathloss_pdf",
    "nth_pathloss_pdf",
    "objective_delay",
    "objective_stp",
    "omega_jt",
    "stp_jt",
    "stp_jt_smallbeta",
    "stp_pt",
    "stp_pt_smallbeta",
    "toeplitz_exp_column",
    "toeplitz_exp_l1",
]
