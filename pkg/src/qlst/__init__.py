"""Achievable rates, optimal training, and symbol error rates for
large-scale quantized communication systems, with a GAMP-based Monte
Carlo validator."""

from .errors import (
    ConfigError,
    DivergedTrialError,
    QlstError,
    SolverError,
    UnreachableTargetError,
)
from .quantizer import INFINITE, QuantizerSpec, calibrate_step, psi, psi_prime, quantize
from .replica import (
    FixedPointSolution,
    RxInformation,
    SystemConfig,
    chi,
    equivalent_system,
    hbar,
    make_quantizer,
    mutual_info_known_channel,
    mutual_info_per_rx,
    solve_data_fixed_point,
    solve_fixed_points,
    solve_training_fixed_point,
)
from .scalar_awgn import Prior, gaussian_prior, input_prior, mmse_awgn, mutual_info_awgn

__all__ = [
    "ConfigError",
    "DivergedTrialError",
    "FixedPointSolution",
    "INFINITE",
    "Prior",
    "QlstError",
    "QuantizerSpec",
    "RxInformation",
    "SolverError",
    "SystemConfig",
    "UnreachableTargetError",
    "calibrate_step",
    "chi",
    "equivalent_system",
    "gaussian_prior",
    "hbar",
    "input_prior",
    "make_quantizer",
    "mmse_awgn",
    "mutual_info_awgn",
    "mutual_info_known_channel",
    "mutual_info_per_rx",
    "psi",
    "psi_prime",
    "quantize",
    "solve_data_fixed_point",
    "solve_fixed_points",
    "solve_training_fixed_point",
]

__version__ = "0.1.0"
