"""Symbol-error-rate theory for QPSK inputs on the decoupled channel.

The trained system's detection-stage SER equals that of its equivalent
known-channel system; both reduce to the scalar channel
y = sqrt(qtilde_x) x + n with n ~ CN(0,1), whose QPSK error rate is

    ser(qtilde) = 2 Q(sqrt(qtilde)) - Q(sqrt(qtilde))^2.

Training enters through the load tau' (training symbols per
transmitter); the noise variance is fixed to 1 throughout this module.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import UnreachableTargetError
from .optimize import bisect_monotone
from .quadrature import DEFAULT_NODES
from .replica import (
    FixedPointSolution,
    SystemConfig,
    chi,
    solve_fixed_points,
    solve_training_fixed_point,
)
from .rates import as_quantizer
from .scalar_awgn import input_prior

SIGMA2 = 1.0

TAU_PRIME_BRACKET = (1e-3, 1e3)
ALPHA_BRACKET = (1e-3, 1e4)


def gaussian_q(x):
    """Tail probability of the standard normal, via erfc."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class SerReport:
    """Symbol error rate plus the decoupled-channel diagnostics behind it."""

    ser: float
    qtilde_x: float
    fixed_point: FixedPointSolution | None
    regime: str  # "exact" or "large_alpha_approx"


def ser_qpsk_theory(qtilde_x) -> float:
    """QPSK symbol error rate of the decoupled channel at SNR qtilde_x.

    A symbol survives only if both real components do, giving
    2Q - Q^2; at qtilde = 0 this is the 0.75 of a random guess.
    """
    arr = np.asarray(qtilde_x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("qtilde_x must be nonnegative")
    q = gaussian_q(np.sqrt(arr))
    out = 2.0 * q - q**2
    return float(out) if out.ndim == 0 else out


def _config(rho: float, alpha: float, tau_prime: float, spec) -> SystemConfig:
    return SystemConfig(
        rho=rho, alpha=alpha, quantizer=spec, sigma2=SIGMA2,
        tau_prime=tau_prime, input_prior=input_prior(1),
    )


def ser_pipeline(rho: float, alpha: float, tau_prime: float, quantizer,
                 nodes: int = DEFAULT_NODES) -> SerReport:
    """SER of the trained QPSK system: training load tau', equivalence, detection.

    The constellation is fixed at QPSK (the closed-form error rate is
    specific to it).
    """
    if tau_prime <= 0:
        raise ValueError(f"tau_prime must be positive, got {tau_prime}")
    spec = as_quantizer(quantizer, rho)
    solution = solve_fixed_points(_config(rho, alpha, tau_prime, spec), nodes)
    qt = solution.qtilde_x
    ser = 0.0 if math.isinf(qt) else float(ser_qpsk_theory(qt))
    return SerReport(ser=ser, qtilde_x=qt, fixed_point=solution, regime="exact")


def ser_large_alpha(rho: float, tau_prime: float, quantizer, alpha: float,
                    nodes: int = DEFAULT_NODES) -> SerReport:
    """Large-alpha SER approximation 2Q(sqrt(alpha rho_bar chi(rho_bar, sigma_bar^2))).

    The decoupled SNR is evaluated at perfect data overlap, so only the
    training fixed point is solved and the result scales linearly in
    alpha.
    """
    if tau_prime <= 0:
        raise ValueError(f"tau_prime must be positive, got {tau_prime}")
    spec = as_quantizer(quantizer, rho)
    cfg = _config(rho, alpha, tau_prime, spec)
    q_G, _, mse_G = solve_training_fixed_point(cfg, nodes)
    if math.isinf(rho):
        if spec.is_infinite:
            qt = math.inf if mse_G == 0.0 else alpha * q_G / mse_G
        else:
            qt = alpha * q_G * chi(q_G, mse_G, spec, nodes)
    else:
        rho_bar = rho * q_G
        sigma2_bar = SIGMA2 + rho * mse_G
        if spec.is_infinite:
            qt = alpha * rho_bar / sigma2_bar
        else:
            qt = alpha * rho_bar * chi(rho_bar, sigma2_bar, spec, nodes)
    ser = 0.0 if math.isinf(qt) else float(2.0 * gaussian_q(math.sqrt(qt)))
    return SerReport(ser=ser, qtilde_x=qt, fixed_point=None, regime="large_alpha_approx")


def required_tau_prime_for_ser(target_ser: float, rho: float, alpha: float, quantizer,
                               nodes: int = DEFAULT_NODES,
                               bracket: tuple[float, float] = TAU_PRIME_BRACKET,
                               rtol: float = 1e-3) -> float:
    """Smallest training load tau' achieving the target SER.

    SER decreases monotonically in tau'; if the target is below the
    perfect-training floor even at the top of the bracket, the error
    names that floor.  Returns the bracket floor when the target is met
    everywhere.
    """
    _check_target(target_ser)
    spec = as_quantizer(quantizer, rho)

    def ser_of(tp: float) -> float:
        return ser_pipeline(rho, alpha, tp, spec, nodes).ser

    lo, hi = bracket
    floor = ser_of(hi)
    if floor > target_ser:
        raise UnreachableTargetError(
            f"SER {target_ser} unreachable at rho={rho:g}, alpha={alpha:g}: "
            f"training load {hi:g} still gives {floor:.6g}",
            asymptote=floor,
        )
    if ser_of(lo) <= target_ser:
        return lo
    return bisect_monotone(ser_of, target_ser, lo, hi, rtol, increasing=False)


def required_alpha_for_ser(target_ser: float, rho: float, tau_prime: float, quantizer,
                           nodes: int = DEFAULT_NODES,
                           bracket: tuple[float, float] = ALPHA_BRACKET,
                           rtol: float = 1e-3) -> float:
    """Smallest receiver ratio alpha achieving the target SER at fixed tau'."""
    _check_target(target_ser)
    spec = as_quantizer(quantizer, rho)

    def ser_of(a: float) -> float:
        return ser_pipeline(rho, a, tau_prime, spec, nodes).ser

    lo, hi = bracket
    floor = ser_of(hi)
    if floor > target_ser:
        raise UnreachableTargetError(
            f"SER {target_ser} unreachable at rho={rho:g}, tau'={tau_prime:g}: "
            f"alpha {hi:g} still gives {floor:.6g}",
            asymptote=floor,
        )
    if ser_of(lo) <= target_ser:
        return lo
    return bisect_monotone(ser_of, target_ser, lo, hi, rtol, increasing=False)


def critical_snr(alpha: float, bits, target_ser: float = 0.01, tau_prime: float = 2.0,
                 nodes: int = DEFAULT_NODES,
                 bracket: tuple[float, float] = (1e-4, 1e8), rtol: float = 1e-3) -> float:
    """SNR at which the target SER is achieved with training load tau'.

    Below this point the required training grows sharply.  ``bits`` is a
    resolution (the step is recalibrated at every probed SNR).  Returns a
    linear-scale rho.
    """
    _check_target(target_ser)

    def ser_of(rho: float) -> float:
        return ser_pipeline(rho, alpha, tau_prime, as_quantizer(bits, rho), nodes).ser

    lo, hi = bracket
    floor = ser_of(hi)
    if floor > target_ser:
        raise UnreachableTargetError(
            f"SER {target_ser} unreachable with alpha={alpha:g}, tau'={tau_prime:g} "
            f"at any SNR up to {hi:g} (quantization floor {floor:.6g})",
            asymptote=floor,
        )
    if ser_of(lo) <= target_ser:
        return lo
    return bisect_monotone(ser_of, target_ser, lo, hi, rtol, increasing=False)


def _check_target(target_ser: float):
    if not 0.0 < target_ser < 0.75:
        raise ValueError(f"target SER must lie in (0, 0.75), got {target_ser}")
