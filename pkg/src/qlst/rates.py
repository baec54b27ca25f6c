"""Rate objectives, training-fraction optimization, and baselines.

Everything here is expressed per transmitter in bits per channel use:
the trained system pays a (1 - tau) duty-cycle factor on alpha times the
per-receiver mutual information, the known-channel baseline skips
training entirely, and the linearized baseline replaces the quantizer by
a scaled linear channel plus independent Gaussian distortion before
reusing the known-channel machinery.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError, UnreachableTargetError
from .optimize import bisect_monotone, coarse_then_golden, golden_section_max
from .quadrature import DEFAULT_NODES
from .quantizer import INFINITE, QuantizerSpec, calibrate_step
from .replica import (
    SystemConfig,
    hbar,
    known_info_over_snrs,
    make_quantizer,
    mutual_info_known_channel,
    mutual_info_per_rx,
    solve_training_fixed_point,
    trained_info_over_taus,
)
from .scalar_awgn import Prior, gaussian_prior

TAU_GRID_POINTS = 256
TAU_GRID_MIN = 1e-4
TAU_XTOL = 1e-6

ALPHA_BRACKET = (1e-3, 1e4)


def as_quantizer(quantizer, rho: float) -> QuantizerSpec:
    """Accept a QuantizerSpec as-is, or a bit count to calibrate at this rho."""
    if isinstance(quantizer, QuantizerSpec):
        return quantizer
    return make_quantizer(quantizer, rho)


@dataclass(frozen=True)
class RateReport:
    """Optimized rates per transmitter plus diagnostics."""

    rate_opt: float
    tau_opt: float
    rate_known: float | None = None
    rate_linearized: float | None = None
    tau_opt_linearized: float | None = None
    rate_per_rx: float | None = None
    objective_curve: np.ndarray | None = None


@dataclass(frozen=True)
class TrainingOptimum:
    tau_opt: float
    rate_opt: float
    objective_curve: np.ndarray


def _tau_grid(n: int = TAU_GRID_POINTS) -> np.ndarray:
    return np.geomspace(TAU_GRID_MIN, 1.0, n)


def optimize_training(cfg: SystemConfig, nodes: int = DEFAULT_NODES,
                      grid_points: int = TAU_GRID_POINTS) -> TrainingOptimum:
    """Maximize (1 - tau) alpha I(tau) over the training fraction.

    Scans a log-spaced coarse grid, then refines with golden-section
    search to |dtau| <= 1e-6.  Any tau or tau' already present on the
    config is ignored.  At least 90% of the grid must evaluate.
    """
    base = cfg

    def objective(taus):
        taus = np.asarray(taus, dtype=float)
        info = trained_info_over_taus(base, taus, nodes)
        return (1.0 - taus) * base.alpha * info

    try:
        tau_opt, rate_opt, curve = coarse_then_golden(
            objective, _tau_grid(grid_points), TAU_XTOL, extend_low=1e-8
        )
    except ValueError as exc:
        raise SolverError(f"training-fraction sweep failed: {exc}") from exc
    return TrainingOptimum(tau_opt=tau_opt, rate_opt=rate_opt, objective_curve=curve)


def rate_known(rho: float, sigma2: float, alpha: float, quantizer,
               input_prior: Prior, nodes: int = DEFAULT_NODES) -> float:
    """Genie-aided rate per transmitter: alpha times the known-channel information."""
    spec = as_quantizer(quantizer, rho)
    return alpha * mutual_info_known_channel(rho, sigma2, alpha, spec, input_prior, nodes).mutual_info


# ---------------------------------------------------------------------------
# Bussgang-linearized baseline


def bussgang_eta(bits: int, rho: float, step: float | None = None) -> float:
    """Linear-correlation power fraction of the 1- and 2-bit quantizers."""
    if bits == 1:
        return 2.0 / math.pi
    if bits == 2:
        if math.isinf(rho):
            ratio = calibrate_step(2, 0.0) ** 2  # step^2/(rho+1) limit
        else:
            step = calibrate_step(2, rho) if step is None else step
            ratio = step**2 / (rho + 1.0)
        return 2.0 / (5.0 * math.pi) * (1.0 + 2.0 * math.exp(-ratio)) ** 2
    raise ValueError(f"the linearized model is defined for 1 or 2 bits, got {bits}")


def bussgang_rate(rho: float, alpha: float, beta: float, bits: int,
                  input_prior: Prior, step: float | None = None,
                  nodes: int = DEFAULT_NODES, grid_points: int = TAU_GRID_POINTS):
    """Linearized-receiver rate: returns (rate, tau_opt).

    The quantizer is decomposed into a scaled linear channel plus
    uncorrelated distortion treated as independent Gaussian noise, the
    channel estimate from tau beta pilots is folded into an effective
    SNR, and the resulting linear known-channel rate is maximized over
    tau.  Unit noise variance is assumed throughout.
    """
    eta = bussgang_eta(bits, rho, step)
    if math.isinf(rho):
        rho_l = eta / (1.0 - eta)
    else:
        rho_l = eta * rho / ((1.0 - eta) * rho + 1.0)
    inf_spec = QuantizerSpec(bits=INFINITE)

    def rho_eff(tau):
        tb = tau * beta
        return tb * rho_l**2 / (1.0 + (1.0 + tb) * rho_l)

    def objective(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        info = known_info_over_snrs(rho_eff(taus), 1.0, alpha, inf_spec, input_prior, nodes)
        return (1.0 - taus) * alpha * info

    tau_opt, rate, _ = coarse_then_golden(objective, _tau_grid(grid_points), TAU_XTOL)
    return rate, tau_opt


# ---------------------------------------------------------------------------
# small- and large-alpha regimes


def small_alpha_rate(tau: float, rho: float, sigma2: float, beta: float, quantizer,
                     nodes: int = DEFAULT_NODES,
                     channel_prior: Prior = gaussian_prior) -> float:
    """Rate per receiver of the receiver-limited regime, in bits/channel use.

    (1 - tau) times the mutual information of a single non-fading link at
    the equivalent SNR; by construction independent of alpha and of the
    input distribution.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    spec = as_quantizer(quantizer, rho)
    cfg = SystemConfig(rho=rho, alpha=1.0, quantizer=spec, beta=beta, sigma2=sigma2,
                       tau=tau, channel_prior=channel_prior)
    q_G, _, mse_G = solve_training_fixed_point(cfg, nodes)
    if math.isinf(rho):
        if spec.is_infinite:
            if mse_G <= 0.0:
                return math.inf
            info = math.log2(1.0 + q_G / mse_G)
        else:
            info = float(hbar(0.0, 1.0, spec, nodes) - hbar(q_G, mse_G, spec, nodes)) if mse_G > 0 \
                else float(hbar(0.0, 1.0, spec, nodes))
    else:
        rho_bar = rho * q_G
        s_bar = sigma2 + rho * mse_G
        if spec.is_infinite:
            info = math.log2(1.0 + rho_bar / s_bar)
        else:
            info = float(hbar(0.0, s_bar + rho_bar, spec, nodes) - hbar(rho_bar, s_bar, spec, nodes))
    return (1.0 - tau) * info


def small_alpha_tau_opt(rho: float, sigma2: float, beta: float, quantizer,
                        nodes: int = DEFAULT_NODES,
                        grid_points: int = TAU_GRID_POINTS):
    """Training fraction maximizing the small-alpha rate; returns (tau_opt, rate)."""
    spec = as_quantizer(quantizer, rho)

    def objective(taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        out = np.empty(taus.shape)
        for i, t in enumerate(taus):
            try:
                out[i] = small_alpha_rate(float(t), rho, sigma2, beta, spec, nodes)
            except SolverError:
                out[i] = np.nan
        return out

    tau_opt, rate, _ = coarse_then_golden(objective, _tau_grid(grid_points), TAU_XTOL)
    return tau_opt, rate


def large_alpha_tau_opt(rho: float, beta: float, alpha: float, bits) -> float:
    """Closed-form large-alpha training fraction for QPSK inputs.

    Valid for one-bit and unquantized receivers; the one-bit variant
    carries the (pi/2)^2 penalty of the sign nonlinearity.
    """
    if math.isinf(rho):
        snr_factor = 1.0
    else:
        if rho <= 0:
            raise ValueError("rho must be positive")
        snr_factor = ((rho + 1.0) / rho) ** 2
    base = 2.0 * snr_factor * math.log(alpha) / (beta * alpha)
    if bits == INFINITE:
        return base
    if bits == 1:
        return (math.pi / 2.0) ** 2 * base
    raise ValueError(f"large-alpha training formula exists for 1 or INFINITE bits, got {bits}")


# ---------------------------------------------------------------------------
# inverse solves and saturation


def required_alpha_for_rate(target_rate: float, rho: float, sigma2: float, beta: float,
                            input_prior: Prior, quantizer, known: bool = False,
                            nodes: int = DEFAULT_NODES,
                            bracket: tuple[float, float] = ALPHA_BRACKET,
                            rtol: float = 1e-3,
                            grid_points: int = TAU_GRID_POINTS) -> float:
    """Smallest alpha whose optimized (or genie) rate reaches the target.

    Bisects the monotone map alpha -> rate over ``bracket``.  If even the
    top of the bracket falls short the target is unreachable (e.g. above
    the quantization-noise ceiling) and the error reports that asymptote.
    Returns the bracket floor when the target is met everywhere, which is
    how the no-asymptote (alpha -> 0) regimes announce themselves.
    """
    spec = as_quantizer(quantizer, rho)
    if not input_prior.is_gaussian and target_rate >= input_prior.entropy_bits():
        raise UnreachableTargetError(
            f"target {target_rate} is at or above the input entropy ceiling "
            f"{input_prior.entropy_bits()}",
            asymptote=input_prior.entropy_bits(),
        )

    def rate_of(alpha: float) -> float:
        if known:
            return rate_known(rho, sigma2, alpha, spec, input_prior, nodes)
        cfg = SystemConfig(rho=rho, alpha=alpha, quantizer=spec, beta=beta,
                           sigma2=sigma2, input_prior=input_prior)
        return optimize_training(cfg, nodes, grid_points).rate_opt

    lo, hi = bracket
    top = rate_of(hi)
    if top < target_rate:
        raise UnreachableTargetError(
            f"rate {target_rate} unreachable: even alpha={hi:g} attains only {top:.6g} "
            "(quantization-limited ceiling)",
            asymptote=top,
        )
    if rate_of(lo) >= target_rate:
        return lo
    return bisect_monotone(rate_of, target_rate, lo, hi, rtol, increasing=True)


@dataclass(frozen=True)
class SaturationReport:
    alphas: tuple[float, ...]
    scaled_info: tuple[float, ...]
    limit: float
    monotone: bool

    @property
    def gap_at_largest(self) -> float:
        return abs(self.scaled_info[-1] - self.limit)


def saturation_check(input_prior: Prior, quantizer, rho: float, beta: float,
                     tau: float = 0.05, alphas=(1e2, 1e3, 1e4),
                     nodes: int = DEFAULT_NODES) -> SaturationReport:
    """alpha * I along an alpha ladder, against the input-entropy ceiling."""
    spec = as_quantizer(quantizer, rho)
    values = []
    for a in alphas:
        cfg = SystemConfig(rho=rho, alpha=a, quantizer=spec, beta=beta, tau=tau,
                           input_prior=input_prior)
        values.append(a * mutual_info_per_rx(cfg, nodes).mutual_info)
    gaps = [input_prior.entropy_bits() - v for v in values]
    monotone = all(gaps[i + 1] <= gaps[i] + 1e-9 for i in range(len(gaps) - 1))
    return SaturationReport(
        alphas=tuple(float(a) for a in alphas),
        scaled_info=tuple(float(v) for v in values),
        limit=input_prior.entropy_bits(),
        monotone=monotone,
    )
