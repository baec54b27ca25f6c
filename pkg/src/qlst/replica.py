"""Quantized-output functionals, coupled fixed points, and per-receiver rates.

The large-system analysis reduces everything to two scalar functionals of
a Gaussian signal of power ``gamma`` observed through the quantizer in
noise of power ``s``:

    hbar(gamma, s) = -2 sum_k E_z[ Psi_k(sqrt(gamma) z, s)
                                   * log2 Psi_k(sqrt(gamma) z, s) ]
    chi(gamma, s)  =    sum_k E_z[ Psi_k'(sqrt(gamma) z, s)^2
                                   / Psi_k(sqrt(gamma) z, s) ]

with z standard normal.  For the identity map (bits = INFINITE) these
become log2(pi e s) and 1/s.

Both the training stage and the data stage decouple into the same scalar
fixed point

    qtilde = load * snr * chi(snr q, noise + snr (1 - q)),
    q      = 1 - mmse(qtilde, prior),

with (load, snr, noise) = (tau beta, rho, sigma^2) for training and
(alpha, rho_bar, sigma_bar^2) for data.  The training solution feeds the
equivalence transform rho_bar = rho (1 - mse_G), sigma_bar^2 =
sigma^2 + rho mse_G, after which the data stage and the entropies are
those of a known-channel system.

rho = inf is a first-class limit: all pre-quantizer quantities are
rescaled by sqrt(rho), which turns the training stage into (tau beta, 1,
0) and the data stage into (alpha, q_G, mse_G) evaluated with the
zero-SNR-calibrated quantizer step, and leaves finite-b entropies
unchanged (hbar is scale invariant).  In that regime a custom quantizer
step has no meaning and is rejected.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, SolverError
from .quadrature import DEFAULT_NODES, SHARP_WIDTH, gauss_hermite, normal_rule_for
from .quantizer import INFINITE, QuantizerSpec, calibrate_step, psi_all, psi_prime_all
from .scalar_awgn import LN2, Prior, gaussian_prior, mmse_awgn, mmse_for_solver, mutual_info_awgn

PSI_FLOOR = 1e-300

DAMPING = 0.5
FP_TOL = 1e-10
MAX_ITER = 10_000
_INIT_LOW = 1e-6
_INIT_HIGH = 1.0 - 1e-6
_BRANCH_GAP = 1e-6


# ---------------------------------------------------------------------------
# quantized-output functionals


def _integrate_cells(gamma, s, spec, nodes, cell_fn):
    """E_z of sum_k cell_fn(psi_k, psi'_k) at (sqrt(gamma) z, s), elementwise.

    gamma and s broadcast; elements whose transition width sqrt(s/gamma)
    undercuts the Gauss-Hermite resolution fall back to the refined panel
    rule one element at a time.
    """
    gamma = np.asarray(gamma, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("s must be positive")
    if np.any(gamma < 0):
        raise ValueError("gamma must be nonnegative")
    gamma_b, s_b = np.broadcast_arrays(gamma, s)
    out = np.empty(gamma_b.shape)
    flat_g = gamma_b.ravel()
    flat_s = s_b.ravel()
    flat_out = out.reshape(-1)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        sharp = (flat_g > 0) & (flat_s / flat_g < SHARP_WIDTH**2)

    smooth_idx = np.nonzero(~sharp)[0]
    if smooth_idx.size:
        z, w = gauss_hermite(nodes)
        g_sm = flat_g[smooth_idx]
        s_sm = flat_s[smooth_idx]
        # chunk so the (n, nodes, cells) workspace stays modest
        n_cells = spec.n_levels
        block = max(1, int(4_000_000 / (len(z) * n_cells)))
        for start in range(0, smooth_idx.size, block):
            sl = slice(start, start + block)
            wv = np.sqrt(g_sm[sl])[:, None] * z[None, :]
            sv = np.broadcast_to(s_sm[sl][:, None], wv.shape)
            vals = cell_fn(wv, sv, spec)
            flat_out[smooth_idx[sl]] = vals @ w

    transitions = math.sqrt(2.0) * spec.thresholds() if not spec.is_infinite else None
    for i in np.nonzero(sharp)[0]:
        z, w = normal_rule_for(flat_g[i], flat_s[i], transitions, nodes)
        wv = np.sqrt(flat_g[i]) * z
        vals = cell_fn(wv, np.full_like(wv, flat_s[i]), spec)
        flat_out[i] = vals @ w
    return out


def _plogp_cells(w, s, spec):
    p = psi_all(w, s, spec)
    logp = np.log2(np.maximum(p, PSI_FLOOR))
    return np.where(p > PSI_FLOOR, p * logp, 0.0).sum(axis=-1)


def _fisher_cells(w, s, spec):
    p = psi_all(w, s, spec)
    dp = psi_prime_all(w, s, spec)
    ratio = np.zeros_like(p)
    np.divide(dp * dp, p, out=ratio, where=p > PSI_FLOOR)
    return ratio.sum(axis=-1)


def hbar(gamma, s, spec: QuantizerSpec, nodes: int = DEFAULT_NODES):
    """Conditional output entropy functional, in bits per complex sample.

    ``log2(pi e s)`` (a differential entropy) when the spec is
    infinite-resolution; otherwise the quantized-cell entropy averaged
    over the Gaussian signal.  Broadcasts over gamma and s.
    """
    if spec.is_infinite:
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0):
            raise ValueError("s must be positive")
        out = np.log2(np.pi * np.e * s)
        return float(out) if out.ndim == 0 else out
    out = -2.0 * _integrate_cells(gamma, s, spec, nodes, _plogp_cells)
    return float(out) if np.ndim(out) == 0 else out


def chi(gamma, s, spec: QuantizerSpec, nodes: int = DEFAULT_NODES):
    """Fisher-information-like functional; equals 1/s for infinite resolution."""
    if spec.is_infinite:
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0):
            raise ValueError("s must be positive")
        out = 1.0 / s
        return float(out) if out.ndim == 0 else out
    out = _integrate_cells(gamma, s, spec, nodes, _fisher_cells)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# configuration and solution containers


def make_quantizer(bits, rho: float, step: float | None = None) -> QuantizerSpec:
    """Quantizer spec for an experiment at SNR rho.

    Defaults to the calibrated step.  At rho = inf all thresholds scale
    with the signal and only the zero-SNR-calibrated geometry survives
    the limit, so a custom step is rejected there.
    """
    if bits == INFINITE:
        if step is not None:
            raise ConfigError("step is undefined for an infinite-resolution quantizer")
        return QuantizerSpec(bits=INFINITE)
    if math.isinf(rho):
        if step is not None:
            raise ConfigError("a custom quantizer step has no meaning at rho = inf")
        return QuantizerSpec.calibrated(bits, 0.0)
    if step is None:
        return QuantizerSpec.calibrated(bits, rho)
    return QuantizerSpec(bits=bits, step=step)


@dataclass(frozen=True)
class SystemConfig:
    """Full description of one large-system experiment.

    Exactly one of ``tau`` (training fraction of the blocklength) or
    ``tau_prime`` (training symbols per transmitter) should be set before
    the fixed points are solved; both may be left unset when the config
    seeds a training-fraction optimization.  The effective training load
    is tau * beta or tau_prime.
    """

    rho: float
    alpha: float
    quantizer: QuantizerSpec
    beta: float = 40.0
    sigma2: float = 1.0
    tau: float | None = None
    tau_prime: float | None = None
    input_prior: Prior = gaussian_prior
    channel_prior: Prior = gaussian_prior

    def __post_init__(self):
        if not (self.rho >= 0):
            raise ConfigError(f"rho must be nonnegative, got {self.rho}")
        if not (self.sigma2 > 0) or math.isinf(self.sigma2):
            raise ConfigError(f"sigma2 must be positive and finite, got {self.sigma2}")
        if not (self.alpha > 0) or math.isinf(self.alpha):
            raise ConfigError(f"alpha must be positive and finite, got {self.alpha}")
        if not (self.beta > 0) or math.isinf(self.beta):
            raise ConfigError(f"beta must be positive and finite, got {self.beta}")
        if self.tau is not None and self.tau_prime is not None:
            raise ConfigError("set only one of tau and tau_prime")
        if self.tau is not None and not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        if self.tau_prime is not None and not self.tau_prime > 0:
            raise ConfigError(f"tau_prime must be positive, got {self.tau_prime}")
        if math.isinf(self.rho) and not self.quantizer.is_infinite:
            expected = calibrate_step(self.quantizer.bits, 0.0)
            if not math.isclose(self.quantizer.step, expected, rel_tol=1e-12):
                raise ConfigError(
                    "at rho = inf the quantizer step must be the zero-SNR calibrated value; "
                    "build the spec with make_quantizer(bits, rho)"
                )

    @property
    def training_load(self) -> float:
        """Training symbols per transmitter (tau * beta, or tau_prime)."""
        if self.tau is not None:
            return self.tau * self.beta
        if self.tau_prime is not None:
            return self.tau_prime
        raise ConfigError("config has neither tau nor tau_prime set")

    def with_tau(self, tau: float) -> "SystemConfig":
        return replace(self, tau=tau, tau_prime=None)


@dataclass(frozen=True)
class FixedPointSolution:
    """Converged training and data fixed points plus the equivalent system."""

    q_G: float
    qtilde_G: float
    mse_G: float
    rho_bar: float
    sigma2_bar: float
    q_x: float
    qtilde_x: float
    mse_x: float
    iterations: int
    residual: float
    multistable: bool


# ---------------------------------------------------------------------------
# generic decoupling fixed point


def _fp_map(q, load, snr, noise, spec, prior, nodes):
    """One application of q -> 1 - mmse(load snr chi(snr q, noise + snr(1-q)))."""
    gamma = snr * q
    s = noise + snr * (1.0 - q)
    if spec.is_infinite:
        qtilde = load * snr / s
    else:
        qtilde = load * snr * chi(gamma, s, spec, nodes)
    return 1.0 - mmse_for_solver(qtilde, prior, nodes), qtilde


def _picard(load, snr, noise, spec, prior, nodes, q0, damping, tol, max_iter):
    """Damped fixed-point iteration with per-element convergence freezing."""
    n = q0.shape[0]
    q = q0.copy()
    resid = np.full(n, np.inf)
    iters = np.zeros(n, dtype=int)
    active = np.ones(n, dtype=bool)
    load_b = np.broadcast_to(np.asarray(load, dtype=float), (n,))
    snr_b = np.broadcast_to(np.asarray(snr, dtype=float), (n,))
    noise_b = np.broadcast_to(np.asarray(noise, dtype=float), (n,))

    qtilde = np.zeros(n)
    for it in range(1, max_iter + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        f_q, qt = _fp_map(q[idx], load_b[idx], snr_b[idx], noise_b[idx], spec, prior, nodes)
        r = np.abs(f_q - q[idx])
        q[idx] = (1.0 - damping) * q[idx] + damping * f_q
        qtilde[idx] = qt
        resid[idx] = r
        iters[idx] = it
        active[idx] = r > tol
    return q, qtilde, resid, iters, active


def _solve_decoupling(load, snr, noise, spec, prior, nodes=DEFAULT_NODES,
                      damping=DAMPING, tol=FP_TOL, max_iter=MAX_ITER, strict=True):
    """Solve the decoupling fixed point for arrays of (load, snr, noise).

    Returns (q, qtilde, residual, iterations, multistable) arrays.  The
    solve runs from both a nearly-uninformative and a nearly-perfect
    start; when the two converge to distinct attractors the element is
    flagged multistable and the high-q branch is reported.  With
    ``strict=False`` non-converged elements come back as nan instead of
    raising, so grid sweeps can tolerate isolated failures.
    """
    load = np.atleast_1d(np.asarray(load, dtype=float))
    snr = np.atleast_1d(np.asarray(snr, dtype=float))
    noise = np.atleast_1d(np.asarray(noise, dtype=float))
    load, snr, noise = np.broadcast_arrays(load, snr, noise)
    n = load.shape[0]

    q = np.zeros(n)
    qtilde = np.zeros(n)
    resid = np.zeros(n)
    iters = np.zeros(n, dtype=int)
    multi = np.zeros(n, dtype=bool)

    trivial = (load == 0.0) | (snr == 0.0)
    solve_idx = np.nonzero(~trivial)[0]
    if solve_idx.size:
        ld, sn, nv = load[solve_idx], snr[solve_idx], noise[solve_idx]
        m = solve_idx.size
        q0 = np.concatenate([np.full(m, _INIT_HIGH), np.full(m, _INIT_LOW)])
        qq, qt, rr, it, still = _picard(
            np.tile(ld, 2), np.tile(sn, 2), np.tile(nv, 2), spec, prior, nodes,
            q0, damping, tol, max_iter,
        )
        failed = still[:m] | still[m:]
        if failed.any() and strict:
            bad = int(np.nonzero(failed)[0][0])
            raise SolverError(
                f"fixed point did not converge within {max_iter} iterations "
                f"(load={ld[bad]:.6g}, snr={sn[bad]:.6g}, noise={nv[bad]:.6g})",
                last_value=float(qq[bad]),
                residual=float(max(rr[bad], rr[m + bad])),
            )
        q_hi, q_lo = qq[:m], qq[m:]
        multi[solve_idx] = np.abs(q_hi - q_lo) > _BRANCH_GAP
        q[solve_idx] = np.where(failed, np.nan, np.clip(q_hi, 0.0, 1.0))
        qtilde[solve_idx] = np.where(failed, np.nan, qt[:m])
        resid[solve_idx] = np.maximum(rr[:m], rr[m:])
        iters[solve_idx] = np.maximum(it[:m], it[m:])
    return q, qtilde, resid, iters, multi


# ---------------------------------------------------------------------------
# training stage, equivalence transform, data stage


def _training_params(cfg: SystemConfig):
    """(load, snr, noise, spec) for the training fixed point, rho=inf aware."""
    if math.isinf(cfg.rho):
        return cfg.training_load, 1.0, 0.0, cfg.quantizer
    return cfg.training_load, cfg.rho, cfg.sigma2, cfg.quantizer


def solve_training_fixed_point(cfg: SystemConfig, nodes: int = DEFAULT_NODES,
                               damping: float = DAMPING):
    """Channel-estimation overlap: returns (q_G, qtilde_G, mse_G)."""
    load, snr, noise, spec = _training_params(cfg)
    if math.isinf(cfg.rho) and spec.is_infinite and cfg.channel_prior.is_gaussian:
        # noiseless linear training: mse = max(0, 1 - load) exactly
        if load >= 1.0:
            return 1.0, math.inf, 0.0
        q = load
        return q, q / (1.0 - q) if q > 0 else 0.0, 1.0 - q
    q, qt, _, _, _ = _solve_decoupling(load, snr, noise, spec, cfg.channel_prior, nodes,
                                       damping=damping)
    return float(q[0]), float(qt[0]), float(1.0 - q[0])


def equivalent_system(rho: float, sigma2: float, mse_G: float):
    """Known-channel surrogate parameters (rho_bar, sigma2_bar).

    Signal power shrinks by the estimation fidelity while the estimation
    error joins the noise, conserving rho + sigma^2.
    """
    if not 0.0 <= mse_G <= 1.0:
        raise ValueError(f"mse_G must lie in [0, 1], got {mse_G}")
    if math.isinf(rho):
        rho_bar = 0.0 if mse_G == 1.0 else math.inf
        sigma2_bar = sigma2 if mse_G == 0.0 else math.inf
        return rho_bar, sigma2_bar
    return rho * (1.0 - mse_G), sigma2 + rho * mse_G


@dataclass(frozen=True)
class _EquivSystem:
    """Known-channel system in whichever parameterization stays finite.

    kind "finite":     snr, noise are (rho_bar, sigma2_bar) as given.
    kind "normalized": rho = inf with finite bits; snr = q_G, noise =
                       mse_G after rescaling by sqrt(rho); spec already
                       carries the zero-SNR calibrated step.
    kind "ratio":      rho = inf with infinite bits; only c = snr/noise
                       survives (may itself be inf when estimation is
                       perfect).
    """

    kind: str
    snr: float
    noise: float
    spec: QuantizerSpec

    @property
    def c(self) -> float:
        if self.noise == 0.0:
            return math.inf
        return self.snr / self.noise


def _equiv_for_config(cfg: SystemConfig, q_G: float, mse_G: float, route: str) -> _EquivSystem:
    if math.isinf(cfg.rho):
        if cfg.quantizer.is_infinite:
            return _EquivSystem("ratio", q_G, mse_G, cfg.quantizer)
        return _EquivSystem("normalized", q_G, mse_G, cfg.quantizer)
    if route == "direct":
        return _EquivSystem("finite", cfg.rho * q_G, cfg.sigma2 + cfg.rho - cfg.rho * q_G, cfg.quantizer)
    rho_bar, sigma2_bar = equivalent_system(cfg.rho, cfg.sigma2, mse_G)
    return _EquivSystem("finite", rho_bar, sigma2_bar, cfg.quantizer)


def _solve_data_stage(equiv: _EquivSystem, alpha: float, prior: Prior, nodes: int,
                      damping: float = DAMPING):
    """(q_x, qtilde_x, mse_x, residual, iterations, multistable) given the equivalent system.

    Noiseless limits (c = inf, or a vanished effective noise with finite
    bits) are resolved analytically: a discrete prior has exponentially
    decaying scalar MMSE, so the informative branch runs away to perfect
    recovery; the Gaussian prior keeps a finite overlap.
    """
    if equiv.kind == "ratio" and math.isinf(equiv.c):
        if not prior.is_gaussian:
            return 1.0, math.inf, 0.0, 0.0, 0, True
        if alpha >= 1.0:
            return 1.0, math.inf, 0.0, 0.0, 0, False
        qtilde = alpha / (1.0 - alpha)
        return alpha, qtilde, 1.0 - alpha, 0.0, 0, False
    if equiv.kind == "ratio":
        q, qt, rr, it, mu = _solve_decoupling(alpha, equiv.c, 1.0, equiv.spec, prior, nodes,
                                              damping=damping)
    elif equiv.noise == 0.0 and equiv.snr > 0.0 and not prior.is_gaussian:
        return 1.0, math.inf, 0.0, 0.0, 0, True
    else:
        q, qt, rr, it, mu = _solve_decoupling(alpha, equiv.snr, equiv.noise, equiv.spec, prior,
                                              nodes, damping=damping)
    return float(q[0]), float(qt[0]), float(1.0 - q[0]), float(rr[0]), int(it[0]), bool(mu[0])


def solve_data_fixed_point(rho_bar: float, sigma2_bar: float, alpha: float,
                           quantizer: QuantizerSpec, input_prior: Prior,
                           nodes: int = DEFAULT_NODES):
    """Data-detection overlap for a finite equivalent system: (q_x, qtilde_x, mse_x).

    rho = inf experiments go through :func:`solve_fixed_points`, which
    keeps the limit parameterization; this entry point requires finite
    arguments.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if math.isinf(rho_bar) or math.isinf(sigma2_bar):
        raise ValueError("solve_data_fixed_point needs finite equivalent parameters")
    equiv = _EquivSystem("finite", rho_bar, sigma2_bar, quantizer)
    q, qt, mse, _, _, _ = _solve_data_stage(equiv, alpha, input_prior, nodes)
    return q, qt, mse


def solve_fixed_points(cfg: SystemConfig, nodes: int = DEFAULT_NODES,
                       route: str = "equivalent",
                       damping: float = DAMPING) -> FixedPointSolution:
    """Run training stage, equivalence transform, and data stage."""
    if route not in ("equivalent", "direct"):
        raise ValueError(f"unknown route {route!r}")
    load, snr, noise, spec = _training_params(cfg)
    if math.isinf(cfg.rho) and spec.is_infinite and cfg.channel_prior.is_gaussian:
        q_G, qt_G, mse_G = solve_training_fixed_point(cfg, nodes)
        train_resid, train_iters, train_multi = 0.0, 0, False
    else:
        qv, qtv, rv, iv, mv = _solve_decoupling(load, snr, noise, spec, cfg.channel_prior, nodes,
                                                damping=damping)
        q_G, qt_G, mse_G = float(qv[0]), float(qtv[0]), float(1.0 - qv[0])
        train_resid, train_iters, train_multi = float(rv[0]), int(iv[0]), bool(mv[0])

    rho_bar, sigma2_bar = equivalent_system(cfg.rho, cfg.sigma2, mse_G)
    equiv = _equiv_for_config(cfg, q_G, mse_G, route)
    q_x, qt_x, mse_x, data_resid, data_iters, data_multi = _solve_data_stage(
        equiv, cfg.alpha, cfg.input_prior, nodes, damping=damping
    )
    return FixedPointSolution(
        q_G=q_G,
        qtilde_G=qt_G,
        mse_G=mse_G,
        rho_bar=rho_bar,
        sigma2_bar=sigma2_bar,
        q_x=q_x,
        qtilde_x=qt_x,
        mse_x=mse_x,
        iterations=max(train_iters, data_iters),
        residual=max(train_resid, data_resid),
        multistable=train_multi or data_multi,
    )


# ---------------------------------------------------------------------------
# entropies and mutual information


@dataclass(frozen=True)
class RxInformation:
    """Per-receiver mutual information and output entropies, in bits."""

    mutual_info: float
    h_plus: float
    h_uncond: float
    solution: FixedPointSolution


def _awgn_correction(qtilde_x: float, mse_x: float, prior: Prior, alpha: float, nodes: int):
    """(1/alpha) (I_AWGN(qtilde) - mse qtilde / ln 2), the decoupled-input term."""
    if math.isinf(qtilde_x):
        info = prior.entropy_bits()
        penalty = 0.0
    else:
        info = mutual_info_awgn(qtilde_x, prior, nodes)
        penalty = mse_x * qtilde_x / LN2
    return (info - penalty) / alpha


def _entropy_pair(equiv: _EquivSystem, q_x: float, mse_x: float, nodes: int):
    """(h_plus, h_signal): conditional entropy and the signal term of the output entropy."""
    if equiv.kind == "ratio":
        return math.inf, math.inf
    if equiv.noise == 0.0:
        # noiseless finite-b limit: each cell is a deterministic function
        # of the signal, so both conditional cell entropies vanish
        return 0.0, 0.0
    h_plus = hbar(equiv.snr, equiv.noise, equiv.spec, nodes)
    h_sig = hbar(equiv.snr * q_x, equiv.noise + equiv.snr * mse_x, equiv.spec, nodes)
    return float(h_plus), float(h_sig)


def _info_from_equiv(equiv: _EquivSystem, alpha: float, prior: Prior, nodes: int,
                     solution: FixedPointSolution) -> RxInformation:
    q_x, qt_x, mse_x = solution.q_x, solution.qtilde_x, solution.mse_x
    corr = _awgn_correction(qt_x, mse_x, prior, alpha, nodes)
    if equiv.kind == "ratio":
        if math.isinf(equiv.c):
            # residual-interference term log2(1 + c mse) diverges unless
            # the symbols are recovered exactly
            info = corr if mse_x == 0.0 else math.inf
        else:
            info = math.log2(1.0 + equiv.c * mse_x) + corr
        return RxInformation(info, math.inf, math.inf, solution)
    h_plus, h_sig = _entropy_pair(equiv, q_x, mse_x, nodes)
    h_uncond = h_sig + corr
    return RxInformation(h_uncond - h_plus, h_plus, h_uncond, solution)


def mutual_info_per_rx(cfg: SystemConfig, nodes: int = DEFAULT_NODES,
                       route: str = "equivalent", damping: float = DAMPING) -> RxInformation:
    """Per-receiver mutual information of the trained system, in bits.

    ``route`` selects the parameterization of the entropy terms: the
    default goes through the equivalent known-channel system; "direct"
    keeps the raw (rho, sigma^2, q_G) arithmetic.  The two agree (that is
    the equivalence statement) and the pair makes the agreement testable.
    """
    solution = solve_fixed_points(cfg, nodes, route, damping)
    equiv = _equiv_for_config(cfg, solution.q_G, solution.mse_G, route)
    return _info_from_equiv(equiv, cfg.alpha, cfg.input_prior, nodes, solution)


def trained_info_over_taus(cfg: SystemConfig, taus: np.ndarray,
                           nodes: int = DEFAULT_NODES) -> np.ndarray:
    """Per-receiver mutual information for an array of training fractions.

    Vectorizes the full training -> equivalence -> data -> entropy
    pipeline over the grid; elements whose fixed points fail to converge
    come back as nan.  Used by the training-fraction optimizer, where
    per-point exceptions would be wasteful.
    """
    taus = np.asarray(taus, dtype=float)
    loads = taus * cfg.beta
    if math.isinf(cfg.rho) and cfg.quantizer.is_infinite:
        out = np.empty(taus.shape)
        for i, t in enumerate(taus):
            try:
                out[i] = mutual_info_per_rx(cfg.with_tau(float(t)), nodes).mutual_info
            except SolverError:
                out[i] = np.nan
        return out

    if math.isinf(cfg.rho):
        spec = cfg.quantizer
        q_G, _, _, _, _ = _solve_decoupling(loads, 1.0, 0.0, spec, cfg.channel_prior,
                                            nodes, strict=False)
        snr_eq, noise_eq = q_G, 1.0 - q_G
    else:
        spec = cfg.quantizer
        q_G, _, _, _, _ = _solve_decoupling(loads, cfg.rho, cfg.sigma2, spec,
                                            cfg.channel_prior, nodes, strict=False)
        snr_eq = cfg.rho * q_G
        noise_eq = cfg.sigma2 + cfg.rho * (1.0 - q_G)

    q_x, qt_x, _, _, _ = _solve_decoupling(cfg.alpha, snr_eq, noise_eq, spec,
                                           cfg.input_prior, nodes, strict=False)
    mse_x = 1.0 - q_x
    with np.errstate(invalid="ignore", divide="ignore"):
        if spec.is_infinite:
            h_diff = np.log2(1.0 + snr_eq * mse_x / noise_eq)
        else:
            h_diff = (
                hbar(snr_eq * q_x, noise_eq + snr_eq * mse_x, spec, nodes)
                - hbar(snr_eq, np.maximum(noise_eq, 1e-300), spec, nodes)
            )
        corr = (mutual_info_awgn(qt_x, cfg.input_prior, nodes) - mse_x * qt_x / LN2) / cfg.alpha
    return h_diff + corr


def known_info_over_snrs(snrs, noise, alpha: float, spec: QuantizerSpec, prior: Prior,
                         nodes: int = DEFAULT_NODES) -> np.ndarray:
    """Known-channel per-receiver information for arrays of (snr, noise).

    Vectorized companion of :func:`mutual_info_known_channel` for sweep
    layers; failed elements are nan.
    """
    snrs = np.atleast_1d(np.asarray(snrs, dtype=float))
    q_x, qt_x, _, _, _ = _solve_decoupling(alpha, snrs, noise, spec, prior, nodes, strict=False)
    mse_x = 1.0 - q_x
    with np.errstate(invalid="ignore", divide="ignore"):
        if spec.is_infinite:
            h_diff = np.log2(1.0 + snrs * mse_x / np.asarray(noise, dtype=float))
        else:
            h_diff = (
                hbar(snrs * q_x, noise + snrs * mse_x, spec, nodes)
                - hbar(snrs, noise, spec, nodes)
            )
        corr = (mutual_info_awgn(qt_x, prior, nodes) - mse_x * qt_x / LN2) / alpha
    return h_diff + corr


def mutual_info_known_channel(rho: float, sigma2: float, alpha: float,
                              quantizer: QuantizerSpec, input_prior: Prior,
                              nodes: int = DEFAULT_NODES) -> RxInformation:
    """Per-receiver mutual information with the channel known (no training).

    Same computation as :func:`mutual_info_per_rx` with a perfect
    estimate, i.e. the equivalent system is (rho, sigma^2) itself.
    """
    if math.isinf(rho):
        if quantizer.is_infinite:
            equiv = _EquivSystem("ratio", 1.0, 0.0, quantizer)
        else:
            equiv = _EquivSystem("normalized", 1.0, 0.0, quantizer)
    else:
        equiv = _EquivSystem("finite", rho, sigma2, quantizer)
    q_x, qt_x, mse_x, resid, iters, multi = _solve_data_stage(equiv, alpha, input_prior, nodes)
    solution = FixedPointSolution(
        q_G=1.0, qtilde_G=math.inf, mse_G=0.0,
        rho_bar=rho, sigma2_bar=sigma2,
        q_x=q_x, qtilde_x=qt_x, mse_x=mse_x,
        iterations=iters, residual=resid, multistable=multi,
    )
    return _info_from_equiv(equiv, alpha, input_prior, nodes, solution)
