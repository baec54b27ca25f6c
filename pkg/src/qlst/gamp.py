"""Finite-size Monte Carlo validation via two-pass GAMP.

One trial draws a channel, trains, detects one fresh data vector, and
reports the fraction of wrong symbol decisions:

1. channel estimation: every receiver's channel row sees the same
   training matrix, so all rows are estimated in one multi-column GAMP
   solve of the quantized linear model;
2. the estimate is declared the true channel, with its quality set by
   the large-system theory (channel-entry variance 1 - mse_G, effective
   noise 1 + rho mse_G), not by empirical residuals;
3. data detection: one GAMP solve of the same model built on the
   estimated channel, followed by a per-component hard decision.

Everything is complex-valued with per-entry variances; the quantizer
acts on real and imaginary parts independently, and the output denoiser
uses exact truncated-Gaussian moments (not the sign-ambiguous printed
kernel).  Trials are seeded individually from (base_seed, trial_index),
batched in fixed-size chunks, and aggregated as exact error counts, so
results are bit-identical for any worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .errors import DivergedTrialError
from .quantizer import INFINITE, QuantizerSpec
from .replica import SystemConfig, make_quantizer, solve_training_fixed_point
from .scalar_awgn import Prior, gaussian_prior, input_prior

try:
    from . import _gamp_kernels as _kernels
except ImportError:  # numba unavailable; numpy fallback below
    _kernels = None

CHUNK_TRIALS = 64

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GampOptions:
    """Message-passing knobs (absent from the large-system theory)."""

    max_iters: int = 50
    damping: float = 0.7
    var_floor: float = 1e-12
    tol: float = 1e-8


@dataclass(frozen=True)
class TrialConfig:
    """One finite-size experiment: dimensions, SNR, resolutions, seed."""

    n_tx: int
    alpha: float
    tau_prime: float
    rho: float
    quantizer: QuantizerSpec
    dac_bits: int = 1
    seed: int = 0
    options: GampOptions = GampOptions()

    def __post_init__(self):
        if self.n_tx < 1:
            raise ValueError("n_tx must be >= 1")
        if self.n_rx < 1 or self.n_train < 1:
            raise ValueError("derived dimensions must be >= 1")
        if not math.isfinite(self.rho) or self.rho < 0:
            raise ValueError(f"rho must be finite and nonnegative, got {self.rho}")

    @property
    def n_rx(self) -> int:
        return int(round(self.alpha * self.n_tx))

    @property
    def n_train(self) -> int:
        return int(round(self.tau_prime * self.n_tx))

    @property
    def prior(self) -> Prior:
        return input_prior(self.dac_bits)


@dataclass(frozen=True)
class McResult:
    """Aggregated Monte Carlo outcome.

    ``std_error`` is the binomial standard error sqrt(p (1-p) / n)
    over all symbol decisions.  Diverged trials are excluded from the
    average but counted.
    """

    mean_ser: float
    std_error: float
    n_trials: int
    n_symbol_decisions: int
    n_errors: int
    n_diverged: int
    mse_channel_empirical: float
    mse_channel_theory: float


# ---------------------------------------------------------------------------
# truncated-Gaussian interval moments (numpy reference path)


def _interval_moments_np(mu, var, lo, hi):
    """Mean and variance of N(mu, var) truncated to (lo, hi], elementwise.

    Same-side tail intervals switch to difference-of-erfc forms (stable
    until ~25 sigma) and then to the one-sided exponential asymptote, so
    the output stays finite and positive everywhere.
    """
    s = np.sqrt(var)
    a = (lo - mu) / s
    b = (hi - mu) / s
    # mirror so the interval's midpoint is on the nonnegative side
    flip = np.abs(a) > np.abs(b)
    a2 = np.where(flip, -b, a)
    b2 = np.where(flip, -a, b)

    inv_sqrt2pi = 1.0 / math.sqrt(2.0 * math.pi)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        phi_a = np.where(np.isinf(a2), 0.0, inv_sqrt2pi * np.exp(-0.5 * a2**2))
        phi_b = np.where(np.isinf(b2), 0.0, inv_sqrt2pi * np.exp(-0.5 * b2**2))
        z = np.where(
            a2 >= 0,
            0.5 * (special.erfc(a2 / _SQRT2) - np.where(np.isinf(b2), 0.0, special.erfc(b2 / _SQRT2))),
            special.ndtr(b2) - special.ndtr(a2),
        )
        safe = z > 1e-280
        zs = np.where(safe, z, 1.0)
        m_std = (phi_a - phi_b) / zs
        apa = np.where(np.isinf(a2), 0.0, a2 * phi_a)
        bpb = np.where(np.isinf(b2), 0.0, b2 * phi_b)
        v_std = 1.0 + (apa - bpb) / zs - m_std**2

        # deep same-side tail: truncated normal ~ Exp at the near edge
        m_asym = a2 + 1.0 / np.maximum(a2, 1.0)
        v_asym = 1.0 / np.maximum(a2, 1.0) ** 2
        m_std = np.where(safe, m_std, m_asym)
        v_std = np.where(safe, v_std, v_asym)

    m_std = np.where(flip, -m_std, m_std)
    v_std = np.clip(v_std, 0.0, 1.0)
    return mu + s * m_std, var * v_std


def _interval_moments(mu, var, lo, hi):
    if _kernels is not None and mu.dtype == np.float64:
        mu_c = np.ascontiguousarray(mu)
        var_b = np.ascontiguousarray(np.broadcast_to(var, mu.shape))
        lo_c = np.ascontiguousarray(np.broadcast_to(lo, mu.shape))
        hi_c = np.ascontiguousarray(np.broadcast_to(hi, mu.shape))
        return _kernels.interval_moments(
            mu_c.reshape(-1), var_b.reshape(-1), lo_c.reshape(-1), hi_c.reshape(-1), mu.shape
        )
    return _interval_moments_np(mu, var, lo, hi)


# ---------------------------------------------------------------------------
# denoisers


def _output_quantized(p_hat, v_p, lo_re, hi_re, lo_im, hi_im, noise_var):
    """Posterior moments of z given the quantized observation of z + n.

    z ~ CN(p_hat, v_p) entering the quantizer through noise CN(0,
    noise_var); each real part is conditioned on its observed cell.
    """
    half_w = 0.5 * (v_p + noise_var)
    gain = v_p / (v_p + noise_var)
    m_re, v_re = _interval_moments(p_hat.real, half_w, lo_re, hi_re)
    m_im, v_im = _interval_moments(p_hat.imag, half_w, lo_im, hi_im)
    z_hat = (p_hat.real + gain * (m_re - p_hat.real)) + 1j * (
        p_hat.imag + gain * (m_im - p_hat.imag)
    )
    v_z = gain**2 * (v_re + v_im) + gain * noise_var
    return z_hat, v_z


def _output_linear(p_hat, v_p, y, noise_var):
    gain = v_p / (v_p + noise_var)
    return p_hat + gain * (y - p_hat), gain * noise_var


def _input_gaussian(r_hat, v_r):
    gain = 1.0 / (1.0 + v_r)
    return gain * r_hat, gain * v_r


def _input_discrete(r_hat, v_r, support):
    """Componentwise posterior mean/variance for the uniform constellation."""
    pts = support[(None,) * r_hat.ndim + (slice(None),)]
    v = np.maximum(v_r, 1e-300)[..., None]
    out_m = np.empty(r_hat.shape, dtype=np.complex128)
    out_v = np.zeros(r_hat.shape)
    for part in ("real", "imag"):
        comp = getattr(r_hat, part)[..., None]
        logits = -((comp - pts) ** 2) / v
        logits -= logits.max(axis=-1, keepdims=True)
        w = np.exp(logits)
        w /= w.sum(axis=-1, keepdims=True)
        mean = w @ support
        second = w @ support**2
        if part == "real":
            out_m = mean.astype(np.complex128)
        else:
            out_m = out_m + 1j * mean
        out_v += second - mean**2
    return out_m, out_v


# ---------------------------------------------------------------------------
# core batched solver


def _gamp_core(A, obs, prior: Prior, noise_var: float, spec: QuantizerSpec,
               opts: GampOptions, uniform_a2: float | None = None):
    """Batched sum-product GAMP for y = f(A u + n).

    A: (B, T, M) complex; the unknown U is (B, M, C).  ``obs`` is the
    raw complex observation (B, T, C) when the spec is infinite, else
    the tuple of per-real-part cell bounds.  Returns posterior means,
    variances, and a per-batch diverged flag.

    ``uniform_a2`` asserts every |A_ij|^2 equals that constant (true for
    constant-modulus training symbols); variance messages then stay
    uniform along the measurement axis and the |A|^2 products collapse
    to reductions.  This is an exact rewrite, not an approximation.
    """
    B, T, M = A.shape
    if spec.is_infinite:
        C = obs.shape[-1]
    else:
        C = obs[0].shape[-1]
    Ah = np.ascontiguousarray(A.conj().swapaxes(-1, -2))
    A2 = None if uniform_a2 is not None else (A.real**2 + A.imag**2)
    A2t = None if A2 is None else np.ascontiguousarray(A2.swapaxes(-1, -2))

    support = None if prior.is_gaussian else prior.support()
    u_hat = np.zeros((B, M, C), dtype=np.complex128)
    v_u = np.ones((B, M, C))
    s_hat = np.zeros((B, T, C), dtype=np.complex128)
    v_s = np.ones((B, T, C))
    active = np.ones(B, dtype=bool)
    diverged = np.zeros(B, dtype=bool)
    theta = opts.damping

    fused = _kernels is not None and not spec.is_infinite
    if fused:
        lo_re, hi_re, lo_im, hi_im = (np.ascontiguousarray(o).reshape(-1) for o in obs)
        s_flat = s_hat.reshape(-1)
        vs_flat = v_s.reshape(-1)

    for it in range(opts.max_iters):
        if not active.any():
            break
        gate = active[:, None, None]
        if uniform_a2 is not None:
            v_p = np.maximum(uniform_a2 * v_u.sum(axis=1, keepdims=True), opts.var_floor)
        else:
            v_p = np.maximum(A2 @ v_u, opts.var_floor)
        p_hat = A @ u_hat - v_p * s_hat

        if spec.is_infinite:
            z_hat, v_z = _output_linear(p_hat, v_p, obs, noise_var)
            s_new = (z_hat - p_hat) / v_p
            v_s_new = np.maximum((v_p - v_z) / v_p**2, opts.var_floor)
            if it == 0:
                s_hat = np.where(gate, s_new, s_hat)
                v_s = np.where(gate, v_s_new, v_s)
            else:
                s_hat = np.where(gate, theta * s_new + (1.0 - theta) * s_hat, s_hat)
                v_s = np.where(gate, theta * v_s_new + (1.0 - theta) * v_s, v_s)
        elif fused:
            _kernels.quantized_output_step(
                p_hat.reshape(-1), v_p.reshape(-1), T, C, lo_re, hi_re, lo_im, hi_im,
                noise_var, s_flat, vs_flat, theta, it == 0,
            )
            s_hat = s_flat.reshape(B, T, C)
            v_s = vs_flat.reshape(B, T, C)
        else:
            lo_re, hi_re, lo_im, hi_im = obs
            z_hat, v_z = _output_quantized(p_hat, v_p, lo_re, hi_re, lo_im, hi_im, noise_var)
            s_new = (z_hat - p_hat) / v_p
            v_s_new = np.maximum((v_p - v_z) / v_p**2, opts.var_floor)
            if it == 0:
                s_hat = np.where(gate, s_new, s_hat)
                v_s = np.where(gate, v_s_new, v_s)
            else:
                s_hat = np.where(gate, theta * s_new + (1.0 - theta) * s_hat, s_hat)
                v_s = np.where(gate, theta * v_s_new + (1.0 - theta) * v_s, v_s)

        if uniform_a2 is not None:
            v_r = 1.0 / np.maximum(uniform_a2 * v_s.sum(axis=1, keepdims=True), opts.var_floor)
        else:
            v_r = 1.0 / np.maximum(A2t @ v_s, opts.var_floor)
        r_hat = u_hat + v_r * (Ah @ s_hat)

        if prior.is_gaussian:
            u_new, v_u_new = _input_gaussian(r_hat, v_r)
        else:
            u_new, v_u_new = _input_discrete(r_hat, v_r, support)

        du = theta * (u_new - u_hat)
        u_hat = np.where(gate, u_hat + du, u_hat)
        v_u = np.where(gate, np.maximum(theta * v_u_new + (1.0 - theta) * v_u, opts.var_floor), v_u)

        step = np.mean(np.abs(du) ** 2, axis=(1, 2))
        bad = ~np.isfinite(step)
        if bad.any():
            diverged |= bad & active
            active &= ~bad
        active &= step > opts.tol
    return u_hat, v_u, diverged


def gamp_solve(measurement_matrix, observations, scale: float, prior: Prior,
               noise_var: float, quantizer: QuantizerSpec,
               options: GampOptions = GampOptions()):
    """Posterior means and variances of u in y = f(scale * A u + n).

    ``observations`` are integer quantizer levels for the real and
    imaginary parts, shaped (T, C, 2) (last axis: real, imag), or the raw
    complex (T, C) output when the quantizer is infinite-resolution.  A
    single right-hand side may be passed as (T,) / (T, 2-level pairs).
    Raises DivergedTrialError if the message passing produces non-finite
    state.
    """
    A = np.asarray(measurement_matrix, dtype=np.complex128) * scale
    if A.ndim != 2:
        raise ValueError("measurement_matrix must be 2-D")
    T, M = A.shape

    if quantizer.is_infinite:
        y = np.asarray(observations, dtype=np.complex128)
        squeeze = y.ndim == 1
        y = y.reshape(T, -1)
        obs = y[None]
    else:
        levels = np.asarray(observations, dtype=np.int64)
        squeeze = levels.ndim == 2
        levels = levels.reshape(T, -1, 2)
        lo_re, hi_re = _edges(levels[..., 0], quantizer)
        lo_im, hi_im = _edges(levels[..., 1], quantizer)
        obs = (lo_re[None], hi_re[None], lo_im[None], hi_im[None])

    u, v, diverged = _gamp_core(A[None], obs, prior, noise_var, quantizer, options)
    if diverged[0]:
        raise DivergedTrialError("message passing produced non-finite state")
    if squeeze:
        return u[0, :, 0], v[0, :, 0]
    return u[0], v[0]


def _edges(levels, spec: QuantizerSpec):
    r = spec.thresholds()
    padded = np.concatenate(([-np.inf], r, [np.inf]))
    return padded[levels - 1], padded[levels]


def _quantize_levels(w, spec: QuantizerSpec):
    """Level pairs (re, im) of a complex array, stacked on a new last axis."""
    r = spec.thresholds()
    re = np.searchsorted(r, w.real, side="left") + 1
    im = np.searchsorted(r, w.imag, side="left") + 1
    return np.stack([re, im], axis=-1)


# ---------------------------------------------------------------------------
# trials


def _draw_symbols(rng, shape, prior: Prior):
    if prior.is_gaussian:
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / _SQRT2
    pts = prior.support()
    re = rng.integers(0, len(pts), size=shape)
    im = rng.integers(0, len(pts), size=shape)
    return pts[re] + 1j * pts[im]


def _trial_rng(base_seed: int, index: int):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(base_seed, spawn_key=(index,))))


def _run_chunk(cfg: TrialConfig, base_seed: int, indices, mse_theory: float):
    """Run a batch of trials; returns (errors per trial, diverged flags, emp channel mse)."""
    M, K, T = cfg.n_tx, cfg.n_rx, cfg.n_train
    B = len(indices)
    spec = cfg.quantizer
    opts = cfg.options
    root = math.sqrt(cfg.rho / M)
    prior = cfg.prior

    G = np.empty((B, K, M), dtype=np.complex128)
    Xt = np.empty((B, M, T), dtype=np.complex128)
    Nt = np.empty((B, K, T), dtype=np.complex128)
    xd = np.empty((B, M), dtype=np.complex128)
    nd = np.empty((B, K), dtype=np.complex128)
    for j, idx in enumerate(indices):
        rng = _trial_rng(base_seed, int(idx))
        G[j] = (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) / _SQRT2
        Xt[j] = _draw_symbols(rng, (M, T), prior)
        Nt[j] = (rng.standard_normal((K, T)) + 1j * rng.standard_normal((K, T))) / _SQRT2
        xd[j] = _draw_symbols(rng, (M,), prior)
        nd[j] = (rng.standard_normal(K) + 1j * rng.standard_normal(K)) / _SQRT2

    # stage 1: estimate all channel rows from the shared training block
    W_train = root * (G @ Xt) + Nt                      # (B, K, T)
    A_train = root * Xt.swapaxes(-1, -2)                # (B, T, M)
    Yt = W_train.swapaxes(-1, -2)                       # (B, T, K)
    if spec.is_infinite:
        obs_t = Yt
    else:
        lv = _quantize_levels(Yt, spec)
        lo_re, hi_re = _edges(lv[..., 0], spec)
        lo_im, hi_im = _edges(lv[..., 1], spec)
        obs_t = (lo_re, hi_re, lo_im, hi_im)
    # QPSK training symbols have constant modulus, collapsing the |A|^2 products
    uniform_a2 = cfg.rho / M if (not prior.is_gaussian and prior.bits == 1) else None
    Gt_hat, _, div1 = _gamp_core(A_train, obs_t, gaussian_prior, 1.0, spec, opts,
                                 uniform_a2=uniform_a2)
    G_hat = Gt_hat.swapaxes(-1, -2)                     # (B, K, M)
    emp_mse = float(np.mean(np.abs(G_hat - G) ** 2))

    # stage 2/3: detect the fresh data vector through the estimated channel;
    # the theory supplies both the inflated noise level and the variance of
    # the estimated channel entries used in the message variances
    W_data = root * np.einsum("bkm,bm->bk", G, xd) + nd
    noise_var = 1.0 + cfg.rho * mse_theory
    A_data = root * G_hat
    if spec.is_infinite:
        obs_d = W_data[..., None]
    else:
        lv = _quantize_levels(W_data[..., None], spec)
        lo_re, hi_re = _edges(lv[..., 0], spec)
        lo_im, hi_im = _edges(lv[..., 1], spec)
        obs_d = (lo_re, hi_re, lo_im, hi_im)
    x_hat, _, div2 = _gamp_core(A_data, obs_d, prior, noise_var, spec, opts,
                                uniform_a2=root**2 * (1.0 - mse_theory))
    x_hat = x_hat[..., 0]

    pts = prior.support() if not prior.is_gaussian else None
    if pts is None:
        raise ValueError("symbol decisions need a discrete input prior")
    dec_re = pts[np.argmin(np.abs(x_hat.real[..., None] - pts), axis=-1)]
    dec_im = pts[np.argmin(np.abs(x_hat.imag[..., None] - pts), axis=-1)]
    errors = ((dec_re != xd.real) | (dec_im != xd.imag)).sum(axis=1)
    return errors, div1 | div2, emp_mse


def gamp2_trial(cfg: TrialConfig, mse_theory: float | None = None) -> float:
    """Symbol error rate of a single seeded trial."""
    if mse_theory is None:
        mse_theory = _theory_mse(cfg)
    errors, diverged, _ = _run_chunk(cfg, cfg.seed, [0], mse_theory)
    if diverged[0]:
        raise DivergedTrialError("trial diverged")
    return float(errors[0]) / cfg.n_tx


def _theory_mse(cfg: TrialConfig) -> float:
    sys_cfg = SystemConfig(
        rho=cfg.rho, alpha=cfg.alpha, quantizer=cfg.quantizer, sigma2=1.0,
        tau_prime=cfg.tau_prime, input_prior=cfg.prior,
    )
    return solve_training_fixed_point(sys_cfg)[2]


def _chunk_worker(args):
    cfg, base_seed, start, stop, mse_theory = args
    errors, diverged, emp_mse = _run_chunk(cfg, base_seed, range(start, stop), mse_theory)
    ok = ~diverged
    return int(errors[ok].sum()), int(ok.sum()), int(diverged.sum()), emp_mse * len(errors)


def monte_carlo_ser(cfg: TrialConfig, n_trials: int, base_seed: int | None = None,
                    threads: int = 1) -> McResult:
    """Average SER over independent seeded trials.

    Trials are partitioned into fixed-size chunks regardless of
    ``threads``; each trial's randomness depends only on (base_seed,
    trial index), and aggregation sums exact integer error counts, so
    the result is independent of the parallelism degree.  If more than
    1% of trials diverge the aggregate is refused.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if base_seed is None:
        base_seed = cfg.seed
    mse_theory = _theory_mse(cfg)
    bounds = list(range(0, n_trials, CHUNK_TRIALS)) + [n_trials]
    jobs = [(cfg, base_seed, lo, hi, mse_theory) for lo, hi in zip(bounds[:-1], bounds[1:])]

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_chunk_worker, jobs))
    else:
        parts = [_chunk_worker(j) for j in jobs]

    n_errors = sum(p[0] for p in parts)
    n_ok = sum(p[1] for p in parts)
    n_diverged = sum(p[2] for p in parts)
    emp_mse = sum(p[3] for p in parts) / max(n_ok + n_diverged, 1)
    if n_diverged > 0.01 * n_trials:
        raise DivergedTrialError(
            f"{n_diverged}/{n_trials} trials diverged; results would be biased"
        )
    n_decisions = n_ok * cfg.n_tx
    p = n_errors / n_decisions if n_decisions else math.nan
    std = math.sqrt(max(p * (1.0 - p), 0.0) / n_decisions) if n_decisions else math.nan
    return McResult(
        mean_ser=p,
        std_error=std,
        n_trials=n_trials,
        n_symbol_decisions=n_decisions,
        n_errors=n_errors,
        n_diverged=n_diverged,
        mse_channel_empirical=emp_mse,
        mse_channel_theory=mse_theory,
    )


def trial_config(n_tx: int, alpha: float, tau_prime: float, rho: float, bits,
                 dac_bits: int = 1, seed: int = 0,
                 options: GampOptions = GampOptions()) -> TrialConfig:
    """Convenience constructor calibrating the quantizer at the trial SNR."""
    return TrialConfig(
        n_tx=n_tx, alpha=alpha, tau_prime=tau_prime, rho=rho,
        quantizer=make_quantizer(bits, rho), dac_bits=dac_bits, seed=seed,
        options=options,
    )
