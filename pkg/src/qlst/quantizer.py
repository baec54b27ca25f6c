"""Uniform b-bit quantizer model and its truncated-Gaussian kernels.

The quantizer maps a real value w to the level index k whenever w falls in
the half-open cell (r_{k-1}, r_k], with equispaced thresholds

    r_k = (-2^{b-1} + k) * step,   k = 1, ..., 2^b - 1,

and sentinels r_0 = -inf, r_{2^b} = +inf.  ``bits = INFINITE`` selects the
identity map (no quantization); downstream code branches to closed forms
for that case instead of approximating it with a large b.

The cell-probability kernel ``psi`` and its companion ``psi_prime`` are the
building blocks of every quantized-output integral in this package:

    psi(k, w, s)       = Phi((sqrt(2) r_k - w)/sqrt(s))
                         - Phi((sqrt(2) r_{k-1} - w)/sqrt(s))
    psi_prime(k, w, s) = [exp(-(sqrt(2) r_k - w)^2 / (2 s))
                         - exp(-(sqrt(2) r_{k-1} - w)^2 / (2 s))] / sqrt(2 pi s)

Note on the sign convention: ``psi_prime`` as defined above equals
``-d psi / d w``, not the derivative itself.  It is kept in this form
because the quadratic functional that consumes it squares the value, so
the sign is immaterial there.  Code that needs the true derivative (e.g.
message-passing denoisers) must negate it or, better, use the truncated
Gaussian moments directly.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

INFINITE = math.inf


def _is_infinite_bits(bits) -> bool:
    return bits == INFINITE


def calibrate_step(bits: int, rho: float) -> float:
    """Step size that loads each extreme level with probability 2^-b.

    The calibration assumes the quantizer input is real Gaussian with mean
    zero and variance (1 + rho)/2, i.e. one real component of a unit-power
    complex signal plus unit-variance complex noise at SNR rho.  The top
    threshold is then placed at the (1 - 2^-b) quantile:

        step = sqrt((1 + rho)/2) * PhiInv(1 - 2^-b) / (2^{b-1} - 1)

    For bits=1 the single threshold sits at zero and the extreme-level
    condition holds for any step; 1.0 is returned by convention.
    """
    if _is_infinite_bits(bits):
        raise ValueError("no step size exists for an infinite-resolution quantizer")
    bits = int(bits)
    if bits < 1:
        raise ValueError(f"bits must be >= 1, got {bits}")
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    if bits == 1:
        return 1.0
    quantile = special.ndtri(1.0 - 2.0 ** (-bits))
    return math.sqrt((1.0 + rho) / 2.0) * quantile / (2 ** (bits - 1) - 1)


@dataclass(frozen=True)
class QuantizerSpec:
    """Resolution and threshold geometry of the uniform quantizer.

    ``bits`` is a positive integer or ``INFINITE``.  ``step`` is the
    threshold spacing; it is meaningless (and ignored) when bits is 1 or
    INFINITE.  Thresholds are symmetric about zero and strictly
    increasing.
    """

    bits: float
    step: float | None = None

    def __post_init__(self):
        if self.is_infinite:
            if self.step is not None:
                raise ValueError("step is undefined for an infinite-resolution quantizer")
            return
        bits = self.bits
        if bits != int(bits) or bits < 1:
            raise ValueError(f"bits must be a positive integer or INFINITE, got {bits!r}")
        object.__setattr__(self, "bits", int(bits))
        if self.step is None:
            object.__setattr__(self, "step", 1.0)
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")

    @property
    def is_infinite(self) -> bool:
        return _is_infinite_bits(self.bits)

    @property
    def n_levels(self) -> int:
        if self.is_infinite:
            raise ValueError("level count is undefined for an infinite-resolution quantizer")
        return 2 ** int(self.bits)

    def thresholds(self) -> np.ndarray:
        """Finite thresholds (r_1, ..., r_{2^b - 1}), strictly increasing."""
        if self.is_infinite:
            raise ValueError("thresholds are undefined for an infinite-resolution quantizer")
        k = np.arange(1, self.n_levels)
        return (k - 2 ** (self.bits - 1)) * self.step

    @classmethod
    def calibrated(cls, bits, rho: float) -> "QuantizerSpec":
        """Spec with the default step from :func:`calibrate_step`."""
        if _is_infinite_bits(bits):
            return cls(bits=INFINITE)
        return cls(bits=bits, step=calibrate_step(bits, rho))


def quantize(w, spec: QuantizerSpec):
    """Level index of w, i.e. the unique k with w in (r_{k-1}, r_k].

    Returns w itself when the spec is infinite-resolution.  Accepts
    scalars or arrays; boundary values belong to the cell they close.
    """
    if spec.is_infinite:
        return w
    r = spec.thresholds()
    levels = np.searchsorted(r, w, side="left") + 1
    if np.isscalar(w) or np.ndim(w) == 0:
        return int(levels)
    return levels


def _edges_for_levels(levels, spec: QuantizerSpec):
    """Cell bounds (lo, hi] for an array of level indices, with inf sentinels."""
    r = spec.thresholds()
    padded = np.concatenate(([-np.inf], r, [np.inf]))
    idx = np.asarray(levels, dtype=np.intp)
    return padded[idx - 1], padded[idx]


def gaussian_interval_prob(lo, hi):
    """P(lo < Z <= hi) for standard normal Z, accurate deep into the tails.

    Evaluated through the complementary error function on whichever side
    of the origin the interval lies, so same-sign tail intervals keep
    relative accuracy down to the underflow limit (~1e-308) instead of
    cancelling to zero.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    lo_b, hi_b = np.broadcast_arrays(lo, hi)
    out = np.empty(lo_b.shape, dtype=float)

    right = lo_b >= 0
    left = hi_b <= 0
    mid = ~(right | left)

    # interval in the right tail: Q(lo) - Q(hi)
    out[right] = 0.5 * (
        special.erfc(lo_b[right] / np.sqrt(2.0)) - special.erfc(hi_b[right] / np.sqrt(2.0))
    )
    # interval in the left tail: mirror image
    out[left] = 0.5 * (
        special.erfc(-hi_b[left] / np.sqrt(2.0)) - special.erfc(-lo_b[left] / np.sqrt(2.0))
    )
    # interval straddling zero: plain CDF difference is well conditioned
    out[mid] = special.ndtr(hi_b[mid]) - special.ndtr(lo_b[mid])
    return np.clip(out, 0.0, 1.0)


def psi_all(w, s, spec: QuantizerSpec) -> np.ndarray:
    """Cell probabilities psi(k, w, s) for all k, stacked on a new last axis.

    w may be any array; the result has shape ``w.shape + (2^b,)`` and sums
    to 1 along the last axis.
    """
    _check_s(s)
    if spec.is_infinite:
        raise ValueError("cell probabilities are undefined for an infinite-resolution quantizer")
    w = np.asarray(w, dtype=float)
    s = np.asarray(s, dtype=float)
    r = spec.thresholds()
    edges = np.concatenate(([-np.inf], r, [np.inf]))
    z = (np.sqrt(2.0) * edges - w[..., None]) / np.sqrt(s)[..., None]
    return gaussian_interval_prob(z[..., :-1], z[..., 1:])


def psi_prime_all(w, s, spec: QuantizerSpec) -> np.ndarray:
    """psi_prime(k, w, s) for all k, stacked on a new last axis.

    Sentinel edge terms evaluate to zero, so the values telescope to zero
    along the last axis.  Equals -d psi / d w (see module docstring).
    """
    _check_s(s)
    if spec.is_infinite:
        raise ValueError("kernel is undefined for an infinite-resolution quantizer")
    w = np.asarray(w, dtype=float)
    s = np.asarray(s, dtype=float)
    r = spec.thresholds()
    edges = np.concatenate(([-np.inf], r, [np.inf]))
    arg = np.sqrt(2.0) * edges - w[..., None]
    with np.errstate(over="ignore"):
        g = np.exp(-(arg**2) / (2.0 * s)[..., None])
    g[..., np.isinf(edges)] = 0.0
    norm = np.sqrt(2.0 * np.pi * s)[..., None]
    return (g[..., 1:] - g[..., :-1]) / norm


def psi(k: int, w, s, spec: QuantizerSpec):
    """Probability that the noisy signal w + sqrt(s/2)-per-component noise lands in cell k."""
    _check_level(k, spec)
    values = psi_all(w, s, spec)[..., k - 1]
    return float(values) if values.ndim == 0 else values


def psi_prime(k: int, w, s, spec: QuantizerSpec):
    """Exponential-difference kernel for cell k (see module docstring for the sign)."""
    _check_level(k, spec)
    values = psi_prime_all(w, s, spec)[..., k - 1]
    return float(values) if values.ndim == 0 else values


def _check_level(k, spec):
    if spec.is_infinite:
        raise ValueError("level index is undefined for an infinite-resolution quantizer")
    if not 1 <= k <= spec.n_levels:
        raise ValueError(f"level must be in [1, {spec.n_levels}], got {k}")


def _check_s(s):
    if np.any(np.asarray(s) <= 0):
        raise ValueError("s must be positive")
