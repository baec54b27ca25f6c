import math

import numpy as np
import pytest
from scipy import integrate, special

from qlst.quantizer import (
    INFINITE,
    QuantizerSpec,
    calibrate_step,
    psi,
    psi_all,
    psi_prime,
    psi_prime_all,
    quantize,
)


def quantile_oracle(p):
    # independent of scipy.ndtri: bisection on the erf-based CDF
    lo, hi = -10.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(-mid / math.sqrt(2.0)) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestCalibrateStep:
    def test_two_bit_coefficient(self):
        # top level hit with prob 1/4 for N(0, 1/2) input
        expected = math.sqrt(0.5) * quantile_oracle(0.75)
        assert calibrate_step(2, 0.0) == pytest.approx(expected, abs=1e-9)
        assert abs(calibrate_step(2, 0.0) - 0.47) < 0.0075

    def test_three_bit_coefficient(self):
        expected = math.sqrt(0.5) * quantile_oracle(1.0 - 1.0 / 8.0) / 3.0
        assert calibrate_step(3, 0.0) == pytest.approx(expected, abs=1e-9)
        assert abs(calibrate_step(3, 0.0) - 0.27) < 0.005

    def test_snr_scaling(self):
        # (b=2, rho=3): sqrt(rho+1) scaling, oracle PhiInv(0.75)*sqrt(2)
        assert calibrate_step(2, 3.0) == pytest.approx(quantile_oracle(0.75) * math.sqrt(2.0), abs=1e-9)
        for b in (2, 3, 4):
            assert calibrate_step(b, 3.0) / calibrate_step(b, 0.0) == pytest.approx(2.0, rel=1e-12)

    def test_one_bit_convention(self):
        assert calibrate_step(1, 0.0) == 1.0
        assert calibrate_step(1, 123.0) == 1.0

    def test_extreme_level_probability(self):
        for b, rho in ((2, 0.0), (3, 2.0), (4, 10.0)):
            spec = QuantizerSpec.calibrated(b, rho)
            top = spec.thresholds()[-1]
            sigma = math.sqrt((1.0 + rho) / 2.0)
            prob = 0.5 * math.erfc(top / sigma / math.sqrt(2.0))
            assert prob == pytest.approx(2.0**-b, rel=1e-10)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            calibrate_step(INFINITE, 1.0)
        with pytest.raises(ValueError):
            calibrate_step(0, 1.0)
        with pytest.raises(ValueError):
            calibrate_step(2, -0.5)


class TestSpec:
    def test_threshold_formula_and_symmetry(self):
        spec = QuantizerSpec(bits=3, step=0.4)
        r = spec.thresholds()
        k = np.arange(1, 8)
        assert np.allclose(r, (k - 4) * 0.4)
        assert np.allclose(r, -r[::-1])
        assert np.all(np.diff(r) > 0)

    def test_infinite_spec(self):
        spec = QuantizerSpec(bits=INFINITE)
        assert spec.is_infinite
        with pytest.raises(ValueError):
            spec.thresholds()
        with pytest.raises(ValueError):
            QuantizerSpec(bits=INFINITE, step=0.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            QuantizerSpec(bits=2, step=-1.0)
        with pytest.raises(ValueError):
            QuantizerSpec(bits=2.5)


class TestQuantize:
    def test_one_bit(self):
        spec = QuantizerSpec(bits=1)
        assert quantize(-0.3, spec) == 1
        assert quantize(0.3, spec) == 2

    def test_boundary_belongs_to_lower_cell(self):
        spec = QuantizerSpec.calibrated(2, 0.0)
        r = spec.thresholds()
        assert quantize(r[0], spec) == 1
        assert quantize(r[1], spec) == 2
        assert quantize(np.nextafter(r[0], 1.0), spec) == 2

    def test_identity_when_infinite(self):
        spec = QuantizerSpec(bits=INFINITE)
        assert quantize(0.5, spec) == 0.5

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        for b in (1, 2, 3):
            spec = QuantizerSpec.calibrated(b, 1.0)
            w = rng.normal(0, 2, 500)
            assert np.array_equal(quantize(-w, spec), 2**b + 1 - quantize(w, spec))


class TestPsi:
    def test_normalization_grid(self):
        spec = QuantizerSpec.calibrated(3, 4.0)
        w = np.linspace(-40.0, 40.0, 41)
        for s in (1e-3, 1.0, 1e3):
            total = psi_all(w, np.full_like(w, s), spec).sum(axis=-1)
            assert np.max(np.abs(total - 1.0)) < 1e-12

    def test_one_bit_center(self):
        assert psi(1, 0.0, 1.0, QuantizerSpec(bits=1)) == pytest.approx(0.5, abs=1e-15)

    def test_two_bit_value(self):
        # Phi(0.47) - Phi(0) for cell 2 at w=0, s=2, step 0.47
        spec = QuantizerSpec(bits=2, step=0.47)
        expected = special.ndtr(0.47) - 0.5
        assert psi(2, 0.0, 2.0, spec) == pytest.approx(expected, abs=1e-12)

    def test_deep_tail_relative_accuracy(self):
        # cell ~21 sigma from the signal (probability ~1e-102): still relatively accurate
        spec = QuantizerSpec(bits=2, step=1.0)
        val = psi(4, -20.0, 1.0, spec)  # cell (1, inf) seen from w=-20
        expected = 0.5 * special.erfc((math.sqrt(2) * 1.0 + 20.0) / math.sqrt(2.0))
        assert 0 < val < 1e-100
        assert val == pytest.approx(expected, rel=1e-10)
        # and one near the underflow limit (~1e-300)
        val2 = psi(4, -35.4, 1.0, spec)
        expected2 = 0.5 * special.erfc((math.sqrt(2) * 1.0 + 35.4) / math.sqrt(2.0))
        assert 0 < val2 < 1e-250
        assert val2 == pytest.approx(expected2, rel=1e-9)

    def test_monte_carlo_frequencies(self):
        spec = QuantizerSpec.calibrated(2, 1.0)
        rng = np.random.default_rng(11)
        w, s = 0.8, 1.7
        n = 1_000_000
        v = rng.normal(w / math.sqrt(2.0), math.sqrt(s / 2.0), n)
        levels = quantize(v, spec)
        probs = psi_all(np.float64(w), np.float64(s), spec)
        for k in range(1, 5):
            p = probs[k - 1]
            freq = np.mean(levels == k)
            tol = 4.0 * math.sqrt(p * (1 - p) / n)
            assert abs(freq - p) <= tol

    def test_invalid(self):
        spec = QuantizerSpec(bits=1)
        with pytest.raises(ValueError):
            psi(1, 0.0, -1.0, spec)
        with pytest.raises(ValueError):
            psi(3, 0.0, 1.0, spec)


class TestPsiPrime:
    def test_telescoping(self):
        spec = QuantizerSpec.calibrated(3, 4.0)
        w = np.linspace(-40.0, 40.0, 41)
        for s in (1e-3, 1.0, 1e3):
            total = psi_prime_all(w, np.full_like(w, s), spec).sum(axis=-1)
            assert np.max(np.abs(total)) < 1e-12

    def test_one_bit_center(self):
        expected = 1.0 / math.sqrt(2.0 * math.pi)
        assert psi_prime(1, 0.0, 1.0, QuantizerSpec(bits=1)) == pytest.approx(expected, abs=1e-15)

    def test_is_negated_derivative(self):
        # the printed kernel equals -d psi / d w; check magnitude and sign
        spec = QuantizerSpec.calibrated(2, 1.0)
        w, s, h = 0.3, 1.5, 1e-5
        for k in range(1, 5):
            num = (psi(k, w + h, s, spec) - psi(k, w - h, s, spec)) / (2 * h)
            kernel = psi_prime(k, w, s, spec)
            assert abs(kernel) == pytest.approx(abs(num), abs=1e-6)
            assert kernel == pytest.approx(-num, abs=1e-6)
