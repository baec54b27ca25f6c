import math

import numpy as np
import pytest
from scipy import integrate

from qlst.scalar_awgn import (
    Prior,
    gaussian_prior,
    input_prior,
    mmse_awgn,
    mmse_for_solver,
    mutual_info_awgn,
)

QPSK = input_prior(1)
QAM2 = input_prior(2)


class TestPrior:
    @pytest.mark.parametrize("a", [1, 2, 3, 4, 5, 6])
    def test_support_moments(self, a):
        pts = input_prior(a).support()
        assert len(pts) == 2**a
        assert np.mean(pts) == pytest.approx(0.0, abs=1e-15)
        assert np.mean(pts**2) == pytest.approx(0.5, rel=1e-12)
        gaps = np.diff(pts)
        assert np.allclose(gaps, gaps[0])

    def test_infinite_dac_is_gaussian(self):
        assert input_prior(math.inf).is_gaussian

    def test_entropy(self):
        assert QAM2.entropy_bits() == 4.0
        assert math.isinf(gaussian_prior.entropy_bits())

    def test_validation(self):
        with pytest.raises(ValueError):
            Prior("discrete", 0)
        with pytest.raises(ValueError):
            Prior("discrete", 7)
        with pytest.raises(ValueError):
            Prior("gaussian", 2)
        with pytest.raises(ValueError):
            gaussian_prior.support()


class TestGaussianClosedForms:
    def test_quadrature_agrees_with_shannon(self):
        lam = np.array([0.1, 1.0, 10.0])
        quad_i = mutual_info_awgn(lam, gaussian_prior, force_quadrature=True)
        assert np.max(np.abs(quad_i - np.log2(1 + lam))) < 1e-8
        quad_e = mmse_awgn(lam, gaussian_prior, force_quadrature=True)
        assert np.max(np.abs(quad_e - 1 / (1 + lam))) < 1e-8

    def test_endpoints(self):
        assert mutual_info_awgn(0.0, gaussian_prior) == 0.0
        assert mmse_awgn(0.0, gaussian_prior) == 1.0
        assert mmse_awgn(math.inf, gaussian_prior) == 0.0


class TestDiscreteFunctionals:
    def test_zero_snr(self):
        assert mutual_info_awgn(0.0, QPSK) == pytest.approx(0.0, abs=1e-12)
        assert mmse_awgn(0.0, QPSK) == pytest.approx(1.0, abs=1e-12)

    def test_high_snr_saturation(self):
        assert mutual_info_awgn(1e4, QPSK) == pytest.approx(2.0, abs=1e-9)
        assert mutual_info_awgn(math.inf, QAM2) == 4.0
        assert mmse_awgn(math.inf, QPSK) == 0.0

    def test_qpsk_logcosh_identity(self):
        # independent closed form for the two-point component prior:
        # I = (2/ln2) (lam - E ln cosh(sqrt(lam) z + lam)), z ~ N(0,1)
        for lam in (0.5, 2.0, 6.0):
            def f(z):
                arg = math.sqrt(lam) * z + lam
                # numerically safe log cosh
                lcosh = abs(arg) + math.log1p(math.exp(-2 * abs(arg))) - math.log(2.0)
                return lcosh * math.exp(-z * z / 2) / math.sqrt(2 * math.pi)

            expect = 2.0 / math.log(2.0) * (lam - integrate.quad(f, -12, 12)[0])
            assert mutual_info_awgn(lam, QPSK) == pytest.approx(expect, abs=1e-8)

    def test_qpsk_info_monte_carlo(self):
        lam = 4.0
        rng = np.random.default_rng(5)
        pts = QPSK.support()
        n = 10_000_000
        log_mix = np.empty(n)
        chunk = 500_000
        root = math.sqrt(lam)
        for start in range(0, n, chunk):
            size = min(chunk, n - start)
            x = pts[rng.integers(0, 2, size)] + 1j * pts[rng.integers(0, 2, size)]
            y = root * x + (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2)
            d2 = np.stack([
                np.abs(y - root * (pr + 1j * pi)) ** 2
                for pr in pts for pi in pts
            ])
            m = d2.min(axis=0)
            log_mix[start:start + size] = -m + np.log(np.mean(np.exp(-(d2 - m)), axis=0))
        est = -np.mean(log_mix) / math.log(2.0) - math.log2(math.e)
        se = np.std(log_mix) / math.log(2.0) / math.sqrt(n)
        assert abs(mutual_info_awgn(lam, QPSK) - est) <= 3 * se

    def test_qpsk_mmse_trapezoid_oracle(self):
        # one real component: x = +-1/sqrt(2), noise variance 1/2;
        # E[(x - m(y))^2] = E x^2 - E m(y)^2 on a fine y-grid
        lam = 6.0
        c = 1.0 / math.sqrt(2.0)
        root = math.sqrt(lam)
        y = np.linspace(-12, 12, 200_001)
        like_p = np.exp(-((y - root * c) ** 2))
        like_m = np.exp(-((y + root * c) ** 2))
        density = 0.5 * (like_p + like_m) / math.sqrt(math.pi)
        cond_mean = c * (like_p - like_m) / (like_p + like_m)
        mse_real = c**2 - np.trapezoid(cond_mean**2 * density, y)
        assert mmse_awgn(lam, QPSK) == pytest.approx(2 * mse_real, abs=1e-6)

    def test_hard_decision_bound(self):
        for lam in (1.0, 4.0, 9.0):
            q = 0.5 * math.erfc(math.sqrt(lam / 2.0))
            assert mmse_awgn(lam, QPSK) <= 4 * q + 1e-12

    @pytest.mark.parametrize("prior", [QPSK, QAM2])
    def test_lmmse_domination_and_monotonicity(self, prior):
        lam = np.geomspace(0.01, 100.0, 25)
        mse = mmse_awgn(lam, prior)
        info = mutual_info_awgn(lam, prior)
        assert np.all(mse <= 1 / (1 + lam) + 1e-10)
        assert np.all(np.diff(mse) <= 1e-12)
        assert np.all(np.diff(info) >= -1e-12)

    def test_i_mmse_identity(self):
        # d I_nats / d lam = mmse, checked by central differences
        h = 1e-4
        for prior, lam in ((gaussian_prior, 1.7), (QPSK, 2.3)):
            i_hi = mutual_info_awgn(lam + h, prior, force_quadrature=True) * math.log(2.0)
            i_lo = mutual_info_awgn(lam - h, prior, force_quadrature=True) * math.log(2.0)
            deriv = (i_hi - i_lo) / (2 * h)
            assert deriv == pytest.approx(mmse_awgn(lam, prior), abs=1e-4)

    def test_validation(self):
        with pytest.raises(ValueError):
            mutual_info_awgn(-0.1, QPSK)
        with pytest.raises(ValueError):
            mmse_awgn(-1.0, gaussian_prior)


class TestSolverSpline:
    @pytest.mark.parametrize("prior", [QPSK, QAM2])
    def test_matches_exact_where_it_matters(self, prior):
        lam = np.geomspace(1e-8, 60.0, 120)
        exact = mmse_awgn(lam, prior)
        fast = mmse_for_solver(lam, prior)
        mask = exact > 1e-10
        rel = np.abs(fast[mask] - exact[mask]) / exact[mask]
        assert rel.max() < 1e-4

    def test_limits(self):
        assert mmse_for_solver(0.0, QPSK) == pytest.approx(1.0, abs=1e-8)
        assert mmse_for_solver(math.inf, QPSK) == 0.0
        assert mmse_for_solver(1e12, QPSK) == 0.0
