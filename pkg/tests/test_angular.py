import math
import warnings

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma

from frackpz.core import sphere_area
from frackpz.operators.angular import (
    H_profile,
    bump_F_profile,
    getoor_constant,
    lam_factory,
    lam_limit_at_one,
    normalization_constant,
    power_eigenvalue_formula,
    power_eigenvalue_quadrature,
    pv_constant,
    riesz_angular_factory,
)


def k_direct(N, exponent_p, sig):
    """Reference angular integral by adaptive quadrature."""
    if N == 2:
        f = lambda t: 2 * (1 + sig ** 2 - 2 * sig * np.cos(t)) ** (-exponent_p)
    else:
        f = lambda t: 2 * np.pi * (1 + sig ** 2 - 2 * sig * np.cos(t)) ** (-exponent_p) \
            * np.sin(t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        v, _ = integrate.quad(f, 0, np.pi, epsabs=1e-13, epsrel=1e-12, limit=200)
    return v


class TestGammaBackend:
    def test_half_integer(self):
        assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)

    def test_reflection_formula(self):
        for z in (0.1, 0.3, 0.6, 0.9):
            lhs = gamma(z) * gamma(1 - z)
            assert lhs == pytest.approx(math.pi / math.sin(math.pi * z), rel=1e-13)


class TestConstants:
    def test_paper_formula_value(self):
        # 2^{2s-1} pi^{-1/2} Gamma((1+2s)/2) / |Gamma(-s)| at (N,s) = (1, 0.75)
        assert normalization_constant(1, 0.75) == pytest.approx(0.14960335515053724,
                                                                rel=1e-12)

    def test_positive_on_admissible_range(self):
        for N in (1, 2, 3):
            for s in (0.55, 0.6, 0.75, 0.9, 0.95):
                assert normalization_constant(N, s) > 0

    def test_s_endpoints_rejected(self):
        with pytest.raises(ValueError):
            normalization_constant(1, 0.0)
        with pytest.raises(ValueError):
            normalization_constant(1, 1.0)

    @pytest.mark.parametrize("N", [1, 2, 3])
    @pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
    def test_pv_constant_reproduces_getoor_at_origin(self, N, s):
        # (-Delta)^s (1-|x|^2)_+^s at 0 via the one-dimensional radial profile:
        # c_pv |S^{N-1}| [ int_0^1 (1-(1-r^2)^s) r^{-1-2s} dr + 1/(2s) ]
        f = lambda r: (1 - (1 - r ** 2) ** s) * r ** (-1 - 2 * s)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            I1, _ = integrate.quad(f, 0, 1, epsabs=1e-12, epsrel=1e-12, limit=200)
        val = pv_constant(N, s) * sphere_area(N) * (I1 + 1.0 / (2 * s))
        assert val == pytest.approx(getoor_constant(N, s), rel=1e-7)

    def test_getoor_known_value(self):
        # half-Laplacian of sqrt(1-x^2) is exactly 1
        assert getoor_constant(1, 0.5) == pytest.approx(1.0, rel=1e-14)


class TestLambda:
    @pytest.mark.parametrize("N", [2, 3])
    @pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
    def test_against_direct_quadrature(self, N, s):
        lam = lam_factory(N, s)
        p = (N + 2 * s) / 2
        for sig in (0.3, 0.9, 1.001, 1.05, 1.2, 2.0, 25.0):
            ref = sig ** (N - 1) * k_direct(N, p, sig) * abs(sig - 1) ** (1 + 2 * s)
            assert lam(sig)[0] == pytest.approx(ref, rel=5e-9)

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_limit_at_one(self, N):
        s = 0.75
        lam = lam_factory(N, s)
        assert lam(1.0 + 1e-10)[0] == pytest.approx(lam_limit_at_one(N, s), rel=1e-7)

    def test_reflection_identity(self):
        for N in (2, 3):
            lam = lam_factory(N, 0.8)
            for sig in (0.2, 0.5, 0.9):
                assert lam(sig)[0] == pytest.approx(
                    sig ** (N - 1) * lam(1.0 / sig)[0], rel=1e-12)

    def test_limit_at_infinity_is_sphere_area(self):
        for N in (2, 3):
            lam = lam_factory(N, 0.75)
            assert lam(1e6)[0] == pytest.approx(sphere_area(N), rel=1e-4)


class TestRieszAngular:
    @pytest.mark.parametrize("N,alpha", [(2, 1.5), (2, 0.5), (3, 1.5), (3, 0.5),
                                         (3, 1.0)])
    def test_against_direct_quadrature(self, N, alpha):
        k = riesz_angular_factory(N, alpha)
        p = (N - alpha) / 2
        for sig in (0.4, 0.95, 1.02, 1.3, 3.0):
            assert k(sig)[0] == pytest.approx(k_direct(N, p, sig), rel=1e-8)

    def test_sigma_zero(self):
        for N in (2, 3):
            k = riesz_angular_factory(N, 0.7)
            assert k(0.0)[0] == pytest.approx(sphere_area(N), rel=1e-12)


class TestPowerEigenvalue:
    def test_positive_on_range(self):
        for (N, s) in [(2, 0.75), (3, 0.9), (3, 0.6)]:
            for frac in (0.1, 0.5, 0.9):
                alpha = frac * (N - 2 * s)
                assert power_eigenvalue_formula(N, s, alpha) > 0

    def test_range_rejected(self):
        with pytest.raises(ValueError):
            power_eigenvalue_formula(2, 0.75, 0.6)   # >= N - 2s

    @pytest.mark.parametrize("N,s,alpha", [(2, 0.75, 0.25), (3, 0.75, 1.0),
                                           (3, 0.9, 0.5), (2, 0.6, 0.5)])
    def test_quadrature_cross_validation(self, N, s, alpha):
        f = power_eigenvalue_formula(N, s, alpha)
        q = power_eigenvalue_quadrature(N, s, alpha)
        assert q == pytest.approx(f, rel=1e-2)

    def test_recorded_example_value(self):
        # (N, s, alpha) = (3, 0.75, 0.25): both paths agree on this number
        val = power_eigenvalue_formula(3, 0.75, 0.25)
        assert val == pytest.approx(0.2534918400252318, rel=1e-12)
        assert power_eigenvalue_quadrature(3, 0.75, 0.25) == pytest.approx(
            val, rel=1e-2)


class TestHProfile:
    def test_positive_and_growth(self):
        for N in (2, 3):
            H = H_profile(N, 0.75)
            sig = np.array([1.0 + 1e-8, 1.5, 3.0, 10.0, 100.0, 1e4])
            vals = H(sig)
            assert np.all(vals > 0)
            # H ~ sigma^{2s} at infinity
            growth = vals[-1] / vals[-2]
            assert growth == pytest.approx((1e4 / 1e2) ** 1.5, rel=0.05)


class TestBumpF:
    def test_positive_decreasing_window(self):
        N, s, alpha = 3, 0.75, 1.2
        r = np.linspace(0.05, 0.85, 9)
        F = bump_F_profile(N, s, alpha, r)
        assert np.all(F > 0)
        assert np.all(np.diff(F) < 0)
