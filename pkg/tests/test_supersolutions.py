import math

import numpy as np
import pytest

from frackpz import GridFunction, ball
from frackpz.operators.angular import power_eigenvalue_formula
from frackpz.operators.fraclap import build_matrix, fraclap_radial
from frackpz.sources import constant_source
from frackpz.supersolutions import (
    PowerSupersolSpec,
    RadialBumpSpec,
    bump_F_profile,
    bump_grid,
    bump_lambda_admissible,
    bump_thresholds,
    power_alpha,
    power_amplitude_max,
    power_eigenvalue,
    power_lambda_admissible,
    power_residual_scan,
    verify_supersolution,
)


class TestPowerAlpha:
    def test_values(self):
        assert power_alpha(0.75, 1.25) == pytest.approx(1.0, rel=1e-15)
        a = power_alpha(0.75, 1.4)
        assert a == pytest.approx(0.25, rel=1e-12)
        assert a < 2 - 2 * 0.75   # N - 2s for N = 2

    def test_limit_toward_critical(self):
        assert power_alpha(0.75, 1.4999999) < 1e-6

    def test_window_rejected(self):
        with pytest.raises(ValueError):
            power_alpha(0.75, 1.5)
        with pytest.raises(ValueError):
            power_alpha(0.75, 1.0)


class TestAmplitude:
    def test_admissibility_flag(self):
        a_max = power_amplitude_max(2, 0.75, 1.4)
        spec_ok = PowerSupersolSpec.make(2, 0.75, 1.4, amplitude=a_max)
        assert spec_ok.admissible
        spec_bad = PowerSupersolSpec.make(2, 0.75, 1.4, amplitude=2 * a_max)
        assert not spec_bad.admissible

    def test_monotone_in_eigenvalue(self):
        # A_max = (C/alpha^q)^{1/(q-1)} increases with C
        q = 1.4
        alpha = power_alpha(0.75, q)
        vals = [(c / alpha ** q) ** (1.0 / (q - 1.0)) for c in (0.01, 0.05, 0.2)]
        assert vals[0] < vals[1] < vals[2]

    def test_overlarge_amplitude_fails_scan(self):
        dom = ball(1.0, 2, 64)
        a_max = power_amplitude_max(2, 0.75, 1.4)
        spec = PowerSupersolSpec.make(2, 0.75, 1.4, amplitude=2 * a_max)
        f = constant_source(0.0).on_grid(dom)
        rep = power_residual_scan(spec, dom, f, 0.0)
        assert rep.verdict == "FAIL"
        assert rep.worst_value < 0


class TestBumpThresholds:
    def test_worked_example(self):
        sigma0, r0 = bump_thresholds(3, 0.75, 1.2)
        assert sigma0 == pytest.approx(1.632, abs=5e-4)
        assert r0 == pytest.approx(0.873, abs=5e-4)

    @pytest.mark.parametrize("N,s,alpha", [(3, 0.75, 1.2), (2, 0.75, 1.3),
                                           (3, 0.9, 1.5), (2, 0.6, 1.1)])
    def test_defining_identities(self, N, s, alpha):
        sigma0, r0 = bump_thresholds(N, s, alpha)
        assert sigma0 ** alpha * (N - 2 * s) == pytest.approx(
            N + alpha - 2 * s, rel=1e-12)
        assert r0 ** alpha * (N + alpha - 2 * s + sigma0 ** (2 * s - N)) \
            == pytest.approx(N + alpha - 2 * s, rel=1e-12)
        assert 0.0 < r0 < 1.0
        assert sigma0 > 1.0

    def test_n1_rejected(self):
        with pytest.raises(ValueError):
            bump_thresholds(1, 0.75, 1.2)


class TestBumpProfile:
    def test_F_against_grid_operator(self):
        # r^{alpha-2s} F(r) must match the quadrature operator of the bump
        N, s, alpha = 2, 0.75, 1.3
        dom = ball(1.0, N, 192)
        w = GridFunction(dom, np.clip(1 - dom.nodes ** alpha, 0, None))
        lap = fraclap_radial(w, s).values
        _, r0 = bump_thresholds(N, s, alpha)
        r = dom.nodes
        sel = (r > 0.05) & (r < r0)
        F = bump_F_profile(N, s, alpha, r[sel])
        pred = r[sel] ** (alpha - 2 * s) * F["F"]
        rel = np.max(np.abs(pred - lap[sel])) / np.max(np.abs(pred))
        assert rel < 5e-2

    def test_profile_shape(self):
        rep = bump_F_profile(3, 0.75, 1.2, np.linspace(0.05, 0.87, 12))
        assert rep["decreasing"]
        assert rep["min"] > 0
        assert rep["min"] == pytest.approx(rep["F"][-1])


class TestVerification:
    def test_scaled_torsion_is_supersolution_at_zero_forcing(self):
        # eps * solve(1): gradient term scales by eps^q << eps
        from frackpz.solvers import LinearSolver
        dom = ball(1.0, 2, 96)
        s, q = 0.75, 1.4
        solver = LinearSolver(dom, s, method="matrix")
        v = solver.solve(GridFunction(dom, np.ones(dom.grid_n)))
        w = GridFunction(dom, 1e-3 * v.values)
        f0 = GridFunction(dom, np.zeros(dom.grid_n))
        rep = verify_supersolution(w, s, q, 0.0, f0, op=solver.op)
        assert rep.verdict == "SUPERSOLUTION"

    def test_power_family_with_small_lambda(self):
        dom = ball(1.0, 2, 96)
        spec = PowerSupersolSpec.make(2, 0.75, 1.4, shift=2.0)
        f = constant_source(1.0).on_grid(dom)
        lam_adm = power_lambda_admissible(spec, dom, f)
        assert lam_adm > 0
        assert power_residual_scan(spec, dom, f, 0.9 * lam_adm).verdict \
            == "SUPERSOLUTION"
        assert power_residual_scan(spec, dom, f, 1.5 * lam_adm).verdict == "FAIL"

    def test_power_scan_stable_across_refinement(self):
        spec = PowerSupersolSpec.make(2, 0.75, 1.4, shift=2.0)
        lam = None
        for n in (64, 128, 256):
            dom = ball(1.0, 2, n)
            f = constant_source(1.0).on_grid(dom)
            la = power_lambda_admissible(spec, dom, f)
            rep = power_residual_scan(spec, dom, f, 0.9 * la)
            assert rep.verdict == "SUPERSOLUTION"
            if lam is not None:
                assert la == pytest.approx(lam, rel=1e-2)
            lam = la

    def test_bump_bisection_and_fail_mode(self):
        from frackpz.supersolutions import bump_operator_values
        dom = ball(1.0, 2, 96)
        src = constant_source(1.0)
        s, q = 0.75, 1.4
        lam_adm, w = bump_lambda_admissible(dom, s, q, src)
        assert lam_adm > 0 and w is not None
        amp = float(np.max(w.values))
        spec = RadialBumpSpec.make(2, s, 0.5 * (1 + 2 * s), amplitude=amp)
        _, lap, grad = bump_operator_values(dom, spec)
        fv = src.on_grid(dom).values
        m = dom.interior_mask
        res_ok = lap[m] - grad[m] ** q - 0.5 * lam_adm * fv[m]
        res_bad = lap[m] - grad[m] ** q - 20.0 * lam_adm * fv[m]
        assert np.min(res_ok) >= 0.0
        assert np.min(res_bad) < 0.0
        # grid verification agrees away from the origin kink of r^alpha
        big = w.domain
        fbig = src.on_grid(big)
        region = (big.nodes <= dom.radius + 1e-12) & (big.nodes >= 10 * big.h)
        op = build_matrix(big, s)
        rep = verify_supersolution(w, s, q, 0.5 * lam_adm, fbig,
                                   region=region, op=op)
        assert rep.verdict == "SUPERSOLUTION"
        bad = verify_supersolution(w, s, q, 20.0 * lam_adm, fbig,
                                   region=region, op=op)
        assert bad.verdict == "FAIL"
        assert 0 <= bad.worst_node < big.grid_n

    def test_residual_scaling_law(self):
        # residual(c w) = c lap(w) - c^q |grad w|^q - lam f, recomputed
        dom = ball(1.0, 2, 64)
        s, q, lam, c = 0.75, 1.4, 0.3, 2.5
        spec = RadialBumpSpec.make(2, s, 1.3)
        w = bump_grid(dom, spec)
        big = w.domain
        op = build_matrix(big, s)
        f = constant_source(1.0).on_grid(big)
        from frackpz.core import finite_gradient
        rep = verify_supersolution(GridFunction(big, c * w.values), s, q, lam,
                                   f, op=op)
        lap1 = op.apply(w).values
        grad1 = finite_gradient(w).values
        manual = c * lap1 - (c * grad1) ** q - lam * f.values
        assert np.max(np.abs(rep.residual.values - manual)) \
            <= 1e-12 * np.max(np.abs(manual))
