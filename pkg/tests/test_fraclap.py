import math

import numpy as np
import pytest

from frackpz import GridFunction, ball, boundary_distance, interval
from frackpz.core import from_interior
from frackpz.operators.angular import getoor_constant
from frackpz.operators.fraclap import (
    drift_apply,
    fraclap_direct,
    fraclap_periodic,
    fraclap_radial,
    fraclap_radial_reduction,
    interval_matrix,
    radial_matrix,
)


def getoor_gridfn(dom, s):
    prof = np.clip(1.0 - (dom.nodes / getattr(dom, "radius", 1.0) if dom.kind == "ball"
                          else dom.nodes) ** 2, 0.0, None) ** s
    return GridFunction(dom, prof)


class TestPeriodic:
    def test_constant_annihilated(self):
        out = fraclap_periodic(np.ones(64), 0.75)
        assert np.max(np.abs(out)) < 1e-13

    @pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_cosine_symbol(self, s, k):
        x = np.linspace(0, 2 * np.pi, 128, endpoint=False)
        out = fraclap_periodic(np.cos(k * x), s)
        exact = k ** (2 * s) * np.cos(k * x)
        assert np.max(np.abs(out - exact)) / k ** (2 * s) < 1e-12

    def test_cos2x_value(self):
        x = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        out = fraclap_periodic(np.cos(2 * x), 0.75)
        assert out[0] == pytest.approx(2 ** 1.5, rel=1e-12)


class TestIntervalMatrix:
    def test_zero_function(self):
        dom = interval(-1, 1, 64)
        op = interval_matrix(dom, 0.75)
        out = op.apply(GridFunction(dom, np.zeros(64)))
        assert np.all(out.values == 0.0)

    def test_linearity_exact(self):
        dom = interval(-1, 1, 48)
        op = interval_matrix(dom, 0.7)
        rng = np.random.default_rng(5)
        u = from_interior(dom, rng.standard_normal(46))
        v = from_interior(dom, rng.standard_normal(46))
        lhs = op.apply(GridFunction(dom, 2.0 * u.values + 3.0 * v.values)).values
        rhs = 2.0 * op.apply(u).values + 3.0 * op.apply(v).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))

    @pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
    def test_m_matrix_structure(self, s):
        dom = interval(-1, 1, 96)
        M = interval_matrix(dom, s).matrix
        assert np.max(np.abs(M - M.T)) == 0.0
        off = M - np.diag(np.diag(M))
        assert np.all(off <= 1e-14)
        assert np.all(np.diag(M) > 0)
        # strict row dominance and positive action on the constant-1 extension
        rowsums = M @ np.ones(M.shape[0])
        assert np.all(rowsums > 0)

    def test_rejects_nonvanishing_boundary(self):
        dom = interval(-1, 1, 32)
        op = interval_matrix(dom, 0.75)
        with pytest.raises(ValueError):
            op.apply(GridFunction(dom, np.ones(32)))

    @pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
    def test_getoor_identity_interior(self, s):
        dom = interval(-1, 1, 512)
        u = getoor_gridfn(dom, s)
        out = fraclap_direct(u, s)
        d = boundary_distance(dom).values
        sel = dom.interior_mask & (d >= 0.1)
        rel = np.abs(out.values[sel] / getoor_constant(1, s) - 1.0)
        assert rel.max() < 1e-2

    def test_fourier_oracle_on_smooth_bump(self):
        # compactly supported bump compared with the periodized transform on
        # a wide box so that image leakage sits below the tolerance
        s, n = 0.75, 1024
        L = 10.0
        dom = interval(-L / 2, L / 2, n + 1)
        x = dom.nodes
        core = np.zeros_like(x)
        inside = np.abs(x) < 0.75
        core[inside] = np.exp(-1.0 / (1.0 - (x[inside] / 0.75) ** 2))
        u = GridFunction(dom, core)
        direct = fraclap_direct(u, s).values
        per = fraclap_periodic(core[:-1], s, length=L)
        win = (np.abs(x) < 0.6)[:-1]
        scale = np.max(np.abs(per))
        err = np.max(np.abs(direct[:-1][win] - per[win])) / scale
        assert err < 1e-3


class TestRadialMatrix:
    @pytest.mark.parametrize("N", [2, 3])
    @pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
    def test_getoor_identity(self, N, s):
        dom = ball(1.0, N, 160)
        u = getoor_gridfn(dom, s)
        out = fraclap_radial(u, s)
        sel = dom.interior_mask & (dom.nodes <= 0.9)
        rel = np.abs(out.values[sel] / getoor_constant(N, s) - 1.0)
        assert rel.max() < 2e-2

    def test_zero_function(self):
        dom = ball(1.0, 2, 48)
        out = fraclap_radial(GridFunction(dom, np.zeros(48)), 0.75)
        assert np.all(out.values == 0.0)

    def test_n1_ball_matches_interval(self):
        s = 0.75
        domb = ball(1.0, 1, 128)
        domi = interval(-1.0, 1.0, 255)
        u_prof = lambda x: np.clip(1 - x ** 2, 0, None) ** 1.4
        ub = GridFunction(domb, u_prof(domb.nodes))
        ui = GridFunction(domi, u_prof(domi.nodes))
        vb = fraclap_radial(ub, s).values
        vi = fraclap_direct(ui, s).values
        center = 127
        sel = np.arange(0, 100)
        assert np.max(np.abs(vb[sel] - vi[center + sel])) < 1e-10

    @pytest.mark.parametrize("N,s", [(2, 0.75), (3, 0.9)])
    def test_reduction_path_agreement(self, N, s):
        dom = ball(1.0, N, 256)
        r = dom.nodes
        u = GridFunction(dom, np.exp(-1.0 / np.clip(1 - r ** 2, 1e-300, None))
                         * (r < 1))
        v1 = fraclap_radial(u, s).values
        targets = r[1:-1][(r[1:-1] > 0.05) & (r[1:-1] < 0.95)]
        v2 = fraclap_radial_reduction(u, s, targets=targets)
        idx = np.round(targets / dom.h).astype(int)
        rel = np.max(np.abs(v1[idx] - v2)) / np.max(np.abs(v2))
        assert rel < 1e-3

    def test_power_identity_on_mid_radius_nodes(self):
        from frackpz.diagnostics import power_identity_probe
        rep = power_identity_probe(2, 0.75, 0.25, R=8.0, h=0.04)
        assert rep.spread < 1e-2
        assert rep.max_rel_error < 1e-2


class TestDrift:
    def test_zero_drift_reduces_to_fraclap(self):
        dom = interval(-1, 1, 64)
        u = getoor_gridfn(dom, 0.75)
        B = GridFunction(dom, np.zeros(64))
        a = drift_apply(u, B, 0.75).values
        b = fraclap_direct(u, 0.75).values
        assert np.max(np.abs(a - b)) == 0.0

    def test_zero_function(self):
        dom = interval(-1, 1, 64)
        B = GridFunction(dom, np.ones(64))
        out = drift_apply(GridFunction(dom, np.zeros(64)), B, 0.75)
        assert np.all(out.values == 0.0)
