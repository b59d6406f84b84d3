"""Discrete fractional Laplacian: Fourier reference, interval and radial grids.

The singular integral is discretized by weighted-trapezoid product
integration: the paired difference 2u(x) - u(x+t) - u(x-t) divided by t^2 is
piecewise-linear interpolated and integrated exactly against the weight
t^{1-2s} (hat weights in closed form). The singular cell reduces to a
second-difference term with weight h^{2-2s}/((2-2s)(3-2s)); the zero exterior
contributes an exact tail. Radial grids carry the angular factor lam(sigma)
of the shell reduction; rows near the origin, where the paired range is only
a few cells wide, are rebuilt with a fine sub-grid and even-polynomial
interpolation of u.

Matrices act on interior node values and are dense; this is the desk-scale
path (grid_n up to ~4096 interval / ~1024 radial).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..core import DomainSpec, GridFunction, from_interior, sphere_area
from .angular import lam_factory, pv_constant

_GAUSS8 = leggauss(8)
_GAUSS32 = leggauss(32)


def fraclap_periodic(values: np.ndarray, s: float, length: float = 2 * np.pi) -> np.ndarray:
    """Fourier-symbol reference: F^{-1}(|xi|^{2s} F u) on a uniform periodic grid."""
    values = np.asarray(values, dtype=float)
    n = values.size
    xi = 2 * np.pi * np.fft.rfftfreq(n, d=length / n)
    return np.fft.irfft(np.fft.rfft(values) * np.abs(xi) ** (2 * s), n=n)


def hat_weights(J: int, h: float, s: float) -> np.ndarray:
    """W_j = int_0^{Jh} hat_j(t) t^{1-2s} dt, j = 0..J (end hats one-sided)."""
    b = 2.0 - 2.0 * s
    t = np.arange(J + 1) * h
    A = t ** b / b
    B = t ** (b + 1) / (b + 1)
    P = (B[1:] - B[:-1] - t[:-1] * (A[1:] - A[:-1])) / h   # up-slope, to node j+1
    Q = (t[1:] * (A[1:] - A[:-1]) - (B[1:] - B[:-1])) / h  # down-slope, to node j
    W = np.zeros(J + 1)
    W[:-1] += Q
    W[1:] += P
    return W


@dataclass
class FracLapMatrix:
    """Dense discrete (-Delta)^s acting on interior node values."""

    domain: DomainSpec
    s: float
    matrix: np.ndarray

    def apply(self, u: GridFunction) -> GridFunction:
        if u.domain != self.domain:
            raise ValueError("grid function lives on a different grid")
        if not u.vanishes_at_boundary():
            raise ValueError("fractional Laplacian requires zero boundary/exterior data")
        return from_interior(self.domain, self.matrix @ u.interior_values)

    @property
    def n_interior(self) -> int:
        return self.matrix.shape[0]


def interval_matrix(domain: DomainSpec, s: float) -> FracLapMatrix:
    """Assemble the interval-grid matrix (interior nodes 1..n-2)."""
    if domain.kind != "interval":
        raise ValueError("interval_matrix needs an interval domain")
    n, h = domain.grid_n, domain.h
    c = pv_constant(1, s)
    nint = n - 2
    M = np.zeros((nint, nint))
    for ii in range(1, n - 1):
        i = ii - 1
        J = max(ii, n - 1 - ii)
        W = hat_weights(J, h, s)
        j = np.arange(1, J + 1)
        w = W[1:] / (j * h) ** 2
        row = np.zeros(n)
        row[ii] += 2.0 * np.sum(w) + 2.0 * W[0] / h ** 2
        np.subtract.at(row, np.clip(ii + j, 0, n - 1), np.where(ii + j <= n - 1, w, 0.0))
        np.subtract.at(row, np.clip(ii - j, 0, n - 1), np.where(ii - j >= 0, w, 0.0))
        for kk in (ii + 1, ii - 1):
            row[kk] -= W[0] / h ** 2
        M[i] = c * row[1:-1]
        M[i, i] += c * 2.0 * (J * h) ** (-2 * s) / (2 * s)
    return FracLapMatrix(domain, s, M)


def _radial_fine_row(i, n, h, s, lam, row):
    """Paired part for near-origin rows via a fine sub-grid.

    u is represented on [0, Kh] by piecewise-linear interpolation in w = rho^2
    (local, positive weights; exact in the even leading order of smooth radial
    profiles); F(t) is sampled on a sub-grid of the paired range (0, r] and
    integrated against t^{1-2s} hat weights. Positivity of the interpolation
    keeps the assembled rows within the discrete maximum principle.
    """
    r = i * h
    K = min(max(2 * i + 2, 6), n - 2)
    Msub = 64
    hs = r / Msub
    tm = np.arange(Msub + 1) * hs
    Wf = hat_weights(Msub, hs, s)
    nodes_w = (np.arange(K + 1) * h) ** 2

    def hat_coeffs(rho):
        # P1 hats in the squared coordinate: two entries per point
        wq = rho ** 2
        Lc = np.zeros((rho.size, K + 1))
        kk = np.clip(np.searchsorted(nodes_w, wq, side="right") - 1, 0, K - 1)
        wl = nodes_w[kk]
        wr = nodes_w[kk + 1]
        frac = np.clip((wq - wl) / (wr - wl), 0.0, 1.0)
        rows = np.arange(rho.size)
        Lc[rows, kk] = 1.0 - frac
        Lc[rows, kk + 1] = frac
        return Lc

    rp, rm = r + tm, r - tm
    lp, lm = lam(rp / r), lam(rm / r)
    Lp, Lm = hat_coeffs(rp), hat_coeffs(rm)
    t2 = tm.copy()
    t2[0] = 1.0
    coef = np.zeros((Msub + 1, row.size))
    coef[:, i] += lp + lm
    for kk in range(K + 1):
        coef[:, kk] -= lp * Lp[:, kk] + lm * Lm[:, kk]
    coef /= t2[:, None] ** 2
    coef[0] = 2 * coef[1] - coef[2]
    row += Wf @ coef


def _radial_paired_row(i, n, h, s, lam, row):
    """Paired part t in (0, r_i] on the grid nodes (rows away from the origin)."""
    j = np.arange(1, i + 1)
    lp = lam((i + j) / i)
    lm = lam((i - j) / i)
    W = hat_weights(i, h, s)
    w = W[1:] / (j * h) ** 2
    row[i] += np.sum(w * (lp + lm))
    idxp = i + j
    inside = idxp <= n - 1
    np.subtract.at(row, idxp[inside], w[inside] * lp[inside])
    np.subtract.at(row, i - j, w * lm)
    # psi(0) by linear extrapolation from the first two paired nodes
    w0 = W[0]
    pairs = ((1, 2.0), (2, -1.0)) if i >= 2 else ((1, 1.0),)
    for jj, coeff in pairs:
        lpj = float(lam((i + jj) / i)[0])
        lmj = float(lam((i - jj) / i)[0])
        ww = coeff * w0 / (jj * h) ** 2
        row[i] += ww * (lpj + lmj)
        if i + jj <= n - 1:
            row[i + jj] -= ww * lpj
        row[i - jj] -= ww * lmj


def _radial_outer_row(i, n, h, s, lam, row):
    """Unpaired part rho in [2 r_i, R]: per-cell Gauss with quadratic u-stencils."""
    r = i * h
    gx, gw = _GAUSS8
    for k in range(2 * i, n - 1):
        a, b = k * h, (k + 1) * h
        xg = 0.5 * (a + b) + 0.5 * (b - a) * gx
        wg = 0.5 * (b - a) * gw
        ker = lam(xg / r) * (xg - r) ** (-1.0 - 2 * s) * wg
        k0 = k if k + 2 <= n - 1 else n - 3
        xs = np.array([k0, k0 + 1, k0 + 2]) * h
        L0 = (xg - xs[1]) * (xg - xs[2]) / ((xs[0] - xs[1]) * (xs[0] - xs[2]))
        L1 = (xg - xs[0]) * (xg - xs[2]) / ((xs[1] - xs[0]) * (xs[1] - xs[2]))
        L2 = (xg - xs[0]) * (xg - xs[1]) / ((xs[2] - xs[0]) * (xs[2] - xs[1]))
        row[i] += ker.sum()
        row[k0] -= ker @ L0
        row[k0 + 1] -= ker @ L1
        row[k0 + 2] -= ker @ L2


def _radial_tail(i, n, h, R, s, lam) -> float:
    """Zero-exterior tail int_{max(2r,R)}^inf lam(rho/r) (rho-r)^{-1-2s} drho."""
    r = i * h
    rhoT = max(2 * r, R)
    gx, gw = _GAUSS32
    tau = 0.5 + 0.5 * gx
    wt = 0.5 * gw
    rho = r + (rhoT - r) / (1.0 - tau)
    ker = lam(rho / r) * (rhoT - r) ** (-2 * s) * (1.0 - tau) ** (2 * s - 1)
    return float(ker @ wt)


def radial_matrix(domain: DomainSpec, s: float, fine_rows: int = 8) -> FracLapMatrix:
    """Assemble the radial-grid matrix (interior nodes 0..n-2, origin included)."""
    if domain.kind != "ball":
        raise ValueError("radial_matrix needs a ball domain")
    N = domain.dim
    if N == 1:
        return _radial_matrix_from_interval(domain, s)
    n, h, R = domain.grid_n, domain.h, domain.radius
    c = pv_constant(N, s)
    lam = lam_factory(N, s)
    ni = n - 1
    M = np.zeros((ni, ni))
    # origin row: angular factor is exactly |S^{N-1}|
    J = n - 1
    W = hat_weights(J, h, s)
    row = np.zeros(ni)
    j = np.arange(1, J + 1)
    w = W[1:] / (j * h) ** 2
    row[0] += np.sum(w) + W[0] / h ** 2
    np.subtract.at(row, j[j <= n - 2], w[j <= n - 2])
    row[1] -= W[0] / h ** 2
    row[0] += (J * h) ** (-2 * s) / (2 * s)
    M[0] = c * sphere_area(N) * row
    for i in range(1, ni):
        row = np.zeros(n)
        if i < fine_rows:
            _radial_fine_row(i, n, h, s, lam, row)
        else:
            _radial_paired_row(i, n, h, s, lam, row)
        _radial_outer_row(i, n, h, s, lam, row)
        row[i] += _radial_tail(i, n, h, R, s, lam)
        M[i] = c * row[:ni]
    return FracLapMatrix(domain, s, M)


def _radial_matrix_from_interval(domain: DomainSpec, s: float) -> FracLapMatrix:
    """N = 1 ball: fold the interval matrix on (-R, R) onto radial nodes."""
    n = domain.grid_n
    full = DomainSpec(kind="interval", grid_n=2 * n - 1,
                      a=-domain.radius, b=domain.radius)
    Mi = interval_matrix(full, s).matrix        # interior nodes -R+h .. R-h
    nint = 2 * n - 3
    center = n - 2                               # index of x = 0 in the interior
    ni = n - 1
    M = np.zeros((ni, ni))
    for i in range(ni):
        rrow = Mi[center + i]
        folded = np.zeros(ni)
        folded[0] = rrow[center]
        for j in range(1, ni):
            folded[j] = rrow[center + j] + rrow[center - j]
        M[i] = folded
    return FracLapMatrix(domain, s, M)


def build_matrix(domain: DomainSpec, s: float) -> FracLapMatrix:
    if domain.kind == "interval":
        return interval_matrix(domain, s)
    return radial_matrix(domain, s)


def fraclap_direct(u: GridFunction, s: float,
                   op: FracLapMatrix | None = None) -> GridFunction:
    """Apply the discrete operator on an interval grid (zero exterior)."""
    if u.domain.kind != "interval":
        raise ValueError("fraclap_direct is the interval path; use fraclap_radial")
    if op is None:
        op = interval_matrix(u.domain, s)
    return op.apply(u)


def fraclap_radial(u: GridFunction, s: float,
                   op: FracLapMatrix | None = None) -> GridFunction:
    """Apply the discrete operator on a radial ball grid (zero exterior)."""
    if u.domain.kind != "ball":
        raise ValueError("fraclap_radial needs a ball domain")
    if op is None:
        op = radial_matrix(u.domain, s)
    return op.apply(u)


def fraclap_radial_reduction(u: GridFunction, s: float,
                             targets: np.ndarray | None = None) -> np.ndarray:
    """Secondary path: the one-dimensional sigma-form of the radial operator.

    Evaluates r^{-2s} int_1^inf [(U(r)-U(sigma r)) + (U(r)-U(r/sigma))
    sigma^{2s-N}] sigma^{N-1} k(sigma) dsigma per node, with U interpolated by
    a cubic spline of the nodal values (zero outside the ball). Used to
    cross-check the matrix path on smooth profiles.
    """
    from scipy.interpolate import CubicSpline
    dom = u.domain
    if dom.kind != "ball":
        raise ValueError("reduction path needs a ball domain")
    N = dom.dim
    c = pv_constant(N, s)
    lam = lam_factory(N, s)
    r_nodes = dom.nodes
    spl = CubicSpline(r_nodes, u.values, bc_type=((1, 0.0), (1, 0.0)))
    R = dom.radius

    def U(rho):
        rho = np.asarray(rho)
        out = np.zeros_like(rho)
        ins = rho < R
        out[ins] = spl(rho[ins])
        return out

    from .angular import _gauss_panels, lam_limit_at_one
    if targets is None:
        targets = r_nodes[1:-1]
    out = np.empty(targets.size)
    pw = 1.0 / (2.0 - 2 * s)
    lam1 = lam_limit_at_one(N, s)
    delta0 = 1e-4
    for idx, r in enumerate(np.asarray(targets, dtype=float)):
        Ur = float(spl(r))
        dUr = float(spl(r, 1))
        d2Ur = float(spl(r, 2))

        def body(sig):
            g = (Ur - U(sig * r)) + (Ur - U(r / sig)) * sig ** (2 * s - N)
            return g * lam(sig) * (sig - 1.0) ** (-1.0 - 2 * s)

        # (1, 1+delta0]: Taylor form, the spline differences would cancel
        Ctay = lam1 * (dUr * r * (2 * s - N - 1.0) - d2Ur * r ** 2)
        I0 = Ctay * delta0 ** (2.0 - 2 * s) / (2.0 - 2 * s)

        def near(v):
            t = delta0 + v ** pw
            return body(1.0 + t) * pw * v ** (pw - 1.0)

        I1 = _gauss_panels(near, 0.0, 1.0, 24)
        top = max(4.0, 3 * R / r)
        I2 = _gauss_panels(body, 2.0 + delta0, top, 48, grade=1.3)

        def far(tau):
            sig = top / (1.0 - tau)
            return body(sig) * top / (1.0 - tau) ** 2

        I3 = _gauss_panels(far, 0.0, 1.0 - 1e-12, 16)
        out[idx] = c * r ** (-2 * s) * (I0 + I1 + I2 + I3)
    return out


def drift_apply(u: GridFunction, B: GridFunction, s: float,
                op: FracLapMatrix | None = None) -> GridFunction:
    """(-Delta)^s u - <B, grad u> with B the 1-D/radial drift component."""
    from ..core import signed_gradient
    if op is None:
        op = build_matrix(u.domain, s)
    lap = op.apply(u)
    g = signed_gradient(u)
    return GridFunction(u.domain, lap.values - B.values * g.values)


def gradient_matrix(domain: DomainSpec) -> np.ndarray:
    """Signed d/dx on interior nodes (central differences, zero boundary)."""
    n, h = domain.grid_n, domain.h
    mask = domain.interior_mask
    idx = np.where(mask)[0]
    ni = idx.size
    D = np.zeros((ni, ni))
    col = {g: k for k, g in enumerate(idx)}
    for k, g in enumerate(idx):
        if g == 0:           # radial origin: symmetry, derivative zero
            continue
        for gn, sgn in ((g + 1, 1.0), (g - 1, -1.0)):
            if gn in col:
                D[k, col[gn]] += sgn / (2 * h)
    return D


def drift_matrix(domain: DomainSpec, s: float, B: GridFunction,
                 op: FracLapMatrix | None = None) -> np.ndarray:
    """Dense matrix of w -> (-Delta)^s w - <B, grad w> on interior nodes."""
    if op is None:
        op = build_matrix(domain, s)
    D = gradient_matrix(domain)
    b = B.values[domain.interior_mask]
    return op.matrix - b[:, None] * D
