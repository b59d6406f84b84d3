"""Riesz potentials I_alpha(g)(x) = int g(y) |x-y|^{alpha-N} dy on grid domains.

Kernels are dense matrices over all grid nodes. On intervals the cell
integrals of |x-y|^{alpha-1} are exact; on radial ball grids the angular
reduction r^{alpha-N} k_alpha(rho/r) is integrated per shell cell by Gauss
panels, with the diagonal cell graded geometrically into the |rho-r|^{alpha-1}
singularity and the sub-cutoff mass added in closed form.

Potentials of compactly supported data are naturally evaluated on an enlarged
grid (the whole-space schemes truncate to a bounding box of three domain
diameters); see potential_domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import betaln

from ..core import DomainSpec, GridFunction, sphere_area
from .angular import riesz_angular_factory

_GAUSS8 = leggauss(8)


def riesz_normalization(N: int, alpha: float) -> float:
    """gamma(N, alpha) with I_alpha = gamma^{-1} int g(y) |x-y|^{alpha-N} dy.

    With this prefactor I_{2s} inverts (-Delta)^s on the whole space, which
    the Picard scheme and the composition diagnostics rely on.
    """
    from scipy.special import gamma as G
    return math.pi ** (N / 2.0) * 2.0 ** alpha * G(alpha / 2.0) \
        / G((N - alpha) / 2.0)


def potential_domain(domain: DomainSpec, factor: float = 3.0) -> DomainSpec:
    """Same spacing, enlarged extent: the truncation box for whole-space potentials."""
    h = domain.h
    if domain.kind == "interval":
        half = factor * (domain.b - domain.a) / 2.0
        c = (domain.a + domain.b) / 2.0
        n_side = int(math.ceil(half / h))
        return DomainSpec(kind="interval", grid_n=2 * n_side + 1,
                          a=c - n_side * h, b=c + n_side * h)
    n_new = int(math.ceil(factor * domain.radius / h)) + 1
    return DomainSpec(kind="ball", grid_n=n_new, radius=(n_new - 1) * h,
                      dim=domain.dim)


def embed(u: GridFunction, big: DomainSpec) -> GridFunction:
    """Zero-extend a grid function onto an enlarged grid with the same spacing."""
    dom = u.domain
    v = np.zeros(big.grid_n)
    if dom.kind == "interval":
        off = int(round((dom.a - big.a) / big.h))
        v[off:off + dom.grid_n] = u.values
    else:
        v[:dom.grid_n] = u.values
    return GridFunction(big, v)


def restrict(u: GridFunction, small: DomainSpec) -> GridFunction:
    dom = u.domain
    if dom.kind == "interval":
        off = int(round((small.a - dom.a) / dom.h))
        return GridFunction(small, u.values[off:off + small.grid_n].copy())
    return GridFunction(small, u.values[:small.grid_n].copy())


@dataclass
class RieszKernel:
    """Dense I_alpha kernel matrix over the grid nodes of its domain."""

    domain: DomainSpec
    alpha: float
    matrix: np.ndarray

    def apply(self, g: GridFunction) -> GridFunction:
        if g.domain != self.domain:
            raise ValueError("grid function lives on a different grid")
        return GridFunction(self.domain, self.matrix @ g.values)


def _interval_kernel(domain: DomainSpec, alpha: float) -> np.ndarray:
    """Hat-function product integration of |x-y|^{alpha-1} (exact integrals)."""
    x = domain.nodes
    h = domain.h
    n = domain.grid_n

    def A(t):   # int |t|^{alpha-1} dt
        return np.sign(t) * np.abs(t) ** alpha / alpha

    def B(t):   # int t |t|^{alpha-1} dt
        return np.abs(t) ** (alpha + 1.0) / (alpha + 1.0)

    # weight of node j at target x for the linear ramp over [y0, y1] rising
    # toward y1: int (y - y0)/h K(x-y) dy, and falling from y0 to y1:
    # int (y1 - y)/h K(x-y) dy; both from the antiderivatives in t = x - y
    def ramp_up(xc, y0, y1):    # weight attributed to node at y1
        t0, t1 = xc - y0, xc - y1
        return ((xc - y0) * (A(t0) - A(t1)) - (B(t0) - B(t1))) / h

    def ramp_dn(xc, y0, y1):    # weight attributed to node at y0
        t0, t1 = xc - y0, xc - y1
        return ((B(t0) - B(t1)) - (xc - y1) * (A(t0) - A(t1))) / h

    X = x[:, None]
    K = np.zeros((n, n))
    # interior hats: cells [x_{j-1}, x_j] (up) and [x_j, x_{j+1}] (down)
    K[:, 1:] += ramp_up(X, x[None, :-1], x[None, 1:])
    K[:, :-1] += ramp_dn(X, x[None, :-1], x[None, 1:])
    return K


def _radial_diagonal_cell(r, h, N, alpha, k_ang, n_panels=8):
    """int over [r-h/2, r+h/2] of rho^{N-1} r^{alpha-N} k(rho/r) drho."""
    gx, gw = _GAUSS8
    total = 0.0
    t_hi = h / 2.0
    edges = t_hi * 4.0 ** (-np.arange(n_panels + 1, dtype=float))
    for lo, hi in zip(edges[1:], edges[:-1]):
        tg = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gx
        wt = 0.5 * (hi - lo) * gw
        for sgn in (1.0, -1.0):
            rho = r + sgn * tg
            vals = rho ** (N - 1) * r ** (alpha - N) * k_ang(rho / r)
            total += float(vals @ wt)
    if alpha < 1.0:
        # sub-cutoff mass of the |rho-r|^{alpha-1} singularity
        t_min = edges[-1]
        mu = float(k_ang(np.array([1.0 + 1e-7]))[0]) * 1e-7 ** (1.0 - alpha)
        total += 2.0 * mu * r ** (N - 1) * r ** (alpha - N) * r ** (1.0 - alpha) \
            * t_min ** alpha / alpha
    return total


def _radial_kernel(domain: DomainSpec, alpha: float) -> np.ndarray:
    N = domain.dim
    n, h, R = domain.grid_n, domain.h, domain.radius
    k_ang = riesz_angular_factory(N, alpha)
    r = domain.nodes
    K = np.zeros((n, n))
    gx, gw = _GAUSS8
    cell_lo = np.clip(r - h / 2.0, 0.0, None)
    cell_hi = np.minimum(r + h / 2.0, R + h / 2.0)
    # origin row: angular factor is |S^{N-1}|, kernel rho^{alpha-1} exact per cell
    K[0, :] = sphere_area(N) * (cell_hi ** alpha - cell_lo ** alpha) / alpha
    for i in range(1, n):
        ri = r[i]
        row = np.empty(n)
        # all cells by per-cell Gauss (vectorized), then fix the near-diagonal
        mid = 0.5 * (cell_lo + cell_hi)[None, :] \
            + 0.5 * (cell_hi - cell_lo)[None, :] * gx[:, None]
        wc = 0.5 * (cell_hi - cell_lo)[None, :] * gw[:, None]
        vals = mid ** (N - 1) * ri ** (alpha - N) * \
            k_ang((mid / ri).ravel()).reshape(mid.shape)
        row[:] = (vals * wc).sum(axis=0)
        # diagonal cell: graded panels into the singularity
        row[i] = _radial_diagonal_cell(ri, h, N, alpha, k_ang)
        # adjacent cells: graded toward the shared edge
        for j in (i - 1, i + 1):
            if 0 <= j < n:
                row[j] = _radial_adjacent_cell(ri, cell_lo[j], cell_hi[j],
                                               N, alpha, k_ang)
        K[i] = row
    return K


def _radial_adjacent_cell(r, lo, hi, N, alpha, k_ang, n_panels=6):
    gx, gw = _GAUSS8
    frac = 2.0 ** (-np.arange(1, n_panels + 1, dtype=float))  # 1/2, ..., 2^-n
    if abs(hi - r) < abs(lo - r):   # singular point beyond hi: pack panels there
        edges = np.concatenate(([lo], hi - (hi - lo) * frac, [hi]))
    else:
        edges = np.concatenate(([lo], lo + (hi - lo) * frac[::-1], [hi]))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        rho = 0.5 * (a + b) + 0.5 * (b - a) * gx
        wt = 0.5 * (b - a) * gw
        vals = rho ** (N - 1) * r ** (alpha - N) * k_ang(rho / r)
        total += float(vals @ wt)
    return total


def riesz_kernel(domain: DomainSpec, alpha: float) -> RieszKernel:
    """Assemble the dense normalized I_alpha kernel on the given grid."""
    if not 0.0 < alpha < domain.dim:
        raise ValueError("alpha must lie in (0, N)")
    if domain.kind == "interval":
        K = _interval_kernel(domain, alpha)
    else:
        K = _radial_kernel(domain, alpha)
    return RieszKernel(domain, alpha, K / riesz_normalization(domain.dim, alpha))


def riesz_apply(g: GridFunction, alpha: float,
                kernel: RieszKernel | None = None) -> GridFunction:
    """I_alpha(g) on g's own grid (sources and targets on the same nodes)."""
    if kernel is None:
        kernel = riesz_kernel(g.domain, alpha)
    return kernel.apply(g)
