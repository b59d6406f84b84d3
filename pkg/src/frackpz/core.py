"""Grids, grid functions, norms, truncations and the shared exponent algebra.

Everything downstream (operators, solvers, diagnostics) works on uniform
grids: interval grids x_i = a + i*h with both endpoints as explicit boundary
nodes, and radial ball grids r_i = i*h with the origin included as an
interior node and r = R as the boundary node. Functions are implicitly zero
outside the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CRITICAL_TOL = 1e-12

SUBCRITICAL_LOW = "SUBCRITICAL_LOW"
SUBCRITICAL = "SUBCRITICAL"
CRITICAL = "CRITICAL"
SUPERCRITICAL = "SUPERCRITICAL"


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere S^{N-1} (2 for N=1)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


# ---------------------------------------------------------------------------
# domains and grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainSpec:
    """Uniform discretization of an interval (a,b) or a ball of radius R.

    kind is "interval" or "ball". For intervals the nodes are
    a, a+h, ..., b with h = (b-a)/(grid_n-1); the two endpoints are boundary
    nodes. For balls the nodes are radial, 0, h, ..., R with h = R/(grid_n-1);
    only r = R is a boundary node.
    """

    kind: str
    grid_n: int
    a: float = 0.0
    b: float = 0.0
    radius: float = 0.0
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("interval", "ball"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.grid_n < 16:
            raise ValueError("grid_n must be >= 16")
        if self.kind == "interval":
            if not self.a < self.b:
                raise ValueError("interval requires a < b")
            if self.dim != 1:
                raise ValueError("interval domains are one-dimensional")
        else:
            if self.radius <= 0:
                raise ValueError("ball radius must be positive")
            if self.dim < 1:
                raise ValueError("ball dimension must be >= 1")

    @property
    def h(self) -> float:
        if self.kind == "interval":
            return (self.b - self.a) / (self.grid_n - 1)
        return self.radius / (self.grid_n - 1)

    @property
    def nodes(self) -> np.ndarray:
        if self.kind == "interval":
            return self.a + self.h * np.arange(self.grid_n)
        return self.h * np.arange(self.grid_n)

    @property
    def interior_mask(self) -> np.ndarray:
        m = np.ones(self.grid_n, dtype=bool)
        m[-1] = False
        if self.kind == "interval":
            m[0] = False
        return m

    @property
    def n_interior(self) -> int:
        return self.grid_n - (2 if self.kind == "interval" else 1)

    def cell_measures(self) -> np.ndarray:
        """Quadrature measure of the cell around each node.

        Interval: h per node (h/2 at the two endpoints). Ball: exact volume of
        the spherical shell [r-h/2, r+h/2] intersected with the ball.
        """
        n, h = self.grid_n, self.h
        if self.kind == "interval":
            w = np.full(n, h)
            w[0] = w[-1] = h / 2.0
            return w
        N = self.dim
        r = self.nodes
        lo = np.clip(r - h / 2.0, 0.0, None)
        hi = np.minimum(r + h / 2.0, self.radius)
        return sphere_area(N) * (hi**N - lo**N) / N

    def measure(self) -> float:
        """Total measure |Omega|."""
        if self.kind == "interval":
            return self.b - self.a
        return sphere_area(self.dim) * self.radius**self.dim / self.dim


def interval(a: float, b: float, grid_n: int) -> DomainSpec:
    return DomainSpec(kind="interval", grid_n=grid_n, a=a, b=b)


def ball(radius: float, dim: int, grid_n: int) -> DomainSpec:
    return DomainSpec(kind="ball", grid_n=grid_n, radius=radius, dim=dim)


@dataclass
class GridFunction:
    """Real values on the grid nodes, implicitly zero outside the domain."""

    domain: DomainSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.domain.grid_n,):
            raise ValueError("values must have one entry per grid node")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")

    @classmethod
    def from_callable(cls, domain: DomainSpec, f) -> "GridFunction":
        return cls(domain, np.asarray(f(domain.nodes), dtype=float))

    @classmethod
    def zeros(cls, domain: DomainSpec) -> "GridFunction":
        return cls(domain, np.zeros(domain.grid_n))

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.domain.interior_mask]

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.domain, values)

    def vanishes_at_boundary(self, tol: float = 0.0) -> bool:
        bdry = self.values[~self.domain.interior_mask]
        return bool(np.all(np.abs(bdry) <= tol))

    def __add__(self, other):
        return GridFunction(self.domain, self.values + _vals(other))

    def __sub__(self, other):
        return GridFunction(self.domain, self.values - _vals(other))

    def __mul__(self, c):
        return GridFunction(self.domain, self.values * c)

    __rmul__ = __mul__


def _vals(u):
    return u.values if isinstance(u, GridFunction) else u


def from_interior(domain: DomainSpec, interior: np.ndarray) -> GridFunction:
    """Grid function with the given interior values and zero boundary."""
    v = np.zeros(domain.grid_n)
    v[domain.interior_mask] = interior
    return GridFunction(domain, v)


# ---------------------------------------------------------------------------
# problem parameters and exponent algebra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemParams:
    """Dimension, fractional order, gradient power, forcing scale and f-index."""

    N: int
    s: float
    q: float
    lam: float = 0.0
    m: float = math.inf
    domain: DomainSpec | None = None

    def __post_init__(self):
        if self.N < 1 or int(self.N) != self.N:
            raise ValueError("N must be a positive integer")
        if not 0.5 < self.s < 1.0:
            raise ValueError("s must lie in (1/2, 1)")
        if not self.q > 1.0:
            raise ValueError("q must exceed 1")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.domain is not None and self.domain.kind == "ball" \
                and self.domain.dim != self.N:
            raise ValueError("ball dimension must match N")
        if self.domain is not None and self.domain.kind == "interval" and self.N != 1:
            raise ValueError("interval domains require N = 1")


@dataclass(frozen=True)
class ExponentTable:
    p_star: float
    critical_q: float
    regularity_cap: float
    alpha0: float
    regime: str


def regularity_cap(N: int, s: float, m: float) -> float:
    """Gradient integrability cap mN/(N - m(2s-1)); infinite when m(2s-1) >= N."""
    if not math.isfinite(m) or m * (2 * s - 1) >= N:
        return math.inf
    return m * N / (N - m * (2 * s - 1))


def critical_exponents(params: ProblemParams) -> ExponentTable:
    """Threshold exponents and the regime classification of the gradient power."""
    N, s, q, m = params.N, params.s, params.q, params.m
    p_star = N / (N - 2 * s + 1)
    cap = regularity_cap(N, s, m)
    alpha0 = math.inf if not math.isfinite(cap) else N / (N - m * (2 * s - 1))
    if abs(q - 2 * s) <= CRITICAL_TOL:
        regime = CRITICAL
    elif q > 2 * s:
        regime = SUPERCRITICAL
    elif q < p_star:
        regime = SUBCRITICAL_LOW
    else:
        regime = SUBCRITICAL
    return ExponentTable(p_star=p_star, critical_q=2 * s,
                         regularity_cap=cap, alpha0=alpha0, regime=regime)


# ---------------------------------------------------------------------------
# truncations
# ---------------------------------------------------------------------------

def truncate(u: GridFunction, k: float) -> GridFunction:
    """T_k(u): clamp values to [-k, k]."""
    if k <= 0:
        raise ValueError("truncation level k must be positive")
    return u.with_values(np.clip(u.values, -k, k))


def remainder(u: GridFunction, k: float) -> GridFunction:
    """G_k(u) = u - T_k(u)."""
    return u - truncate(u, k)


# ---------------------------------------------------------------------------
# distance, gradient, norms
# ---------------------------------------------------------------------------

def boundary_distance(domain: DomainSpec) -> GridFunction:
    """d(x) = dist(x, boundary), exact for intervals and balls."""
    x = domain.nodes
    if domain.kind == "interval":
        d = np.minimum(x - domain.a, domain.b - x)
    else:
        d = domain.radius - x
    return GridFunction(domain, d)


def finite_gradient(u: GridFunction) -> GridFunction:
    """|grad u| by central differences (one-sided at boundary nodes).

    On radial grids the origin takes gradient zero by symmetry and the result
    is |du/dr|.
    """
    dom = u.domain
    if dom.grid_n < 3:
        raise ValueError("gradient needs at least 3 nodes")
    v, h = u.values, dom.h
    g = np.empty_like(v)
    g[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    g[0] = (v[1] - v[0]) / h
    g[-1] = (v[-1] - v[-2]) / h
    if dom.kind == "ball":
        g[0] = 0.0
    return GridFunction(dom, np.abs(g))


def signed_gradient(u: GridFunction) -> GridFunction:
    """du/dx (or du/dr) with the same stencils as finite_gradient."""
    dom = u.domain
    v, h = u.values, dom.h
    g = np.empty_like(v)
    g[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    g[0] = (v[1] - v[0]) / h
    g[-1] = (v[-1] - v[-2]) / h
    if dom.kind == "ball":
        g[0] = 0.0
    return GridFunction(dom, g)


def lp_norm(u: GridFunction, p: float) -> float:
    """Discrete L^p norm with cell measures; p = inf gives the max norm."""
    if p is math.inf or p == math.inf:
        return float(np.max(np.abs(u.values)))
    if p < 1:
        raise ValueError("p must be >= 1")
    w = u.domain.cell_measures()
    return float(np.sum(np.abs(u.values) ** p * w) ** (1.0 / p))


def weak_lp_norm(u: GridFunction, p: float) -> float:
    """Marcinkiewicz norm sup_t t |{|u| > t}|^{1/p} over discrete thresholds.

    Computed by sorting: exact on step functions.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.abs(u.values)
    w = u.domain.cell_measures()
    order = np.argsort(a)[::-1]
    a_sorted = a[order]
    meas = np.cumsum(w[order])
    vals = a_sorted * meas ** (1.0 / p)
    return float(vals.max(initial=0.0))


def _pair_kernel_parts(domain: DomainSpec, s: float):
    """Pair weights B_ij and exterior masses for the Gagliardo double sum.

    The energy is sum_{i != j} (u_i-u_j)^2 B_ij + 2 sum_i u_i^2 T_i where T_i
    is the kernel mass of the zero exterior seen from node i (boundary nodes
    excluded; their exterior mass diverges and their values vanish in H^s_0).
    """
    x = domain.nodes
    n = domain.grid_n
    if domain.kind == "interval":
        w = domain.cell_measures()
        D = np.abs(x[:, None] - x[None, :])
        np.fill_diagonal(D, 1.0)
        B = D ** (-(1.0 + 2 * s)) * w[:, None] * w[None, :]
        np.fill_diagonal(B, 0.0)
        da = x - domain.a
        db = domain.b - x
        T = np.zeros(n)
        T[1:-1] = w[1:-1] * (da[1:-1] ** (-2 * s) + db[1:-1] ** (-2 * s)) / (2 * s)
        return B, T
    from .operators.angular import lam_factory, exterior_kernel_mass
    N = domain.dim
    lam = lam_factory(N, s)
    r = x
    wrow = domain.cell_measures()
    wline = np.full(n, domain.h)
    wline[0] = wline[-1] = domain.h / 2.0
    D = np.abs(r[:, None] - r[None, :])
    np.fill_diagonal(D, 1.0)
    K = np.zeros((n, n))
    sig = r[None, :] / r[1:, None]
    K[1:, :] = lam(sig.ravel()).reshape(n - 1, n) * D[1:, :] ** (-(1.0 + 2 * s))
    rr = np.where(r > 0, r, 1.0)
    K[0, :] = sphere_area(N) * rr ** (-(1.0 + 2 * s))
    np.fill_diagonal(K, 0.0)
    B = K * wrow[:, None] * wline[None, :]
    T = np.zeros(n)
    R = domain.radius
    for i in range(1, n - 1):
        T[i] = wrow[i] * exterior_kernel_mass(r[i], R, N, s)
    T[0] = wrow[0] * sphere_area(N) * R ** (-2 * s) / (2 * s)
    return B, T


def _strip_correction_weights(domain: DomainSpec, s: float) -> np.ndarray:
    """Per-node weights of the near-diagonal strip the pair sum misses.

    In the smooth limit the pair sum underestimates the energy by
    c(s) |u'(x)|^2 h^{2-2s} per unit measure (excluded |x-y| < h/2 strip plus
    the midpoint deficit of the adjacent cells); c(s) = 2[(3/2)^{2-2s}/(2-2s)-1].
    Applied to the squared finite-difference gradient, this restores
    refinement stability of the seminorm for H^s members.
    """
    h = domain.h
    c = 2.0 * ((1.5) ** (2 - 2 * s) / (2 - 2 * s) - 1.0)
    w = domain.cell_measures().copy()
    if domain.kind == "ball":
        from .operators.angular import lam_limit_at_one
        w *= lam_limit_at_one(domain.dim, s)   # local angular kernel amplitude
        w[0] = 0.0   # at the origin the kernel peak meets a vanishing difference
    return c * h ** (2 - 2 * s) * w


def gagliardo_seminorm(u: GridFunction, s: float) -> float:
    """Discrete H^s Gagliardo seminorm (square root of the double-sum energy).

    Node pairs with the diagonal excluded and adjacent pairs at their
    midpoint-rule value; the zero exterior contributes its closed-form kernel
    mass and the missing near-diagonal strip is restored at leading order
    from the squared discrete gradient. Intended for finiteness/stability
    diagnostics, not accuracy-critical solves.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    B, T = _pair_kernel_parts(u.domain, s)
    v = u.values
    dv = v[:, None] - v[None, :]
    base = float(np.sum(dv * dv * B) + 2 * np.sum(v * v * T))
    g = finite_gradient(u).values
    strip = float(np.sum(_strip_correction_weights(u.domain, s) * g * g))
    return math.sqrt(base + strip)


def gagliardo_form_matrix(domain: DomainSpec, s: float) -> np.ndarray:
    """Matrix A with u^T A u = gagliardo_seminorm(u, s)^2, on all grid nodes."""
    B, T = _pair_kernel_parts(domain, s)
    Bs = B + B.T
    A = np.diag(Bs.sum(axis=1)) - Bs + 2 * np.diag(T)
    # strip correction as a quadratic form of the finite-difference gradient
    n, h = domain.grid_n, domain.h
    D = np.zeros((n, n))
    for i in range(n):
        if i == 0:
            if domain.kind == "interval":
                D[0, 0], D[0, 1] = -1.0 / h, 1.0 / h
        elif i == n - 1:
            D[i, i - 1], D[i, i] = -1.0 / h, 1.0 / h
        else:
            D[i, i - 1], D[i, i + 1] = -0.5 / h, 0.5 / h
    cw = _strip_correction_weights(domain, s)
    A += D.T @ (cw[:, None] * D)
    return A
