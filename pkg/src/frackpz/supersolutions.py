"""Explicit radial supersolutions and pointwise verification of the inequality.

Two families: the radial bump C (1 - |x/R'|^alpha)_+ with 1 < alpha < 2s
(valid for N > 2s; the bump is a supersolution on the inner ball of radius
r0 R', so the bump grid is enlarged until that region covers the domain), and
the power profile A |x - x0|^{-alpha} with alpha = (2s-q)/(q-1) shifted to a
center x0 outside the closed domain. The power family has an exact residual:
the admissibility identity collapses it to a single power of the distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainSpec, GridFunction, ball, finite_gradient
from .operators.angular import (
    bump_F_profile as _bump_F_sigma,
    power_eigenvalue_formula,
)
from .operators.fraclap import FracLapMatrix, build_matrix
from .sources import SourceSpec


def power_alpha(s: float, q: float) -> float:
    """alpha = (2s - q)/(q - 1), the only exponent making both sides scale alike."""
    if not 1.0 < q < 2 * s:
        raise ValueError("power supersolution requires 1 < q < 2s")
    return (2 * s - q) / (q - 1.0)


def power_eigenvalue(N: int, s: float, alpha: float) -> float:
    """C_{N,s}(alpha) with (-Delta)^s |x|^{-alpha} = C |x|^{-alpha-2s}.

    Closed Gamma-quotient form; power_eigenvalue_quadrature and the grid
    operator provide the independent cross-checks.
    """
    return power_eigenvalue_formula(N, s, alpha)


def critical_window_check(N: int, s: float, q: float) -> None:
    p_star = N / (N - 2 * s + 1)
    if not p_star < q < 2 * s:
        raise ValueError("power family requires p_* < q < 2s")


def power_amplitude_max(N: int, s: float, q: float) -> float:
    """Largest amplitude A with alpha^q A^{q-1} <= C_{N,s}(alpha)."""
    critical_window_check(N, s, q)
    alpha = power_alpha(s, q)
    return (power_eigenvalue(N, s, alpha) / alpha ** q) ** (1.0 / (q - 1.0))


def bump_thresholds(N: int, s: float, alpha: float) -> tuple[float, float]:
    """(sigma0, r0) of the bump construction; requires N > 2s."""
    if not 1.0 < alpha < 2 * s:
        raise ValueError("bump exponent must lie in (1, 2s)")
    if N <= 2 * s:
        raise ValueError("bump construction needs N > 2s (N = 1 is excluded)")
    sigma0 = ((N + alpha - 2 * s) / (N - 2 * s)) ** (1.0 / alpha)
    r0 = ((N + alpha - 2 * s) /
          (N + alpha - 2 * s + sigma0 ** (2 * s - N))) ** (1.0 / alpha)
    return sigma0, r0


def bump_F_profile(N: int, s: float, alpha: float,
                   r: np.ndarray) -> dict:
    """F(r) with (-Delta)^s (1-|x|^alpha)_+ = r^{alpha-2s} F(r), plus checks.

    Returns the values, the minimum over the grid and a decreasing flag
    (finite-difference slope negative at all nodes).
    """
    r = np.asarray(r, dtype=float)
    vals = _bump_F_sigma(N, s, alpha, r)
    slopes = np.diff(vals) / np.diff(r)
    return {
        "r": r,
        "F": vals,
        "min": float(vals.min()),
        "decreasing": bool(np.all(slopes < 0)),
    }


@dataclass(frozen=True)
class RadialBumpSpec:
    N: int
    s: float
    alpha: float
    amplitude: float
    sigma0: float
    r0: float

    @classmethod
    def make(cls, N, s, alpha, amplitude=1.0):
        sigma0, r0 = bump_thresholds(N, s, alpha)
        return cls(N=N, s=s, alpha=alpha, amplitude=amplitude,
                   sigma0=sigma0, r0=r0)


@dataclass(frozen=True)
class PowerSupersolSpec:
    N: int
    s: float
    q: float
    alpha: float
    amplitude: float
    eigenvalue: float
    shift: float  # |x0|, center offset; must exceed the domain radius

    @classmethod
    def make(cls, N, s, q, amplitude=None, shift=2.0):
        alpha = power_alpha(s, q)
        if not alpha < N - 2 * s:
            raise ValueError("alpha = (2s-q)/(q-1) must stay below N - 2s")
        C = power_eigenvalue(N, s, alpha)
        a_max = (C / alpha ** q) ** (1.0 / (q - 1.0))
        if amplitude is None:
            amplitude = a_max / 2.0
        return cls(N=N, s=s, q=q, alpha=alpha, amplitude=amplitude,
                   eigenvalue=C, shift=shift)

    @property
    def admissible(self) -> bool:
        return self.alpha ** self.q * self.amplitude ** (self.q - 1.0) \
            <= self.eigenvalue * (1.0 + 1e-12)


@dataclass
class SupersolutionReport:
    residual: GridFunction
    verdict: str                 # "SUPERSOLUTION" | "FAIL"
    tol: float
    checked: np.ndarray          # mask of nodes entering the verdict
    excluded_min: float          # worst residual on excluded (collar) nodes
    worst_node: int
    worst_value: float


def verify_supersolution(w: GridFunction, s: float, q: float, lam: float,
                         f: GridFunction, region: np.ndarray | None = None,
                         op: FracLapMatrix | None = None,
                         collar_cells: int = 2) -> SupersolutionReport:
    """Residual (-Delta)^s w - |grad w|^q - lam f and the nodewise verdict.

    The verdict covers interior nodes (intersected with `region` if given)
    excluding a collar of `collar_cells` grid cells around the support
    boundary, where the kink of compactly supported profiles pollutes the
    quadrature; the worst excluded residual is reported separately. The
    tolerance is relative to the operator magnitude.
    """
    dom = w.domain
    if op is None:
        op = build_matrix(dom, s)
    lap = op.apply(w)
    grad = finite_gradient(w)
    res = lap.values - grad.values ** q - lam * f.values
    residual = GridFunction(dom, res)
    tol = 1e-6 * float(np.max(np.abs(lap.values)))
    # support boundary: outermost node where w > 0
    pos = np.where(w.values > 0)[0]
    mask = dom.interior_mask.copy()
    if pos.size:
        edge = pos.max()
        mask &= np.arange(dom.grid_n) < max(edge - collar_cells + 1, 0)
        if dom.kind == "interval":
            lo_edge = pos.min()
            mask &= np.arange(dom.grid_n) > lo_edge + collar_cells - 1
    if region is not None:
        mask &= region
    checked = res[mask]
    excluded = res[dom.interior_mask & ~mask]
    ok = bool(checked.size) and bool(np.all(checked >= -tol))
    worst_local = int(np.argmin(checked)) if checked.size else -1
    worst_node = int(np.where(mask)[0][worst_local]) if checked.size else -1
    return SupersolutionReport(
        residual=residual,
        verdict="SUPERSOLUTION" if ok else "FAIL",
        tol=tol,
        checked=mask,
        excluded_min=float(excluded.min()) if excluded.size else math.inf,
        worst_node=worst_node,
        worst_value=float(checked.min()) if checked.size else -math.inf,
    )


def power_residual_scan(spec: PowerSupersolSpec, domain: DomainSpec,
                        f: GridFunction, lam: float) -> SupersolutionReport:
    """Exact residual of the shifted power supersolution on a ball domain.

    With alpha = (2s-q)/(q-1) both terms carry the same power of
    d0 = |x - x0|, so the residual is [C A - (A alpha)^q] d0^{-(alpha+2s)}
    - lam f, scanned at the worst d0 over each sphere |x| = r.
    """
    if domain.kind != "ball":
        raise ValueError("power supersolution scan expects a ball domain")
    if spec.shift <= domain.radius:
        raise ValueError("shift x0 must lie outside the closed domain")
    r = domain.nodes
    d0_max = spec.shift + r                      # worst case over the sphere
    bracket = spec.eigenvalue * spec.amplitude \
        - (spec.amplitude * spec.alpha) ** spec.q
    res = bracket * d0_max ** (-(spec.alpha + 2 * spec.s)) - lam * f.values
    residual = GridFunction(domain, res)
    mask = domain.interior_mask.copy()
    checked = res[mask]
    ok = bool(np.all(checked >= -1e-14 * max(abs(bracket), 1.0)))
    worst_local = int(np.argmin(checked))
    return SupersolutionReport(
        residual=residual,
        verdict="SUPERSOLUTION" if ok else "FAIL",
        tol=1e-14 * max(abs(bracket), 1.0),
        checked=mask,
        excluded_min=math.inf,
        worst_node=int(np.where(mask)[0][worst_local]),
        worst_value=float(checked.min()),
    )


def power_lambda_admissible(spec: PowerSupersolSpec, domain: DomainSpec,
                            f: GridFunction) -> float:
    """Largest lambda keeping the exact power residual nonnegative on the grid."""
    r = domain.nodes
    d0_max = spec.shift + r
    bracket = spec.eigenvalue * spec.amplitude \
        - (spec.amplitude * spec.alpha) ** spec.q
    if bracket <= 0:
        return 0.0
    envelope = bracket * d0_max ** (-(spec.alpha + 2 * spec.s))
    mask = domain.interior_mask & (f.values > 0)
    if not mask.any():
        return math.inf
    return float(np.min(envelope[mask] / f.values[mask]))


def bump_grid(domain: DomainSpec, spec: RadialBumpSpec,
              margin: float = 0.9) -> GridFunction:
    """The bump C (1 - (r/R')^alpha)_+ on an enlarged grid.

    R' is chosen so the domain sits inside margin * r0 * R': the positivity
    of (-Delta)^s of the bump holds for r < r0 R' and degrades to zero at
    that radius, so the verification region keeps a safety margin from it.
    Both grids share the spacing h.
    """
    if domain.kind != "ball":
        raise ValueError("bump supersolution lives on ball domains")
    h = domain.h
    n_big = int(math.ceil(domain.radius / (margin * spec.r0) / h)) + 1
    big = ball(radius=(n_big - 1) * h, dim=domain.dim, grid_n=n_big)
    rr = big.nodes / big.radius
    vals = spec.amplitude * np.clip(1.0 - rr ** spec.alpha, 0.0, None)
    return GridFunction(big, vals)


def bump_operator_values(domain: DomainSpec, spec: RadialBumpSpec,
                         margin: float = 0.9):
    """Semi-analytic (-Delta)^s of the bump at the grid nodes inside domain.

    The bump profile r^alpha is kinked at the origin and only Hoelder at its
    support edge, so the grid quadrature is unreliable exactly where the
    inequality is needed; the sigma-form F(r) quadrature gives the operator
    of the exact family to quadrature precision instead. Returns (w on the
    enlarged grid, operator values on the domain's nodes, |grad w| there).
    """
    w = bump_grid(domain, spec, margin=margin)
    Rp = w.domain.radius
    r = domain.nodes
    rho = np.clip(r / Rp, 1e-8, None)
    F = _bump_F_sigma(domain.dim, spec.s, spec.alpha, rho)
    lap = spec.amplitude * Rp ** (-2 * spec.s) * rho ** (spec.alpha - 2 * spec.s) * F
    grad = spec.amplitude * spec.alpha / Rp * rho ** (spec.alpha - 1.0)
    return w, lap, grad


def bump_lambda_admissible(domain: DomainSpec, s: float, q: float,
                           source: SourceSpec, alpha: float | None = None,
                           amplitudes=None, lam_hi: float = 1e3,
                           tol: float = 1e-3) -> tuple[float, GridFunction]:
    """Bisect the largest lambda for which some bump verifies as supersolution.

    Scans a small amplitude grid (the paper leaves both the height and lambda
    unquantified); the residual uses the semi-analytic operator of the family.
    Returns (lambda_admissible, best bump grid function).
    """
    N = domain.dim
    if alpha is None:
        alpha = 0.5 * (1.0 + 2 * s)   # mid-range bump exponent
    if amplitudes is None:
        amplitudes = np.logspace(-1.5, 1.5, 13)
    spec1 = RadialBumpSpec.make(N, s, alpha, amplitude=1.0)
    w1, lap1, grad1 = bump_operator_values(domain, spec1)
    mask = domain.interior_mask
    lap1, grad1 = lap1[mask], grad1[mask]
    fvals = source.on_grid(domain).values[mask]

    best = (0.0, None)
    for amp in amplitudes:
        lap = amp * lap1
        gq = (amp * grad1) ** q

        def holds(lam):
            return bool(np.all(lap - gq - lam * fvals >= 0.0))

        if not holds(0.0):
            continue
        lo, hi = 0.0, lam_hi
        if holds(hi):
            lo = hi
        else:
            while hi - lo > tol * max(hi, 1.0):
                mid = 0.5 * (lo + hi)
                if holds(mid):
                    lo = mid
                else:
                    hi = mid
        if lo > best[0]:
            best = (lo, GridFunction(w1.domain, amp * w1.values))
    return best
