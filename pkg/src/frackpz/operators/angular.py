"""Angular reductions and closed-form constants for the radial operators.

A radial kernel |x - y|^{-(N+2s)} integrated over the sphere |y| = rho
reduces to a one-dimensional kernel in (r, rho). With sigma = rho/r the
singular factor |r - rho|^{-1-2s} splits off and the remaining smooth factor

    lam(sigma) = sigma^{N-1} k(sigma) |sigma - 1|^{1+2s},
    k(sigma)   = omega_{N-2} int_0^pi (1 + sigma^2 - 2 sigma cos t)^{-(N+2s)/2}
                 sin^{N-2} t dt,

is elementary for N = 3 and a Gauss hypergeometric function for N = 2 (with a
connection formula near sigma = 1 where the direct series loses digits). The
reflection lam(sigma) = sigma^{N-1} lam(1/sigma) covers sigma < 1. The same
construction with exponent N - alpha gives the Riesz kernels.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import betaln, gamma, hyp2f1

from ..core import sphere_area

_HALF_GAUSS = leggauss(32)


def normalization_constant(N: int, s: float) -> float:
    """The paper's a_{N,s} = 2^(2s-1) pi^(-N/2) Gamma((N+2s)/2) / |Gamma(-s)|.

    Written with |Gamma(-s)| = Gamma(1-s)/s. This prefactor belongs to the
    symmetrized second-difference form of the singular integral; the plain
    principal-value form carries twice this value (see pv_constant).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie strictly in (0, 1): Gamma(-s) pole")
    return 2.0 ** (2 * s - 1) * math.pi ** (-N / 2.0) \
        * gamma((N + 2 * s) / 2.0) * s / gamma(1.0 - s)


def pv_constant(N: int, s: float) -> float:
    """Constant for the P.V. form, consistent with the |xi|^{2s} Fourier symbol."""
    return 2.0 * normalization_constant(N, s)


def getoor_constant(N: int, s: float) -> float:
    """(-Delta)^s (1-|x|^2)_+^s equals this constant inside the unit ball."""
    return 2.0 ** (2 * s) * gamma(1 + s) * gamma((N + 2 * s) / 2.0) / gamma(N / 2.0)


def power_eigenvalue_formula(N: int, s: float, alpha: float) -> float:
    """Gamma-quotient C_{N,s}(alpha) with (-Delta)^s |x|^-alpha = C |x|^-(alpha+2s).

    Valid for 0 < alpha < N - 2s.
    """
    if not 0.0 < alpha < N - 2 * s:
        raise ValueError("alpha must lie in (0, N-2s)")
    return 2.0 ** (2 * s) * gamma((alpha + 2 * s) / 2.0) * gamma((N - alpha) / 2.0) \
        / (gamma(alpha / 2.0) * gamma((N - alpha - 2 * s) / 2.0))


# ---------------------------------------------------------------------------
# lam(sigma) for the fractional-Laplacian kernel (exponent N + 2s)
# ---------------------------------------------------------------------------

def lam_limit_at_one(N: int, s: float) -> float:
    """lam(1) = omega_{N-2} * B((N-1)/2, s + 1/2) / 2 for N >= 2, else 1."""
    if N == 1:
        return 1.0
    return sphere_area(N - 1) * 0.5 * math.exp(betaln((N - 1) / 2.0, s + 0.5))


def lam_factory(N: int, s: float):
    """Vectorized lam(sigma) on [0, inf) for N in {1, 2, 3}.

    N = 1 is the two-point "sphere": lam(sigma) = 1 + ((sigma-1)/(sigma+1))^{1+2s}.
    """
    e = 1.0 + 2 * s
    if N == 1:
        def lam(sig):
            sig = np.atleast_1d(np.asarray(sig, dtype=float))
            return 1.0 + (np.abs(sig - 1.0) / (sig + 1.0)) ** e
        return lam
    if N == 3:
        def lam(sig):
            sig = np.atleast_1d(np.asarray(sig, dtype=float))
            return (2 * np.pi * sig / e) * (1.0 - (np.abs(sig - 1.0) / (sig + 1.0)) ** e)
        return lam
    if N == 2:
        p = 1.0 + s
        A = gamma(-e) / gamma(-s) ** 2
        B = gamma(e) / gamma(1 + s) ** 2

        def _above(sig):
            # sigma >= 1; connection formula below 1.15, direct series beyond
            out = np.empty_like(sig)
            near = sig < 1.15
            sn = sig[near]
            if sn.size:
                w = 1.0 - sn ** (-2.0)
                out[near] = 2 * np.pi * (
                    (sn - 1.0) ** e * sn ** (-e) * A * hyp2f1(p, p, 2 + 2 * s, w)
                    + sn ** e * (sn + 1.0) ** (-e) * B * hyp2f1(-s, -s, -2 * s, w))
            sf = sig[~near]
            if sf.size:
                out[~near] = 2 * np.pi * sf ** (1 - 2 * p) * (sf - 1.0) ** e \
                    * hyp2f1(p, p, 1.0, sf ** (-2.0))
            return out

        def lam(sig):
            sig = np.atleast_1d(np.asarray(sig, dtype=float))
            out = np.zeros_like(sig)
            lo = (sig > 0.0) & (sig < 1.0)
            if lo.any():
                out[lo] = sig[lo] * _above(1.0 / sig[lo])
            hi = sig >= 1.0
            if hi.any():
                out[hi] = _above(sig[hi])
            return out
        return lam
    raise ValueError("radial reduction implemented for N in {1, 2, 3}")


def exterior_kernel_mass(r: float, R: float, N: int, s: float) -> float:
    """int_R^inf lam(rho/r) (rho - r)^{-1-2s} drho for 0 < r < R.

    Mapped 32-point Gauss rule on rho = r + (R-r)/(1-tau).
    """
    lam = lam_factory(N, s)
    gx, gw = _HALF_GAUSS
    tau = 0.5 + 0.5 * gx
    wt = 0.5 * gw
    rho = r + (R - r) / (1.0 - tau)
    ker = lam(rho / r) * (R - r) ** (-2 * s) * (1.0 - tau) ** (2 * s - 1)
    return float(np.sum(ker * wt))


# ---------------------------------------------------------------------------
# Riesz kernels (exponent N - alpha)
# ---------------------------------------------------------------------------

def riesz_angular_factory(N: int, alpha: float):
    """Angular factor of the Riesz kernel |x-y|^{alpha-N} on radial shells.

    Returns vectorized k_alpha(sigma) = omega_{N-2} int_0^pi
    (1 + sigma^2 - 2 sigma cos t)^{(alpha-N)/2} sin^{N-2} t dt, so that
    int_{S^{N-1}} |r e1 - rho w|^{alpha-N} dw = r^{alpha-N} k_alpha(rho/r).
    Behaves like |sigma-1|^{alpha-1} at sigma = 1 (singular iff alpha < 1).
    """
    if not 0.0 < alpha < N:
        raise ValueError("alpha must lie in (0, N)")
    p = (N - alpha) / 2.0
    if N == 1:
        def k(sig):
            sig = np.atleast_1d(np.asarray(sig, dtype=float))
            return np.abs(sig - 1.0) ** (alpha - 1.0) + (sig + 1.0) ** (alpha - 1.0)
        return k
    if N == 3:
        if abs(alpha - 1.0) < 1e-12:
            def k(sig):
                sig = np.atleast_1d(np.asarray(sig, dtype=float))
                sguard = np.where(sig == 0.0, 1.0, sig)
                out = (2 * np.pi / sguard) * np.log((sig + 1.0) / np.abs(sig - 1.0))
                return np.where(sig == 0.0, 4 * np.pi, out)
            return k

        def k(sig):
            sig = np.atleast_1d(np.asarray(sig, dtype=float))
            sguard = np.where(sig == 0.0, 1.0, sig)
            out = (2 * np.pi / (sguard * (alpha - 1.0))) * (
                (sig + 1.0) ** (alpha - 1.0) - np.abs(sig - 1.0) ** (alpha - 1.0))
            return np.where(sig == 0.0, 4 * np.pi, out)
        return k
    if N == 2:
        if abs(alpha - 1.0) < 1e-12:
            raise ValueError("alpha = 1 (logarithmic case) not supported for N = 2")
        # connection formula for 2F1(p,p;1;z) at z -> 1, c-a-b = 1-2p = alpha-1
        ca = alpha - 1.0
        Acf = gamma(ca) / gamma(1.0 - p) ** 2
        Bcf = gamma(-ca) / gamma(p) ** 2

        def _above(sig):
            out = np.empty_like(sig)
            near = sig < 1.15
            sn = sig[near]
            if sn.size:
                w = 1.0 - sn ** (-2.0)
                F1 = hyp2f1(p, p, 2 * p, w)
                F2 = hyp2f1(1.0 - p, 1.0 - p, 1.0 + ca, w)
                out[near] = 2 * np.pi * sn ** (-2 * p) * (Acf * F1 + Bcf * w ** ca * F2)
            sf = sig[~near]
            if sf.size:
                out[~near] = 2 * np.pi * sf ** (-2 * p) * hyp2f1(p, p, 1.0, sf ** (-2.0))
            return out

        def k(sig):
            sig = np.atleast_1d(np.asarray(sig, dtype=float))
            out = np.full_like(sig, 2 * np.pi)  # value at sigma = 0
            lo = (sig > 0.0) & (sig < 1.0)
            if lo.any():
                # k(sigma) = sigma^{alpha-N} k(1/sigma)
                out[lo] = sig[lo] ** (alpha - 2.0) * _above(1.0 / sig[lo])
            hi = sig >= 1.0
            if hi.any():
                out[hi] = _above(sig[hi])
            return out
        return k
    raise ValueError("Riesz reduction implemented for N in {1, 2, 3}")


# ---------------------------------------------------------------------------
# sigma-form evaluations: H(sigma), power eigenvalue by quadrature, F(r)
# ---------------------------------------------------------------------------

def H_profile(N: int, s: float):
    """The radial-reduction weight H(sigma) on (1, inf).

    H(sigma) = c_pv * sigma^{N-2} (sigma^2-1)^{1+2s} k(sigma)
             = c_pv * (sigma+1)^{1+2s} lam(sigma) / sigma,
    continuous and positive with H ~ |S^{N-1}| c_pv sigma^{2s} at infinity.
    """
    lam = lam_factory(N, s)
    c = pv_constant(N, s)
    e = 1.0 + 2 * s

    def H(sig):
        sig = np.atleast_1d(np.asarray(sig, dtype=float))
        return c * (sig + 1.0) ** e * lam(sig) / sig
    return H


def _gauss_panels(fn, a: float, b: float, n_panels: int, order: int = 16,
                  grade: float = 1.0) -> float:
    """Composite Gauss on [a,b]; grade > 1 packs panels toward a."""
    gx, gw = leggauss(order)
    edges = a + (b - a) * (np.linspace(0, 1, n_panels + 1) ** grade)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        xm = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gx
        total += 0.5 * (hi - lo) * float(np.sum(fn(xm) * gw))
    return total


def power_eigenvalue_quadrature(N: int, s: float, alpha: float) -> float:
    """C_{N,s}(alpha) from the sigma-form of the defining integral.

    (-Delta)^s r^{-alpha} = c_pv r^{-alpha-2s}
        int_1^inf [(1 - sigma^{-alpha}) + (1 - sigma^alpha) sigma^{2s-N}]
                  lam(sigma) (sigma-1)^{-1-2s} dsigma.
    The integrand behaves like (sigma-1)^{1-2s} at 1 and sigma^{-1-2s} at
    infinity; integrated with graded panels plus a mapped tail.
    """
    if not 0.0 < alpha < N - 2 * s:
        raise ValueError("alpha must lie in (0, N-2s)")
    lam = lam_factory(N, s)
    c = pv_constant(N, s)

    def g_factor(sig, t):
        # (1 - sig^-alpha) + (1 - sig^alpha) sig^{2s-N}, cancellation-free in t = sig-1
        lg = np.log1p(t)
        return -np.expm1(-alpha * lg) - np.expm1(alpha * lg) * sig ** (2 * s - N)

    def body_t(t):
        sig = 1.0 + t
        return g_factor(sig, t) * lam(sig) * t ** (-1.0 - 2 * s)

    # (1, 2]: integrand ~ t^{1-2s}; substitute t = v^{1/(2-2s)}
    pw = 1.0 / (2.0 - 2 * s)

    def near(v):
        t = v ** pw
        return body_t(t) * pw * v ** (pw - 1.0)

    I1 = _gauss_panels(near, 0.0, 1.0, 24)
    I2 = _gauss_panels(lambda sig: body_t(sig - 1.0), 2.0, 50.0, 40, grade=1.4)

    def far(tau):
        sig = 50.0 / (1.0 - tau)
        return body_t(sig - 1.0) * 50.0 / (1.0 - tau) ** 2

    I3 = _gauss_panels(far, 0.0, 1.0 - 1e-12, 24)
    return c * (I1 + I2 + I3)


def bump_F_profile(N: int, s: float, alpha: float, r: np.ndarray) -> np.ndarray:
    """F(r) with (-Delta)^s (1-|x|^alpha)_+ = r^{alpha-2s} F(r) for r < 1.

    Evaluated from the sigma-form with the weight lam(sigma)(sigma-1)^{-1-2s}
    = sigma (sigma^2-1)^{-1-2s} H(sigma)/c_pv, times c_pv.
    """
    if not 1.0 < alpha < 2 * s:
        raise ValueError("bump exponent alpha must lie in (1, 2s)")
    lam = lam_factory(N, s)
    c = pv_constant(N, s)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any((r <= 0) | (r >= 1)):
        raise ValueError("F(r) is defined for 0 < r < 1")
    out = np.empty_like(r)
    pw = 1.0 / (2.0 - 2 * s)
    for idx, rv in enumerate(r):
        up = 1.0 / rv

        def body_in_t(t):
            # (sig^alpha - 1)(1 - sig^{2s-N-alpha}), cancellation-free in t
            sig = 1.0 + t
            lg = np.log1p(t)
            g = np.expm1(alpha * lg) * (-np.expm1((2 * s - N - alpha) * lg))
            return g * lam(sig) * t ** (-1.0 - 2 * s)

        def body_out(sig):
            g = (rv ** (-alpha) - 1.0) - (1.0 - sig ** (-alpha)) * sig ** (2 * s - N)
            return g * lam(sig) * (sig - 1.0) ** (-1.0 - 2 * s)

        def near(v):
            t = v ** pw
            return body_in_t(t) * pw * v ** (pw - 1.0)

        span = min(up - 1.0, 1.0)
        I1 = _gauss_panels(near, 0.0, span ** (1.0 / pw), 16)
        I2 = _gauss_panels(lambda sig: body_in_t(sig - 1.0), 1.0 + span, up,
                           24, grade=1.2) if up > 1.0 + span else 0.0

        def far(tau):
            sig = up / (1.0 - tau)
            return body_out(sig) * up / (1.0 - tau) ** 2

        I3 = _gauss_panels(far, 0.0, 1.0 - 1e-12, 24)
        out[idx] = c * (I1 + I2 + I3)
    return out
