"""Special functions and geometric constants shared by the other modules.

Everything here is a pure function of its arguments.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize

E_INV = math.exp(-1.0)

# relative tolerance of the polar-angle quadrature behind sphere_moment
_QUAD_RTOL = 1e-10


def solid_angle(d: int) -> float:
    """Total solid angle of the unit sphere in R^d, 2 pi^(d/2) / Gamma(d/2)."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {d!r}")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def sphere_moment(alpha: float, d: int) -> float:
    """Integral of |z.v|^alpha over the unit sphere, with z the first axis.

    The integrand only depends on the polar angle to z, so the sphere
    integral is reduced to one dimension with weight sin^(d-2) and the
    solid angle of the (d-1)-sphere.  In d = 1 the sphere is {+1, -1} and
    the result is 2 for every alpha.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {d!r}")
    if d == 1:
        return 2.0

    def integrand(theta: float) -> float:
        return abs(math.cos(theta)) ** alpha * math.sin(theta) ** (d - 2)

    # the kink of |cos| at pi/2 is split off so both halves are smooth
    left, _ = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=0.0, epsrel=_QUAD_RTOL, limit=200)
    right, _ = integrate.quad(integrand, math.pi / 2, math.pi, epsabs=0.0, epsrel=_QUAD_RTOL, limit=200)
    return solid_angle(d - 1) * (left + right)


def stable_prefactor(alpha: float) -> float:
    """pi cos(alpha pi/2) / sin(alpha pi), continued through alpha = 1.

    The quotient simplifies to pi / (2 sin(alpha pi/2)), which is finite on
    (0, 2) and equals pi/2 at alpha = 1.
    """
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
    return math.pi / (2.0 * math.sin(alpha * math.pi / 2.0))


def lambda_force(alpha: float, d: int) -> float:
    """Coefficient of the symmetric stable force law for exponent alpha in dimension d."""
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha!r}")
    if alpha == 2:
        return 0.5 * sphere_moment(2.0, d)
    return stable_prefactor(alpha) * sphere_moment(alpha, d)


def lambda_energy(alpha_p: float) -> float:
    """Coefficient of the one-sided stable energy law; 1/2 at alpha' = 2."""
    if not 0 < alpha_p <= 2:
        raise ValueError(f"alpha' must lie in (0, 2], got {alpha_p!r}")
    if alpha_p == 2:
        return 0.5
    return stable_prefactor(alpha_p)


def h_solve(x: float) -> float:
    """Root h in (0, 1/e] of -h ln h = x, for 0 < x <= 1/e.

    Solved for w = ln h on (-inf, -1], where ln(-w) + w - ln x is strictly
    increasing, by bracketed root finding.  This pins the small branch.
    """
    x = float(x)
    if not 0 < x <= E_INV:
        raise ValueError(
            f"h(x) needs 0 < x <= 1/e, got x={x!r}; in the singular regimes this "
            "means N >= e*K"
        )
    log_x = math.log(x)

    def g(w: float) -> float:
        return math.log(-w) + w - log_x

    if g(-1.0) <= 0.0:
        return E_INV
    w_lo = 2.0 * log_x - 10.0
    w = optimize.brentq(g, w_lo, -1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(w)


def h_inverse(h: float) -> float:
    """-h ln h, the inverse of h_solve on (0, 1/e]."""
    return -h * math.log(h)
