"""Stable and Gaussian limit laws, their characteristic functions and samplers.

Scale convention: a scalar stable law with exponent a, asymmetry b, scale s
and location m has

    ln Psi(z) = i z m - |s z|^a / Gamma(a+1) * (1 - i b sign(z) tan(pi a / 2))

and the isotropic vector law has ln Psi(z) = i z.m - |s z|^a / Gamma(a+1).
With a = 2 this is a Gaussian of variance s^2 per component.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core_math import lambda_energy, lambda_force, solid_angle
from .measures import MeasureMoments
from .renorm import RenormPlan, SpaceConfig

Location = Union[float, np.ndarray]


@dataclass(frozen=True)
class StableLaw:
    exponent: float
    asymmetry: int = 0
    scale: float = 1.0
    location: Location = 0.0

    def __post_init__(self):
        if not 0 < self.exponent <= 2:
            raise ValueError(f"stable exponent must lie in (0, 2], got {self.exponent!r}")
        if self.asymmetry not in (-1, 0, 1):
            raise ValueError(f"asymmetry must be -1, 0 or 1, got {self.asymmetry!r}")
        if self.exponent == 2 and self.asymmetry != 0:
            raise ValueError("asymmetry must be 0 when exponent = 2")
        if self.exponent == 1 and self.asymmetry != 0:
            raise ValueError("asymmetric laws with exponent 1 are not supported")
        if not self.scale >= 0:
            raise ValueError(f"scale must be >= 0, got {self.scale!r}")

    @property
    def dim(self) -> Optional[int]:
        loc = np.asarray(self.location)
        return None if loc.ndim == 0 else loc.shape[0]

    def log_cf(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        a = self.exponent
        if self.dim is None:
            absz = np.abs(z)
            val = -(self.scale * absz) ** a / math.gamma(a + 1.0) + 0j
            if self.asymmetry:
                val = val * (1.0 - 1j * self.asymmetry * np.sign(z) * math.tan(math.pi * a / 2.0))
            return 1j * z * float(self.location) + val
        absz = np.linalg.norm(z, axis=-1)
        return 1j * (z @ np.asarray(self.location, dtype=float)) - (self.scale * absz) ** a / math.gamma(a + 1.0)

    def cf(self, z) -> np.ndarray:
        return np.exp(self.log_cf(z))


@dataclass(frozen=True)
class GaussianLaw:
    """Gaussian with covariance matrix (vector) or variance (scalar)."""

    covariance: Union[float, np.ndarray]
    location: Location = 0.0

    @property
    def dim(self) -> Optional[int]:
        loc = np.asarray(self.location)
        return None if loc.ndim == 0 else loc.shape[0]

    def log_cf(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.dim is None:
            return 1j * z * float(self.location) - 0.5 * float(self.covariance) * z * z
        C = np.asarray(self.covariance, dtype=float)
        quad = np.einsum("...i,ij,...j->...", z, C, z)
        return 1j * (z @ np.asarray(self.location, dtype=float)) - 0.5 * quad

    def cf(self, z) -> np.ndarray:
        return np.exp(self.log_cf(z))


@dataclass(frozen=True)
class LimitLawSpec:
    """Finite-N asymptotic law of the renormalized force or energy."""

    target: str  # "force" or "energy"
    law: Union[StableLaw, GaussianLaw]
    branch: str
    drift: Location = 0.0
    sigma_scaling: float = 0.0

    def cf(self, z) -> np.ndarray:
        return self.law.cf(z)

    @property
    def width(self) -> float:
        """Typical spread used to build default z-grids."""
        if isinstance(self.law, StableLaw):
            return self.law.scale
        C = np.atleast_2d(np.asarray(self.law.covariance, dtype=float))
        return math.sqrt(float(np.max(np.diag(C))))


def cf_symmetric_stable_vector(z, alpha: float) -> np.ndarray:
    """exp(-|z|^alpha / Gamma(alpha+1)); z is a scalar, a vector or an array of vectors."""
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha!r}")
    z = np.asarray(z, dtype=float)
    absz = np.abs(z) if z.ndim == 0 else np.linalg.norm(z, axis=-1)
    return np.exp(-absz**alpha / math.gamma(alpha + 1.0))


def cf_asymmetric_stable(z, alpha_p: float, asym: int) -> np.ndarray:
    """Unit-scale one-sided (|asym| = 1) stable CF with exponent alpha_p != 1."""
    if alpha_p == 1:
        raise ValueError("alpha' = 1 has no asymmetric form here; use the dedicated energy branch "
                         "of theoretical_cf_energy")
    if not 0 < alpha_p < 2:
        raise ValueError(f"alpha' must lie in (0, 2), got {alpha_p!r}")
    if asym not in (-1, 1):
        raise ValueError(f"asym must be +1 or -1, got {asym!r}")
    return StableLaw(alpha_p, asym, 1.0, 0.0).cf(z)


# ---------------------------------------------------------------------------
# limit laws of the model

def force_law(plan: RenormPlan, cfg: SpaceConfig, mom: MeasureMoments) -> LimitLawSpec:
    alpha, d = cfg.alpha, cfg.d
    rho0 = mom.rho_at_origin
    sig = plan.sigma_N
    if alpha < 1:
        c = lambda_force(alpha, d) * rho0 * plan.K / cfg.delta
        return LimitLawSpec("force", StableLaw(alpha, 0, c ** (1 / alpha), np.zeros(d)), "alpha<1")
    if alpha == 1:
        c = sig * lambda_force(1.0, d) * rho0 / cfg.delta
        return LimitLawSpec("force", StableLaw(1.0, 0, c, np.zeros(d)), "alpha=1", sigma_scaling=sig)
    loc = plan.q * plan.K * np.asarray(mom.require("mean_force_unit"), dtype=float)
    if alpha <= 2:
        c = sig**alpha * lambda_force(alpha, d) * rho0 / cfg.delta
        tag = "alpha=2" if alpha == 2 else "1<alpha<2"
        return LimitLawSpec("force", StableLaw(alpha, 0, c ** (1 / alpha), loc), tag, loc, sig)
    M = np.asarray(mom.require("covariance_V"), dtype=float)
    return LimitLawSpec("force", GaussianLaw(sig**2 * M, loc), "alpha>2", loc, sig)


def energy_law(plan: RenormPlan, cfg: SpaceConfig, mom: MeasureMoments) -> LimitLawSpec:
    ap = cfg.alpha_p_value
    qp = plan.q_prime
    Kp = plan.K_prime
    sig = plan.sigma_p_N
    C = solid_angle(cfg.d) * mom.rho_at_origin / (cfg.delta - 1.0) if cfg.delta > 1 else math.nan
    if ap < 1:
        c = lambda_energy(ap) * C * Kp
        return LimitLawSpec("energy", StableLaw(ap, qp, c ** (1 / ap), 0.0), "alpha'<1")
    if ap == 1:
        # location carries the sign q' of the individual energies
        loc = qp * C * Kp
        c = sig * lambda_energy(1.0) * C
        return LimitLawSpec("energy", StableLaw(1.0, 0, c, loc), "alpha'=1", loc, sig)
    mean = qp * Kp * float(mom.require("mean_U"))
    if ap < 2:
        c = sig**ap * lambda_energy(ap) * C
        return LimitLawSpec("energy", StableLaw(ap, qp, c ** (1 / ap), mean), "1<alpha'<2", mean, sig)
    if ap == 2:
        c = sig**2 * lambda_energy(2.0) * C
        return LimitLawSpec("energy", StableLaw(2.0, 0, math.sqrt(c), mean), "alpha'=2", mean, sig)
    var_u = float(mom.require("var_U"))
    if cfg.delta == 1:
        loc = -qp * Kp * math.log(plan.L_N) + mean
        return LimitLawSpec("energy", GaussianLaw(sig**2 * var_u, loc), "alpha'>2,delta=1", loc, sig)
    return LimitLawSpec("energy", GaussianLaw(sig**2 * var_u, mean), "alpha'>2", mean, sig)


def _check_plan(plan: RenormPlan, cfg: SpaceConfig, N: Optional[int]):
    if plan.cfg != cfg:
        raise ValueError("plan was built for a different (d, delta)")
    if N is not None and N != plan.N:
        raise ValueError(f"plan is for N={plan.N}, got N={N}")


def theoretical_cf_force(z, plan: RenormPlan, cfg: SpaceConfig, mom: MeasureMoments,
                         N: Optional[int] = None) -> np.ndarray:
    """Asymptotic CF of the renormalized force at the vectors z (shape (..., d))."""
    _check_plan(plan, cfg, N)
    return force_law(plan, cfg, mom).cf(z)


def theoretical_cf_energy(z, plan: RenormPlan, cfg: SpaceConfig, mom: MeasureMoments,
                          N: Optional[int] = None) -> np.ndarray:
    """Asymptotic CF of the renormalized energy at the reals z."""
    _check_plan(plan, cfg, N)
    return energy_law(plan, cfg, mom).cf(z)


# ---------------------------------------------------------------------------
# sampling

def _cms(alpha: float, beta: float, count: int, stream: np.random.Generator) -> np.ndarray:
    """Standard S_alpha(1, beta, 0) draws (Samorodnitsky-Taqqu form) by Chambers-Mallows-Stuck."""
    V = math.pi * (stream.random(count) - 0.5)
    W = stream.standard_exponential(count)
    if alpha == 1:
        if beta != 0:
            raise ValueError("asymmetric exponent-1 sampling is not supported")
        return np.tan(V)
    t = beta * math.tan(math.pi * alpha / 2.0)
    B = math.atan(t) / alpha
    S = (1.0 + t * t) ** (1.0 / (2.0 * alpha))
    return (S * np.sin(alpha * (V + B)) / np.cos(V) ** (1.0 / alpha)
            * (np.cos(V - alpha * (V + B)) / W) ** ((1.0 - alpha) / alpha))


def sample_stable(law: Union[StableLaw, GaussianLaw], count: int, stream: np.random.Generator,
                  dim: Optional[int] = None) -> np.ndarray:
    """iid draws from ``law``; shape (count,) for scalar laws, (count, d) for vector laws.

    ``dim`` promotes a scalar-location symmetric law to an isotropic vector
    law in that dimension.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if isinstance(law, GaussianLaw):
        if law.dim is None:
            return float(law.location) + math.sqrt(float(law.covariance)) * stream.standard_normal(count)
        return stream.multivariate_normal(np.asarray(law.location, float),
                                          np.asarray(law.covariance, float), size=count)
    d = law.dim if dim is None else dim
    a, s = law.exponent, law.scale
    if d is None:
        if a == 2:
            return float(law.location) + s * stream.standard_normal(count)
        sigma = s * math.gamma(a + 1.0) ** (-1.0 / a)
        return float(law.location) + sigma * _cms(a, law.asymmetry, count, stream)
    if law.asymmetry:
        raise ValueError("vector stable laws are symmetric")
    loc = np.broadcast_to(np.asarray(law.location, dtype=float), (d,))
    if a == 2:
        return loc + s * stream.standard_normal((count, d))
    # sub-Gaussian construction: sqrt(A) G with A totally skewed of exponent a/2
    c = s**a / math.gamma(a + 1.0)
    A = math.cos(math.pi * a / 4.0) ** (2.0 / a) * _cms(a / 2.0, 1.0, count, stream)
    G = math.sqrt(2.0) * c ** (1.0 / a) * stream.standard_normal((count, d))
    return loc + np.sqrt(A)[:, None] * G
