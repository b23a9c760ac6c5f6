"""Regime classification and the N-dependent renormalization constants.

Every regime fixes the pair (a_N, b_N) = (k_N / L_N^delta, beta a_N L_N) by
two conditions: one on a_N involving K and one on b_N involving K'.  The
form of each condition depends only on the Levy exponent of the variable it
renormalizes:

    exponent < 1 :  N |x|^exponent  = const
    exponent = 1 :  -N |x| ln |x|   = const
    exponent > 1 :  N |x|           = const
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .core_math import E_INV, h_solve

_SNAP_RTOL = 1e-12


class Regime(str, enum.Enum):
    MEAN_FIELD = "MeanField"
    SINGULAR_D = "SingularD"
    MIXED = "Mixed"
    SINGULAR_D1 = "SingularD1"
    THERMODYNAMIC = "Thermodynamic"


class RegimeWarning(UserWarning):
    """delta <= 1: only the Gaussian energy branch is covered."""


class RenormRangeError(ValueError):
    """N lies below the range where the singular condition has a solution."""


@dataclass(frozen=True)
class SpaceConfig:
    d: int
    delta: float
    alpha: float
    alpha_p: Optional[float]  # None stands for the Gaussian branch (alpha' > 2) when delta <= 1
    regime: Regime

    @property
    def beta(self) -> float:
        return 1.0 if self.delta == 1 else 1.0 / (self.delta - 1.0)

    @property
    def alpha_p_value(self) -> float:
        """alpha' as a number, +inf for the Gaussian sentinel."""
        return math.inf if self.alpha_p is None else self.alpha_p


def _close(x: float, y: float) -> bool:
    return abs(x - y) <= _SNAP_RTOL * max(abs(x), abs(y))


def classify(d: int, delta: float) -> SpaceConfig:
    """Regime tag and exponents for (d, delta).  delta within 1e-12 of d or d+1 snaps to it."""
    if int(d) != d or d < 1:
        raise ValueError(f"d must be an integer >= 1, got {d!r}")
    d = int(d)
    delta = float(delta)
    if not (math.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be > 0, got {delta!r}")
    if _close(delta, d):
        delta = float(d)
    elif _close(delta, d + 1):
        delta = float(d + 1)
    elif _close(delta, 1.0):
        delta = 1.0
    if delta < d:
        regime = Regime.MEAN_FIELD
    elif delta == d:
        regime = Regime.SINGULAR_D
    elif delta < d + 1:
        regime = Regime.MIXED
    elif delta == d + 1:
        regime = Regime.SINGULAR_D1
    else:
        regime = Regime.THERMODYNAMIC
    if delta <= 1:
        warnings.warn(
            f"delta={delta:g} <= 1: the energy law is only treated in its Gaussian branch "
            "and needs a finite second moment of U",
            RegimeWarning,
            stacklevel=2,
        )
        alpha_p = None
    else:
        alpha_p = d / (delta - 1.0)
    return SpaceConfig(d=d, delta=delta, alpha=d / delta, alpha_p=alpha_p, regime=regime)


def sigma_table(alpha: float, K: float, N: int) -> float:
    """Width scale sigma_N for exponent alpha >= 1 (alpha = inf selects the Gaussian row)."""
    if not alpha >= 1:
        raise ValueError(f"no sigma_N in this regime: alpha={alpha!r} < 1")
    if N < 1:
        raise ValueError("N must be >= 1")
    if alpha == 1:
        return N * _h(K, N, "K")
    if alpha < 2:
        return K * N ** ((1.0 - alpha) / alpha)
    if alpha == 2:
        return K * math.sqrt(math.log(N) / N)
    return 0.5 * K / math.sqrt(N)


def _h(K: float, N: int, name: str) -> float:
    if K / N > E_INV:
        raise RenormRangeError(
            f"the singular condition needs N >= e*{name} = {math.e * K:.6g}, got N={N}"
        )
    return h_solve(K / N)


def _condition(x: float, exponent: Optional[float], N: int) -> float:
    ax = abs(x)
    if exponent is None or exponent > 1:
        return N * ax
    if exponent == 1:
        return -N * ax * math.log(ax)
    return N * ax**exponent


@dataclass(frozen=True)
class RenormPlan:
    cfg: SpaceConfig
    K: float
    K_prime: float
    N: int
    k_N: float
    L_N: float
    a_N: float
    b_N: float
    beta: float
    q: int
    q_prime: int
    sigma_N: float
    sigma_p_N: float
    sigma_defined: bool
    sigma_p_defined: bool
    energy_drift: float = 0.0  # -N b_N ln L_N for delta = 1, zero otherwise
    source_mass: Optional[float] = None
    extra: dict = field(default_factory=dict, compare=False)

    def conditions(self) -> tuple[float, float]:
        """Recover (K, K') from (a_N, b_N) through the regime's defining conditions."""
        return (_condition(self.a_N, self.cfg.alpha, self.N),
                _condition(self.b_N, self.cfg.alpha_p, self.N))

    def row(self) -> dict:
        return {
            "N": self.N, "L_N": self.L_N, "k_N": self.k_N, "a_N": self.a_N, "b_N": self.b_N,
            "sigma_N": self.sigma_N if self.sigma_defined else math.nan,
            "sigma_p_N": self.sigma_p_N if self.sigma_p_defined else math.nan,
        }


def plan(cfg: SpaceConfig, K: float, K_prime: float, N: int, coupling_sign: int = 1) -> RenormPlan:
    """Renormalization constants for N sources in the regime of ``cfg``."""
    if not (K > 0 and K_prime > 0):
        raise ValueError(f"K and K' must be > 0, got K={K!r}, K'={K_prime!r}")
    if int(N) != N or N < 1:
        raise ValueError(f"N must be an integer >= 1, got {N!r}")
    if coupling_sign not in (1, -1):
        raise ValueError(f"coupling_sign must be +1 or -1, got {coupling_sign!r}")
    N = int(N)
    d, delta = cfg.d, cfg.delta
    beta = cfg.beta
    ab = abs(beta)
    r = cfg.regime
    if r is Regime.MEAN_FIELD:
        L = K_prime / (ab * K)
        k = K * L**delta / N
    elif r is Regime.THERMODYNAMIC:
        L = (delta - 1) * (K_prime ** (delta - 1) / K**delta) ** (1.0 / d) * N ** (1.0 / d)
        k = (delta - 1) ** delta * (K_prime / K) ** (delta * (delta - 1) / d)
    elif r is Regime.MIXED:
        L = (delta - 1) * K_prime / K ** (delta / d) * N ** ((delta - d) / d)
        k = ((delta - 1) * K_prime / K ** ((delta - 1) / d)) ** delta * N ** (-delta * (d + 1 - delta) / d)
    elif r is Regime.SINGULAR_D:
        h = _h(K, N, "K")
        L = K_prime / (ab * N * h)
        k = (K_prime / ab) ** d / (N**d * h ** (d - 1))
    else:
        h = _h(K_prime, N, "K'")
        L = d / K ** ((d + 1) / d) * h * N ** ((d + 1) / d)
        k = (d / K) ** (d + 1) * (N * h) ** (d + 1)
    k_N = coupling_sign * k
    a_N = k_N / L**delta
    b_N = beta * a_N * L
    alpha_p = cfg.alpha_p_value
    sig = sigma_table(cfg.alpha, K, N) if cfg.alpha >= 1 else 0.0
    sig_p = sigma_table(alpha_p, K_prime, N) if alpha_p >= 1 else 0.0
    drift = -N * b_N * math.log(L) if delta == 1 else 0.0
    return RenormPlan(
        cfg=cfg, K=float(K), K_prime=float(K_prime), N=N, k_N=k_N, L_N=L, a_N=a_N, b_N=b_N,
        beta=beta, q=1 if k_N > 0 else -1, q_prime=1 if beta * k_N > 0 else -1,
        sigma_N=sig, sigma_p_N=sig_p, sigma_defined=cfg.alpha >= 1, sigma_p_defined=alpha_p >= 1,
        energy_drift=drift,
    )


def gravity_case(d: int, G: float, m_test: float, param: float, N: int,
                 K: Optional[float] = None, K_prime: Optional[float] = None) -> RenormPlan:
    """Attractive inverse-square coupling k_N = -G m_test m_N with the source mass renormalized.

    ``param`` is the total mass M for d = 3, the constant mu = M_N/L_N for
    d = 2 and the constant nu = N M_N / L_N^2 for d = 1.  The free constant
    (K for d = 2, K' for d = 1) defaults to 1.  The renormalized source mass
    m_N is stored in ``source_mass``.
    """
    if d not in (1, 2, 3):
        raise ValueError(f"gravity_case covers d in {{1, 2, 3}}, got {d!r}")
    for name, v in (("G", G), ("m_test", m_test), ("param", param)):
        if not v > 0:
            raise ValueError(f"{name} must be > 0, got {v!r}")
    cfg = classify(d, 2.0)
    if d == 3:
        K = K_prime = G * m_test * param
    elif d == 2:
        K_prime = G * m_test * param
        K = 1.0 if K is None else K
    else:
        K = math.sqrt(G * m_test * param)
        K_prime = 1.0 if K_prime is None else K_prime
    p = plan(cfg, K, K_prime, N, coupling_sign=-1)
    m_N = abs(p.k_N) / (G * m_test)
    return RenormPlan(**{**p.__dict__, "source_mass": m_N,
                         "extra": {"G": G, "m_test": m_test, "param": param}})
