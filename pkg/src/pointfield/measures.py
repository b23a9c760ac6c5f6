"""Base probability measures for the unit-scale relative position R.

The test particle sits at the origin of R-space.  An off-centre particle is
modelled by shifting the source ball: R = B - offset with B uniform in a ball
centred at zero, so the mean of R is -offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .core_math import solid_angle

if TYPE_CHECKING:  # pragma: no cover
    from .renorm import SpaceConfig

KINDS = ("uniform_ball", "gaussian", "shifted_uniform_ball")


class MomentUndefinedError(ValueError):
    """A moment was requested that is infinite for the given (d, delta)."""


@dataclass(frozen=True)
class SourceMeasure:
    """Distribution of R.  ``scale`` is the ball radius or the Gaussian standard deviation."""

    kind: str
    d: int
    scale: float = 1.0
    offset: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"measure kind must be one of {KINDS}, got {self.kind!r}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be an integer >= 1, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"measure scale must be > 0, got {self.scale!r}")
        off = tuple(float(v) for v in self.offset) if len(self.offset) else (0.0,) * self.d
        if len(off) != self.d:
            raise ValueError(f"offset has {len(off)} components, expected d={self.d}")
        if self.kind != "shifted_uniform_ball" and any(off):
            raise ValueError(f"a nonzero offset needs kind 'shifted_uniform_ball', not {self.kind!r}")
        if self.kind == "shifted_uniform_ball" and not math.hypot(*off) < self.scale:
            raise ValueError(
                "offset must lie strictly inside the ball (|offset| < radius) so the "
                "density is positive and continuous at the test particle"
            )
        object.__setattr__(self, "offset", off)

    @classmethod
    def uniform_ball(cls, d: int, radius: float = 1.0) -> "SourceMeasure":
        return cls("uniform_ball", d, radius)

    @classmethod
    def gaussian(cls, d: int, scale: float = 1.0) -> "SourceMeasure":
        return cls("gaussian", d, scale)

    @classmethod
    def shifted_ball(cls, d: int, radius: float, offset: Sequence[float]) -> "SourceMeasure":
        return cls("shifted_uniform_ball", d, radius, tuple(offset))

    @property
    def is_ball(self) -> bool:
        return self.kind != "gaussian"

    @property
    def offset_array(self) -> np.ndarray:
        return np.asarray(self.offset, dtype=float)


def ball_volume(d: int, radius: float = 1.0) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * radius**d


def density_at_origin(measure: SourceMeasure) -> float:
    """rho_R(0) in closed form."""
    if measure.is_ball:
        return 1.0 / ball_volume(measure.d, measure.scale)
    return (2.0 * math.pi * measure.scale**2) ** (-measure.d / 2.0)


def density(measure: SourceMeasure, x) -> np.ndarray:
    """rho_R evaluated at the rows of ``x`` (shape (..., d))."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != measure.d:
        raise ValueError(f"points must have trailing dimension {measure.d}")
    if measure.is_ball:
        inside = np.linalg.norm(x + measure.offset_array, axis=-1) < measure.scale
        return np.where(inside, density_at_origin(measure), 0.0)
    r2 = np.sum(x * x, axis=-1)
    return density_at_origin(measure) * np.exp(-0.5 * r2 / measure.scale**2)


def sample_R(measure: SourceMeasure, count: int, stream: np.random.Generator) -> np.ndarray:
    """iid draws of R with shape (count, d)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    d = measure.d
    g = stream.standard_normal((count, d))
    if not measure.is_ball:
        return measure.scale * g
    # uniform direction times radius with density proportional to r^(d-1)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    u = 1.0 - stream.random(count)
    r = measure.scale * u ** (1.0 / d)
    return g * r[:, None] - measure.offset_array


@dataclass
class MeasureMoments:
    """Moment functionals of V = R^/|R|^delta and U (|R|^(1-delta), or -ln|R| when delta = 1).

    Fields left as None are infinite in this regime; ``require`` turns that
    into a MomentUndefinedError naming the exponent condition.
    """

    rho_at_origin: float
    mean_force_unit: Optional[np.ndarray] = None
    covariance_V: Optional[np.ndarray] = None
    mean_U: Optional[float] = None
    var_U: Optional[float] = None
    stderr: dict = field(default_factory=dict)
    reasons: dict = field(default_factory=dict)
    method: str = "exact"

    def defined(self, name: str) -> bool:
        return getattr(self, name) is not None

    def require(self, name: str):
        value = getattr(self, name)
        if value is None:
            raise MomentUndefinedError(self.reasons.get(name, f"{name} is not available"))
        return value


def moment_conditions(cfg: "SpaceConfig") -> dict:
    """Map moment name -> None when finite, else the violated condition as text."""
    d, delta = cfg.d, cfg.delta
    a = f"alpha = d/delta = {cfg.alpha:g}"
    ap = "alpha' = d/(delta-1) = " + (f"{cfg.alpha_p:g}" if cfg.alpha_p is not None else "gaussian")
    return {
        "mean_force_unit": None if delta < d else f"moment undefined for this regime: <V> needs alpha > 1, but {a}",
        "covariance_V": None if 2 * delta < d else f"moment undefined for this regime: M_V needs alpha > 2, but {a}",
        "mean_U": None if delta < d + 1 else f"moment undefined for this regime: <U> needs alpha' > 1, but {ap}",
        "var_U": None if 2 * (delta - 1) < d else f"moment undefined for this regime: var U needs alpha' > 2, but {ap}",
    }


def moments(
    measure: SourceMeasure,
    cfg: "SpaceConfig",
    mc_budget: int = 10**6,
    stream: Optional[np.random.Generator] = None,
    method: str = "exact",
    require: Sequence[str] = (),
) -> MeasureMoments:
    """Evaluate the moments that are finite for ``cfg``.

    ``method="exact"`` uses closed forms (Gaussian, centred ball) or a 1-D
    angular quadrature (shifted ball) and reports zero standard errors;
    ``method="mc"`` averages ``mc_budget`` draws and reports standard errors
    of the mean.  Names listed in ``require`` raise MomentUndefinedError if
    infinite.
    """
    if cfg.d != measure.d:
        raise ValueError(f"measure has d={measure.d} but configuration has d={cfg.d}")
    reasons = moment_conditions(cfg)
    for name in require:
        if name not in reasons:
            raise KeyError(f"unknown moment {name!r}")
        if reasons[name] is not None:
            raise MomentUndefinedError(reasons[name])
    wanted = {k for k, v in reasons.items() if v is None}
    out = MeasureMoments(rho_at_origin=density_at_origin(measure), method=method,
                         reasons={k: v for k, v in reasons.items() if v is not None})
    if method == "exact":
        vals = _exact(measure, cfg.delta, wanted)
        for k, v in vals.items():
            setattr(out, k, v)
            out.stderr[k] = 0.0 * np.asarray(v) if isinstance(v, np.ndarray) else 0.0
    elif method == "mc":
        _monte_carlo(out, measure, cfg.delta, wanted, mc_budget, stream)
    else:
        raise ValueError(f"method must be 'exact' or 'mc', got {method!r}")
    return out


# ---------------------------------------------------------------------------
# exact evaluation

def _radial_power(rmax, p: float, d: int):
    """int_0^rmax r^p r^(d-1) dr, finite for p + d > 0."""
    return rmax ** (p + d) / (p + d)


def _radial_log(rmax, d: int, order: int):
    """int_0^rmax (-ln r)^order r^(d-1) dr for order 1 and 2."""
    L = np.log(rmax)
    rd = rmax**d
    if order == 1:
        return rd * (1.0 / d**2 - L / d)
    return rd * (L * L / d - 2.0 * L / d**2 + 2.0 / d**3)


def _gauss_abs_moment(p: float, d: int, s: float) -> float:
    """<|R|^p> for R ~ N(0, s^2 I_d)."""
    return s**p * 2.0 ** (p / 2.0) * math.exp(special.gammaln((d + p) / 2.0) - special.gammaln(d / 2.0))


def _exact(measure: SourceMeasure, delta: float, wanted: set) -> dict:
    d = measure.d
    res = {}
    if not measure.is_ball:
        s = measure.scale
        if "mean_force_unit" in wanted:
            res["mean_force_unit"] = np.zeros(d)
        if "covariance_V" in wanted:
            res["covariance_V"] = np.eye(d) * _gauss_abs_moment(-2 * delta, d, s) / d
        if delta == 1:
            if "mean_U" in wanted:
                res["mean_U"] = -math.log(s) - 0.5 * (math.log(2.0) + special.digamma(d / 2.0))
            if "var_U" in wanted:
                res["var_U"] = 0.25 * special.polygamma(1, d / 2.0)
        else:
            m1 = _gauss_abs_moment(1 - delta, d, s) if "mean_U" in wanted else None
            if m1 is not None:
                res["mean_U"] = m1
            if "var_U" in wanted:
                res["var_U"] = max(_gauss_abs_moment(2 * (1 - delta), d, s) - m1**2, 0.0)
        return res

    a = measure.scale
    off = measure.offset_array
    s = float(np.linalg.norm(off))
    ohat = off / s if s > 0 else np.eye(d)[0]
    inv_vol = 1.0 / ball_volume(d, a)

    def rmax(c):
        return -s * c + np.sqrt(s * s * c * c + a * a - s * s)

    def ang(fn) -> float:
        """Angular average weight: integral over the sphere of fn(cos theta)."""
        if d == 1:
            return fn(1.0) + fn(-1.0)
        w = solid_angle(d - 1)
        val, _ = integrate.quad(lambda t: fn(math.cos(t)) * math.sin(t) ** (d - 2), 0.0, math.pi,
                                epsabs=1e-300, epsrel=1e-12, limit=400)
        return w * val

    if "mean_force_unit" in wanted:
        if s == 0.0:
            res["mean_force_unit"] = np.zeros(d)
        else:
            # V points along R^; only the component along the offset axis survives
            comp = inv_vol * ang(lambda c: c * _radial_power(rmax(c), -delta, d))
            res["mean_force_unit"] = comp * ohat
    mean_v = res.get("mean_force_unit")
    if "covariance_V" in wanted:
        par = inv_vol * ang(lambda c: c * c * _radial_power(rmax(c), -2 * delta, d))
        if d > 1:
            perp = inv_vol * ang(lambda c: (1 - c * c) * _radial_power(rmax(c), -2 * delta, d)) / (d - 1)
        else:
            perp = 0.0
        P = np.outer(ohat, ohat)
        second = par * P + perp * (np.eye(d) - P)
        res["covariance_V"] = second - np.outer(mean_v, mean_v)
    if delta == 1:
        m1 = inv_vol * ang(lambda c: _radial_log(rmax(c), d, 1)) if "mean_U" in wanted else None
        if m1 is not None:
            res["mean_U"] = m1
        if "var_U" in wanted:
            m2 = inv_vol * ang(lambda c: _radial_log(rmax(c), d, 2))
            res["var_U"] = max(m2 - m1 * m1, 0.0)
    else:
        m1 = inv_vol * ang(lambda c: _radial_power(rmax(c), 1 - delta, d)) if "mean_U" in wanted else None
        if m1 is not None:
            res["mean_U"] = m1
        if "var_U" in wanted:
            m2 = inv_vol * ang(lambda c: _radial_power(rmax(c), 2 * (1 - delta), d))
            res["var_U"] = max(m2 - m1 * m1, 0.0)
    return res


# ---------------------------------------------------------------------------
# Monte Carlo evaluation

def _monte_carlo(out: MeasureMoments, measure, delta, wanted, budget, stream):
    if stream is None:
        stream = np.random.default_rng(0)
    if budget < 2:
        raise ValueError("mc_budget must be >= 2")
    R = sample_R(measure, int(budget), stream)
    r = np.linalg.norm(R, axis=1)
    n = len(r)
    se = lambda x: float(np.std(x, ddof=1) / math.sqrt(n))  # noqa: E731
    if "mean_force_unit" in wanted or "covariance_V" in wanted:
        V = R * (r ** (-delta - 1.0))[:, None]
        if "mean_force_unit" in wanted:
            out.mean_force_unit = V.mean(axis=0)
            out.stderr["mean_force_unit"] = V.std(axis=0, ddof=1) / math.sqrt(n)
        if "covariance_V" in wanted:
            out.covariance_V = np.cov(V, rowvar=False, bias=False).reshape(measure.d, measure.d)
    if "mean_U" in wanted or "var_U" in wanted:
        U = -np.log(r) if delta == 1 else r ** (1.0 - delta)
        if "mean_U" in wanted:
            out.mean_U = float(U.mean())
            out.stderr["mean_U"] = se(U)
        if "var_U" in wanted:
            out.var_U = float(U.var(ddof=1))
