"""Empirical characteristic functions, tail-exponent estimation and scaling fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core_math import sphere_moment
from .measures import MeasureMoments
from .renorm import SpaceConfig

_CHUNK = 1 << 15


class GaussianRegimeSignal(ValueError):
    """alpha > 2: the fluctuations are Gaussian and described by the covariance."""


@dataclass
class CFGrid:
    z_points: np.ndarray
    empirical: np.ndarray
    theoretical: Optional[np.ndarray]
    n_samples: int
    max_abs_dev: float = math.nan

    @property
    def mc_bound(self) -> float:
        return 4.0 / math.sqrt(self.n_samples)


def empirical_cf(samples, z_points) -> np.ndarray:
    """Sample mean of exp(i v.z) at every grid point.

    ``samples`` has shape (n,) or (n, d); ``z_points`` shape (m,) or (m, d).
    """
    x = np.asarray(samples, dtype=float)
    z = np.asarray(z_points, dtype=float)
    n = x.shape[0]
    if n == 0:
        raise ValueError("empirical_cf needs at least one sample")
    if x.ndim == 1:
        x = x[:, None]
    if z.ndim == 1:
        z = z[:, None] if x.shape[1] == 1 else z[None, :]
    if z.shape[1] != x.shape[1]:
        raise ValueError(f"z points have dimension {z.shape[1]} but samples have {x.shape[1]}")
    re = np.zeros(z.shape[0])
    im = np.zeros(z.shape[0])
    for i in range(0, n, _CHUNK):
        ph = x[i:i + _CHUNK] @ z.T
        re += np.cos(ph).sum(axis=0)
        im += np.sin(ph).sum(axis=0)
    return (re + 1j * im) / n


def cf_compare(samples, z_points, theoretical) -> CFGrid:
    emp = empirical_cf(samples, z_points)
    theo = np.asarray(theoretical, dtype=complex)
    grid = CFGrid(np.asarray(z_points, dtype=float), emp, theo, int(np.asarray(samples).shape[0]))
    grid.max_abs_dev = cf_distance(grid)
    return grid


def cf_distance(grid: CFGrid) -> float:
    """max_z |empirical - theoretical|."""
    if grid.theoretical is None:
        raise ValueError("grid has no theoretical values")
    emp = np.asarray(grid.empirical)
    theo = np.asarray(grid.theoretical)
    if emp.shape != theo.shape:
        raise ValueError(f"grid mismatch: {emp.shape} empirical vs {theo.shape} theoretical values")
    return float(np.max(np.abs(emp - theo)))


def default_z_grid(scale: float, d: Optional[int] = None, n: int = 20) -> np.ndarray:
    """n log-spaced magnitudes over [0.1/scale, 10/scale], along 3 fixed directions for d >= 2."""
    if not scale > 0:
        raise ValueError(f"scale must be > 0, got {scale!r}")
    mags = np.logspace(math.log10(0.1 / scale), math.log10(10.0 / scale), n)
    if d is None:
        return mags
    return grid_along(mags, d)


def z_directions(d: int) -> np.ndarray:
    """Unit probe directions: e1 for d = 1; e1, (e1+e2)/sqrt2 and (e1-e2+e3)/sqrt3 otherwise."""
    if d == 1:
        return np.ones((1, 1))
    dirs = np.zeros((3, d))
    dirs[0, 0] = 1.0
    dirs[1, :2] = 1.0
    dirs[2, :3] = [1.0, -1.0, 1.0][: min(3, d)]
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def grid_along(mags, d: int) -> np.ndarray:
    """Magnitudes laid out along every probe direction, direction-major, shape (n_dirs * n, d)."""
    dirs = z_directions(d)
    mags = np.asarray(mags, dtype=float)
    return (dirs[:, None, :] * mags[None, :, None]).reshape(-1, d)


# ---------------------------------------------------------------------------
# tails

def hill_tail_exponent(magnitudes, k_fraction: float = 0.05) -> tuple[float, float]:
    """Hill estimate of the tail index from the top k_fraction order statistics.

    Returns (alpha_hat, alpha_hat / sqrt(k)).
    """
    x = np.asarray(magnitudes, dtype=float).ravel()
    if x.size < 1000:
        raise ValueError(f"Hill estimation needs >= 1000 samples, got {x.size}")
    if not 0 < k_fraction <= 0.2:
        raise ValueError(f"k_fraction must lie in (0, 0.2], got {k_fraction!r}")
    if np.any(x <= 0):
        raise ValueError("magnitudes must be positive")
    k = int(k_fraction * x.size)
    top = np.partition(x, x.size - k - 1)[x.size - k - 1:]
    threshold = top.min()
    logs = np.log(np.sort(top)[1:]) - math.log(threshold)
    alpha = k / float(np.sum(logs))
    return alpha, alpha / math.sqrt(k)


def hill_sensitivity(magnitudes, fractions: Sequence[float] = (0.02, 0.05, 0.1)) -> dict:
    """Hill estimates at several k_fractions plus a power-tail verdict.

    A power tail gives estimates that agree across fractions; the verdict
    fails when their spread exceeds 10% of the middle estimate.
    """
    est = {f: hill_tail_exponent(magnitudes, f) for f in fractions}
    alphas = np.array([a for a, _ in est.values()])
    spread = float((alphas.max() - alphas.min()) / np.median(alphas))
    return {"estimates": est, "relative_spread": spread, "power_tail": spread <= 0.10}


def power_tail_detected(magnitudes) -> bool:
    return hill_sensitivity(magnitudes)["power_tail"]


def tail_to_stable_params(cfg: SpaceConfig, measure_mom: MeasureMoments) -> tuple[float, float, float]:
    """(alpha, A_alpha, B_alpha) of the force tail; B vanishes for isotropic tails."""
    alpha = cfg.alpha
    if alpha > 2:
        raise GaussianRegimeSignal(f"alpha = {alpha:g} > 2: Gaussian regime, use the covariance of V")
    A = measure_mom.rho_at_origin / cfg.delta * sphere_moment(alpha, cfg.d)
    return alpha, A, 0.0


# ---------------------------------------------------------------------------
# widths and scaling

def force_width(forces) -> float:
    """Mean over components of the interquartile range."""
    f = np.asarray(forces, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    q1, q3 = np.percentile(f, [25, 75], axis=0)
    return float(np.mean(q3 - q1))


def scaling_fit(N_grid, widths, model: str = "power") -> tuple[float, float]:
    """Least-squares slope of ln(width) against ln(N) (``model="power"``).

    With ``model="alpha2"`` the regressor is ln sqrt(ln N / N), so a width
    following that law gives slope 1.
    """
    N = np.asarray(N_grid, dtype=float)
    w = np.asarray(widths, dtype=float)
    if N.shape != w.shape or N.ndim != 1:
        raise ValueError("N_grid and widths must be 1-D and of equal length")
    if len(N) < 3:
        raise ValueError(f"scaling_fit needs >= 3 grid points, got {len(N)}")
    if math.log10(N.max() / N.min()) < 2 - 1e-9:
        raise ValueError("the N grid must span at least 2 decades")
    if np.any(w <= 0):
        raise ValueError("widths must be positive")
    if model == "power":
        x = np.log(N)
    elif model == "alpha2":
        if np.any(N <= 1):
            raise ValueError("model 'alpha2' needs N > 1")
        x = 0.5 * np.log(np.log(N) / N)
    else:
        raise ValueError(f"unknown model {model!r}")
    y = np.log(w)
    xm = x - x.mean()
    slope = float(np.dot(xm, y - y.mean()) / np.dot(xm, xm))
    resid = y - y.mean() - slope * xm
    dof = len(x) - 2
    se = math.sqrt(float(np.dot(resid, resid)) / dof / float(np.dot(xm, xm))) if dof > 0 else math.nan
    return slope, se
