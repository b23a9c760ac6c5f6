"""Monte Carlo realizations of the renormalized force and energy.

Each trial draws its N sources from its own counter-based stream keyed by
(seed, trial index), so the output does not depend on how trials are split
between workers.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .measures import SourceMeasure, sample_R
from .renorm import RenormPlan, SpaceConfig, plan as make_plan

BLOCK = 64  # trials per work item


class ResourceError(RuntimeError):
    """The ensemble could not be allocated or computed with the available resources."""


@dataclass(frozen=True)
class SampleEnsemble:
    cfg: SpaceConfig
    plan: RenormPlan
    measure: SourceMeasure
    trials: int
    forces: np.ndarray  # (trials, d)
    energies: np.ndarray  # (trials,)
    seed: int
    wall_time: float
    redraws: int
    backend: str


def realize_at(cfg: SpaceConfig, plan: RenormPlan, R_sources, test_position=None) -> tuple[np.ndarray, float]:
    """Force and energy for fixed sources, with the test particle moved by ``test_position``.

    Positions are in units of L_N.  Moving the test particle by t changes
    every relative position R_i into R_i + t.  Sums are exact-rounded.
    """
    R = np.atleast_2d(np.asarray(R_sources, dtype=float))
    if R.shape[1] != cfg.d:
        raise ValueError(f"sources must have {cfg.d} columns")
    if test_position is not None:
        R = R + np.asarray(test_position, dtype=float)
    r = np.linalg.norm(R, axis=1)
    V = R * (r ** (-cfg.delta - 1.0))[:, None]
    force = plan.a_N * np.array([math.fsum(V[:, j]) for j in range(cfg.d)])
    if cfg.delta == 1:
        energy = plan.b_N * math.fsum(-np.log(r)) - len(r) * plan.b_N * math.log(plan.L_N)
    else:
        energy = plan.b_N * math.fsum(r ** (1.0 - cfg.delta))
    return force, energy


def realize_one(cfg: SpaceConfig, plan: RenormPlan, measure: SourceMeasure,
                stream: np.random.Generator) -> tuple[np.ndarray, float]:
    """One realization with N = plan.N sources drawn from ``stream``."""
    R = sample_R(measure, plan.N, stream)
    guard = 1e-12 * measure.scale
    small = np.linalg.norm(R, axis=1) < guard
    while small.any():
        R[small] = sample_R(measure, int(small.sum()), stream)
        small = np.linalg.norm(R, axis=1) < guard
    return realize_at(cfg, plan, R)


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def run_ensemble(cfg: SpaceConfig, plan: RenormPlan, measure: SourceMeasure, trials: int, seed: int,
                 workers: Optional[int] = None, backend: Optional[str] = None) -> SampleEnsemble:
    """``trials`` independent realizations; bitwise reproducible for fixed (seed, trials, backend)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if measure.d != cfg.d:
        raise ValueError(f"measure has d={measure.d} but configuration has d={cfg.d}")
    seed = _check_seed(seed)
    workers = max(1, int(workers or os.cpu_count() or 1))
    mod = kernels.get_backend(backend)
    d = cfg.d
    try:
        forces = np.empty((trials, d))
        energies = np.empty(trials)
        redraws = np.zeros(trials, dtype=np.int64)
    except MemoryError as exc:
        raise ResourceError(f"cannot allocate an ensemble of {trials} trials") from exc
    base = kernels.base_key(seed)
    kind = kernels.KIND_CODES[measure.kind]
    offset = measure.offset_array
    dcode = kernels.delta_code(cfg.delta)
    drift = -plan.N * plan.b_N * math.log(plan.L_N) if cfg.delta == 1 else 0.0

    def work(t0: int) -> None:
        n = min(BLOCK, trials - t0)
        mod.simulate_block(base, t0, n, plan.N, d, kind, float(measure.scale), offset, float(cfg.delta),
                           dcode, float(plan.a_N), float(plan.b_N), drift,
                           forces[t0:t0 + n], energies[t0:t0 + n], redraws[t0:t0 + n])

    starts = range(0, trials, BLOCK)
    t_start = time.perf_counter()
    try:
        if workers == 1:
            for t0 in starts:
                work(t0)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(work, starts))
    except MemoryError as exc:
        raise ResourceError("ran out of memory while simulating; no partial ensemble returned") from exc
    wall = time.perf_counter() - t_start
    if not (np.all(np.isfinite(forces)) and np.all(np.isfinite(energies))):
        raise FloatingPointError("non-finite force or energy in the ensemble")
    return SampleEnsemble(cfg=cfg, plan=plan, measure=measure, trials=trials, forces=forces,
                          energies=energies, seed=seed, wall_time=wall, redraws=int(redraws.sum()),
                          backend=kernels.backend_name(mod))


def sweep_N(cfg: SpaceConfig, K: float, K_prime: float, measure: SourceMeasure, N_grid: Sequence[int],
            trials: int, seed: int, coupling_sign: int = 1, workers: Optional[int] = None,
            backend: Optional[str] = None) -> list[SampleEnsemble]:
    """One ensemble per N, with the plan recomputed and an independent stream per N."""
    N_grid = [int(n) for n in N_grid]
    if any(b <= a for a, b in zip(N_grid, N_grid[1:])):
        raise ValueError("N_grid must be strictly ascending")
    plans = [make_plan(cfg, K, K_prime, N, coupling_sign) for N in N_grid]
    return [run_ensemble(cfg, p, measure, trials, kernels.derive_seed(seed, p.N), workers, backend)
            for p in plans]
