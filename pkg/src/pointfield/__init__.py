"""Fluctuations of power-law forces and energies from random point sources.

N sources are drawn from a smooth measure around a test particle; the
renormalized total force and energy are compared with their stable or
Gaussian limit laws.
"""
__version__ = "0.1.0"

from .config import ConfigError, ExperimentConfig, parse_config, serialize  # noqa: E402
from .core_math import h_inverse, h_solve, lambda_energy, lambda_force, solid_angle, sphere_moment  # noqa: E402
from .measures import MeasureMoments, MomentUndefinedError, SourceMeasure, moments  # noqa: E402
from .renorm import (Regime, RegimeWarning, RenormPlan, RenormRangeError, SpaceConfig, classify,  # noqa: E402
                     gravity_case, plan, sigma_table)
from .simulate import ResourceError, SampleEnsemble, realize_at, realize_one, run_ensemble, sweep_N  # noqa: E402
from .stable import (GaussianLaw, LimitLawSpec, StableLaw, energy_law, force_law, sample_stable,  # noqa: E402
                     theoretical_cf_energy, theoretical_cf_force)

__all__ = [
    "ConfigError", "ExperimentConfig", "parse_config", "serialize",
    "h_inverse", "h_solve", "lambda_energy", "lambda_force", "solid_angle", "sphere_moment",
    "MeasureMoments", "MomentUndefinedError", "SourceMeasure", "moments",
    "Regime", "RegimeWarning", "RenormPlan", "RenormRangeError", "SpaceConfig", "classify", "gravity_case",
    "plan", "sigma_table",
    "ResourceError", "SampleEnsemble", "realize_at", "realize_one", "run_ensemble", "sweep_N",
    "GaussianLaw", "LimitLawSpec", "StableLaw", "energy_law", "force_law", "sample_stable",
    "theoretical_cf_energy", "theoretical_cf_force",
]
