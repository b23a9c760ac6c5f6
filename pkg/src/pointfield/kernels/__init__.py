"""Backend selection for the Monte Carlo kernels.

The numba backend is used when numba imports and POINTFIELD_DISABLE_NUMBA
is unset (or "0"); otherwise the pure-numpy fallback is used.  Both draw
identical source positions from the same counter-based streams.
"""
from __future__ import annotations

import importlib
import os
from types import ModuleType

import numpy as np

from . import _numpy

ENV_FLAG = "POINTFIELD_DISABLE_NUMBA"


def _want_numba() -> bool:
    return os.environ.get(ENV_FLAG, "0").strip().lower() in ("", "0", "false", "no")


_numba: ModuleType | None = None
if _want_numba():
    try:
        _numba = importlib.import_module(f"{__name__}._numba")
    except ImportError:  # pragma: no cover
        _numba = None

KIND_CODES = {"uniform_ball": 0, "shifted_uniform_ball": 0, "gaussian": 1}


def get_backend(name: str | None = None) -> ModuleType:
    """Kernel module for ``name`` ('numba' or 'numpy'); default follows the env flag."""
    if name is None:
        return _numba if _numba is not None else _numpy
    if name == "numpy":
        return _numpy
    if name == "numba":
        if _numba is None:
            raise RuntimeError(f"numba backend unavailable (not installed or {ENV_FLAG} set)")
        return _numba
    raise ValueError(f"unknown backend {name!r}")


def backend_name(mod: ModuleType | None = None) -> str:
    mod = mod or get_backend()
    return "numba" if mod is _numba and mod is not None else "numpy"


def base_key(seed: int) -> np.uint64:
    """Stream root for a 64-bit seed."""
    return np.uint64(_numpy.mix(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)))


def delta_code(delta: float) -> int:
    """Fast-path selector: 1, 2, 3 for those integer exponents, 0 otherwise."""
    return int(delta) if delta in (1.0, 2.0, 3.0) else 0


def derive_seed(seed: int, *tags: int) -> int:
    """Independent 64-bit seed for a labelled sub-experiment."""
    z = base_key(seed)
    for t in tags:
        z = _numpy.mix(np.uint64(z) ^ _numpy.mix(np.uint64(int(t) & 0xFFFFFFFFFFFFFFFF)))
    return int(z)
