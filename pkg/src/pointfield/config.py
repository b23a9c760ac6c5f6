"""Experiment configuration: an INI file with four flat sections.

    [space]    d, delta
    [measure]  kind, radius (balls) or scale (gaussian), offset (shifted ball)
    [renorm]   K, K_prime, coupling_sign
    [run]      N_grid, trials, seed, workers, output_dir, z_grid

Lists are comma separated.  Unknown keys are errors.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Optional

from .measures import KINDS, SourceMeasure
from .renorm import RenormRangeError, classify, plan

ENV_OUTPUT_DIR = "POINTFIELD_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "pointfield-out"

SCHEMA = {
    "space": ("d", "delta"),
    "measure": ("kind", "radius", "scale", "offset"),
    "renorm": ("K", "K_prime", "coupling_sign"),
    "run": ("N_grid", "trials", "seed", "workers", "output_dir", "z_grid"),
}
REQUIRED = [("space", "d"), ("space", "delta"), ("measure", "kind"), ("renorm", "K"),
            ("renorm", "K_prime"), ("run", "N_grid"), ("run", "trials"), ("run", "seed")]
# keys that cannot change any output file
NON_OUTPUT_KEYS = ("workers", "output_dir")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    delta: float
    kind: str
    scale: float
    offset: tuple
    K: float
    K_prime: float
    coupling_sign: int
    N_grid: tuple
    trials: int
    seed: int
    workers: int = 1
    output_dir: str = DEFAULT_OUTPUT_DIR
    z_grid: Optional[tuple] = field(default=None)

    @property
    def measure(self) -> SourceMeasure:
        return SourceMeasure(self.kind, self.d, self.scale, self.offset)

    @property
    def space(self):
        return classify(self.d, self.delta)

    def output_fields(self) -> dict:
        data = asdict(self)
        for k in NON_OUTPUT_KEYS:
            data.pop(k)
        return data

    def config_hash(self) -> str:
        """sha256 over every field that can influence the outputs."""
        blob = json.dumps(self.output_fields(), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def serialize(cfg: ExperimentConfig) -> str:
    """INI text that parses back to ``cfg``."""
    size_key = "scale" if cfg.kind == "gaussian" else "radius"
    lines = ["[space]", f"d = {cfg.d}", f"delta = {cfg.delta!r}", "",
             "[measure]", f"kind = {cfg.kind}", f"{size_key} = {cfg.scale!r}"]
    if cfg.kind == "shifted_uniform_ball":
        lines.append(f"offset = {_fmt(cfg.offset)}")
    lines += ["", "[renorm]", f"K = {cfg.K!r}", f"K_prime = {cfg.K_prime!r}",
              f"coupling_sign = {cfg.coupling_sign}", "",
              "[run]", f"N_grid = {_fmt(cfg.N_grid)}", f"trials = {cfg.trials}", f"seed = {cfg.seed}",
              f"workers = {cfg.workers}", f"output_dir = {cfg.output_dir}"]
    if cfg.z_grid is not None:
        lines.append(f"z_grid = {_fmt(cfg.z_grid)}")
    return "\n".join(lines) + "\n"


def read_raw(text: str) -> dict:
    """Parse INI text into {section: {key: str}} with schema checks on names only."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    raw: dict = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]; expected one of {sorted(SCHEMA)}")
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key}; allowed keys are {', '.join(SCHEMA[sec])}")
            raw.setdefault(sec, {})[key] = val.strip()
    return raw


def merge(raw: dict, overrides: Mapping[str, Mapping[str, str]]) -> dict:
    out = {s: dict(v) for s, v in raw.items()}
    for sec, kv in overrides.items():
        for k, v in kv.items():
            if v is not None:
                out.setdefault(sec, {})[k] = str(v)
    return out


def _num(raw, sec, key, conv, check, what):
    text = raw[sec][key]
    try:
        val = conv(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {text!r} as {conv.__name__}") from None
    if conv is float and not math.isfinite(val):
        raise ConfigError(f"{key}: must be finite, got {text!r}")
    if not check(val):
        raise ConfigError(f"{key}: {what}, got {text!r}")
    return val


def _list(raw, sec, key, conv):
    parts = [p.strip() for p in raw[sec][key].replace("[", "").replace("]", "").split(",") if p.strip()]
    try:
        return tuple(conv(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw[sec][key]!r} as a list of {conv.__name__}") from None


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        v = float(text)  # allow 1e4 style integers
        if not v.is_integer():
            raise
        return int(v)


_int.__name__ = "int"


def from_raw(raw: dict) -> ExperimentConfig:
    missing = [f"{s}.{k}" for s, k in REQUIRED if k not in raw.get(s, {})]
    m = raw.get("measure", {})
    kind = m.get("kind")
    if kind in ("uniform_ball", "shifted_uniform_ball") and "radius" not in m:
        missing.append("measure.radius")
    if kind == "gaussian" and "scale" not in m:
        missing.append("measure.scale")
    if kind == "shifted_uniform_ball" and "offset" not in m:
        missing.append("measure.offset")
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    d = _num(raw, "space", "d", _int, lambda v: v >= 1, "must be an integer >= 1")
    delta = _num(raw, "space", "delta", float, lambda v: v > 0, "must satisfy delta > 0")
    if kind not in KINDS:
        raise ConfigError(f"kind: must be one of {', '.join(KINDS)}, got {kind!r}")
    if kind == "gaussian" and "radius" in m:
        raise ConfigError("radius: not used by kind 'gaussian' (use scale)")
    if kind != "gaussian" and "scale" in m:
        raise ConfigError(f"scale: not used by kind {kind!r} (use radius)")
    if kind != "shifted_uniform_ball" and "offset" in m:
        raise ConfigError(f"offset: only valid for kind 'shifted_uniform_ball', not {kind!r}")
    size_key = "scale" if kind == "gaussian" else "radius"
    scale = _num(raw, "measure", size_key, float, lambda v: v > 0, "must be > 0")
    offset = _list(raw, "measure", "offset", float) if "offset" in m else ()
    if offset and len(offset) != d:
        raise ConfigError(f"offset: needs d={d} components, got {len(offset)}")
    if offset and not math.hypot(*offset) < scale:
        raise ConfigError("offset: must lie strictly inside the ball (|offset| < radius)")
    K = _num(raw, "renorm", "K", float, lambda v: v > 0, "must be > 0")
    K_prime = _num(raw, "renorm", "K_prime", float, lambda v: v > 0, "must be > 0")
    r = raw.get("renorm", {})
    sign = _num(raw, "renorm", "coupling_sign", _int, lambda v: v in (1, -1), "must be +1 or -1") \
        if "coupling_sign" in r else 1
    N_grid = _list(raw, "run", "N_grid", _int)
    if not N_grid or any(n < 1 for n in N_grid):
        raise ConfigError("N_grid: needs one or more integers >= 1")
    if any(b <= a for a, b in zip(N_grid, N_grid[1:])):
        raise ConfigError("N_grid: must be strictly ascending")
    trials = _num(raw, "run", "trials", _int, lambda v: v >= 1, "must be an integer >= 1")
    seed = _num(raw, "run", "seed", _int, lambda v: 0 <= v < 2**64, "must be a 64-bit unsigned integer")
    run = raw["run"]
    workers = _num(raw, "run", "workers", _int, lambda v: v >= 1, "must be an integer >= 1") \
        if "workers" in run else (os.cpu_count() or 1)
    output_dir = run.get("output_dir") or os.environ.get(ENV_OUTPUT_DIR) or DEFAULT_OUTPUT_DIR
    z_grid = None
    if "z_grid" in run:
        z_grid = _list(raw, "run", "z_grid", float)
        if not z_grid or any(not (math.isfinite(z) and z > 0) for z in z_grid):
            raise ConfigError("z_grid: needs one or more finite magnitudes > 0")

    cfg = ExperimentConfig(d=d, delta=delta, kind=kind, scale=scale, offset=offset, K=K, K_prime=K_prime,
                           coupling_sign=sign, N_grid=N_grid, trials=trials, seed=seed, workers=workers,
                           output_dir=output_dir, z_grid=z_grid)
    validate_plans(cfg)
    return cfg


def validate_plans(cfg: ExperimentConfig) -> None:
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        space = cfg.space
    for N in cfg.N_grid:
        try:
            plan(space, cfg.K, cfg.K_prime, N, cfg.coupling_sign)
        except RenormRangeError as exc:
            raise ConfigError(f"N_grid: {exc}") from None


def parse_config(text: str, overrides: Optional[Mapping[str, Mapping[str, str]]] = None) -> ExperimentConfig:
    """Validated configuration from INI text; ``overrides`` (section -> key -> text) take precedence."""
    raw = read_raw(text)
    if overrides:
        raw = merge(raw, overrides)
    return from_raw(raw)


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, **changes)
