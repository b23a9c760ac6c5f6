"""Command-line runner.

Subcommands: renorm, simulate, cf, cf-compare, tailfit, experiment.
Exit codes: 0 success, 1 unexpected stage failure, 2 configuration error,
3 failed experiment check (or non-finite numerics), 4 resource failure.
"""
from __future__ import annotations

import argparse
import math
import os
import platform
import sys
import warnings
from typing import Optional, Sequence

import numpy as np

from . import __version__, fileio, kernels
from .analyze import (cf_compare, default_z_grid, force_width, grid_along, hill_sensitivity,
                      hill_tail_exponent, scaling_fit, z_directions)
from .config import ConfigError, ExperimentConfig, from_raw, merge, read_raw
from .measures import MomentUndefinedError, moments, sample_R
from .renorm import RegimeWarning, RenormRangeError, plan as make_plan
from .simulate import ResourceError, run_ensemble
from .stable import energy_law, force_law

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CHECK, EXIT_RESOURCE = 0, 1, 2, 3, 4
HILL_DRAWS = 10**6
HILL_TOL = 0.10
SLOPE_TOL = 0.05

# flag -> (section, key)
FLAG_KEYS = {
    "d": ("space", "d"), "delta": ("space", "delta"),
    "kind": ("measure", "kind"), "radius": ("measure", "radius"), "scale": ("measure", "scale"),
    "offset": ("measure", "offset"),
    "K": ("renorm", "K"), "K_prime": ("renorm", "K_prime"), "coupling_sign": ("renorm", "coupling_sign"),
    "N_grid": ("run", "N_grid"), "trials": ("run", "trials"), "seed": ("run", "seed"),
    "workers": ("run", "workers"), "output_dir": ("run", "output_dir"), "z_grid": ("run", "z_grid"),
}


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")
        self.stage = stage
        self.cause = exc


# ---------------------------------------------------------------------------
# configuration from file and flags

def add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (flags override the file)")
    g.add_argument("--config", help="INI configuration file")
    g.add_argument("--d", help="spatial dimension")
    g.add_argument("--delta", help="force exponent")
    g.add_argument("--kind", help="measure kind: uniform_ball, gaussian, shifted_uniform_ball")
    g.add_argument("--radius", help="ball radius")
    g.add_argument("--scale", help="gaussian scale")
    g.add_argument("--offset", help="comma-separated offset of the ball centre")
    g.add_argument("--K", dest="K", help="force renormalization constant")
    g.add_argument("--K-prime", dest="K_prime", help="energy renormalization constant")
    g.add_argument("--coupling-sign", dest="coupling_sign", help="+1 or -1")
    g.add_argument("--N-grid", dest="N_grid", help="comma-separated ascending N values")
    g.add_argument("--trials", help="trials per N")
    g.add_argument("--seed", help="64-bit seed")
    g.add_argument("--workers", help="worker threads (default: detected cores)")
    g.add_argument("--output-dir", dest="output_dir", help="output directory (default: $%s)" % "POINTFIELD_OUTPUT_DIR")
    g.add_argument("--z-grid", dest="z_grid", help="comma-separated |z| magnitudes")


def load_config(args, defaults: Optional[dict] = None) -> ExperimentConfig:
    raw: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = read_raw(fh.read())
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config!r}: {exc.strerror}") from None
    if defaults:
        raw = merge(defaults, raw)
    overrides: dict = {}
    for attr, (sec, key) in FLAG_KEYS.items():
        val = getattr(args, attr, None)
        if val is not None:
            overrides.setdefault(sec, {})[key] = val
    return from_raw(merge(raw, overrides))


def _space(cfg: ExperimentConfig):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        return cfg.space


# ---------------------------------------------------------------------------
# stage helpers shared by the subcommands

PLAN_HEADER = ["N", "L_N", "k_N", "a_N", "b_N", "sigma_N", "sigma_p_N"]


def plan_rows(cfg: ExperimentConfig):
    space = _space(cfg)
    rows = []
    for N in cfg.N_grid:
        r = make_plan(space, cfg.K, cfg.K_prime, N, cfg.coupling_sign).row()
        rows.append([r[h] for h in PLAN_HEADER])
    return rows


def sample_meta(cfg: ExperimentConfig, p, ens) -> dict:
    return {
        "d": cfg.d, "delta": cfg.delta, "kind": cfg.kind, "scale": cfg.scale, "offset": list(cfg.offset),
        "K": cfg.K, "K_prime": cfg.K_prime, "coupling_sign": cfg.coupling_sign, "N": p.N,
        "L_N": p.L_N, "k_N": p.k_N, "a_N": p.a_N, "b_N": p.b_N, "seed": ens.seed, "trials": ens.trials,
        "backend": ens.backend, "redraws": ens.redraws,
    }


def force_grid(cfg: ExperimentConfig, law) -> np.ndarray:
    if cfg.z_grid is None:
        return default_z_grid(law.width, cfg.d)
    return grid_along(cfg.z_grid, cfg.d)


def energy_grid(cfg: ExperimentConfig, law) -> np.ndarray:
    return default_z_grid(law.width) if cfg.z_grid is None else np.asarray(cfg.z_grid)


def cf_rows(N: int, target: str, z: np.ndarray, grid, branch: str, n_dirs: int):
    """Rows (N, target, direction, |z|, re_emp, im_emp, re_theo, im_theo, abs_dev, branch)."""
    mags = np.linalg.norm(z, axis=1) if z.ndim == 2 else np.abs(z)
    per = len(mags) // n_dirs
    dev = np.abs(grid.empirical - grid.theoretical)
    return [[N, target, i // per, mags[i], grid.empirical[i].real, grid.empirical[i].imag,
             grid.theoretical[i].real, grid.theoretical[i].imag, dev[i], branch] for i in range(len(mags))]


CF_HEADER = ["N", "target", "direction", "z_abs", "re_emp", "im_emp", "re_theo", "im_theo", "abs_dev", "branch"]


def n_directions(d: int) -> int:
    return len(z_directions(d))


# ---------------------------------------------------------------------------
# experiment

def _versions() -> dict:
    import scipy

    out = {"pointfield": __version__, "python": platform.python_version(), "numpy": np.__version__,
           "scipy": scipy.__version__}
    try:
        import numba

        out["numba"] = numba.__version__
    except ImportError:  # pragma: no cover
        out["numba"] = None
    return out


def run_experiment(cfg: ExperimentConfig, log=print) -> int:
    """classify -> plan -> simulate -> analyze -> emit.  Returns the exit status."""
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    manifest = {
        "config": cfg.output_fields(), "config_hash": cfg.config_hash(), "seed": cfg.seed,
        "versions": _versions(), "backend": kernels.backend_name(), "status": "incomplete", "files": {},
    }
    mpath = os.path.join(out, "manifest.json")
    fileio.write_json(mpath, manifest)
    files: list[str] = []
    stage = "classify"
    try:
        space = _space(cfg)
        stage = "plan"
        fileio.write_csv(os.path.join(out, "plan.csv"), PLAN_HEADER, plan_rows(cfg))
        files.append("plan.csv")
        stage = "moments"
        mom = moments(cfg.measure, space)
        results = []
        for N in cfg.N_grid:
            stage = f"simulate N={N}"
            p = make_plan(space, cfg.K, cfg.K_prime, N, cfg.coupling_sign)
            ens = run_ensemble(space, p, cfg.measure, cfg.trials, kernels.derive_seed(cfg.seed, N), cfg.workers)
            name = f"samples-N{N}.csv"
            fileio.write_text(os.path.join(out, name), fileio.samples_text(sample_meta(cfg, p, ens),
                                                                           ens.forces, ens.energies))
            files.append(name)
            stage = f"analyze N={N}"
            flaw = force_law(p, space, mom)
            elaw = energy_law(p, space, mom)
            zf = force_grid(cfg, flaw)
            ze = energy_grid(cfg, elaw)
            gf = cf_compare(ens.forces, zf, flaw.cf(zf))
            ge = cf_compare(ens.energies, ze, elaw.cf(ze))
            rows = cf_rows(N, "force", zf, gf, flaw.branch, n_directions(cfg.d))
            rows += cf_rows(N, "energy", ze, ge, elaw.branch, 1)
            name = f"cf-N{N}.csv"
            fileio.write_csv(os.path.join(out, name), CF_HEADER, rows)
            files.append(name)
            results.append({
                "N": N, "force_iqr": force_width(ens.forces), "sigma_N": p.sigma_N if p.sigma_defined else None,
                "sigma_p_N": p.sigma_p_N if p.sigma_p_defined else None,
                "force_mean": ens.forces.mean(axis=0), "energy_mean": float(ens.energies.mean()),
                "energy_median": float(np.median(ens.energies)),
                "cf_force_dev": gf.max_abs_dev, "cf_energy_dev": ge.max_abs_dev, "mc_bound": gf.mc_bound,
                "force_branch": flaw.branch, "energy_branch": elaw.branch, "redraws": ens.redraws,
            })
            log(f"N={N}: force IQR {results[-1]['force_iqr']:.6g}, CF deviation {gf.max_abs_dev:.4g} "
                f"(bound {gf.mc_bound:.4g})")
        stage = "fits"
        fits = _fits(cfg, space, results)
        fileio.write_json(os.path.join(out, "fits.json"), fits)
        files.append("fits.json")
    except (MemoryError, ResourceError) as exc:
        return _abort(mpath, manifest, out, files, stage, exc, EXIT_RESOURCE, log)
    except (RenormRangeError, MomentUndefinedError, ConfigError) as exc:
        return _abort(mpath, manifest, out, files, stage, exc, EXIT_CONFIG, log)
    except FloatingPointError as exc:
        return _abort(mpath, manifest, out, files, stage, exc, EXIT_CHECK, log)
    except Exception as exc:  # noqa: BLE001
        return _abort(mpath, manifest, out, files, stage, exc, EXIT_FAIL, log)
    manifest["files"] = {f: fileio.sha256_file(os.path.join(out, f)) for f in files}
    failed = [c["name"] for c in fits["checks"] if not c["passed"]]
    manifest["status"] = "complete"
    manifest["checks_failed"] = failed
    fileio.write_json(mpath, manifest)
    for c in fits["checks"]:
        log(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['value']:.6g} "
            f"(expected {c['expected']:.6g} +/- {c['tolerance']:.3g})")
    return EXIT_CHECK if failed else EXIT_OK


def _abort(mpath, manifest, out, files, stage, exc, code, log) -> int:
    manifest["status"] = "incomplete"
    manifest["failed_stage"] = stage
    manifest["error"] = f"{type(exc).__name__}: {exc}"
    manifest["files"] = {f: fileio.sha256_file(os.path.join(out, f)) for f in files}
    fileio.write_json(mpath, manifest)
    log(f"error [{stage}] {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def _fits(cfg: ExperimentConfig, space, results: list) -> dict:
    alpha = space.alpha
    rng = np.random.default_rng(kernels.derive_seed(cfg.seed, 0x7A11))
    R = sample_R(cfg.measure, HILL_DRAWS, rng)
    mags = np.linalg.norm(R, axis=1) ** (-space.delta)
    a_hat, a_se = hill_tail_exponent(mags, 0.05)
    sens = hill_sensitivity(mags)
    checks = [{"name": "hill_tail_exponent", "value": a_hat, "expected": alpha, "tolerance": HILL_TOL * alpha,
               "passed": abs(a_hat - alpha) <= HILL_TOL * alpha}]
    fits = {
        "regime": space.regime.value, "alpha": alpha, "alpha_p": space.alpha_p,
        "tail": {"alpha_hat": a_hat, "stderr": a_se, "k_fraction": 0.05, "draws": HILL_DRAWS,
                 "sensitivity": {str(k): {"alpha_hat": v[0], "stderr": v[1]}
                                 for k, v in sens["estimates"].items()},
                 "relative_spread": sens["relative_spread"], "power_tail": sens["power_tail"]},
        "per_N": results,
    }
    Ns = [r["N"] for r in results]
    if len(Ns) >= 3 and math.log10(Ns[-1] / Ns[0]) >= 2:
        slope, se = scaling_fit(Ns, [r["force_iqr"] for r in results])
        if alpha < 1:
            expected = 0.0
        else:
            expected, _ = scaling_fit(Ns, [r["sigma_N"] for r in results])
        fits["force_width_fit"] = {"slope": slope, "stderr": se, "expected_slope": expected}
        checks.append({"name": "force_width_slope", "value": slope, "expected": expected,
                       "tolerance": SLOPE_TOL, "passed": abs(slope - expected) <= SLOPE_TOL})
    fits["checks"] = checks
    return fits


# ---------------------------------------------------------------------------
# subcommands

RENORM_DEFAULTS = {"measure": {"kind": "uniform_ball", "radius": "1"}, "run": {"trials": "1", "seed": "0"}}


def cmd_renorm(args) -> int:
    cfg = load_config(args, RENORM_DEFAULTS)
    _emit(args.out, fileio.csv_text(PLAN_HEADER, plan_rows(cfg)))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args)
    space = _space(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    for N in ([args.N] if args.N else cfg.N_grid):
        p = make_plan(space, cfg.K, cfg.K_prime, N, cfg.coupling_sign)
        ens = run_ensemble(space, p, cfg.measure, cfg.trials, kernels.derive_seed(cfg.seed, N), cfg.workers)
        path = os.path.join(cfg.output_dir, f"samples-N{N}.csv")
        fileio.write_text(path, fileio.samples_text(sample_meta(cfg, p, ens), ens.forces, ens.energies))
        print(path)
    return EXIT_OK


def cmd_cf(args) -> int:
    cfg = load_config(args, {"run": {"trials": "1", "seed": "0"}})
    space = _space(cfg)
    mom = moments(cfg.measure, space)
    rows = []
    for N in ([args.N] if args.N else cfg.N_grid):
        p = make_plan(space, cfg.K, cfg.K_prime, N, cfg.coupling_sign)
        if args.target == "force":
            law = force_law(p, space, mom)
            z = force_grid(cfg, law)
            nd = n_directions(cfg.d)
            mags = np.linalg.norm(z, axis=1)
        else:
            law = energy_law(p, space, mom)
            z = energy_grid(cfg, law)
            nd = 1
            mags = np.abs(z)
        vals = law.cf(z)
        per = len(mags) // nd
        rows += [[mags[i], i // per, vals[i].real, vals[i].imag, law.branch, N] for i in range(len(mags))]
    _emit(args.out, fileio.csv_text(["z_abs", "direction", "re", "im", "branch", "N"], rows))
    return EXIT_OK


def cmd_cf_compare(args) -> int:
    cfg = load_config(args, {"run": {"trials": "1", "seed": "0"}})
    meta, forces, energies = fileio.read_samples(args.samples)
    N = int(meta["N"])
    space = _space(cfg)
    p = make_plan(space, cfg.K, cfg.K_prime, N, cfg.coupling_sign)
    mom = moments(cfg.measure, space)
    if args.target == "force":
        law = force_law(p, space, mom)
        z = force_grid(cfg, law)
        grid = cf_compare(forces, z, law.cf(z))
        rows = cf_rows(N, "force", z, grid, law.branch, n_directions(cfg.d))
    else:
        law = energy_law(p, space, mom)
        z = energy_grid(cfg, law)
        grid = cf_compare(energies, z, law.cf(z))
        rows = cf_rows(N, "energy", z, grid, law.branch, 1)
    _emit(args.out, fileio.csv_text(CF_HEADER, rows))
    print(f"max |emp - theo| = {grid.max_abs_dev:.6g}, bound 4/sqrt(n) = {grid.mc_bound:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_tailfit(args) -> int:
    if args.samples:
        _, forces, energies = fileio.read_samples(args.samples)
        mags = np.linalg.norm(forces, axis=1) if args.column == "force" else np.abs(energies)
        source = f"{args.column}:{args.samples}"
    else:
        cfg = load_config(args, {"run": {"trials": "1", "seed": "0", "N_grid": "1"},
                                 "renorm": {"K": "1", "K_prime": "1"}})
        rng = np.random.default_rng(kernels.derive_seed(cfg.seed, 0x7A11))
        R = sample_R(cfg.measure, args.draws, rng)
        mags = np.linalg.norm(R, axis=1) ** (-cfg.delta)
        source = "V"
    mags = mags[mags > 0]
    sens = hill_sensitivity(mags, tuple(args.k_fractions))
    rows = [[source, k, a, se] for k, (a, se) in sens["estimates"].items()]
    text = fileio.csv_text(["source", "k_fraction", "alpha_hat", "stderr"], rows)
    text += f"# relative_spread = {fileio.fmt(sens['relative_spread'])}\n# power_tail = {fileio.fmt(sens['power_tail'])}\n"
    _emit(args.out, text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = load_config(args)
    return run_experiment(cfg)


def _emit(path: Optional[str], text: str) -> None:
    if path:
        fileio.write_text(path, text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pointfield", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"pointfield {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("renorm", help="renormalization constants over the N grid as CSV")
    add_config_flags(p)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_renorm)

    p = sub.add_parser("simulate", help="run ensembles and write samples-N<k>.csv files")
    add_config_flags(p)
    p.add_argument("--N", type=int, help="single N instead of the whole grid")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cf", help="theoretical characteristic function on the z grid")
    add_config_flags(p)
    p.add_argument("--target", choices=("force", "energy"), default="force")
    p.add_argument("--N", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("cf-compare", help="empirical vs theoretical CF for a samples file")
    add_config_flags(p)
    p.add_argument("--samples", required=True)
    p.add_argument("--target", choices=("force", "energy"), default="force")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cf_compare)

    p = sub.add_parser("tailfit", help="Hill tail-exponent estimates")
    add_config_flags(p)
    p.add_argument("--samples", help="samples file; otherwise draw |V| from the configured measure")
    p.add_argument("--column", choices=("force", "energy"), default="force")
    p.add_argument("--draws", type=int, default=HILL_DRAWS)
    p.add_argument("--k-fractions", dest="k_fractions", type=float, nargs="+", default=[0.02, 0.05, 0.1])
    p.add_argument("--out")
    p.set_defaults(func=cmd_tailfit)

    p = sub.add_parser("experiment", help="full pipeline with manifest and checks")
    add_config_flags(p)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, RenormRangeError, MomentUndefinedError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResourceError, MemoryError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except FloatingPointError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
