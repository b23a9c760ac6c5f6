"""Time the Monte Carlo kernel on the numba and numpy backends.

Both backends draw the same source positions, so the timings compare the
same work.  Prints ns per source draw and the speedup.

    python3 benchmarks/bench_kernels.py --N 1000 --trials 2000 --repeat 3
"""
import argparse
import time
import warnings

import numpy as np

from pointfield import kernels
from pointfield.measures import SourceMeasure
from pointfield.renorm import classify, plan
from pointfield.simulate import run_ensemble

CASES = [
    (3, 2.0, "uniform_ball"),
    (2, 2.0, "gaussian"),
    (1, 3.0, "uniform_ball"),
    (3, 2.7, "shifted_uniform_ball"),  # generic delta path
]


def time_case(d, delta, kind, N, trials, repeat, backend):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = classify(d, delta)
    offset = (0.3,) + (0.0,) * (d - 1) if kind == "shifted_uniform_ball" else ()
    m = SourceMeasure(kind, d, 1.0, offset)
    p = plan(cfg, 1.0, 1.0, N)
    run_ensemble(cfg, p, m, min(trials, 64), 0, workers=1, backend=backend)  # warm up / compile
    best = np.inf
    for r in range(repeat):
        t0 = time.perf_counter()
        ens = run_ensemble(cfg, p, m, trials, r, workers=1, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, ens


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=1000)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    have_numba = kernels.get_backend() is not kernels._numpy
    if not have_numba:
        print(f"numba backend unavailable ({kernels.ENV_FLAG} set or numba missing); numpy only")
    draws = args.N * args.trials
    print(f"{'case':<34}{'numpy ns/draw':>15}{'numba ns/draw':>15}{'speedup':>9}{'max |diff|':>12}")
    for d, delta, kind in CASES:
        t_np, e_np = time_case(d, delta, kind, args.N, args.trials, args.repeat, "numpy")
        label = f"d={d} delta={delta:g} {kind}"
        if not have_numba:
            print(f"{label:<34}{1e9 * t_np / draws:>15.1f}{'-':>15}{'-':>9}{'-':>12}")
            continue
        t_nb, e_nb = time_case(d, delta, kind, args.N, args.trials, args.repeat, "numba")
        diff = max(np.max(np.abs(e_np.forces - e_nb.forces)), np.max(np.abs(e_np.energies - e_nb.energies)))
        print(f"{label:<34}{1e9 * t_np / draws:>15.1f}{1e9 * t_nb / draws:>15.1f}{t_np / t_nb:>8.1f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()
