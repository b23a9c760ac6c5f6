"""numba kernels.  Same stream and per-source arithmetic as the numpy fallback."""
import math

import numpy as np
from numba import njit

GOLD = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
TWO_M53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True, inline="always")
def _mix(z):
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


@njit(cache=True, nogil=True)
def trial_key(base, trial):
    return _mix(base ^ _mix(np.uint64(trial) + GOLD))


@njit(cache=True, nogil=True, inline="always")
def _uniform(c):
    # c is the counter state key + i*GOLD; the draw is uniform on the open interval (0, 1)
    return (float(_mix(c) >> S11) + 0.5) * TWO_M53


@njit(cache=True, nogil=True, inline="always")
def _draw(c, d, kind, scale, offset, guard2, R):
    """Fill R with one source position; returns (counter state, redraws)."""
    redraws = 0
    while True:
        if kind == 0:
            a2 = scale * scale
            while True:
                r2 = 0.0
                for j in range(d):
                    c += GOLD
                    v = (2.0 * _uniform(c) - 1.0) * scale
                    R[j] = v
                    r2 += v * v
                if r2 < a2:
                    break
            for j in range(d):
                R[j] -= offset[j]
        else:
            j = 0
            while j < d:
                while True:
                    c += GOLD
                    v1 = 2.0 * _uniform(c) - 1.0
                    c += GOLD
                    v2 = 2.0 * _uniform(c) - 1.0
                    s = v1 * v1 + v2 * v2
                    if s < 1.0 and s > 0.0:
                        break
                f = math.sqrt(-2.0 * math.log(s) / s)
                R[j] = scale * v1 * f
                if j + 1 < d:
                    R[j + 1] = scale * v2 * f
                j += 2
        r2 = 0.0
        for j in range(d):
            r2 += R[j] * R[j]
        if r2 >= guard2:
            return c, redraws
        redraws += 1


@njit(cache=True, nogil=True, inline="always")
def _weights(r2, delta, dcode):
    """(|R|^(-delta-1), U) with U = |R|^(1-delta), or -ln|R| for delta = 1."""
    if dcode == 2:
        ir = 1.0 / math.sqrt(r2)
        return ir * ir * ir, ir
    if dcode == 3:
        ir2 = 1.0 / r2
        return ir2 * ir2, ir2
    if dcode == 1:
        return 1.0 / r2, -0.5 * math.log(r2)
    return r2 ** (-0.5 * (delta + 1.0)), r2 ** (0.5 * (1.0 - delta))


@njit(cache=True, nogil=True)
def simulate_block(base, t0, count, N, d, kind, scale, offset, delta, dcode, a_N, b_N, drift,
                   forces, energies, redraws):
    """Trials t0 .. t0+count-1 written to rows 0 .. count-1 of the outputs."""
    guard2 = (1e-12 * scale) ** 2
    R = np.empty(d)
    fs = np.empty(d)
    fc = np.empty(d)
    for t in range(count):
        c = trial_key(base, t0 + t)
        nred = 0
        for j in range(d):
            fs[j] = 0.0
            fc[j] = 0.0
        es = 0.0
        ec = 0.0
        for _ in range(N):
            c, rd = _draw(c, d, kind, scale, offset, guard2, R)
            nred += rd
            r2 = 0.0
            for j in range(d):
                r2 += R[j] * R[j]
            w, u = _weights(r2, delta, dcode)
            # Neumaier compensated accumulation
            for j in range(d):
                x = R[j] * w
                s = fs[j] + x
                if abs(fs[j]) >= abs(x):
                    fc[j] += (fs[j] - s) + x
                else:
                    fc[j] += (x - s) + fs[j]
                fs[j] = s
            s = es + u
            if abs(es) >= abs(u):
                ec += (es - s) + u
            else:
                ec += (u - s) + es
            es = s
        for j in range(d):
            forces[t, j] = a_N * (fs[j] + fc[j])
        energies[t] = b_N * (es + ec) + drift
        redraws[t] = nred


@njit(cache=True, nogil=True)
def draw_sources(base, trial, N, d, kind, scale, offset):
    """The N source positions of one trial, as used by simulate_block."""
    c = trial_key(base, trial)
    guard2 = (1e-12 * scale) ** 2
    out = np.empty((N, d))
    R = np.empty(d)
    for i in range(N):
        c, _ = _draw(c, d, kind, scale, offset, guard2, R)
        for j in range(d):
            out[i, j] = R[j]
    return out
