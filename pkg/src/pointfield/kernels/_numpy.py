"""Pure-numpy fallback.

Consumes the same counter-based stream as the numba kernels.  Ball source
positions agree bit for bit; Gaussian ones can differ in the last bit
because numpy's vectorized log is not libm's.  Sums use a pairwise
error-free cascade instead of sequential compensation, so they agree to
rounding only.
"""
import math

import numpy as np

GOLD = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
TWO_M53 = 1.0 / 9007199254740992.0


def mix(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * M1
        z = (z ^ (z >> np.uint64(27))) * M2
    return z ^ (z >> np.uint64(31))


def trial_key(base, trial):
    with np.errstate(over="ignore"):
        return mix(np.uint64(base) ^ mix(np.uint64(trial) + GOLD))


def uniforms(key, start, count):
    """Uniforms number start .. start+count-1 of the stream ``key``."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = mix(np.uint64(key) + idx * GOLD)
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * TWO_M53


def _sqsum(v):
    # sequential over columns, matching the kernel's accumulation order
    r2 = v[:, 0] * v[:, 0]
    for j in range(1, v.shape[1]):
        r2 = r2 + v[:, j] * v[:, j]
    return r2


def _take(R, ok, need):
    """First ``need`` accepted rows and the guard rejections preceding the last of them."""
    idx = np.flatnonzero(ok)
    if len(idx) >= need:
        stop = idx[need - 1] + 1
        return R[idx[:need]], stop
    return R[idx], len(ok)


def _ball_sources(key, N, d, scale, offset, guard2):
    acc = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) / 2.0**d
    ctr = 0
    parts = []
    got = 0
    redraws = 0
    while got < N:
        need = N - got
        m = int(need / acc * 1.15) + 32
        v = (2.0 * uniforms(key, ctr, m * d).reshape(m, d) - 1.0) * scale
        inside = _sqsum(v) < scale * scale
        R = v - offset
        ok = inside & (_sqsum(R) >= guard2)
        rows, stop = _take(R, ok, need)
        redraws += int(np.count_nonzero(inside[:stop] & ~ok[:stop]))
        parts.append(rows)
        got += len(rows)
        ctr += m * d
    return np.concatenate(parts), redraws


def _gauss_sources(key, N, d, scale, guard2):
    m_pairs = (d + 1) // 2
    ctr = 0
    comps = []
    n_acc = 0
    want = N
    while True:
        while n_acc < want * m_pairs:
            m = int((want * m_pairs - n_acc) / (math.pi / 4) * 1.1) + 32
            u = uniforms(key, ctr, 2 * m).reshape(m, 2)
            ctr += 2 * m
            v1 = 2.0 * u[:, 0] - 1.0
            v2 = 2.0 * u[:, 1] - 1.0
            s = v1 * v1 + v2 * v2
            sel = (s < 1.0) & (s > 0.0)
            v1, v2, s = v1[sel], v2[sel], s[sel]
            f = np.sqrt(-2.0 * np.log(s) / s)
            comps.append(np.stack([scale * v1 * f, scale * v2 * f], axis=1))
            n_acc += len(s)
        pairs = np.concatenate(comps)
        n_src = len(pairs) // m_pairs
        R = pairs[: n_src * m_pairs].reshape(n_src, 2 * m_pairs)[:, :d]
        ok = _sqsum(R) >= guard2
        rows, stop = _take(R, ok, N)
        if len(rows) == N:
            return rows, int(np.count_nonzero(~ok[:stop]))
        want = N + (N - len(rows)) + 8


def sources(base, trial, N, d, kind, scale, offset):
    key = trial_key(base, trial)
    guard2 = (1e-12 * scale) ** 2
    if kind == 0:
        return _ball_sources(key, N, d, scale, np.asarray(offset, dtype=float), guard2)
    return _gauss_sources(key, N, d, scale, guard2)


def draw_sources(base, trial, N, d, kind, scale, offset):
    return sources(base, trial, N, d, kind, scale, offset)[0]


def csum(x):
    """Sum along axis 0 by a pairwise cascade of error-free TwoSum steps."""
    s = np.asarray(x, dtype=float)
    e = np.zeros_like(s)
    while s.shape[0] > 1:
        if s.shape[0] % 2:
            pad = np.zeros((1,) + s.shape[1:])
            s = np.concatenate([s, pad])
            e = np.concatenate([e, pad])
        a, b = s[0::2], s[1::2]
        t = a + b
        bp = t - a
        err = (a - (t - bp)) + (b - bp)
        e = e[0::2] + e[1::2] + err
        s = t
    return s[0] + e[0]


def weights(r2, delta, dcode):
    if dcode == 2:
        ir = 1.0 / np.sqrt(r2)
        return ir * ir * ir, ir
    if dcode == 3:
        ir2 = 1.0 / r2
        return ir2 * ir2, ir2
    if dcode == 1:
        return 1.0 / r2, -0.5 * np.log(r2)
    return r2 ** (-0.5 * (delta + 1.0)), r2 ** (0.5 * (1.0 - delta))


def simulate_block(base, t0, count, N, d, kind, scale, offset, delta, dcode, a_N, b_N, drift,
                   forces, energies, redraws):
    for t in range(count):
        R, nred = sources(base, t0 + t, N, d, kind, scale, offset)
        w, u = weights(_sqsum(R), delta, dcode)
        forces[t] = a_N * csum(R * w[:, None])
        energies[t] = b_N * csum(u) + drift
        redraws[t] = nred
