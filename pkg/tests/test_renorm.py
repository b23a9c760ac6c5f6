import math

import numpy as np
import pytest

from pointfield.core_math import h_solve
from pointfield.renorm import (Regime, RegimeWarning, RenormRangeError, classify, gravity_case, plan,
                               sigma_table)

H_001 = 0.0015449323988273456017  # bisection oracle for h(0.01), 40-digit arithmetic

REGIMES = [((3, 2.0), Regime.MEAN_FIELD), ((2, 2.0), Regime.SINGULAR_D), ((2, 2.5), Regime.MIXED),
           ((1, 2.0), Regime.SINGULAR_D1), ((1, 3.0), Regime.THERMODYNAMIC)]
NS = [10**k for k in range(1, 7)]


@pytest.mark.parametrize("args,regime", REGIMES)
def test_classify_regimes(args, regime):
    assert classify(*args).regime is regime


def test_classify_examples():
    c = classify(3, 2)
    assert (c.alpha, c.alpha_p) == (1.5, 3.0)
    c = classify(2, 2)
    assert (c.alpha, c.alpha_p) == (1.0, 2.0)
    c = classify(1, 2)
    assert (c.alpha, c.alpha_p) == (0.5, 1.0)


def test_classify_snaps_decimals():
    assert classify(2, 2.0 + 1e-13).regime is Regime.SINGULAR_D
    assert classify(2, 3.0 * (1 - 1e-13)).regime is Regime.SINGULAR_D1
    assert classify(2, 2.0 + 1e-9).regime is Regime.MIXED


def test_classify_warns_small_delta():
    with pytest.warns(RegimeWarning):
        c = classify(3, 0.5)
    assert c.alpha_p is None and c.alpha_p_value == math.inf
    assert c.beta == pytest.approx(-2.0)


def test_classify_rejects():
    with pytest.raises(ValueError):
        classify(0, 2)
    with pytest.raises(ValueError):
        classify(2, 0.0)


@pytest.mark.parametrize("args,regime", REGIMES)
@pytest.mark.parametrize("K,Kp", [(1.0, 1.0), (0.7, 2.3)])
def test_defining_conditions(args, regime, K, Kp):
    cfg = classify(*args)
    for N in NS:
        p = plan(cfg, K, Kp, N)
        k, kp = p.conditions()
        assert k == pytest.approx(K, rel=1e-10)
        assert kp == pytest.approx(Kp, rel=1e-10)
        assert p.a_N == pytest.approx(p.k_N / p.L_N**cfg.delta, rel=1e-14)
        assert p.b_N == pytest.approx(cfg.beta * p.k_N * p.L_N ** (1 - cfg.delta), rel=1e-13)


def test_signs():
    cfg = classify(3, 2.0)
    p = plan(cfg, 1, 1, 100, coupling_sign=-1)
    assert p.q == -1 and p.q_prime == -1 and p.k_N < 0
    with pytest.warns(RegimeWarning):
        c = classify(3, 0.5)
    p = plan(c, 1, 1, 100, coupling_sign=1)
    assert p.q == 1 and p.q_prime == -1  # beta < 0 flips the energy sign


def test_mean_field_example():
    cfg = classify(3, 2.0)
    for N in NS:
        p = plan(cfg, 1, 1, N)
        assert p.L_N == pytest.approx(1.0)
        assert abs(p.k_N) * N == pytest.approx(1.0)


def test_thermodynamic_density_constant():
    cfg = classify(1, 3.0)
    ks = []
    for N in NS:
        p = plan(cfg, 1, 1, N)
        assert N / p.L_N == pytest.approx(0.5, rel=1e-12)
        ks.append(p.k_N)
    assert np.allclose(ks, ks[0], rtol=1e-12)


def test_mixed_invariants():
    cfg = classify(2, 2.5)
    ps = [plan(cfg, 1.3, 0.8, N) for N in NS]
    nu = [p.N ** (cfg.delta - cfg.d) / p.L_N**cfg.d for p in ps]
    assert np.allclose(nu, nu[0], rtol=1e-10)
    assert all(b.L_N > a.L_N and abs(b.k_N) < abs(a.k_N) for a, b in zip(ps, ps[1:]))


@pytest.mark.parametrize("args", [(2, 2.0), (1, 2.0), (3, 3.0), (3, 4.0)])
def test_singular_trends(args):
    cfg = classify(*args)
    ps = [plan(cfg, 1, 1, N) for N in NS]
    assert all(b.L_N > a.L_N and abs(b.k_N) < abs(a.k_N) for a, b in zip(ps, ps[1:]))


def test_singular_d_example():
    p = plan(classify(2, 2.0), 1, 1, 100)
    assert p.L_N == pytest.approx(1 / (100 * H_001), rel=1e-12)


def test_singular_range_errors():
    with pytest.raises(RenormRangeError, match="N >= e\\*K"):
        plan(classify(2, 2.0), 1, 1, 2)
    with pytest.raises(RenormRangeError, match="N >= e\\*K'"):
        plan(classify(1, 2.0), 1, 1, 2)
    plan(classify(2, 2.0), 1, 1, 3)  # ceil(e) is allowed


def test_sigma_examples():
    assert sigma_table(1.5, 1, 1000) == pytest.approx(0.1, rel=1e-12)
    assert sigma_table(3, 2, 10000) == pytest.approx(0.01, rel=1e-12)
    assert sigma_table(1, 0.1, 10) == pytest.approx(10 * H_001, rel=1e-12)
    assert sigma_table(2, 1, 100) == pytest.approx(math.sqrt(math.log(100) / 100))
    with pytest.raises(ValueError, match="no sigma_N"):
        sigma_table(0.5, 1, 10)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, 3.0])
def test_sigma_decreases(alpha):
    s = [sigma_table(alpha, 1.0, N) for N in NS]
    assert all(b < a for a, b in zip(s, s[1:]))


def test_sigma_absent_below_one():
    p = plan(classify(1, 3.0), 1, 1, 100)
    assert not p.sigma_defined and p.sigma_N == 0.0
    assert not p.sigma_p_defined and p.sigma_p_N == 0.0
    assert math.isnan(p.row()["sigma_N"])


def test_delta_one_drift():
    with pytest.warns(RegimeWarning):
        cfg = classify(3, 1.0)
    p = plan(cfg, 1, 1, 1000)
    assert cfg.beta == 1.0
    assert p.energy_drift == pytest.approx(-1000 * p.b_N * math.log(p.L_N))


def test_gravity_d3():
    p = gravity_case(3, 1.0, 1.0, 1.0, 100)
    assert p.source_mass == pytest.approx(0.01)
    assert (p.K, p.K_prime) == (1.0, 1.0)
    assert p.L_N == pytest.approx(1.0)
    assert p.q == -1 and p.q_prime == -1


def test_gravity_d2():
    G, m, mu, K, N = 2.0, 0.5, 3.0, 1.5, 1000
    p = gravity_case(2, G, m, mu, N, K=K)
    assert p.L_N == pytest.approx(G * m * mu / (N * h_solve(K / N)), rel=1e-12)


def test_gravity_d1():
    G, m, K, Kp, N = 1.5, 2.0, 0.8, 1.2, 500
    nu = K**2 / (G * m)
    p = gravity_case(1, G, m, nu, N, K_prime=Kp)
    assert p.K == pytest.approx(K)
    assert p.source_mass == pytest.approx(nu / K**4 * (N * h_solve(Kp / N)) ** 2, rel=1e-12)


def test_gravity_rejects():
    with pytest.raises(ValueError):
        gravity_case(4, 1, 1, 1, 10)
    with pytest.raises(ValueError):
        gravity_case(3, -1, 1, 1, 10)
