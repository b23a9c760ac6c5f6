import math

import numpy as np
import pytest

from pointfield.analyze import (CFGrid, GaussianRegimeSignal, cf_compare, cf_distance, default_z_grid,
                                empirical_cf, force_width, grid_along, hill_sensitivity, hill_tail_exponent,
                                power_tail_detected, scaling_fit, tail_to_stable_params, z_directions)
from pointfield.core_math import sphere_moment
from pointfield.measures import SourceMeasure, moments, sample_R
from pointfield.renorm import classify, sigma_table
from pointfield.stable import StableLaw, sample_stable


def test_cf_distance_zero_for_equal():
    z = default_z_grid(1.0)
    v = np.exp(-z**2)
    assert cf_distance(CFGrid(z, v, v.copy(), 10)) == 0.0


def test_cf_distance_mismatch_and_missing():
    with pytest.raises(ValueError):
        cf_distance(CFGrid(np.ones(3), np.ones(3), np.ones(4), 10))
    with pytest.raises(ValueError):
        cf_distance(CFGrid(np.ones(3), np.ones(3), None, 10))


def test_empirical_cf_errors_and_hermitian():
    with pytest.raises(ValueError):
        empirical_cf(np.empty((0, 2)), np.ones((1, 2)))
    with pytest.raises(ValueError):
        empirical_cf(np.ones((5, 2)), np.ones((1, 3)))
    x = np.random.default_rng(1).standard_normal((1000, 2))
    z = default_z_grid(1.0, 2)
    assert np.allclose(empirical_cf(x, z), np.conj(empirical_cf(x, -z)))
    assert np.all(np.abs(empirical_cf(x, z)) <= 1 + 1e-12)


def test_self_consistency_and_negative_control():
    law = StableLaw(1.5, 0, 1.0, 0.0)
    x = sample_stable(law, 100_000, np.random.default_rng(7))
    z = default_z_grid(1.0)
    good = cf_compare(x, z, law.cf(z))
    assert good.max_abs_dev < good.mc_bound
    wrong = StableLaw(0.5, 0, 1.0, 0.0)
    bad = cf_compare(x, z, wrong.cf(z))
    assert bad.max_abs_dev > 10 * bad.mc_bound


def test_grid_layout():
    z = default_z_grid(2.0, 3, n=20)
    assert z.shape == (60, 3)
    mags = np.linalg.norm(z, axis=1)
    assert mags[0] == pytest.approx(0.05) and mags[19] == pytest.approx(5.0)
    assert np.allclose(np.linalg.norm(z_directions(4), axis=1), 1.0)
    assert default_z_grid(1.0, 1).shape == (20, 1)
    assert grid_along([1.0, 2.0], 2).shape == (6, 2)
    with pytest.raises(ValueError):
        default_z_grid(0.0)


def test_hill_pareto():
    u = np.random.default_rng(5).random(10**6)
    x = u ** (-1 / 0.5)  # inverse-CDF Pareto, tail index 0.5
    a, se = hill_tail_exponent(x, 0.05)
    assert 0.45 <= a <= 0.55
    assert se == pytest.approx(a / math.sqrt(50_000))


@pytest.mark.parametrize("d,delta", [(1, 2.0), (2, 2.0), (3, 2.0), (3, 4.0)])
def test_hill_recovers_d_over_delta(d, delta):
    R = sample_R(SourceMeasure.uniform_ball(d), 10**6, np.random.default_rng(d))
    a, _ = hill_tail_exponent(np.linalg.norm(R, axis=1) ** (-delta))
    assert abs(a - d / delta) <= 0.1 * d / delta


def test_hill_exponential_has_no_power_tail():
    x = np.random.default_rng(2).exponential(size=10**6)
    rep = hill_sensitivity(x)
    alphas = [rep["estimates"][f][0] for f in (0.02, 0.05, 0.1)]
    # the estimate tracks ln(1/k_fraction): it keeps rising as the fraction moves deeper into the tail
    assert alphas[0] > alphas[1] > alphas[2]
    assert not rep["power_tail"] and not power_tail_detected(x)
    pareto = np.random.default_rng(3).random(10**6) ** (-1 / 1.5)
    assert power_tail_detected(pareto)


def test_hill_errors():
    with pytest.raises(ValueError):
        hill_tail_exponent(np.ones(10))
    with pytest.raises(ValueError):
        hill_tail_exponent(np.ones(2000), 0.5)
    with pytest.raises(ValueError):
        hill_tail_exponent(-np.ones(2000))


@pytest.mark.parametrize("alpha,slope", [(1.5, -1 / 3), (1.25, -0.2), (3.0, -0.5), (5.0, -0.5)])
def test_scaling_fit_exact_sequences(alpha, slope):
    N = [10**2, 10**3, 10**4, 10**5]
    s, _ = scaling_fit(N, [sigma_table(alpha, 1.7, n) for n in N])
    assert abs(s - slope) < 1e-10


def test_scaling_fit_alpha2_model():
    N = [10**2, 10**3, 10**4, 10**5]
    s, _ = scaling_fit(N, [sigma_table(2.0, 1.0, n) for n in N], model="alpha2")
    assert abs(s - 1) < 1e-10


def test_scaling_fit_errors():
    with pytest.raises(ValueError):
        scaling_fit([10, 100, 1000], [1, 0, 1])
    with pytest.raises(ValueError):
        scaling_fit([10, 20, 30], [1, 1, 1])
    with pytest.raises(ValueError):
        scaling_fit([10, 1000], [1, 1])
    with pytest.raises(ValueError):
        scaling_fit([10, 100, 1000], [1, 1, 1], model="cubic")


def test_force_width_scales():
    x = np.random.default_rng(0).standard_normal((100_000, 2))
    w = force_width(x)
    assert w == pytest.approx(2 * 0.6744897501960817, rel=0.02)
    assert force_width(3 * x) == pytest.approx(3 * w)


def test_tail_to_stable_params():
    cfg = classify(3, 2.0)
    mom = moments(SourceMeasure.uniform_ball(3), cfg)
    a, A, B = tail_to_stable_params(cfg, mom)
    assert a == 1.5 and B == 0.0
    assert A == pytest.approx(3 / (4 * math.pi) / 2 * sphere_moment(1.5, 3), rel=1e-14)
    with pytest.warns(UserWarning):
        g = classify(3, 0.9)
    with pytest.raises(GaussianRegimeSignal):
        tail_to_stable_params(g, moments(SourceMeasure.uniform_ball(3), g))
