import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from levy_spde_lab.integrator import Path
from levy_spde_lab.spectral import SpectralField
from levy_spde_lab.transport import (
    MAX_ASSIGNMENT_SIZE,
    EmpiricalMeasure,
    bootstrap_mean_upper,
    clopper_pearson_upper,
    make_lipschitz_observable,
    path_distance_L1,
    tail_and_moment_stats,
    w_p_empirical,
)


def brute_force(a, b, p):
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1) ** p
    m = a.shape[0]
    best = min(cost[np.arange(m), list(perm)].mean() for perm in itertools.permutations(range(m)))
    return best ** (1 / p)


def test_single_point_is_norm():
    x, y = np.array([[1.0, 2.0]]), np.array([[4.0, 6.0]])
    assert w_p_empirical(x, y, 1) == pytest.approx(5.0)
    assert w_p_empirical(x, y, 2) == pytest.approx(5.0)


def test_one_dimensional_example():
    assert w_p_empirical(np.array([0.0, 4.0]), np.array([1.0, 3.0]), 1) == pytest.approx(1.0)


def test_identical_measures_zero():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((7, 3))
    assert w_p_empirical(a, a[::-1], 1) == 0.0


def test_accepts_spectral_fields():
    a = [SpectralField(np.array([0.0, 1.0])), SpectralField(np.array([1.0, 0.0]))]
    assert w_p_empirical(EmpiricalMeasure(a), EmpiricalMeasure(a), 2) == 0.0


@pytest.mark.parametrize("p", [1, 2])
def test_matches_exhaustive_permutations(p):
    rng = np.random.default_rng(1)
    for _ in range(50):
        m = int(rng.integers(1, 7))
        a, b = rng.standard_normal((2, m, 3))
        assert w_p_empirical(a, b, p) == pytest.approx(brute_force(a, b, p), abs=1e-12)


@settings(max_examples=40)
@given(st.integers(1, 6).flatmap(lambda m: arrays(np.float64, (3, m, 2), elements=st.floats(-5, 5))))
def test_metric_axioms(pts):
    a, b, c = pts
    for p in (1, 2):
        ab, ba = w_p_empirical(a, b, p), w_p_empirical(b, a, p)
        assert ab == pytest.approx(ba, abs=1e-12)
        assert ab <= w_p_empirical(a, c, p) + w_p_empirical(c, b, p) + 1e-10
    assert w_p_empirical(a, b, 1) <= w_p_empirical(a, b, 2) + 1e-12


def test_w_p_errors():
    with pytest.raises(ValueError):
        w_p_empirical(np.zeros((2, 1)), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        w_p_empirical(np.zeros((2, 1)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        w_p_empirical(np.zeros((2, 1)), np.zeros((2, 1)), p=3)
    big = np.zeros((MAX_ASSIGNMENT_SIZE + 1, 1))
    with pytest.raises(ValueError, match="subsample"):
        w_p_empirical(big, big)
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.zeros((0, 2)))


def test_path_distance_examples():
    times = np.linspace(0, 1, 11)
    zero = np.zeros((11, 2))
    assert path_distance_L1(Path(times, zero), Path(times, zero)) == 0.0
    const = np.tile([0.3, 0.4], (11, 1))
    assert path_distance_L1(const, zero, times) == pytest.approx(0.5, abs=1e-12)
    linear = np.stack([times, np.zeros(11)], axis=1)
    assert path_distance_L1(linear, zero, times) == pytest.approx(0.5, abs=1e-15)


def test_path_distance_below_sup_bound_and_errors():
    rng = np.random.default_rng(2)
    times = np.linspace(0, 0.5, 51)
    a, b = rng.standard_normal((2, 51, 3))
    d = path_distance_L1(a, b, times)
    assert d <= 0.5 * np.max(np.linalg.norm(a - b, axis=1))
    with pytest.raises(ValueError):
        path_distance_L1(Path(times, a), Path(times * 2, b))
    with pytest.raises(ValueError):
        path_distance_L1(a, b[:10], times)


def test_linear_observable():
    f = make_lipschitz_observable("linear", [1.0])
    assert f(np.array([0.7, 2.0])) == pytest.approx(0.7)
    g = make_lipschitz_observable("linear", [3.0, 4.0])
    np.testing.assert_allclose(g.vector, [0.6, 0.8])
    with pytest.raises(ValueError):
        make_lipschitz_observable("linear", [0.0, 0.0])
    with pytest.raises(ValueError):
        make_lipschitz_observable("quadratic", [1.0])


def test_distance_observable_with_longer_anchor():
    f = make_lipschitz_observable("distance", [0.0, 0.0, 2.0])
    assert f(np.array([3.0])) == pytest.approx(math.sqrt(13.0))
    assert f.describe() == {"type": "distance", "anchor": [0.0, 0.0, 2.0]}


@pytest.mark.parametrize("variant,params", [("linear", "random"), ("distance", [0.0]), ("distance", "random")])
def test_observable_certification(variant, params):
    rng = np.random.default_rng(3)
    if params == "random":
        params = rng.standard_normal(5)
    f = make_lipschitz_observable(variant, params)
    for _ in range(1000):
        x, y = rng.standard_normal((2, 5)) * 3
        assert abs(f(x) - f(y)) <= np.linalg.norm(x - y) * (1 + 1e-12)


def test_time_average():
    f = make_lipschitz_observable("linear", [1.0])
    times = np.linspace(0, 2, 21)
    coeffs = np.stack([times, np.ones(21)], axis=1)
    assert f.time_average(coeffs, times) == pytest.approx(1.0)
    batch = np.stack([coeffs, 2 * coeffs])
    np.testing.assert_allclose(f.time_average(batch, times), [1.0, 2.0])


def test_clopper_pearson():
    assert clopper_pearson_upper(0, 100) == pytest.approx(1 - 0.05 ** (1 / 100), rel=1e-10)
    assert clopper_pearson_upper(10, 10) == 1.0
    assert clopper_pearson_upper(5, 100) > 0.05


def test_constant_samples_stats():
    out = tail_and_moment_stats(np.full(50, 3.0), [0.1, 1.0], [0.5, 2.0])
    assert all(t["count"] == 0 for t in out["tails"])
    assert all(mo["mean"] == 1.0 and mo["upper"] == 1.0 for mo in out["moments"])


def test_gaussian_mgf_oracle():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(100_000)
    out = tail_and_moment_stats(x, [10.0], [1.0], rng=np.random.default_rng(5), n_boot=400)
    mom = out["moments"][0]
    assert mom["mean"] == pytest.approx(math.exp(0.5), rel=0.02)
    assert mom["upper"] >= math.exp(0.5) * 0.99
    tail = out["tails"][0]
    assert tail["count"] == 0 and tail["upper"] == clopper_pearson_upper(0, 100_000)


def test_bootstrap_upper_reproducible():
    values = np.arange(20.0)
    a = bootstrap_mean_upper(values, np.random.default_rng(6), 300)
    b = bootstrap_mean_upper(values, np.random.default_rng(6), 300)
    assert a == b and a > values.mean()


def test_stats_need_samples():
    with pytest.raises(ValueError):
        tail_and_moment_stats([], [1.0], [1.0])
