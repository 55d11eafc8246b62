import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levy_spde_lab.noise import DiagonalJumpCoefficient, JumpSpec
from levy_spde_lab.rates import (
    INFINITE,
    RateFunctionSet,
    alpha_conjugate,
    alpha_path_T,
    alpha_T,
    big_lambda,
    compute_K,
    eta,
    eta_squared_integral,
    gamma,
    gamma_star,
)


def point_mass(weight=2.0, envelope=0.5):
    """theta = weight * delta_1 with sup-norm of the coefficient = envelope."""
    return JumpSpec.discrete([1.0], [weight], DiagonalJumpCoefficient([envelope], [0.0]))


JUMP_SPECS = {
    "point": point_mass(),
    "symmetric": JumpSpec.discrete([-1.0, 1.0], [0.5, 0.5], DiagonalJumpCoefficient([0.1], [0.3])),
    "uniform": JumpSpec.uniform(-1.0, 2.0, 1.5, DiagonalJumpCoefficient([0.1, 0.05], [0.2, 0.1])),
}


def int_eta_sq(T, K):
    return (T - 2 * (-math.expm1(-K * T)) / K + (-math.expm1(-2 * K * T)) / (2 * K)) / K**2


def test_K_examples():
    k, ok = compute_K({"c_f": 1, "c_sigma": 1, "c_g": 1}, "lipschitz")
    assert k == pytest.approx(2 * math.pi**2 - 4, abs=1e-12) and ok
    assert k == pytest.approx(15.7392088, abs=1e-7)
    k, ok = compute_K({"c1": 2, "c_sigma": 0.5, "c_g": 1}, "cubic")
    assert k == pytest.approx(14.4892088, abs=1e-7) and ok
    k, ok = compute_K({"c_f": 20, "c_sigma": 0, "c_g": 0}, "lipschitz")
    assert k < 0 and not ok
    with pytest.raises(ValueError):
        compute_K({"c_f": 1}, "quartic")


def test_big_lambda_examples():
    assert big_lambda(0.0, JUMP_SPECS["point"]) == 0.0
    assert big_lambda(1.0, point_mass()) == pytest.approx(2 * (math.exp(0.5) - 1.5), rel=1e-12)
    assert big_lambda(1.0, point_mass()) == pytest.approx(0.2974425, abs=1e-7)
    assert big_lambda(3.0, point_mass(envelope=0.0)) == 0.0
    assert big_lambda(3.0, None) == 0.0


def test_big_lambda_small_argument_accuracy():
    lam = 1e-6
    exact = 2 * (0.5 * lam) ** 2 / 2 * (1 + 0.5 * lam / 3)
    assert big_lambda(lam, point_mass()) == pytest.approx(exact, rel=1e-12)


def test_big_lambda_overflow_raises():
    with pytest.raises(OverflowError):
        big_lambda(1e4, point_mass())


@given(st.floats(0, 20), st.floats(0, 20))
def test_big_lambda_convex(a, b):
    for spec in JUMP_SPECS.values():
        mid = big_lambda((a + b) / 2, spec)
        avg = (big_lambda(a, spec) + big_lambda(b, spec)) / 2
        assert mid <= avg + 1e-12 * max(1.0, avg)


@pytest.mark.parametrize("r", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("a", [0.5, 1.0])
def test_gamma_star_quadratic_closed_form(r, a):
    sigma = 0.7
    assert gamma_star(r, a, sigma, None) == pytest.approx(r**2 / (2 * a * sigma**2), rel=1e-9)


def test_gamma_star_examples():
    assert gamma_star(0.0, 1.0, 1.0, point_mass()) == 0.0
    assert gamma_star(1.0, 0.5, 1.0, None) == pytest.approx(1.0, rel=1e-12)
    assert gamma_star(1.0, 0.5, 0.0, None) == INFINITE
    with pytest.raises(ValueError):
        gamma_star(1.0, 0.0, 1.0, None)


@pytest.mark.parametrize("name", list(JUMP_SPECS))
def test_gamma_star_matches_grid_oracle(name):
    spec = JUMP_SPECS[name]
    sigma = 0.5
    lam = np.linspace(0.0, 100.0, 1_000_001)
    g, w = spec.envelope_nodes, spec.weights
    # Lambda on the grid, accumulated node by node to bound memory
    big = np.zeros_like(lam)
    for gi, wi in zip(g, w):
        big += wi * (np.expm1(lam * gi) - lam * gi)
    gam = big + sigma**2 * lam**2 / 2
    for r in [0.05, 0.5, 2.0, 10.0]:
        oracle = float(np.max(r * lam - gam))
        assert gamma_star(r, 1.0, sigma, spec) == pytest.approx(oracle, abs=1e-6)


@given(st.floats(0.01, 20), st.floats(0.1, 2), st.floats(0.1, 2))
def test_gamma_star_monotone_in_a(r, a1, a2):
    lo, hi = sorted((a1, a2))
    spec = JUMP_SPECS["symmetric"]
    assert gamma_star(r, lo, 0.5, spec) >= gamma_star(r, hi, 0.5, spec) * (1 - 1e-12)


def test_gamma_definition():
    assert gamma(2.0, 0.5, 1.0, point_mass()) == pytest.approx(big_lambda(2.0, point_mass()) + 0.5 * 4 / 2)


@pytest.mark.parametrize("T", [0.1, 0.5, 3.0])
@pytest.mark.parametrize("r", [0.1, 1.0, 10.0])
def test_alpha_T_quadratic_closed_form(T, r):
    K, sigma = 3.0, 0.8
    exact = K * r**2 / (sigma**2 * (-math.expm1(-2 * K * T)))
    assert alpha_T(r, T, K, sigma, None) == pytest.approx(exact, rel=1e-9)


def test_alpha_T_infinite_horizon():
    assert alpha_T(2.0, math.inf, 1.0, 1.0, None) == pytest.approx(4.0, rel=1e-12)
    spec = JUMP_SPECS["point"]
    assert alpha_T(1.0, math.inf, 2.0, 0.5, spec) == pytest.approx(alpha_T(1.0, 50.0, 2.0, 0.5, spec), rel=1e-9)


def test_alpha_T_zero_and_errors():
    assert alpha_T(0.0, 1.0, 1.0, 1.0, point_mass()) == 0.0
    with pytest.raises(ValueError):
        alpha_T(1.0, 1.0, 0.0, 1.0, None)
    with pytest.raises(ValueError):
        alpha_T(1.0, 1.0, -2.0, 1.0, None)
    with pytest.raises(ValueError):
        alpha_path_T(1.0, 1.0, 0.0, 1.0, None)


def test_alpha_T_point_mass_against_exponential_integral():
    from scipy.optimize import minimize_scalar
    from scipy.special import expi

    weight, g = 2.0, 0.5
    spec, K, T, sigma, r = point_mass(weight, g), 2.0, 0.7, 0.3, 0.4
    decay = math.exp(-K * T)

    def phi(lam):
        # int_0^T (exp(a e^{-Kt}) - a e^{-Kt} - 1) dt with a = lam g, via Ei
        a = lam * g
        jump = (expi(a) - expi(a * decay) - a * (1 - decay)) / K - T if a > 0 else 0.0
        return weight * jump + sigma**2 * lam**2 * (1 - decay**2) / (4 * K)

    res = minimize_scalar(lambda s: phi(s) - r * s, bounds=(0, 50), method="bounded", options={"xatol": 1e-12})
    assert alpha_T(r, T, K, sigma, spec) == pytest.approx(-res.fun, rel=1e-9)


def test_eta_examples():
    assert eta(0.0, 2.0) == 0.0
    assert eta(1.0, 1.0) == pytest.approx(0.6321206, abs=1e-7)
    assert eta(1e3, 4.0) == pytest.approx(0.25, rel=1e-15)


@pytest.mark.parametrize("T,K", [(0.5, 1.0), (0.5, 20.0), (10.0, 40.0)])
def test_eta_squared_integral_closed_form(T, K):
    assert eta_squared_integral(T, K) == pytest.approx(int_eta_sq(T, K), rel=1e-12)


def test_eta_squared_integral_small_K():
    # the closed form cancels badly for K T << 1; compare with adaptive quadrature
    from scipy.integrate import quad

    T, K = 2.0, 0.01
    oracle = quad(lambda t: float(eta(t, K)) ** 2, 0, T, epsabs=0, epsrel=1e-13)[0]
    assert eta_squared_integral(T, K) == pytest.approx(oracle, rel=1e-12)


@pytest.mark.parametrize("r", [0.01, 0.3, 2.0])
def test_alpha_path_quadratic_closed_form(r):
    T, K, sigma = 0.5, 18.0, 0.9
    exact = r**2 / (2 * sigma**2 * int_eta_sq(T, K))
    assert alpha_path_T(r, T, K, sigma, None) == pytest.approx(exact, rel=1e-9)
    assert alpha_path_T(0.0, T, K, sigma, None) == 0.0


@pytest.mark.parametrize("name", list(JUMP_SPECS))
def test_lower_bound_chains(name):
    rates = RateFunctionSet(K=15.0, sigma_bar=0.6, jumps=JUMP_SPECS[name], T=0.5)
    for r in np.linspace(0.01, 2.0, 20):
        assert rates.alpha_T(r) - rates.alpha_T_lower(r) >= -1e-8
        assert rates.alpha_path_T(r) - rates.alpha_path_T_lower(r) >= -1e-8


def test_alpha_conjugate_examples():
    assert alpha_conjugate(lambda r: r * r, 0.0) == 0.0
    for lam in [0.1, 1.0, 3.0, 40.0]:
        assert alpha_conjugate(lambda r: r * r, lam) == pytest.approx(lam**2 / 4, rel=1e-9)
    with pytest.raises(ValueError):
        alpha_conjugate(lambda r: math.sin(5 * r), 1.0, r_max=3.0)
    with pytest.raises(ValueError):
        alpha_conjugate(lambda r: r * r, -1.0)


def test_biconjugation():
    alpha = lambda r: r**2 + 0.5 * r**4  # noqa: E731
    conj = lambda lam: alpha_conjugate(alpha, lam)  # noqa: E731
    for r in [0.1, 0.5, 1.0]:
        assert alpha_conjugate(conj, r, r_max=2.0) == pytest.approx(alpha(r), abs=1e-6)


def test_rate_function_set_from_model():
    from levy_spde_lab.integrator import ModelSpec
    from levy_spde_lab.noise import ConstantDiffusion
    from levy_spde_lab.spectral import BoundedReaction

    model = ModelSpec(4, BoundedReaction(0.5, 1.0), ConstantDiffusion(np.full(4, 0.5)))
    rates = RateFunctionSet.from_model(model, 0.5)
    assert rates.K == pytest.approx(2 * math.pi**2 - 1.0)
    assert rates.sigma_bar == pytest.approx(1.0)
    assert rates.positive
    lam = 2.0
    exact = rates.sigma_bar**2 * lam**2 / (4 * rates.K)
    assert rates.alpha_invariant_conjugate(lam) == pytest.approx(exact, rel=1e-8)
    assert rates.alpha_invariant(0.3) == pytest.approx(rates.K * 0.09 / rates.sigma_bar**2, rel=1e-9)
