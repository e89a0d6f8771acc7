import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sislab import model
from sislab.model import DomainError, ParameterError, SISParams

from conftest import P_STAR, P_DAGGER

mpmath.mp.dps = 40


def ulp_distance(a, b):
    a, b = float(a), float(b)
    return abs(a - b) / np.spacing(max(abs(a), abs(b)))


# --- parameters ----------------------------------------------------------------------------

@pytest.mark.parametrize("field,value", [
    ("beta", 0.0), ("gamma", 0.0), ("b", -0.1), ("K", 0.0), ("sigma", -1.0),
    ("beta", math.inf), ("sigma", math.nan),
])
def test_invalid_params_rejected(field, value):
    kwargs = P_STAR.as_dict()
    kwargs[field] = value
    with pytest.raises(ParameterError, match=field):
        SISParams(**kwargs)


def test_sigma_zero_allowed():
    assert SISParams(0.5, 0.2, 0.05, 1.0, 0.0).sigma == 0.0


def test_params_are_immutable():
    with pytest.raises(Exception):
        P_STAR.beta = 1.0


def test_eta():
    assert P_STAR.eta == P_STAR.beta - P_STAR.b - P_STAR.gamma


def test_load_params_roundtrip(tmp_path):
    doc = dict(beta=0.5, gamma=0.2, b=0.05, K=1, sigma=0.1, I0=0.5)
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc))
    params, I0 = model.load_params(path)
    assert params == P_STAR and I0 == 0.5


def test_load_params_unknown_key_named(tmp_path):
    doc = dict(beta=0.5, gamma=0.2, b=0.05, K=1, sigma=0.1, I0=0.5, mu=3)
    with pytest.raises(ParameterError, match="'mu'"):
        model.load_params(doc)


def test_load_params_missing_and_bad_I0():
    with pytest.raises(ParameterError, match="I0"):
        model.load_params(dict(beta=0.5, gamma=0.2, b=0.05, K=1, sigma=0.1))
    with pytest.raises(ParameterError, match="I0"):
        model.load_params(dict(beta=0.5, gamma=0.2, b=0.05, K=1, sigma=0.1, I0=1.0))


# --- coefficients --------------------------------------------------------------------------

def test_drift_examples():
    p = P_STAR
    assert model.drift_A(p, 0.0) == 0.0
    assert model.drift_A(p, 1.0) == pytest.approx(-0.25, abs=1e-15)
    # logistic equilibrium x = eta*K/beta
    assert model.drift_A(p, 0.5) == pytest.approx(0.0, abs=1e-15)


def test_diffusion_examples():
    assert model.diffusion_B(P_STAR, 0.0) == 0.0
    assert model.diffusion_B(P_STAR, 1.0) == 0.0
    assert model.diffusion_B(P_STAR, 0.5) == pytest.approx(0.025, rel=1e-15)


@pytest.mark.parametrize("fn", [model.drift_A, model.diffusion_B])
def test_coefficients_reject_non_finite(fn):
    with pytest.raises(DomainError):
        fn(P_STAR, math.nan)
    with pytest.raises(DomainError):
        fn(P_STAR, np.array([0.1, math.inf]))


def test_transform_examples():
    assert model.transform_odds(100.0, 50.0) == 1.0
    assert model.transform_odds(1.0, 0.75) == 3.0
    assert model.inverse_odds(100.0, 1.0) == 50.0
    assert model.inverse_odds(1.0, 0.0) == 0.0
    assert model.transform_logit(100.0, 50.0) == 0.0
    assert model.transform_logit(1.0, 0.75) == pytest.approx(float(mpmath.log(3)), rel=1e-15)


def test_inverse_odds_large_input_stays_below_K():
    for y in (1e12, 1e17, 1e300):
        v, n_sat = model.inverse_odds(1.0, y, return_saturation=True)
        assert 0 < v < 1.0
    # 1e300 rounds to exactly K and must be clamped
    assert n_sat == 1
    assert model.inverse_odds(1.0, 1e300) == 1.0 - 2.0 ** -52


def test_inverse_logit_clamps_both_ends():
    assert model.inverse_logit(1.0, -800.0) == 2.0 ** -52
    assert model.inverse_logit(1.0, 800.0) == 1.0 - 2.0 ** -52


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_transforms_reject_outside_open_interval(bad):
    with pytest.raises(DomainError):
        model.transform_odds(1.0, bad)
    with pytest.raises(DomainError):
        model.transform_logit(1.0, bad)


def test_inverse_rejects_bad_input():
    with pytest.raises(DomainError):
        model.inverse_odds(1.0, -1e-3)
    with pytest.raises(DomainError):
        model.inverse_odds(1.0, math.inf)
    with pytest.raises(DomainError):
        model.inverse_logit(1.0, math.nan)


@settings(max_examples=500)
@given(K=st.floats(1e-3, 1e6), u=st.floats(1e-12, 1 - 1e-12))
def test_odds_roundtrip_within_4_ulp(K, u):
    x = K * u
    if not 0 < x < K:
        return
    back = model.inverse_odds(K, model.transform_odds(K, x))
    assert ulp_distance(back, x) <= 4


@settings(max_examples=500)
@given(K=st.floats(1e-3, 1e6), u=st.floats(0.05, 1 - 1e-12))
def test_logit_roundtrip_within_4_ulp(K, u):
    # below ~0.05 K the log-odds magnitude exceeds 3 and its own rounding
    # (|v| * 2**-53) is amplified by exp beyond 4 ulp in float64
    x = K * u
    if not 0 < x < K:
        return
    back = model.inverse_logit(K, model.transform_logit(K, x))
    assert ulp_distance(back, x) <= 4


def test_phi_examples():
    assert model.phi(P_STAR, 0.0) == P_STAR.eta
    assert model.phi(P_STAR, 1.0) == pytest.approx(0.005, rel=1e-12)
    with pytest.raises(DomainError):
        model.phi(P_STAR, -1.0)


def test_F_hat_and_G_examples():
    assert model.F_hat(P_STAR, 0.0) == 0.0
    assert model.G(P_STAR, 0.0) == 0.0
    assert model.G(P_STAR, 2.0) == pytest.approx(0.2, rel=1e-15)


def test_F_hat_equals_x_phi():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 10, 1000)
    lhs = model.F_hat(P_STAR, x)
    rhs = x * model.phi(P_STAR, x)
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.abs(rhs))


@pytest.mark.parametrize("params", [P_STAR, P_DAGGER, SISParams(2.0, 0.3, 0.1, 50.0, 0.02)])
def test_ito_operator_identity(params):
    """A V' + B^2 V''/2 = F_hat(V) for the odds map V, both sides in closed form."""
    K = params.K
    rng = np.random.default_rng(2)
    x = rng.uniform(0.01 * K, 0.99 * K, 1000)
    V = x / (K - x)
    dV = K / (K - x) ** 2
    d2V = 2 * K / (K - x) ** 3
    A = params.eta * x - params.beta / K * x ** 2
    B = params.sigma * (K - x) * x
    lhs = A * dV + 0.5 * B ** 2 * d2V
    rhs = model.F_hat(params, V)
    scale = np.maximum(np.abs(lhs), np.abs(A * dV))
    assert np.all(np.abs(lhs - rhs) <= 1e-10 * scale)


def test_F_logit_examples():
    p0 = P_STAR.replace(sigma=0.0)
    v = np.linspace(-5, 5, 11)
    assert np.allclose(model.F_logit(p0, v), p0.eta - p0.removal * np.exp(v), rtol=1e-15, atol=0)
    assert model.F_logit(P_STAR, 0.0) == pytest.approx(0.0, abs=1e-16)
    with pytest.raises(DomainError):
        model.F_logit(P_STAR, math.inf)


@pytest.mark.parametrize("params", [P_STAR, P_DAGGER, SISParams(2.0, 0.3, 0.1, 5.0, 0.3)])
def test_F_logit_is_ito_corrected_phi(params):
    rng = np.random.default_rng(3)
    y = np.exp(rng.uniform(-8, 8, 1000))
    lhs = model.F_logit(params, np.log(y))
    rhs = model.phi(params, y) - 0.5 * params.sigma_K ** 2
    # both sides are differences of O(1 + (b+gamma) y) terms
    scale = np.abs(params.eta) + params.removal * y + params.sigma_K ** 2
    assert np.all(np.abs(lhs - rhs) <= 1e-10 * scale)


# --- thresholds ------------------------------------------------------------------------------

def test_reproduction_numbers_examples():
    d = model.reproduction_numbers(P_DAGGER)
    assert d.r0_deterministic == pytest.approx(1.0, rel=1e-15)
    assert d.r0_stochastic == pytest.approx(0.98, rel=1e-14)
    d0 = model.reproduction_numbers(P_STAR.replace(sigma=0.0))
    assert d0.r0_stochastic == d0.r0_deterministic
    assert d.eta == P_DAGGER.beta - P_DAGGER.b - P_DAGGER.gamma
    assert d.extinction_exponent == pytest.approx(-0.005, abs=1e-15)


def test_printed_r0_variant():
    p = SISParams(0.5, 0.2, 0.05, 10.0, 0.0)
    assert model.r0_deterministic_as_printed(p) == pytest.approx(0.2)
    assert model.reproduction_numbers(p).r0_deterministic == pytest.approx(2.0)


def test_r0_sign_equivalence_random_sweep():
    rng = np.random.default_rng(4)
    for _ in range(10_000):
        p = SISParams(beta=rng.uniform(0.01, 3), gamma=rng.uniform(0.01, 2), b=rng.uniform(0, 1),
                      K=rng.uniform(0.1, 100), sigma=rng.uniform(0, 0.05))
        d = model.reproduction_numbers(p)
        assert (d.r0_stochastic < 1) == (d.extinction_exponent < 0)
        assert d.r0_stochastic <= d.r0_deterministic


def test_extinction_conditions_examples():
    c = model.extinction_conditions(P_DAGGER)
    assert (c.r0s_below_one, c.sigma_sq_leq_beta_over_K2, c.sigma_sq_K2_leq_b_plus_gamma) == (True, True, True)
    assert c.all_satisfied
    assert model.extinction_conditions(SISParams(0.2, 0.2, 0.05, 1.0, 0.0)).all_satisfied
    edge = model.extinction_conditions(SISParams(0.25, 0.2, 0.05, 1.0, 0.5))
    assert edge.sigma_sq_leq_beta_over_K2
    assert not model.extinction_conditions(P_STAR).all_satisfied


def test_logistic_solution_solves_the_ode():
    from scipy.integrate import solve_ivp
    for params, I0 in ((P_STAR, 0.1), (P_DAGGER, 0.5), (P_STAR.replace(beta=0.2), 0.9)):
        t = np.linspace(0, 5, 21)
        sol = solve_ivp(lambda _, y: params.eta * y - params.beta / params.K * y ** 2, (0, 5), [I0],
                        t_eval=t, rtol=1e-12, atol=1e-14)
        assert np.allclose(model.logistic_solution(params, I0, t), sol.y[0], rtol=1e-9, atol=1e-12)


# --- moment bounds -----------------------------------------------------------------------------

def test_scheme_bound_examples():
    p = P_STAR
    assert model.moment_bound_scheme(p, 1.0, 1.0, 2.0) == pytest.approx(math.exp(0.53), rel=1e-14)
    assert model.moment_bound_scheme(p, 3.0, 0.0, 2.5) == pytest.approx(3.0 ** 2.5, rel=1e-14)
    assert model.moment_bound_scheme(p, 1.0, 1.0, 1e-12) == pytest.approx(1.0, abs=1e-11)


def test_scheme_bound_overflow_reports_inf():
    with pytest.warns(model.BoundOverflowWarning):
        assert model.moment_bound_scheme(P_STAR.replace(sigma=5.0), 1.0, 100.0, 50.0) == math.inf


def test_exact_bound_examples():
    assert model.moment_bound_exact(SISParams(0.5, 0.2, 0.05, 2.0, 0.1), 1.0, 0.0, 1.0) == 1.0
    p = SISParams(beta=0.5, gamma=0.15, b=0.05, K=1.0, sigma=0.0)
    assert p.eta == pytest.approx(0.3)
    assert model.moment_bound_exact(p, 0.5, 1.0, 1.0) == pytest.approx(2 * math.e, rel=1e-14)


def test_exact_bounds_monotone():
    Ts = np.linspace(0, 5, 11)
    ps = np.linspace(0.5, 6, 12)
    vals_T = [model.moment_bound_exact(P_STAR, 0.3, T, 2.0) for T in Ts]
    vals_p = [model.moment_bound_exact(P_STAR, 0.3, 1.0, p) for p in ps]
    assert np.all(np.diff(vals_T) >= 0) and np.all(np.diff(vals_p) >= 0)


def test_exact_envelopes():
    pos, neg = model.exact_moment_envelopes(P_STAR, 0.5, 1.0, 2.0)
    assert pos == neg == pytest.approx(math.sqrt(model.moment_bound_exact(P_STAR, 0.5, 1.0, 4.0)))
