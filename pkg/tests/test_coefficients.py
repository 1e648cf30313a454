import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from hyperloss.coefficients import (MODEL_CATALOG, BracketPower, SinBracket, default_grid,
                                    derivative_oracle_check, model_from_spec, shift_exponent,
                                    shift_modulus, theta_tilde_reconstruct, verify_bounds)
from hyperloss.profiles import profile_from_spec
from hyperloss.timefuncs import TIME_CATALOG, Constant, Log1pPower, time_function_from_spec


def romberg(f, a, b, levels=18):
    """Plain Romberg table on [a, b]; the oracle for the adaptive reconstruction."""
    R = [[0.5 * (b - a) * (f(a) + f(b))]]
    for i in range(1, levels):
        n = 2 ** (i - 1)
        h = (b - a) / (2 * n)
        mids = a + h * (2 * np.arange(n) + 1)
        row = [0.5 * R[-1][0] + h * float(np.sum(f(mids)))]
        for j in range(1, i + 1):
            row.append(row[j - 1] + (row[j - 1] - R[-1][j - 1]) / (4**j - 1))
        R.append(row)
    return R[-1][-1]


# --- derivative oracles ------------------------------------------------------------

@pytest.mark.parametrize("tag", sorted(MODEL_CATALOG))
def test_catalog_derivative_oracle(tag):
    rep = derivative_oracle_check(model_from_spec({"tag": tag}), n=200, seed=3)
    assert rep["max_rel_error"] < 1e-6


@pytest.mark.parametrize("spec", [{"tag": "log1p_power", "coef": 2.0, "power": 3.0},
                                  {"tag": "abslog_power", "power": 0.5},
                                  {"tag": "log_sine", "alpha": 1.5},
                                  {"tag": "exp_modulated", "alpha": 0.5},
                                  {"tag": "tsin_inv"},
                                  {"tag": "power", "coef": 1.0, "power": -0.5}])
def test_time_function_oracle(spec):
    c = time_function_from_spec(spec)
    T = 0.5 if spec["tag"] in ("abslog_power", "log_sine", "exp_modulated") else 1.0
    t = np.geomspace(1e-6, T, 40)
    rep = derivative_oracle_check(c, n=100, seed=1, t_min=1e-6)
    assert rep["max_rel_error"] < 1e-6
    assert np.all(np.isfinite(c.d2(t)))


def test_time_catalog_tags_roundtrip():
    for tag, cls in TIME_CATALOG.items():
        c = cls()
        again = time_function_from_spec(c.spec())
        assert type(again) is cls and again.params() == c.params()


@given(x=st.floats(-1e4, 1e4))
def test_space_parts_bounded_below(x):
    assert BracketPower(1.0, 0.5)(x) >= 1.0
    assert SinBracket(2.0, 1.0, 0.5)(x) >= 1.0


# --- bound system ---------------------------------------------------------------------

def test_constant_model_bounds():
    rep = verify_bounds(model_from_spec({"tag": "constant", "value": 1.0}))
    assert rep.ok and rep.C0 == pytest.approx(1.0)
    assert all(math.isfinite(v) for v in rep.constants.values())
    assert rep.constants["sing1_beta0"] == 0.0 and rep.constants["sing2_beta0"] == 0.0


def test_tsin_ellipticity_constant():
    # a / omega^2 = 2 + t sin(1/t) on this grid, which stays above 2 - T
    model = model_from_spec({"tag": "tsin"})
    t, x = default_grid(model.horizon_T)
    rep = verify_bounds(model, (t, x))
    assert rep.ok
    assert rep.C0 == pytest.approx(float(np.min(2 + t * np.sin(1 / t))), rel=1e-12)
    assert rep.C0 >= 1.0


@pytest.mark.parametrize("tag", ["exp_modulated", "log_blowup", "tsin"])
def test_examples_pass(tag):
    rep = verify_bounds(model_from_spec({"tag": tag}))
    assert rep.ok and not rep.violations
    assert set(rep.constants) == {f"{n}_beta{b}" for n in ("a", "sing1", "sing2") for b in range(3)}


def test_exp_modulated_profile_matches_example():
    model = model_from_spec({"tag": "exp_modulated", "alpha": 0.5})
    t = np.geomspace(1e-9, model.horizon_T, 50)
    assert np.allclose(model.profile.theta(t), np.abs(np.log(t)) ** 0.5)
    assert np.allclose(model.profile.psi(t), np.abs(np.log(t)) ** 0.5)
    assert np.allclose(model.profile.theta_tilde(t), 3.0)


def test_broken_model_flagged():
    rep = verify_bounds(model_from_spec({"tag": "broken"}))
    assert not rep.ok
    assert rep.C0 < 0 and len(rep.violations) > 0


def test_grid_must_avoid_zero():
    with pytest.raises(ValueError):
        verify_bounds(model_from_spec({"tag": "tsin"}), (np.array([0.0, 0.1]), np.array([0.0])))


# --- theta_tilde reconstruction -------------------------------------------------------------

def test_reconstruct_constant_theta():
    t = np.geomspace(1e-8, 1.0, 30)
    rep = theta_tilde_reconstruct(Constant(1.0), 1.0, t)
    assert np.allclose(rep["theta_tilde"], np.log(1 / t), rtol=1e-12, atol=1e-14)


def test_reconstruct_against_romberg():
    theta = Log1pPower(1.0, 3.0)
    t = math.exp(-4)
    rep = theta_tilde_reconstruct(theta, 1.0, [t])
    ref = romberg(lambda u: theta(np.exp(u)), -4.0, 0.0)
    assert rep["theta_tilde"][0] == pytest.approx(ref, rel=1e-8)
    assert rep["all_reliable"]


def test_reconstruct_monotone_and_dominating():
    theta = Log1pPower(1.0, 2.0)
    T = 0.5  # theta >= 1 on (0, T]
    t = np.geomspace(1e-10, T, 40)
    rep = theta_tilde_reconstruct(theta, T, t)
    tt = rep["theta_tilde"]
    assert np.all(np.diff(tt) <= 0)
    assert np.all(tt >= np.log(T / t) * (1 - 1e-12))
    assert rep["derivative_rel_error"] < 1e-6


# --- shift modulus ---------------------------------------------------------------------------

def test_shift_modulus_values():
    assert shift_modulus(0.3, 0.1, 0.1, 1.0) == 0.0
    assert shift_modulus(0.1, 0.2, 0.1, 1.0) == pytest.approx(0.5 * math.log(1.5) ** 2)
    assert shift_modulus(0.1, 0.2, 0.1, 1.0) == pytest.approx(0.082200, abs=1e-6)


def test_shift_modulus_integrable():
    val, err = integrate.quad(lambda tau: shift_modulus(tau, 0.2, 0.0, 2.0), 0.0, 1.0, limit=200)
    assert math.isfinite(val) and err < 1e-8 * max(1.0, val)


def test_shift_modulus_validation():
    with pytest.raises(ValueError):
        shift_modulus(0.1, 0.1, 0.2, 1.0)
    with pytest.raises(ValueError):
        shift_modulus(0.1, 0.2, 0.1, 0.5)


def test_shift_exponent_follows_classification():
    assert shift_exponent(profile_from_spec({"tag": "log_psi"})) == 1.0
    assert shift_exponent(profile_from_spec({"tag": "log_blowup"})) == pytest.approx(7.0, abs=0.05)
