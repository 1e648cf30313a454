import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyperloss.activators import (ActivatorParams, AdmissibilityError, MembershipError,
                                  ReferenceSpeed, build_instance, exact_mode, membership_check,
                                  metric_dC, min_admissible_rho, smoothstep)
from hyperloss.coefficients import time_oracle_errors
from hyperloss.spectral import ModeProblem, integrate_mode
from hyperloss.timefuncs import Constant, LogSine, PowerLaw

PARAMS = ActivatorParams()


@pytest.fixture(scope="module")
def inst6():
    return build_instance(PARAMS, 1e6)


def test_window_hand_values(inst6):
    assert inst6.psi_rho == pytest.approx(math.log(1e6) / 8, rel=1e-12)
    assert inst6.psi_rho == pytest.approx(1.72694, abs=1e-5)
    assert inst6.n_a == 77 == math.floor(math.log(1e6) * math.exp(inst6.psi_rho))
    assert inst6.a_rho == pytest.approx(2 * math.pi / 1e6 * 77, rel=1e-14)
    assert inst6.a_rho == pytest.approx(4.8381e-4, abs=1e-8)
    assert inst6.n_b > inst6.n_a and inst6.b_rho < PARAMS.T1
    assert inst6.window_chain_ok


def test_both_gamma_values_reported(inst6):
    d = inst6.to_dict()
    assert {"Gamma_verbatim", "Gamma_inverse"} <= set(d)
    assert d["cutoff"].startswith("septic")


def test_coefficient_equals_reference_outside_window(inst6):
    c, ref = inst6.coefficient, ReferenceSpeed(PARAMS)
    t = np.concatenate([np.linspace(1e-9, inst6.a_rho, 200),
                        np.linspace(inst6.b_rho, PARAMS.T, 200)])
    assert np.array_equal(np.asarray(c(t)), np.asarray(ref(t)))
    assert np.all(inst6.eps(t) == 0)


def test_envelope_core(inst6):
    t = np.linspace(2 * inst6.a_rho, inst6.b_rho / 2, 500)
    assert np.allclose(inst6.eps(t), inst6.theta_rho / t, rtol=1e-14)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_smoothstep_derivatives(order):
    r = np.linspace(-0.2, 1.2, 301)
    h = 1e-5
    fd = (smoothstep(r + h, order - 1) - smoothstep(r - h, order - 1)) / (2 * h)
    assert np.allclose(smoothstep(r, order), fd, atol=1e-6)


def test_smoothstep_flat_ends():
    for order in range(1, 4):
        assert smoothstep(0.0, order) == 0 and smoothstep(1.0, order) == 0
    assert smoothstep(0.0) == 0 and smoothstep(1.0) == 1


@given(r=st.floats(-1.0, 2.0))
def test_smoothstep_range(r):
    assert 0.0 <= smoothstep(r) <= 1.0


def test_activator_derivative_oracle(inst6):
    rng = np.random.default_rng(5)
    t = rng.uniform(inst6.a_rho, inst6.b_rho, 200)
    (e1, e2), _ = time_oracle_errors(inst6.coefficient, t)
    assert max(e1, e2) < 1e-6


def test_exact_mode_matches_integrator():
    inst = build_instance(PARAMS, 1e4)
    t = np.array([0.0, inst.a_rho, 0.5 * (inst.a_rho + inst.b_rho), inst.b_rho, PARAMS.T1])
    u, du = exact_mode(inst, t)
    tr = integrate_mode(ModeProblem(1e4, inst.coefficient, PARAMS.T), tol=1e-12, report=t)
    assert np.allclose(tr.energy, du**2 + (1e4 * u) ** 2, rtol=1e-8)


def test_small_rho_not_admissible():
    rmin = min_admissible_rho(PARAMS)
    with pytest.raises(AdmissibilityError) as info:
        build_instance(PARAMS, rmin / 2)
    assert info.value.min_rho == pytest.approx(rmin)
    build_instance(PARAMS, rmin * 1.01)


def test_membership_error_for_tight_bounds():
    with pytest.raises(MembershipError):
        build_instance(ActivatorParams(mu1=0.9999, mu2=1.0001 * 9), 1e3)


def test_parameter_validation():
    with pytest.raises(ValueError):
        ActivatorParams(mu1=1.5)
    with pytest.raises(ValueError):
        ActivatorParams(T1=1.5)
    with pytest.raises(ValueError):
        ActivatorParams(mu3=10.0)


def test_divergence_of_profile_product():
    assert PARAMS.divergence_check()["diverges"]


# --- metric and membership -----------------------------------------------------------

def test_metric_zero_and_symmetric():
    a, b = LogSine(alpha=0.5), Constant(2.0)
    assert metric_dC(a, a, PARAMS)["value"] == 0.0
    assert metric_dC(a, b, PARAMS)["value"] == pytest.approx(metric_dC(b, a, PARAMS)["value"])


def test_metric_decreases_along_sweep():
    ref = ReferenceSpeed(PARAMS)
    vals = [metric_dC(build_instance(PARAMS, r).coefficient, ref, PARAMS)["value"]
            for r in (1e3, 1e4, 1e5, 1e6)]
    assert np.all(np.diff(vals) < 0)


def test_membership_constant():
    rep = membership_check(Constant(PARAMS.plateau_level), PARAMS)
    assert rep.bounds_ok and rep.C1 == 0.0 and rep.C2 == 0.0


def test_membership_inverse_time_fails():
    rep = membership_check(PowerLaw(1.0, -1.0), PARAMS)
    assert not rep.bounds_ok and rep.violations


def test_membership_constants_grid_stable():
    c = build_instance(PARAMS, 1e5).coefficient
    a = membership_check(c, PARAMS, points_per_period=16)
    b = membership_check(c, PARAMS, points_per_period=32)
    assert a.bounds_ok and b.bounds_ok
    assert a.C1 == pytest.approx(b.C1, rel=0.02) and a.C2 == pytest.approx(b.C2, rel=0.02)
