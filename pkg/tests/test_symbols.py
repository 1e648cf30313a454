import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from hyperloss.coefficients import model_from_spec
from hyperloss.experiments import psi3_grid
from hyperloss.phase import PhaseParams, WeightPair, zone_split
from hyperloss.profiles import profile_from_spec
from hyperloss.symbols import (RootPair, calibrate_d, characteristic_roots, cutoff, majorant_eval,
                               root_diagnostics, verify_psi3)

ONES = profile_from_spec({"tag": "constant"})
TRIVIAL = WeightPair()


# --- cutoff ---------------------------------------------------------------------------

def test_cutoff_values():
    assert cutoff(0.0) == 1.0 and cutoff(1.0) == 1.0 and cutoff(-0.7) == 1.0
    assert cutoff(2.0) == 0.0 and cutoff(5.0) == 0.0
    assert cutoff(1.5) == pytest.approx(0.5, abs=1e-15)


@given(s=st.floats(1.0, 2.0), r=st.floats(1.0, 2.0))
def test_cutoff_monotone(s, r):
    lo, hi = sorted((s, r))
    assert cutoff(hi) <= cutoff(lo)


def test_cutoff_smooth_at_shoulders():
    s = np.linspace(0.9, 2.1, 12001)
    d = np.diff(cutoff(s)) / np.diff(s)
    assert np.max(np.abs(np.diff(d))) < 1e-2


# --- characteristic roots ----------------------------------------------------------------

@pytest.fixture(scope="module")
def tsin_roots():
    model = model_from_spec({"tag": "tsin"})
    params = PhaseParams(k=10.0, N=2, horizon_T=model.horizon_T)
    x, xi = np.linspace(-5, 5, 11), np.geomspace(1, 1e4, 9)
    return RootPair(model, params, calibrate_d(model, params, x, xi))


def test_roots_at_origin_are_scaled_weights(tsin_roots):
    m, p, d2 = tsin_roots.model, tsin_roots.params, tsin_roots.d2
    x, xi = np.array([0.3, -2.0]), np.array([5.0, 400.0])
    l1, l2 = characteristic_roots(m, 1e-12, x, xi, p, d2)
    scale = m.weights.omega(x) * np.sqrt(p.k**2 + xi**2)
    assert np.allclose(l2, d2 * scale, rtol=1e-14) and np.allclose(l1, -l2)


def test_roots_after_shoulder_are_symbol_roots(tsin_roots):
    m, p, d2 = tsin_roots.model, tsin_roots.params, tsin_roots.d2
    x, xi = np.array([0.3, -2.0]), np.array([2000.0, 400.0])
    sp = zone_split(x, xi, m.weights, m.profile, p)
    t = np.minimum(2.5 * sp.t_split, p.horizon_T)
    assert np.all(t >= 2 * sp.t_split)
    l1, l2 = characteristic_roots(m, t, x, xi, p, d2)
    a = m.spatial(x) * m.time_part(t) * (p.k**2 + xi**2)
    assert np.allclose(l2, np.sqrt(a), rtol=1e-14) and np.allclose(l1, -np.sqrt(a))


def test_root_diagnostics_ellipticity(tsin_roots):
    rep = root_diagnostics(tsin_roots, n=4000, seed=2)
    assert rep["ellipticity_C"] > 0.5
    assert math.isfinite(rep["upper_C0"])
    assert rep["max_step_jump"] < 1e-2


def test_roots_reject_nonelliptic_symbol():
    m = model_from_spec({"tag": "broken"})
    p = PhaseParams(k=1.0, N=1, horizon_T=m.horizon_T)
    t = np.geomspace(1e-6, m.horizon_T, 200)
    with pytest.raises(ValueError, match="ellipticity"):
        characteristic_roots(m, t, np.zeros_like(t), np.ones_like(t), p, 1.0)
    with pytest.raises(ValueError):
        characteristic_roots(m, t, np.zeros_like(t), np.ones_like(t), p, 0.0)


# --- majorant -----------------------------------------------------------------------------
# constant profile, trivial weights, k = 100, xi = 0: h = 0.01, t_split = 0.02,
# second boundary 0.02 e.

P100 = PhaseParams(k=100.0, N=2)


def test_majorant_deep_interior():
    assert majorant_eval(ONES, TRIVIAL, P100, 1.0, 0.01, 0.0, 0.0) == pytest.approx(100.0)
    assert majorant_eval(ONES, TRIVIAL, P100, 3.0, 0.01, 0.0, 0.0) == pytest.approx(300.0)


def test_majorant_middle_shoulder():
    # t = 0.03: interior cutoff 1/2, middle cutoff 1
    assert majorant_eval(ONES, TRIVIAL, P100, 1.0, 0.03, 0.0, 0.0) == pytest.approx(
        50.0 + 0.5 / 0.03, rel=1e-12)


def test_majorant_deep_middle():
    # between 2 t_split and t_split_tilde only the middle term is alive
    t = 0.045
    assert majorant_eval(ONES, TRIVIAL, P100, 1.0, t, 0.0, 0.0) == pytest.approx(1 / t, rel=1e-14)


def test_majorant_exterior():
    # t = 0.2 lies past both shoulders: (1/t)^2 e / <xi>_k
    assert majorant_eval(ONES, TRIVIAL, P100, 1.0, 0.2, 0.0, 0.0) == pytest.approx(
        25 * math.e / 100, rel=1e-12)


def test_majorant_kappa_positive():
    with pytest.raises(ValueError):
        majorant_eval(ONES, TRIVIAL, P100, 0.0, 0.1, 0.0, 0.0)


# --- integral bound ------------------------------------------------------------------------

def _psi3(tag, kappa=1.0, n=8, n_sub=64, order=16):
    prof = profile_from_spec({"tag": tag})
    T = prof.horizon_T
    params = PhaseParams(k=max(1.0, 1.0 / T), N=2, horizon_T=T)
    x, xi = psi3_grid(n)
    return verify_psi3(prof, WeightPair(1.0, 0.5, 1.0), params, kappa, x, xi, n_sub, order)


def test_psi3_matches_adaptive_quadrature():
    # constant profile, x = xi = 0, k = 100: compare with scipy's adaptive quadrature
    rep = verify_psi3(ONES, TRIVIAL, P100, 1.0, [0.0], [0.0])
    brk = [0.02, 0.04, 0.02 * math.e, 0.04 * math.e]
    ref, _ = integrate.quad(lambda t: majorant_eval(ONES, TRIVIAL, P100, 1.0, t, 0.0, 0.0),
                            0.0, 1.0, points=brk, limit=400, epsabs=1e-13, epsrel=1e-12)
    assert rep.Theta[0] == 2.0
    assert rep.integral[0] == pytest.approx(ref, rel=1e-9)


def test_psi3_kappa_scales_linearly():
    one, two = _psi3("log_blowup", 1.0), _psi3("log_blowup", 2.0)
    assert np.allclose(two.ratio, 2 * one.ratio, rtol=1e-13)


@pytest.mark.parametrize("tag", ["constant", "log_blowup", "log_psi", "exp_modulated"])
def test_psi3_finite_and_refinement_stable(tag):
    coarse = _psi3(tag, n_sub=32, order=8)
    fine = _psi3(tag, n_sub=64, order=16)
    assert np.all(np.isfinite(fine.ratio))
    assert coarse.sup_ratio == pytest.approx(fine.sup_ratio, rel=0.05)
    assert set(fine.to_dict()["sup_piece_ratio"]) == {"interior", "middle", "exterior"}
