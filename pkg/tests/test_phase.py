import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyperloss.phase import (PhaseParams, WeightPair, ZoneLabel, bracket, check_weight_axioms,
                             classify_zone, planck_h, theta_weight, zone_codes, zone_split)
from hyperloss.profiles import profile_from_spec

ONES = profile_from_spec({"tag": "constant"})
TRIVIAL = WeightPair()
JAPANESE = WeightPair(1.0, 1.0, 1.0)


def test_bracket_values():
    assert bracket(0.0, 1.0) == 1.0
    assert bracket(4.0, 3.0) == 5.0
    assert bracket([3.0, 4.0], 1.0) == pytest.approx(math.sqrt(26))
    with pytest.raises(ValueError):
        bracket([3.0, 4.0], 0.0)


def test_planck_values():
    assert planck_h(7.0, 0.0, TRIVIAL, k=2.0) == 0.5
    assert planck_h(0.0, 0.0, JAPANESE, k=1.0) == 1.0
    assert planck_h(math.sqrt(3), 4.0, JAPANESE, k=3.0) == pytest.approx(0.1, rel=1e-15)


@given(x=st.floats(-1e6, 1e6), xi=st.floats(-1e9, 1e9), k=st.floats(1.0, 100.0))
def test_planck_at_most_one(x, xi, k):
    assert 0 < planck_h(x, xi, JAPANESE, k) <= 1.0


def test_theta_weight_values():
    assert np.allclose(theta_weight(np.array([0.0, 5.0]), np.array([1.0, 1e4]), TRIVIAL, ONES), 2)
    blow = profile_from_spec({"tag": "log_blowup", "T": 1.0})
    # Phi == 1, <xi>_1 = e^2 - 1
    xi = math.sqrt((math.e**2 - 1) ** 2 - 1)
    assert theta_weight(0.0, xi, TRIVIAL, blow) == pytest.approx(136.0, rel=1e-12)


def test_theta_weight_subadditive_ratio():
    blow = profile_from_spec({"tag": "log_blowup"})
    rng = np.random.default_rng(1)
    w = WeightPair(1.0, 0.5, 1.0)
    x, y = rng.uniform(-1e3, 1e3, (2, 2000))
    xi = np.exp(rng.uniform(math.log(10), math.log(1e6), 2000))
    lhs = theta_weight(x + y, xi, w, blow)
    rhs = theta_weight(x, xi, w, blow) + theta_weight(y, xi, w, blow)
    assert np.isfinite(np.max(lhs / rhs)) and np.max(lhs / rhs) < 2.0


def test_zone_split_hand_values():
    # Phi == 1 and <xi>_k = 100 give h = 0.01
    sp = zone_split(0.0, 0.0, TRIVIAL, ONES, PhaseParams(k=100.0, N=2))
    assert sp.h == pytest.approx(0.01)
    assert sp.t_split == pytest.approx(0.02)
    assert sp.t_split_tilde == pytest.approx(0.02 * math.e, rel=1e-12)
    assert sp.t_split_tilde == pytest.approx(0.054366, abs=1e-6)


def test_zone_split_floor_case():
    sp = zone_split(0.0, 0.0, TRIVIAL, ONES, PhaseParams(k=1.0, N=1, horizon_T=2.0))
    assert (sp.t_split, sp.t_split_tilde) == (1.0, pytest.approx(math.e))
    assert bool(sp.ext_empty)
    assert not bool(zone_split(0.0, 0.0, TRIVIAL, ONES, PhaseParams(1.0, 1, 3.0)).ext_empty)


def test_classify_zone_examples():
    p = PhaseParams(k=100.0, N=2)
    assert classify_zone(0.0, 0.0, 0.0, TRIVIAL, ONES, p) is ZoneLabel.INT
    assert classify_zone(0.02, 0.0, 0.0, TRIVIAL, ONES, p) is ZoneLabel.INT
    assert classify_zone(0.03, 0.0, 0.0, TRIVIAL, ONES, p) is ZoneLabel.MID
    assert classify_zone(0.2, 0.0, 0.0, TRIVIAL, ONES, p) is ZoneLabel.EXT
    with pytest.raises(ValueError):
        classify_zone(1.5, 0.0, 0.0, TRIVIAL, ONES, p)


@pytest.mark.parametrize("tag", ["constant", "log_blowup", "log_psi", "exp_modulated"])
def test_zone_chain_and_tiling(tag):
    prof = profile_from_spec({"tag": tag})
    rng = np.random.default_rng(7)
    n = 1000
    x = rng.uniform(-1e3, 1e3, n)
    xi = np.exp(rng.uniform(0, math.log(1e6), n))
    N = int(rng.integers(1, 9))
    sp = zone_split(x, xi, JAPANESE, prof, PhaseParams(1.0, N, prof.horizon_T))
    assert np.all(sp.h <= sp.t_split) and np.all(sp.t_split <= sp.t_split_tilde)
    t = np.sort(rng.uniform(0, prof.horizon_T, (n, 1000)), axis=1)
    codes = zone_codes(t, type(sp)(sp.h[:, None], sp.t_split[:, None],
                                   sp.t_split_tilde[:, None], None))
    # labels are nondecreasing in t: each zone is one interval and they do not overlap
    assert np.all(np.diff(codes, axis=1) >= 0)
    assert np.all((codes == 0) == (t <= sp.t_split[:, None]))
    assert np.all((codes == 2) == (t > sp.t_split_tilde[:, None]))


@pytest.mark.parametrize("tag", ["constant", "log_psi"])
def test_zone_boundaries_monotone(tag):
    prof = profile_from_spec({"tag": tag})
    xi = np.geomspace(1, 1e8, 400)
    sp = zone_split(np.full_like(xi, 3.0), xi, JAPANESE, prof, PhaseParams(10.0, 2, 0.1))
    assert np.all(np.diff(sp.t_split) <= 0) and np.all(np.diff(sp.t_split_tilde) <= 0)
    x = np.geomspace(1, 1e6, 400)
    sp = zone_split(x, np.full_like(x, 50.0), JAPANESE, prof, PhaseParams(10.0, 2, 0.1))
    assert np.all(np.diff(sp.t_split) <= 0) and np.all(np.diff(sp.t_split_tilde) <= 0)


def test_zone_boundaries_monotone_only_for_small_h():
    # h L^7 with L = ln(1 + 1/h) increases in h only while L > 7/(1 + h)
    prof = profile_from_spec({"tag": "log_blowup"})
    xi = np.geomspace(1e4, 1e8, 400)  # h < 1e-4
    sp = zone_split(np.full_like(xi, 3.0), xi, JAPANESE, prof, PhaseParams(10.0, 2, 0.1))
    assert np.all(np.diff(sp.t_split) <= 0) and np.all(np.diff(sp.t_split_tilde) <= 0)
    xi = np.geomspace(1, 10, 50)  # h near 0.03: the second boundary grows with |xi|
    sp = zone_split(np.full_like(xi, 3.0), xi, JAPANESE, prof, PhaseParams(10.0, 2, 0.1))
    assert np.any(np.diff(sp.t_split_tilde) > 0)


def test_profiles_continued_beyond_horizon():
    prof = profile_from_spec({"tag": "log_blowup"})  # T = 0.1
    sp = zone_split(0.0, 0.0, JAPANESE, prof, PhaseParams(1.0, 1, 0.1))  # h = 1 > T
    assert sp.t_split >= sp.h


@pytest.mark.parametrize("k1,k2", [(0.0, 0.0), (0.0, 0.5), (0.5, 1.0), (1.0, 1.0), (0.3, 0.7)])
def test_weight_axioms_catalog(k1, k2):
    rep = check_weight_axioms(WeightPair(1.0, k1, k2), n=10_000)
    assert rep["passed"]
    assert rep["omega_over_phi"] <= 1 + 1e-12
    assert rep["phi_over_linear"] <= 1 + 1e-12
    assert rep["slowly_varying_C"] < 3.0
    assert 0 <= rep["temperance_s"] <= 1
    assert rep["uncertainty_kappa"] > 0 if k2 > 0 else rep["uncertainty_kappa"] >= 0


def test_weight_validation():
    with pytest.raises(ValueError):
        WeightPair(0.5)
    with pytest.raises(ValueError):
        WeightPair(1.0, 0.8, 0.5)
    with pytest.raises(ValueError):
        PhaseParams(N=-1)
    with pytest.raises(ValueError):
        PhaseParams(k=0.5)
