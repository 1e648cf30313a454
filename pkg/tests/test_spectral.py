import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyperloss.activators import ActivatorParams, build_instance
from hyperloss.profiles import LossClass
from hyperloss.spectral import (ModeProblem, SpectralVector, integrate_backward, integrate_mode,
                                log_sobolev_norm, loss_fit, sobolev_norm, sweep)
from hyperloss.timefuncs import CallableTime, Constant, LogSine, TSinInv


def test_harmonic_energy():
    tr = integrate_mode(ModeProblem(10.0, Constant(1.0)), tol=1e-10, report=101)
    assert np.max(np.abs(tr.energy - 1)) < 1e-8
    assert np.allclose(tr.u, np.sin(10 * tr.t) / 10, atol=1e-10)


def test_harmonic_energy_without_closed_form():
    tr = integrate_mode(ModeProblem(10.0, Constant(1.0)), tol=1e-10, report=101,
                        analytic_seed=False)
    assert tr.stats["accepted"] > 0
    assert np.max(np.abs(tr.energy - 1)) < 1e-8


def test_faster_constant_speed_closed_form():
    # c = 4, rho = 5: u = sin(10 t)/10, so E = cos^2(10 t) + sin^2(10 t)/4
    tr = integrate_mode(ModeProblem(5.0, Constant(4.0)), tol=1e-10, report=51, analytic_seed=False)
    exact = np.cos(10 * tr.t) ** 2 + 0.25 * np.sin(10 * tr.t) ** 2
    assert np.allclose(tr.energy, exact, rtol=1e-8)


def test_python_callable_coefficient():
    c = CallableTime(lambda t: 2.0 + np.sin(t), lambda t: np.cos(t), name="shifted_sine")
    tr = integrate_mode(ModeProblem(20.0, c), tol=1e-9, report=11)
    ref = integrate_mode(ModeProblem(20.0, c), tol=1e-12, report=11)
    assert np.allclose(tr.energy, ref.energy, rtol=1e-6)


def test_reversibility():
    # forward from t = 0.05 with data (0, 1), then back again
    p = ModeProblem(30.0, LogSine(alpha=1.0), T=0.5)
    fw = integrate_mode(p, tol=1e-12, report=np.array([0.05, 0.5]), t_start=0.05)
    u, du = integrate_backward(p, 0.5, (fw.u[-1], fw.du[-1]), 0.05, tol=1e-12)
    assert u == pytest.approx(0.0, abs=1e-10) and du == pytest.approx(1.0, abs=1e-10)


def test_wronskian_constant():
    # start past the infinitely many wiggles of t sin(1/t) at the origin
    c = TSinInv()
    rho = 15.0
    rep = np.linspace(1e-3, 0.1, 21)
    a = integrate_mode(ModeProblem(rho, c, T=0.1, u0=1.0, v0=0.0), tol=1e-12, report=rep,
                       t_start=1e-3)
    b = integrate_mode(ModeProblem(rho, c, T=0.1, u0=0.0, v0=1.0), tol=1e-12, report=rep,
                       t_start=1e-3)
    w = a.u * b.du - b.u * a.du
    assert np.allclose(w, 1.0, rtol=0, atol=1e-10)


def test_fixed_step_convergence_order():
    c = LogSine(alpha=1.0)
    prob = ModeProblem(20.0, c, T=0.5)
    ref = integrate_mode(prob, tol=1e-14, report=np.array([0.1, 0.5]), t_start=0.1)
    errs = []
    for h in (4e-3, 2e-3, 1e-3):
        tr = integrate_mode(prob, report=np.array([0.1, 0.5]), t_start=0.1, fixed_step=h)
        errs.append(abs(tr.u[-1] - ref.u[-1]) + abs(tr.du[-1] - ref.du[-1]) / 20)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 4.5)


def test_tolerance_range():
    with pytest.raises(ValueError):
        integrate_mode(ModeProblem(10.0, Constant(1.0)), tol=1e-16)


def test_activator_energy_grows_across_window():
    inst = build_instance(ActivatorParams(), 1e4)
    rep = np.array([inst.a_rho, inst.b_rho])
    tr = integrate_mode(ModeProblem(1e4, inst.coefficient), tol=1e-8, report=rep)
    ref = integrate_mode(ModeProblem(1e4, inst.coefficient), tol=1e-12, report=rep)
    assert tr.energy[1] > tr.energy[0]
    assert np.allclose(tr.energy, ref.energy, rtol=1e-6)


def test_sweep_thread_invariance():
    c = LogSine(alpha=1.0)
    rhos = [50.0, 10.0, 30.0, 20.0]
    one = sweep(c, rhos, T=0.5, t_eval=0.5, tol=1e-9, threads=1)
    two = sweep(c, rhos, T=0.5, t_eval=0.5, tol=1e-9, threads=2)
    assert [t.rho for t in one] == rhos
    for a, b in zip(one, two):
        assert np.array_equal(a.energy, b.energy)


# --- Sobolev norms --------------------------------------------------------------------

def test_sobolev_examples():
    assert sobolev_norm(SpectralVector([1.0], [2.0], m=1.0), lambda r: r) == pytest.approx(2.0)
    assert sobolev_norm(SpectralVector([1.0], [2.0], m=0.0, delta=1.0),
                        lambda r: np.log1p(r)) == pytest.approx(3.0)


def test_sobolev_overflow_is_inf():
    v = SpectralVector([1.0], [1e3], delta=1.0)
    assert sobolev_norm(v, lambda r: r) == math.inf
    assert log_sobolev_norm(v, lambda r: r) == pytest.approx(1e3)


@given(c=st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8),
       m=st.floats(-2, 2), d=st.floats(-3, 0))
def test_negative_shift_never_increases(c, m, d):
    freqs = np.arange(1, len(c) + 1, dtype=float) * 3.0
    scale = lambda r: np.log1p(r)  # noqa: E731
    lhs = log_sobolev_norm(SpectralVector(c, freqs, m, d), scale)
    rhs = log_sobolev_norm(SpectralVector(c, freqs, m, 0.0), scale)
    assert lhs <= rhs + 1e-12


# --- loss fits -------------------------------------------------------------------------

def test_loss_fit_constant_is_zero():
    rhos = np.geomspace(10, 1e4, 8)
    traces = sweep(Constant(1.0), rhos, t_eval=1.0)
    rep = loss_fit(traces, 1.0)
    assert rep.variant is LossClass.ZERO and rep.slope == 0.0


def test_loss_fit_needs_range():
    traces = sweep(Constant(1.0), [10.0, 20.0], t_eval=1.0)
    with pytest.raises(ValueError):
        loss_fit(traces, 1.0)
