import math

import numpy as np
import pytest
from scipy import integrate

from hyperloss.coefficients import model_from_spec
from hyperloss.wavefd import (CFLError, SpongeError, WaveConfig, bump, cone_speed, dalembert,
                              measure_speed, smooth_bump, solve_wave)


def constant(value):
    return model_from_spec({"tag": "constant", "value": value})


def test_bumps():
    x = np.array([-0.5, 0.0, 0.25, 0.5, 0.7])
    assert np.allclose(bump(x, 0.5), [0.0, 1.0, 0.5625, 0.0, 0.0])
    assert smooth_bump(0.0, 0.5) == 1.0 and smooth_bump(0.5, 0.5) == 0.0


def test_dalembert_agreement():
    cfg = WaveConfig(constant(1.0), L=4.0, dx=1e-3, t_end=0.5, n_snapshots=6)
    snaps = solve_wave(cfg)
    assert snaps.t[-1] == pytest.approx(0.5, rel=1e-14)
    for t, u in zip(snaps.t, snaps.u):
        err = math.sqrt(cfg.dx * np.sum((u - dalembert(snaps.x, t, cfg.R)) ** 2))
        assert err < 1e-3


def test_second_order_convergence():
    errs = []
    for dx in (4e-3, 2e-3, 1e-3):
        cfg = WaveConfig(constant(1.0), L=3.0, dx=dx, t_end=0.4, datum="smooth", n_snapshots=2)
        snaps = solve_wave(cfg)
        errs.append(np.max(np.abs(snaps.u[-1] - dalembert(snaps.x, 0.4, cfg.R, "smooth"))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8)


def test_discrete_energy_conserved():
    snaps = solve_wave(WaveConfig(constant(1.0), L=4.0, dx=2e-3, t_end=0.5, n_snapshots=2))
    e = snaps.energy[np.isfinite(snaps.energy)]
    assert np.max(np.abs(e - e[0])) < 1e-10 * e[0]


def test_constant_speed_two():
    model = constant(4.0)
    assert cone_speed(model, 0.5, 4.0) == pytest.approx(2.0, rel=1e-14)
    snaps = solve_wave(WaveConfig(model, L=4.0, dx=1e-3, t_end=0.5, n_snapshots=11))
    rep = measure_speed(snaps)
    assert rep.gamma0 == pytest.approx(2.0)
    assert rep.speed_ratio[-1] == pytest.approx(1.0, abs=0.02)
    assert np.all(rep.radius_ratio <= 1.02)


def test_singular_front_slows_down():
    # sqrt(a) decays as t grows, so the distance the front covers per snapshot shrinks
    model = model_from_spec({"tag": "log_blowup"})
    snaps = solve_wave(WaveConfig(model, L=4.0, dx=2e-3, t_end=0.1, n_snapshots=6))
    rep = measure_speed(snaps)
    steps = np.diff(rep.radius)
    assert np.all(steps > 0) and np.all(np.diff(steps) < 0)
    # the front stays inside the cone built from the time integral of theta_tilde
    for t, r in zip(rep.t[1:], rep.radius[1:]):
        reach, _ = integrate.quad(lambda u: float(model.profile.theta_tilde(math.exp(u)))
                                  * math.exp(u), math.log(rep.t[0]), math.log(t), limit=200)
        assert r <= rep.R + rep.gamma0 * reach + snaps.config.dx


def test_lower_order_term_keeps_the_speed():
    base = WaveConfig(constant(1.0), L=4.0, dx=2e-3, t_end=0.5, n_snapshots=6)
    drift = WaveConfig(constant(1.0), L=4.0, dx=2e-3, t_end=0.5, n_snapshots=6, lower_order=5.0)
    r0 = measure_speed(solve_wave(base)).radius
    r1 = measure_speed(solve_wave(drift)).radius
    assert np.max(np.abs(r1 - r0)) <= 3 * base.dx


@pytest.mark.xfail(strict=True, reason="leapfrog smears the support edge over about "
                   "(t dx^2)^(1/3); the two thresholds sit 3 to 9 cells apart at CFL 0.9")
def test_threshold_sensitivity_within_two_cells():
    snaps = solve_wave(WaveConfig(model_from_spec({"tag": "tsin"}), L=4.0, dx=1e-3, t_end=0.1))
    a = measure_speed(snaps, eta=1e-6).radius
    b = measure_speed(snaps, eta=1e-8).radius
    assert np.max(np.abs(a - b)) <= 2 * snaps.config.dx


def test_threshold_sensitivity_is_bounded():
    # the measured radii move outward as the threshold drops, by a few cells only
    snaps = solve_wave(WaveConfig(model_from_spec({"tag": "tsin"}), L=4.0, dx=1e-3, t_end=0.1))
    a = measure_speed(snaps, eta=1e-6).radius
    b = measure_speed(snaps, eta=1e-8).radius
    assert np.all(b >= a) and np.max(b - a) <= 12 * snaps.config.dx


def test_cfl_guard():
    with pytest.raises(CFLError):
        WaveConfig(constant(1.0), cfl=0.95)


def test_sponge_guard():
    with pytest.raises(SpongeError):
        solve_wave(WaveConfig(constant(1.0), L=1.2, dx=2e-3, t_end=0.6, n_snapshots=7))


def test_support_must_fit():
    with pytest.raises(ValueError):
        WaveConfig(constant(1.0), L=0.8, R=0.5)
