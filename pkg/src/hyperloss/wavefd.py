"""Leapfrog solver for ``u_tt = a(t, x) u_xx (+ b u_x)`` and cone-of-dependence measurements."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .coefficients import CoefficientModel, model_from_spec

__all__ = [
    "WaveConfig",
    "Snapshots",
    "ConeReport",
    "CFLError",
    "SpongeError",
    "bump",
    "smooth_bump",
    "solve_wave",
    "measure_speed",
    "cone_speed",
    "dalembert",
]


class CFLError(ValueError):
    pass


class SpongeError(RuntimeError):
    pass


def bump(x, R):
    """``(1 - (x/R)^2)^2`` inside ``|x| < R``: a C^1 profile with a sharp support edge."""
    r = np.asarray(x, dtype=float) / R
    return np.where(np.abs(r) < 1, (1 - r * r) ** 2, 0.0)


def smooth_bump(x, R):
    """``exp(1 - 1/(1 - (x/R)^2))`` inside ``|x| < R``: C-infinity, for convergence studies."""
    r2 = (np.asarray(x, dtype=float) / R) ** 2
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(r2 < 1, np.exp(1 - 1 / np.where(r2 < 1, 1 - r2, 1.0)), 0.0)


@dataclass
class WaveConfig:
    model: CoefficientModel
    L: float = 4.0
    dx: float = 1e-3
    cfl: float = 0.9
    t_end: float = 0.1
    R: float = 0.5
    datum: str = "bump"
    velocity: bool = False
    n_snapshots: int = 21
    eta: float = 1e-6
    sponge_width: float = 0.2
    sponge_strength: float = 50.0
    lower_order: float = 0.0
    start_shift: float = 1e-8

    def __post_init__(self):
        self.model = model_from_spec(self.model)
        if not 0 < self.cfl <= 0.9:
            raise CFLError("CFL factor must lie in (0, 0.9]")
        if self.R >= self.L / 2:
            raise ValueError("initial support must lie inside (-L/2, L/2)")


@dataclass
class Snapshots:
    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    dt: float
    energy: np.ndarray
    config: WaveConfig = field(repr=False)

    @property
    def n_steps(self) -> int:
        return int(round((self.t[-1] - self.t[0]) / self.dt))


@njit(cache=True)
def _leapfrog(u_prev, u_cur, S, sig, cvals, dt, dx, b, stride, out, energy):
    """March ``len(cvals) - 1`` steps; ``cvals[n]`` is the time part at step ``n``."""
    n = u_cur.shape[0]
    nsteps = cvals.shape[0] - 1
    u_next = np.zeros(n)
    r2 = (dt / dx) ** 2
    for step in range(1, nsteps):
        c = cvals[step]
        for i in range(1, n - 1):
            lap = u_cur[i + 1] - 2.0 * u_cur[i] + u_cur[i - 1]
            adv = 0.0
            if b != 0.0:
                adv = b * dt * dt * (u_cur[i + 1] - u_cur[i - 1]) / (2.0 * dx)
            s = 0.5 * sig[i] * dt
            u_next[i] = (2.0 * u_cur[i] - (1.0 - s) * u_prev[i] + r2 * c * S[i] * lap + adv) / (1.0 + s)
        u_next[0] = 0.0
        u_next[n - 1] = 0.0
        # staggered energy at half step (exactly conserved for constant a, no sponge, b = 0)
        kin = 0.0
        pot = 0.0
        for i in range(n - 1):
            v = (u_next[i] - u_cur[i]) / dt
            kin += v * v
            pot += c * 0.5 * (S[i] + S[i + 1]) * (u_next[i + 1] - u_next[i]) * (u_cur[i + 1] - u_cur[i])
        energy[step] = 0.5 * dx * kin + 0.5 * pot / dx
        for i in range(n):
            u_prev[i] = u_cur[i]
            u_cur[i] = u_next[i]
        if (step + 1) % stride == 0:
            out[(step + 1) // stride, :] = u_cur
    return nsteps


def solve_wave(cfg: WaveConfig) -> Snapshots:
    """Leapfrog in time and centred differences in space with a damping sponge near ``x = +-L``.

    The step is ``dt = cfl * dx / sqrt(sup a)`` (sup over the run window and
    the whole grid), shrunk so that ``t_end`` is a whole number of steps and
    snapshots land on steps.  The first step uses a second-order Taylor
    expansion.  Coefficients singular at ``t = 0`` start at
    ``start_shift * t_end``.
    """
    m = cfg.model
    x = np.arange(-cfg.L, cfg.L + cfg.dx / 2, cfg.dx)
    S = m.spatial(x)
    t0 = 0.0 if m.time_part.regular_at_zero else cfg.start_shift * cfg.t_end
    ts = np.geomspace(max(t0, 1e-12), cfg.t_end, 4000)
    c_sup = float(np.max(np.asarray(m.time_part(ts), dtype=float)))
    sup_a = float(np.max(S)) * c_sup
    if sup_a <= 0:
        raise ValueError("coefficient must be positive")
    dt = cfg.cfl * cfg.dx / math.sqrt(sup_a)
    intervals = cfg.n_snapshots - 1
    span = cfg.t_end - t0
    stride = max(1, math.ceil(span / dt / intervals))
    nsteps = stride * intervals
    dt = span / nsteps
    if dt * math.sqrt(sup_a) / cfg.dx > 0.9 + 1e-12:
        raise CFLError("CFL condition violated")
    tgrid = t0 + dt * np.arange(nsteps + 1)
    cvals = np.asarray(m.time_part(np.maximum(tgrid, 1e-300)), dtype=float)

    shape = bump if cfg.datum == "bump" else smooth_bump
    f = shape(x, cfg.R)
    u0 = np.zeros_like(x) if cfg.velocity else f
    v0 = f if cfg.velocity else np.zeros_like(x)
    lap0 = np.zeros_like(x)
    lap0[1:-1] = (u0[2:] - 2 * u0[1:-1] + u0[:-2]) / cfg.dx**2
    u1 = u0 + dt * v0 + 0.5 * dt * dt * cvals[0] * S * lap0
    u1[0] = u1[-1] = 0.0

    edge = cfg.L - cfg.sponge_width * cfg.L
    sig = np.where(np.abs(x) > edge,
                   cfg.sponge_strength * ((np.abs(x) - edge) / (cfg.L - edge)) ** 2, 0.0)
    out = np.zeros((intervals + 1, x.size))
    out[0] = u0
    if stride == 1:
        out[1] = u1
    energy = np.full(nsteps + 1, np.nan)
    _leapfrog(u0.copy(), u1.copy(), S, sig, cvals, dt, cfg.dx, float(cfg.lower_order),
              stride, out, energy)
    snaps = Snapshots(x, tgrid[::stride], out, dt, energy, cfg)
    sponge = np.abs(x) > edge
    for k in range(out.shape[0]):
        peak = np.max(np.abs(out[k]))
        if peak > 0 and np.max(np.abs(out[k][sponge])) > 1e-3 * peak:
            raise SpongeError(f"field reached the sponge at t={snaps.t[k]:.4g}; enlarge L")
    return snaps


@dataclass
class ConeReport:
    t: np.ndarray
    radius: np.ndarray
    predicted: np.ndarray
    R: float
    gamma0: float
    speed_ratio: np.ndarray
    boundary_x: np.ndarray
    eta: float

    @property
    def radius_ratio(self) -> np.ndarray:
        return self.radius / self.predicted

    def to_dict(self):
        return {"gamma0": self.gamma0, "R": self.R, "eta": self.eta,
                "t": self.t.tolist(), "radius": self.radius.tolist(),
                "predicted": self.predicted.tolist(),
                "speed_ratio": [None if not math.isfinite(v) else float(v) for v in self.speed_ratio]}


def cone_speed(model: CoefficientModel, t_end: float, x_max: float, t_min: float = 1e-8,
               n: int = 2001) -> float:
    """``sup sqrt(a) / (omega theta_tilde)`` over a sample grid of the run window."""
    t = np.geomspace(max(t_min, 1e-12), t_end, n)
    x = np.linspace(-x_max, x_max, n)
    ratio_x = np.sqrt(model.spatial(x)) / model.weights.omega(x)
    c = np.asarray(model.time_part(t), dtype=float)
    tt = np.asarray(model.profile.theta_tilde(t), dtype=float)
    return float(np.max(ratio_x) * np.max(np.sqrt(c) / tt))


def measure_speed(snaps: Snapshots, eta: float | None = None) -> ConeReport:
    """Support radius over time against the anisotropic cone ``R + g0 omega(x_b) theta_tilde(t) t``.

    The support radius is the outermost ``|x|`` with ``|u| > eta * max|u|``.
    ``R`` is the radius measured at the first snapshot so the threshold
    affects both ends alike.  The speed ratio compares the measured
    displacement with the cone's, at the measured boundary point.
    """
    cfg = snaps.config
    eta = cfg.eta if eta is None else eta
    m = cfg.model
    radius, xb = [], []
    for u in snaps.u:
        peak = np.max(np.abs(u))
        if peak == 0:
            raise ValueError("field is identically below threshold")
        idx = np.flatnonzero(np.abs(u) > eta * peak)
        xs = snaps.x[idx]
        j = int(np.argmax(np.abs(xs)))
        radius.append(abs(xs[j]))
        xb.append(xs[j])
    radius, xb = np.array(radius), np.array(xb)
    R = radius[0]
    g0 = cone_speed(m, cfg.t_end, cfg.L, t_min=snaps.t[0])
    t_rel = snaps.t - snaps.t[0]
    tt = np.asarray(m.profile.theta_tilde(np.maximum(snaps.t, 1e-300)), dtype=float)
    slope = g0 * m.weights.omega(xb) * tt
    pred = R + slope * t_rel
    with np.errstate(divide="ignore", invalid="ignore"):
        speed = np.where(t_rel > 0, (radius - R) / (slope * t_rel), np.nan)
    return ConeReport(snaps.t, radius, pred, R, g0, speed, xb, eta)


def dalembert(x, t, R, datum="bump", c0=1.0):
    """Exact solution for ``a = c0^2`` with the bump as initial displacement and zero velocity."""
    shape = bump if datum == "bump" else smooth_bump
    return 0.5 * (shape(x - c0 * t, R) + shape(x + c0 * t, R))
