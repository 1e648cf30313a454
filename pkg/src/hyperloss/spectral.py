"""Mode ODE integration, spectral Sobolev norms and loss-exponent fits."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _dopri
from .profiles import LossClass, SingularityProfile, vartheta
from .timefuncs import TimeFunction, time_function_from_spec

__all__ = [
    "ModeProblem",
    "EnergyTrace",
    "IntegrationError",
    "integrate_mode",
    "commensurate_times",
    "sweep",
    "SpectralVector",
    "sobolev_norm",
    "log_sobolev_norm",
    "LossReport",
    "loss_fit",
]

START_SHIFT = 1e-8


class IntegrationError(RuntimeError):
    """The integrator stopped before the horizon."""

    def __init__(self, message, last_t):
        super().__init__(message)
        self.last_t = last_t


@dataclass
class ModeProblem:
    rho: float
    c: TimeFunction
    T: float = 1.0
    u0: float = 0.0
    v0: float = 1.0
    c_max: float | None = None

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        self.c = time_function_from_spec(self.c)

    def speed_bound(self) -> float:
        if self.c_max is None:
            self.c_max = self.c.sup(self.T)
        return math.sqrt(self.c_max)


@dataclass
class EnergyTrace:
    rho: float
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def energy(self) -> np.ndarray:
        return self.du**2 + (self.rho * self.u) ** 2

    def energy_at(self, t_eval: float) -> float:
        i = int(np.argmin(np.abs(self.t - t_eval)))
        if not math.isclose(self.t[i], t_eval, rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError(f"t_eval={t_eval} is not a report time")
        return float(self.energy[i])

    def adapted_energy(self, c: TimeFunction) -> np.ndarray:
        return self.du**2 + np.asarray(c(np.maximum(self.t, 1e-300))) * (self.rho * self.u) ** 2


def _closed_form(y1, y2, q, omega, s):
    """Exact propagation over time ``s`` for a frozen coefficient ``q**2``."""
    cs, sn = np.cos(omega * s), np.sin(omega * s)
    return y1 * cs + y2 / q * sn, -q * y1 * sn + y2 * cs


def _python_kernel(c: TimeFunction):
    f = c.func if hasattr(c, "func") else c

    def kern(t, p):
        return float(f(t))
    return kern


def _segments(c: TimeFunction, t0: float, T: float, analytic_seed: bool):
    """Split ``[t0, T]`` into ('plateau', lo, hi, value) and ('ode', lo, hi) pieces."""
    pieces = []
    if analytic_seed:
        for lo, hi, val in sorted(c.plateaus()):
            lo, hi = max(lo, t0), min(hi, T)
            if hi > lo:
                pieces.append((lo, hi, val))
    out, cur = [], t0
    for lo, hi, val in pieces:
        if lo > cur:
            out.append(("ode", cur, lo, None))
        out.append(("plateau", max(lo, cur), hi, val))
        cur = hi
    if cur < T:
        out.append(("ode", cur, T, None))
    return out


def commensurate_times(T: float, omega: float, n: int = 200) -> np.ndarray:
    """About ``n`` report times that are multiples of the period ``2 pi / omega``, plus ``T``."""
    period = 2 * math.pi / omega
    k = max(1, int(T / period))
    stride = max(1, math.ceil(k / n))
    ts = period * np.arange(0, k + 1, stride, dtype=float)
    ts = ts[ts < T]
    return np.append(ts, T)


def integrate_mode(problem: ModeProblem, tol: float = 1e-10, report=None,
                   steps_per_period: float = 20.0, analytic_seed: bool = True,
                   fixed_step: float | None = None, start_shift: float = START_SHIFT,
                   t_start: float | None = None) -> EnergyTrace:
    """Integrate ``u'' + c(t) rho^2 u = 0`` with ``(u, u')(0) = (u0, v0)``.

    ``report`` is either an array of report times in ``[0, T]`` or an
    integer count for a uniform grid (default 201 points).  Exactly constant
    stretches of ``c`` are propagated in closed form.  If ``c`` is singular
    at 0 and has no plateau there, the coefficient is frozen at ``c(t0)`` on
    ``[0, t0]`` with ``t0 = start_shift * T``.

    With ``fixed_step`` the Runge-Kutta step length is fixed and error
    control is off (used for convergence-order studies).
    """
    if not 1e-14 <= tol <= 1e-3:
        raise ValueError("tol must lie in [1e-14, 1e-3]")
    T, rho, c = problem.T, problem.rho, problem.c
    if report is None:
        report = 201
    t_rep = np.linspace(0.0, T, int(report)) if np.isscalar(report) else np.asarray(report, float)
    if np.any(np.diff(t_rep) < 0) or t_rep[0] < 0 or t_rep[-1] > T * (1 + 1e-14):
        raise ValueError("report times must be nondecreasing in [0, T]")

    hmax = 2 * math.pi / (problem.speed_bound() * rho) / steps_per_period
    y1, y2 = rho * problem.u0, problem.v0
    Y = np.full((t_rep.size, 2), np.nan)
    stats = {"accepted": 0, "rejected": 0, "evals": 0, "max_local_error": 0.0,
             "start_shift": 0.0, "plateau_time": 0.0, "wall_s": 0.0}
    wall = time.perf_counter()

    t0 = 0.0 if t_start is None else float(t_start)
    plateau_at_zero = analytic_seed and any(lo <= 0.0 < hi for lo, hi, _ in c.plateaus())
    if not c.regular_at_zero and not plateau_at_zero and t0 == 0.0:
        t0 = start_shift * T
        q = math.sqrt(c(t0))
        m = t_rep <= t0
        Y[m, 0], Y[m, 1] = _closed_form(y1, y2, q, q * rho, t_rep[m])
        y1, y2 = _closed_form(y1, y2, q, q * rho, t0)
        stats["start_shift"] = t0
    else:
        m = t_rep <= t0
        Y[m, 0], Y[m, 1] = y1, y2

    if hasattr(c.kernel, "py_func"):
        kern, kargs = c.kernel, c.kernel_args()
    else:
        kern, kargs = _python_kernel(c), np.zeros(1)

    for kind, lo, hi, val in _segments(c, t0, T, analytic_seed):
        m = (t_rep > lo) & (t_rep <= hi)
        if kind == "plateau":
            q = math.sqrt(val)
            Y[m, 0], Y[m, 1] = _closed_form(y1, y2, q, q * rho, t_rep[m] - lo)
            y1, y2 = _closed_form(y1, y2, q, q * rho, hi - lo)
            stats["plateau_time"] += hi - lo
            continue
        targets = t_rep[m]
        if targets.size == 0 or targets[-1] < hi:
            targets = np.append(targets, hi)
        h0 = fixed_step if fixed_step else min(hmax, 0.1 * lo if lo > 0 else 0.01 * hmax)
        Yseg, st = _dopri.run(kern, kargs, rho, lo, (y1, y2), targets, tol,
                              fixed_step or hmax, h0, fixed_step is not None)
        stats["accepted"] += int(st[_dopri.S_ACCEPTED])
        stats["rejected"] += int(st[_dopri.S_REJECTED])
        stats["evals"] += int(st[_dopri.S_EVALS])
        stats["max_local_error"] = max(stats["max_local_error"], float(st[_dopri.S_MAX_ERR]))
        if st[_dopri.S_STATUS] != _dopri.OK:
            raise IntegrationError(
                f"integrator stopped (status {int(st[_dopri.S_STATUS])}) at t={st[_dopri.S_LAST_T]:.6g}",
                float(st[_dopri.S_LAST_T]))
        Y[m] = Yseg[: int(m.sum())]
        y1, y2 = Yseg[-1]
    stats["wall_s"] = time.perf_counter() - wall
    return EnergyTrace(rho, t_rep, Y[:, 0] / rho, Y[:, 1], stats)


def integrate_backward(problem: ModeProblem, t_from: float, state, t_to: float,
                       tol: float = 1e-10, steps_per_period: float = 20.0):
    """Integrate the mode from ``(t_from, state)`` back to ``t_to`` (no plateau shortcuts)."""
    c = problem.c
    hmax = 2 * math.pi / (problem.speed_bound() * problem.rho) / steps_per_period
    if hasattr(c.kernel, "py_func"):
        kern, kargs = c.kernel, c.kernel_args()
    else:
        kern, kargs = _python_kernel(c), np.zeros(1)
    y = (problem.rho * state[0], state[1])
    Y, st = _dopri.run(kern, kargs, problem.rho, t_from, y, np.array([t_to]), tol, hmax, hmax)
    if st[_dopri.S_STATUS] != _dopri.OK:
        raise IntegrationError("backward integration failed", float(st[_dopri.S_LAST_T]))
    return Y[0, 0] / problem.rho, Y[0, 1]


def _resolve_threads(threads: int) -> int:
    if threads in (0, None):
        return os.cpu_count() or 1
    return int(threads)


def sweep(coefficient, rhos, T: float = 1.0, t_eval: float | None = None, tol: float = 1e-10,
          threads: int = 1, report=None, steps_per_period: float = 20.0, **kwargs):
    """Integrate one mode per frequency.

    ``coefficient`` is a time function or a callable ``rho -> TimeFunction``
    (for rho-dependent families).  Results come back in input order
    whatever the thread count, so fits are reproducible.
    """
    rhos = [float(r) for r in rhos]

    def one(rho):
        c = coefficient(rho) if callable(coefficient) and not isinstance(coefficient, TimeFunction) \
            else coefficient
        rep = report
        if rep is None and t_eval is not None:
            rep = np.array(sorted({0.0, float(t_eval), T}))
        return integrate_mode(ModeProblem(rho, c, T), tol=tol, report=rep,
                              steps_per_period=steps_per_period, **kwargs)

    n = _resolve_threads(threads)
    if n == 1:
        return [one(r) for r in rhos]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(one, rhos))


@dataclass
class SpectralVector:
    coefficients: np.ndarray
    frequencies: np.ndarray
    m: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        if self.coefficients.shape != self.frequencies.shape:
            raise ValueError("coefficients and frequencies must have equal length")
        if np.any(self.frequencies <= 0):
            raise ValueError("frequencies must be positive")


def log_sobolev_norm(v: SpectralVector, loss_scale) -> float:
    """Natural log of the weighted norm, computed in log space."""
    if isinstance(loss_scale, SingularityProfile):
        prof = loss_scale
        loss_scale = lambda r: vartheta(prof, r)  # noqa: E731
    nz = v.coefficients != 0
    if not nz.any():
        return -math.inf
    rho = v.frequencies[nz]
    vt = np.asarray(loss_scale(rho), dtype=float) if v.delta != 0 else 0.0
    logs = (2 * v.m * np.log(rho) + 2 * v.delta * vt
            + 2 * np.log(np.abs(v.coefficients[nz])))
    top = float(np.max(logs))
    if not math.isfinite(top):
        return top
    return 0.5 * (top + math.log(float(np.sum(np.exp(logs - top)))))


def sobolev_norm(v: SpectralVector, loss_scale) -> float:
    """``(sum rho_i^(2m) exp(2 delta vartheta(rho_i)) v_i^2)^(1/2)``; ``inf`` on overflow.

    ``loss_scale`` is a profile or any callable ``r -> vartheta(r)``.
    """
    ln = log_sobolev_norm(v, loss_scale)
    return math.inf if ln > 709.0 else math.exp(ln)


@dataclass
class LossReport:
    rates: np.ndarray
    log_energy: np.ndarray
    slope: float
    intercept: float
    r2: float
    variant: LossClass
    growth_ratio: np.ndarray
    rate_kind: str

    def to_dict(self):
        return {"rates": self.rates.tolist(), "log_energy": self.log_energy.tolist(),
                "slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "class": self.variant.value, "rate_kind": self.rate_kind,
                "log_energy_over_log_rho": self.growth_ratio.tolist()}


def _linfit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return float(slope), float(icpt), r2


def loss_fit(traces, t_eval: float, rate="ln", zero_slope: float = 0.05,
             divergence: float = 2.0, min_points: int = 8, min_decades: float = 3.0,
             energy=None) -> LossReport:
    """Fit ``ln E_rho(t_eval)`` against ``ln rho`` or against a supplied rate ``phi(rho)``.

    Verdict: a slope at most ``zero_slope`` is Zero; ``ln E / ln rho``
    increasing at every step and growing by ``divergence`` overall is
    Infinite; anything else is Finite.  ``energy`` optionally maps a trace
    to the energy value to use (default ``trace.energy_at(t_eval)``).
    """
    rhos = np.array([tr.rho for tr in traces], dtype=float)
    order = np.argsort(rhos)
    traces = [traces[i] for i in order]
    rhos = rhos[order]
    if rhos.size < min_points or math.log10(rhos[-1] / rhos[0]) < min_decades - 1e-9:
        raise ValueError(f"need >= {min_points} frequencies spanning >= {min_decades} decades")
    get = energy or (lambda tr: tr.energy_at(t_eval))
    logE = np.log(np.array([get(tr) for tr in traces], dtype=float))
    if isinstance(rate, str):
        if rate != "ln":
            raise ValueError("rate must be 'ln' or an array of phi values")
        x, kind = np.log(rhos), "ln"
    else:
        x, kind = np.abs(np.asarray(rate, dtype=float)[order]), "phi"
    growth = logE / np.log(rhos)
    if np.ptp(logE) <= 1e-12 * max(1.0, np.abs(logE).max()):
        return LossReport(x, logE, 0.0, float(logE.mean()), 1.0, LossClass.ZERO, growth, kind)
    slope, icpt, r2 = _linfit(x, logE)
    ln_slope = _linfit(np.log(rhos), logE)[0]
    if growth[0] > 0 and np.all(np.diff(growth) > 0) and growth[-1] / growth[0] >= divergence:
        cls = LossClass.INFINITE
    elif abs(ln_slope) <= zero_slope:
        cls = LossClass.ZERO
    else:
        cls = LossClass.FINITE
    return LossReport(x, logE, slope, icpt, r2, cls, growth, kind)
