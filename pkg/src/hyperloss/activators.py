"""Asymptotic-activator coefficients: explicit speeds whose modes gain energy at a set rate.

For a frequency ``rho`` the coefficient ``c_rho`` equals the reference
speed ``c*`` except on a window ``[a_rho, b_rho]`` whose endpoints are whole
numbers of oscillation periods.  Inside the window a resonant perturbation
of size ``eps_rho(t) ~ theta_rho / t`` pumps energy into the mode, and the
mode solution is known in closed form (see ``exact_mode``), which gives an
integrator-independent oracle for the energy gain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .profiles import SingularityProfile, profile_from_spec
from .timefuncs import TimeFunction, _clip01

__all__ = [
    "smoothstep",
    "ActivatorParams",
    "ActivatorInstance",
    "ActivatorCoefficient",
    "ReferenceSpeed",
    "AdmissibilityError",
    "MembershipError",
    "build_instance",
    "min_admissible_rho",
    "exact_mode",
    "metric_dC",
    "MembershipReport",
    "membership_check",
]


# --- septic smoothstep: C^3 at both ends ---------------------------------------

def smoothstep(r, order: int = 0, xp=np):
    """``35r^4 - 84r^5 + 70r^6 - 20r^7`` on [0, 1], clamped outside, and its derivatives.

    All derivatives up to order three vanish at both ends, so evaluating the
    polynomial at the clamped argument is correct on the whole line.
    """
    r = _clip01(r, xp)
    if order == 0:
        return r**4 * (35 - 84 * r + 70 * r**2 - 20 * r**3)
    if order == 1:
        return 140 * r**3 * (1 - r) ** 3
    if order == 2:
        return 420 * r**2 * (1 - r) ** 2 * (1 - 2 * r)
    if order == 3:
        return 840 * r * (1 - r) * (1 - 5 * r + 5 * r**2)
    raise ValueError("order must be 0..3")


@njit(inline="always")
def _nu(r):
    r = min(max(r, 0.0), 1.0)
    return r**4 * (35.0 - 84.0 * r + 70.0 * r * r - 20.0 * r**3)


@njit(inline="always")
def _dnu(r):
    r = min(max(r, 0.0), 1.0)
    return 140.0 * r**3 * (1.0 - r) ** 3


@njit(inline="always")
def _cstar(t, g2, mu3, T1, T):
    if t <= T1 or mu3 == g2:
        return g2
    return g2 + (mu3 - g2) * _nu((t - T1) / (T - T1))


@njit(cache=True)
def _k_cstar(t, p):
    return _cstar(t, p[0], p[1], p[2], p[3])


@njit(cache=True)
def _k_activator(t, p):
    # p = [gamma_t^2, mu3, T1, T, theta_rho, a, b, omega, gamma_t, rho]
    base = _cstar(t, p[0], p[1], p[2], p[3])
    a = p[5]
    b = p[6]
    if t <= a or t >= b:
        return base
    th = p[4]
    om = p[7]
    gam = p[8]
    rho = p[9]
    r1 = (t - a) / a
    r2 = 2.0 * (b - t) / b
    f = _nu(r1)
    g = _nu(r2)
    f1 = _dnu(r1) / a
    g1 = -2.0 * _dnu(r2) / b
    eps = th * f * g / t
    deps = th * ((f1 * g + f * g1) / t - f * g / (t * t))
    s = math.sin(om * t)
    s2 = s * s
    return (base - eps * math.sin(2.0 * om * t) / (4.0 * gam * rho)
            - deps * s2 / (8.0 * gam * gam * rho * rho)
            - eps * eps * s2 * s2 / (64.0 * gam**4 * rho * rho))


# --- parameters ----------------------------------------------------------------

class AdmissibilityError(ValueError):
    def __init__(self, message, min_rho=None):
        super().__init__(message)
        self.min_rho = min_rho


class MembershipError(ValueError):
    def __init__(self, message, t_bad):
        super().__init__(message)
        self.t_bad = t_bad


@dataclass(frozen=True)
class ActivatorParams:
    """Parameters of the construction.

    ``gamma_mode`` selects how the auxiliary quantity Gamma entering
    ``psi_rho`` is evaluated: ``"inverse"`` uses the profile at
    ``1/sqrt(rho)`` (small times, where the profile is large), ``"verbatim"``
    at ``sqrt(rho)``.  Both values are always reported.
    """

    mu1: float = 0.9
    mu2: float = 9.0
    gamma_t: float = 1.0
    T1: float = 0.5
    T: float = 1.0
    mu3: float | None = None
    profile: SingularityProfile = field(
        default_factory=lambda: profile_from_spec({"tag": "activator_default"}))
    gamma_mode: str = "inverse"

    def __post_init__(self):
        g2 = self.gamma_t**2
        if not 0 < self.mu1 < g2 < self.mu2:
            raise ValueError(f"need 0 < mu1 < gamma_t^2 < mu2, got {self.mu1}, {g2}, {self.mu2}")
        if not self.mu1 < self.plateau_level < self.mu2:
            raise ValueError("mu3 must lie strictly between mu1 and mu2")
        if not 0 < self.T1 < self.T:
            raise ValueError("need 0 < T1 < T")
        if self.gamma_mode not in ("inverse", "verbatim"):
            raise ValueError("gamma_mode must be 'inverse' or 'verbatim'")

    @property
    def plateau_level(self) -> float:
        return self.gamma_t**2 if self.mu3 is None else float(self.mu3)

    @property
    def theta(self):
        return self.profile.theta

    @property
    def psi(self):
        return self.profile.psi

    def divergence_check(self, decades: int = 300) -> dict:
        """Sample ``theta(t) psi(t) / |ln t|`` at ``t = 10^-k``; it must grow without bound."""
        k = np.arange(1, decades + 1, dtype=float)
        t = 10.0**-k
        ratio = np.asarray(self.theta(t) * self.psi(t), dtype=float) / (k * math.log(10))
        return {"first": float(ratio[0]), "last": float(ratio[-1]),
                "monotone": bool(np.all(np.diff(ratio) > 0)),
                "diverges": bool(np.all(np.diff(ratio) > 0) and ratio[-1] > 10 * ratio[0])}

    def to_dict(self):
        return {"mu1": self.mu1, "mu2": self.mu2, "mu3": self.plateau_level,
                "gamma_t": self.gamma_t, "T1": self.T1, "T": self.T,
                "profile": self.profile.spec(), "gamma_mode": self.gamma_mode}


class ReferenceSpeed(TimeFunction):
    """``gamma_t^2`` on ``[0, T1]``, then a smooth blend to ``mu3`` reached at ``T``."""

    tag = "reference_speed"
    regular_at_zero = True
    kernel = _k_cstar

    def __init__(self, params: ActivatorParams):
        self.g2 = params.gamma_t**2
        self.mu3 = params.plateau_level
        self.T1 = params.T1
        self.T = params.T

    def _derivs(self, t, order, xp=np):
        s = (t - self.T1) / (self.T - self.T1)
        v = smoothstep(s, order, xp) * (self.mu3 - self.g2) / (self.T - self.T1) ** order
        return v + self.g2 if order == 0 else v

    def _eval(self, t, xp):
        return self._derivs(t, 0, xp)

    def d1(self, t):
        return self._derivs(np.asarray(t, dtype=float), 1)

    def d2(self, t):
        return self._derivs(np.asarray(t, dtype=float), 2)

    def kernel_args(self):
        return np.array([self.g2, self.mu3, self.T1, self.T])

    def plateaus(self):
        hi = math.inf if self.mu3 == self.g2 else self.T1
        return [(0.0, hi, self.g2)]

    def params(self):
        return {"gamma_t2": self.g2, "mu3": self.mu3, "T1": self.T1, "T": self.T}


@dataclass
class ActivatorInstance:
    params: ActivatorParams
    rho: float
    gamma_verbatim: float
    gamma_inverse: float
    psi_rho: float
    n_a: int
    n_b: int
    a_rho: float
    b_rho: float
    theta_rho: float
    phi_rho: float
    phi_signed: float
    window_chain_ok: bool
    c_range: tuple[float, float]
    coefficient: "ActivatorCoefficient" = field(repr=False, default=None)

    @property
    def omega(self) -> float:
        return self.params.gamma_t * self.rho

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    def eps(self, t, order: int = 0, xp=np):
        """``eps_rho`` and its derivatives up to order three (Leibniz rule on a product)."""
        a, b, th = self.a_rho, self.b_rho, self.theta_rho
        if xp is np:
            # the envelope vanishes for t <= a; keep 1/t finite there
            t = np.where(np.asarray(t) > 0, t, np.inf)
        f = [smoothstep((t - a) / a, m, xp) / a**m for m in range(order + 1)]
        g = [smoothstep(2 * (b - t) / b, m, xp) * (-2 / b) ** m for m in range(order + 1)]
        h = [(-1) ** m * math.factorial(m) / t ** (m + 1) for m in range(order + 1)]
        out = 0
        for i in range(order + 1):
            for j in range(order + 1 - i):
                k = order - i - j
                coef = math.factorial(order) // (math.factorial(i) * math.factorial(j)
                                                 * math.factorial(k))
                out = out + coef * f[i] * g[j] * h[k]
        return th * out

    def to_dict(self):
        return {"rho": self.rho, "a_rho": self.a_rho, "b_rho": self.b_rho,
                "periods_a": self.n_a, "periods_b": self.n_b,
                "theta_rho": self.theta_rho, "psi_rho": self.psi_rho,
                "Gamma_verbatim": self.gamma_verbatim, "Gamma_inverse": self.gamma_inverse,
                "phi": self.phi_rho, "phi_signed": self.phi_signed,
                "window_chain_ok": self.window_chain_ok,
                "c_min": self.c_range[0], "c_max": self.c_range[1],
                "cutoff": "septic smoothstep (C3)"}


class ActivatorCoefficient(TimeFunction):
    """``c_rho(t)`` with closed-form first and second derivatives."""

    tag = "activator"
    regular_at_zero = True
    kernel = _k_activator

    def __init__(self, inst: ActivatorInstance):
        self.inst = inst
        self.ref = ReferenceSpeed(inst.params)
        g = inst.params.gamma_t
        rho = inst.rho
        self.A = 1 / (4 * g * rho)
        self.B = 1 / (8 * g * g * rho * rho)
        self.D = 1 / (64 * g**4 * rho * rho)
        self.om = g * rho

    def _eval(self, t, xp):
        inst = self.inst
        e0 = inst.eps(t, 0, xp)
        e1 = inst.eps(t, 1, xp)
        s = xp.sin(self.om * t)
        return (self.ref._derivs(t, 0, xp) - self.A * e0 * xp.sin(2 * self.om * t)
                - self.B * e1 * s * s - self.D * e0 * e0 * s**4)

    def _trig(self, t):
        om = self.om
        s, c = np.sin(om * t), np.cos(om * t)
        s2w, c2w = np.sin(2 * om * t), np.cos(2 * om * t)
        S1 = (s2w, 2 * om * c2w, -4 * om * om * s2w)
        S2 = (s * s, om * s2w, 2 * om * om * c2w)
        S4 = (s**4, 4 * om * s**3 * c, om * om * (12 * s * s * c * c - 4 * s**4))
        return S1, S2, S4

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        e = [self.inst.eps(t, m) for m in range(3)]
        q = (e[0] ** 2, 2 * e[0] * e[1])
        S1, S2, S4 = self._trig(t)
        out = (self.ref._derivs(t, 1) - self.A * (e[1] * S1[0] + e[0] * S1[1])
               - self.B * (e[2] * S2[0] + e[1] * S2[1])
               - self.D * (q[1] * S4[0] + q[0] * S4[1]))
        return out if out.ndim else float(out)

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        e = [self.inst.eps(t, m) for m in range(4)]
        q = (e[0] ** 2, 2 * e[0] * e[1], 2 * (e[1] ** 2 + e[0] * e[2]))
        S1, S2, S4 = self._trig(t)
        out = (self.ref._derivs(t, 2)
               - self.A * (e[2] * S1[0] + 2 * e[1] * S1[1] + e[0] * S1[2])
               - self.B * (e[3] * S2[0] + 2 * e[2] * S2[1] + e[1] * S2[2])
               - self.D * (q[2] * S4[0] + 2 * q[1] * S4[1] + q[0] * S4[2]))
        return out if out.ndim else float(out)

    def kernel_args(self):
        i = self.inst
        p = i.params
        return np.array([p.gamma_t**2, p.plateau_level, p.T1, p.T, i.theta_rho, i.a_rho,
                         i.b_rho, self.om, p.gamma_t, i.rho])

    def plateaus(self):
        i = self.inst
        g2 = i.params.gamma_t**2
        hi = math.inf if i.params.plateau_level == g2 else i.params.T1
        return [(0.0, i.a_rho, g2), (i.b_rho, hi, g2)]

    def grid_hint(self, points_per_period: int = 32) -> np.ndarray:
        """Sampling grid resolving the oscillations inside the window."""
        i = self.inst
        n = (i.n_b - i.n_a) * points_per_period
        return np.linspace(i.a_rho, i.b_rho, n + 1)

    def sup(self, T, t_min=1e-12, n=4001):
        return max(self.inst.c_range[1], self.ref.sup(T, t_min, 64))

    def params(self):
        return {"rho": self.inst.rho, **self.inst.params.to_dict()}


def _window(params: ActivatorParams, rho: float):
    theta, psi = params.theta, params.psi
    lnr = math.log(rho)
    g_verb = float(theta(math.sqrt(rho)) * psi(math.sqrt(rho))) / lnr
    g_inv = float(theta(1 / math.sqrt(rho)) * psi(1 / math.sqrt(rho))) / lnr
    gam = g_inv if params.gamma_mode == "inverse" else g_verb
    psi_rho = min(lnr / 8, float(psi(1 / math.sqrt(rho))) / 4 + math.log(gam) / 4) \
        if gam > 0 else -math.inf
    n_a = int(math.floor(lnr * math.exp(psi_rho)))
    n_b = int(math.floor(lnr * math.exp(2 * psi_rho)))
    unit = 2 * math.pi / (params.gamma_t * rho)
    return g_verb, g_inv, psi_rho, n_a, n_b, n_a * unit, n_b * unit


def min_admissible_rho(params: ActivatorParams, lo: float = 2.0, hi: float = 1e300) -> float:
    """Smallest rho (to 0.1% relative) above which the window is nonempty and ``b_rho < T1``.

    Assumes admissibility is monotone in rho beyond the returned value.
    """
    def ok(r):
        _, _, _, n_a, n_b, _, b = _window(params, r)
        return 0 < n_a < n_b and b < params.T1

    if ok(lo):
        return lo
    if not ok(hi):
        raise AdmissibilityError("no admissible rho found")
    while hi / lo > 1.001:
        mid = math.sqrt(lo * hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi


def build_instance(params: ActivatorParams, rho: float, check_membership: bool = True,
                   points_per_period: int = 32) -> ActivatorInstance:
    """Window, envelope and coefficient for frequency ``rho``.

    The window endpoints depend only on ``psi_rho``; ``theta_rho`` is
    computed after them.  The envelope is the product
    ``theta_rho / t * nu((t - a)/a) * nu(2(b - t)/b)``, which coincides with
    the piecewise definition whenever ``2a < b/2``; otherwise the two ramps
    overlap and ``window_chain_ok`` is False.
    """
    g_verb, g_inv, psi_rho, n_a, n_b, a, b = _window(params, rho)
    if not (0 < n_a < n_b and b < params.T1):
        try:
            rmin = min_admissible_rho(params)
        except AdmissibilityError:
            rmin = None
        raise AdmissibilityError(
            f"rho={rho:g} not admissible (periods {n_a}, {n_b}; b={b:.4g}, T1={params.T1})", rmin)
    theta_rho = min(float(params.theta(b)), math.log(rho))
    lnba = math.log(b / a)
    phi = theta_rho / (32 * params.gamma_t**2) * lnba
    inst = ActivatorInstance(params, float(rho), g_verb, g_inv, psi_rho, n_a, n_b, a, b,
                             theta_rho, phi, -phi, 2 * a < b / 2, (math.nan, math.nan))
    coef = ActivatorCoefficient(inst)
    inst.coefficient = coef
    tg = coef.grid_hint(points_per_period)
    cv = np.asarray(coef(tg))
    lo_c = min(float(cv.min()), params.gamma_t**2, params.plateau_level)
    hi_c = max(float(cv.max()), params.gamma_t**2, params.plateau_level)
    inst.c_range = (lo_c, hi_c)
    if check_membership and not (params.mu1 <= lo_c and hi_c <= params.mu2):
        bad = tg[(cv < params.mu1) | (cv > params.mu2)]
        raise MembershipError(f"c_rho leaves [{params.mu1}, {params.mu2}] at t={bad[0]:.6g}",
                              float(bad[0]))
    return inst


def exact_mode(inst: ActivatorInstance, t, nodes: int = 32):
    """Closed-form mode ``(u, u')`` at times ``t <= T1`` for data ``(0, 1)``.

    With ``w = gamma_t * rho`` and ``k = 1/(8 gamma_t^2)`` the solution is
    ``u = sin(w t)/w * exp(k * int_0^t eps(s) sin(w s)^2 ds)``; the integral
    is evaluated by Gauss-Legendre on each oscillation period.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t > inst.params.T1 * (1 + 1e-12)):
        raise ValueError("closed form holds only on [0, T1]")
    om = inst.omega
    kap = 1 / (8 * inst.params.gamma_t**2)
    x, w = np.polynomial.legendre.leggauss(nodes)
    P = inst.period

    def integral(lo, hi):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        s = mid[:, None] + half[:, None] * x[None, :]
        vals = inst.eps(s) * np.sin(om * s) ** 2
        return (vals @ w) * half

    k = np.arange(inst.n_a, inst.n_b)
    per = integral(k * P, (k + 1) * P)
    cum = np.concatenate([[0.0], np.cumsum(per)])
    G = np.empty_like(t)
    for i, ti in enumerate(t):
        j = int(np.clip(math.floor(ti / P), inst.n_a, inst.n_b))
        full = cum[j - inst.n_a]
        tail = 0.0
        if inst.n_a * P < ti < inst.n_b * P and ti > j * P:
            tail = float(integral(np.array([j * P]), np.array([ti]))[0])
        G[i] = kap * (full + tail)
    eg = np.exp(G)
    s, c = np.sin(om * t), np.cos(om * t)
    u = s / om * eg
    du = (c + s / om * kap * inst.eps(t) * s * s) * eg
    return u, du


# --- metric and membership -----------------------------------------------------

def _eval_grid(T, fns, n=4000, t_min_rel=1e-12, points_per_period=32):
    t = np.geomspace(T * t_min_rel, T, n)
    parts = [t]
    for f in fns:
        if hasattr(f, "grid_hint"):
            parts.append(f.grid_hint(points_per_period))
    t = np.unique(np.concatenate(parts))
    return t[(t > 0) & (t < T)]


def metric_dC(c1: TimeFunction, c2: TimeFunction, params: ActivatorParams,
              grid=None, points_per_period: int = 32) -> dict:
    """Sup of ``|dc|``, ``t^2/theta |dc'|`` and ``t^3 e^-psi / theta^2 |dc''|`` over a grid.

    Returns the total and the three terms, plus ``boundary_warning`` when a
    supremum sits on the first or last grid point.
    """
    T = params.T
    t = _eval_grid(T, (c1, c2), points_per_period=points_per_period) if grid is None \
        else np.asarray(grid, dtype=float)
    th = np.asarray(params.theta(t), dtype=float)
    ps = np.asarray(params.psi(t), dtype=float)
    terms = [np.abs(np.asarray(c1(t)) - np.asarray(c2(t))),
             t**2 / th * np.abs(np.asarray(c1.d1(t)) - np.asarray(c2.d1(t))),
             t**3 * np.exp(-ps) / th**2 * np.abs(np.asarray(c1.d2(t)) - np.asarray(c2.d2(t)))]
    sups = [float(np.max(x)) for x in terms]
    arg = [int(np.argmax(x)) for x in terms]
    warn = any(s > 0 and i in (0, t.size - 1) for s, i in zip(sups, arg))
    return {"value": sum(sups), "terms": sups, "argmax_t": [float(t[i]) for i in arg],
            "boundary_warning": warn}


@dataclass
class MembershipReport:
    C1: float
    C2: float
    c_min: float
    c_max: float
    bounds_ok: bool
    violations: list

    def to_dict(self):
        return {"C1": self.C1, "C2": self.C2, "c_min": self.c_min, "c_max": self.c_max,
                "bounds_ok": self.bounds_ok, "violations": self.violations[:20]}


def membership_check(c: TimeFunction, params: ActivatorParams, grid=None,
                     points_per_period: int = 32) -> MembershipReport:
    """Fitted constants of ``|c'| <= C1 theta/t`` and ``|c''| <= C2 (theta/t)^2 psi``."""
    T = params.T
    t = _eval_grid(T, (c,), points_per_period=points_per_period) if grid is None \
        else np.asarray(grid, dtype=float)
    with np.errstate(all="ignore"):
        cv = np.asarray(c(t), dtype=float)
        th = np.asarray(params.theta(t), dtype=float)
        ps = np.asarray(params.psi(t), dtype=float)
        r1 = np.abs(np.asarray(c.d1(t), dtype=float)) * t / th
        r2 = np.abs(np.asarray(c.d2(t), dtype=float)) * t**2 / (th**2 * ps)
    bad = (cv < params.mu1) | (cv > params.mu2) | ~np.isfinite(cv)
    C1 = float(np.max(r1)) if np.all(np.isfinite(r1)) else math.inf
    C2 = float(np.max(r2)) if np.all(np.isfinite(r2)) else math.inf
    return MembershipReport(C1, C2, float(np.nanmin(cv)), float(np.nanmax(cv)),
                            not bad.any(), [float(x) for x in t[bad]])
