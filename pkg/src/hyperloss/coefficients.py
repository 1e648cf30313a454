"""Separable coefficient models ``a(t, x) = omega(x)^2 m(x) c(t)`` and checks of their bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate

from .phase import WeightPair, japanese
from .profiles import LossClass, SingularityProfile, classify_loss, profile_from_spec
from .timefuncs import (
    Constant,
    ExpModulated,
    Log1pPower,
    LogSine,
    TimeFunction,
    TSinInv,
    time_function_from_spec,
)

__all__ = [
    "SpaceFunction",
    "BracketPower",
    "SinBracket",
    "CoefficientModel",
    "BoundReport",
    "verify_bounds",
    "default_grid",
    "theta_tilde_reconstruct",
    "shift_modulus",
    "shift_exponent",
    "derivative_oracle_check",
    "MODEL_CATALOG",
    "model_from_spec",
]


class SpaceFunction:
    """A function of one space variable with derivatives up to order two."""

    tag = "abstract"

    def _eval(self, x, xp):
        raise NotImplementedError

    def __call__(self, x):
        return self._eval(np.asarray(x, dtype=float), np)

    def value_mp(self, x):
        return self._eval(mpmath.mpf(x), mpmath)

    def deriv(self, x, order: int):
        raise NotImplementedError

    def params(self):
        return {}


def _bracket_pow(x, q, order):
    """Derivatives of ``<x>^q`` up to order two."""
    b2 = 1.0 + x * x
    if order == 0:
        return b2 ** (q / 2)
    if order == 1:
        return q * x * b2 ** (q / 2 - 1)
    return q * b2 ** (q / 2 - 1) + q * (q - 2) * x * x * b2 ** (q / 2 - 2)


class BracketPower(SpaceFunction):
    """``coef * <x>^power``."""

    tag = "bracket_power"

    def __init__(self, coef: float = 1.0, power: float = 0.0):
        self.coef = float(coef)
        self.power = float(power)

    def _eval(self, x, xp):
        return self.coef * (1 + x * x) ** (self.power / 2)

    def deriv(self, x, order):
        return self.coef * _bracket_pow(np.asarray(x, dtype=float), self.power, order)

    def params(self):
        return {"coef": self.coef, "power": self.power}


class SinBracket(SpaceFunction):
    """``base + amp * sin(<x>^power)``."""

    tag = "sin_bracket"

    def __init__(self, base: float = 2.0, amp: float = 1.0, power: float = 1.0):
        self.base = float(base)
        self.amp = float(amp)
        self.power = float(power)

    def _eval(self, x, xp):
        return self.base + self.amp * xp.sin((1 + x * x) ** (self.power / 2))

    def deriv(self, x, order):
        x = np.asarray(x, dtype=float)
        s = _bracket_pow(x, self.power, 0)
        if order == 0:
            return self.base + self.amp * np.sin(s)
        s1 = _bracket_pow(x, self.power, 1)
        if order == 1:
            return self.amp * np.cos(s) * s1
        s2 = _bracket_pow(x, self.power, 2)
        return self.amp * (-np.sin(s) * s1 * s1 + np.cos(s) * s2)

    def params(self):
        return {"base": self.base, "amp": self.amp, "power": self.power}


SPACE_CATALOG = {cls.tag: cls for cls in (BracketPower, SinBracket)}


@dataclass
class CoefficientModel:
    """``a(t, x) = omega(x)^2 * m(x) * c(t)`` in one space dimension."""

    time_part: TimeFunction
    space_part: SpaceFunction
    weights: WeightPair
    profile: SingularityProfile
    horizon_T: float = 1.0
    name: str = "custom"
    spec: dict = field(default_factory=dict)

    def spatial(self, x, order: int = 0):
        """``d^order/dx^order`` of ``omega(x)^2 m(x)``."""
        x = np.asarray(x, dtype=float)
        w2 = [self.weights.omega_coef**2 * _bracket_pow(x, 2 * self.weights.kappa1, j)
              for j in range(order + 1)]
        m = [self.space_part.deriv(x, j) for j in range(order + 1)]
        return sum(math.comb(order, j) * w2[j] * m[order - j] for j in range(order + 1))

    def spatial_mp(self, x):
        x = mpmath.mpf(x)
        return (self.weights.omega_coef**2 * (1 + x * x) ** self.weights.kappa1
                * self.space_part.value_mp(x))

    def time_deriv(self, t, order: int = 0):
        if order == 0:
            return np.asarray(self.time_part(t), dtype=float)
        return np.asarray(self.time_part.d1(t) if order == 1 else self.time_part.d2(t),
                          dtype=float)

    def a(self, t, x):
        return self.spatial(x) * self.time_deriv(t)

    def deriv(self, t, x, jt: int = 0, jx: int = 0):
        """``d_t^jt d_x^jx a`` (outer product when ``t`` and ``x`` broadcast)."""
        return self.spatial(x, jx) * self.time_deriv(t, jt)

    def sup_a(self, x_max: float, t_min: float = 1e-8) -> float:
        """Sup of ``a`` over ``[t_min, T] x [-x_max, x_max]``."""
        xs = np.linspace(-x_max, x_max, 2001)
        return float(np.max(self.spatial(xs))) * self.time_part.sup(self.horizon_T, t_min)

    def to_dict(self):
        return {"name": self.name, **self.spec}


# --- bound verification ------------------------------------------------------

@dataclass
class BoundReport:
    C0: float
    constants: dict
    argmax: dict
    violations: list
    n_samples: int

    @property
    def ok(self) -> bool:
        return (not self.violations and self.C0 > 0
                and all(math.isfinite(v) for v in self.constants.values()))

    def to_dict(self):
        return {"C0": self.C0, "constants": self.constants, "argmax": self.argmax,
                "violations": self.violations[:50], "n_violations": len(self.violations),
                "ok": self.ok, "n_samples": self.n_samples}


def default_grid(T: float, nt: int = 400, nx: int = 201, x_max: float = 1e3,
                 t_min: float = 1e-12):
    """Log-spaced times and symmetric log-spaced points (including 0)."""
    t = np.geomspace(t_min, T, nt)
    xp = np.geomspace(1e-3, x_max, (nx - 1) // 2)
    return t, np.concatenate([-xp[::-1], [0.0], xp])


def verify_bounds(model: CoefficientModel, grid=None, max_beta: int = 2) -> BoundReport:
    """Fitted constants of the ellipticity and derivative bounds on a tensor grid.

    Each constant is the grid supremum of ``|d_t^j d_x^b a|`` divided by its
    majorant: ``theta_tilde``, ``theta/t`` and ``(theta/t)^2 e^psi`` for
    ``j = 0, 1, 2``, each times ``omega^2 Phi^-b``.  ``C0`` is the infimum of
    ``a / omega^2``; samples with ``a <= 0`` are violations.
    """
    t, x = default_grid(model.horizon_T) if grid is None else (np.asarray(g, float) for g in grid)
    if t.size == 0 or x.size == 0:
        raise ValueError("empty grid")
    if np.any(t <= 0):
        raise ValueError("grid must avoid t = 0")
    prof, w = model.profile, model.weights
    th, tt, ps = (np.asarray(f(t), dtype=float) for f in (prof.theta, prof.theta_tilde, prof.psi))
    om2, ph = w.omega(x) ** 2, w.phi(x)
    majorant_t = {0: tt, 1: th / t, 2: (th / t) ** 2 * np.exp(ps)}
    names = {0: "a", 1: "sing1", 2: "sing2"}
    consts, argmax = {}, {}
    with np.errstate(all="ignore"):
        a = np.outer(model.time_deriv(t), model.spatial(x))
        ratio0 = a / om2[None, :]
        for jt in range(3):
            tp = model.time_deriv(t, jt)
            if not np.all(np.isfinite(tp)):
                raise FloatingPointError(f"time derivative of order {jt} is not finite on the grid")
            for b in range(max_beta + 1):
                vals = np.abs(np.outer(tp, model.spatial(x, b)))
                maj = np.outer(majorant_t[jt], om2 * ph ** (-b))
                r = vals / maj
                i, j = np.unravel_index(int(np.argmax(r)), r.shape)
                key = f"{names[jt]}_beta{b}"
                consts[key] = float(r[i, j])
                argmax[key] = [float(t[i]), float(x[j])]
    bad = np.argwhere(~(a > 0))
    violations = [[float(t[i]), float(x[j]), float(a[i, j])] for i, j in bad]
    C0 = float(np.min(ratio0))
    return BoundReport(C0, consts, argmax, violations, int(a.size))


# --- theta_tilde reconstruction, shift modulus ----------------------------------

def theta_tilde_reconstruct(theta: TimeFunction, T: float, t_grid, C: float = 1.0,
                            epsrel: float = 1e-12) -> dict:
    """``C * int_t^T theta(s)/s ds`` by adaptive quadrature in ``u = ln s``.

    Also checks the derivative identity ``|d/dt theta_tilde| = C theta(t)/t``
    with a centred difference of the reconstruction in ``ln t``, and reports
    the smallest grid time at which quadrature met its tolerance.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0) or np.any(t_grid > T):
        raise ValueError("t_grid must lie in (0, T]")

    def tt(t):
        if t == T:
            return 0.0, 0.0
        f = lambda u: float(theta(math.exp(u)))  # noqa: E731
        val, err = integrate.quad(f, math.log(t), math.log(T), epsrel=epsrel, epsabs=0.0,
                                  limit=500)
        return C * val, C * err

    vals, errs = zip(*(tt(float(t)) for t in t_grid))
    vals, errs = np.array(vals), np.array(errs)
    reliable = errs <= 1e-8 * np.maximum(np.abs(vals), 1e-300) + 1e-14
    # derivative check at interior points (relative step in ln t)
    dstep = 1e-4
    inner = t_grid[(t_grid * math.exp(dstep) <= T)]
    d_err = []
    for t in inner:
        lo, hi = tt(t * math.exp(-dstep))[0], tt(t * math.exp(dstep))[0]
        deriv = (hi - lo) / (t * math.exp(dstep) - t * math.exp(-dstep))
        d_err.append(abs(abs(deriv) - C * float(theta(t)) / t) / (C * float(theta(t)) / t))
    unreliable = t_grid[~reliable]
    return {"t": t_grid, "theta_tilde": vals, "abs_error": errs,
            "derivative_rel_error": float(max(d_err)) if d_err else 0.0,
            "smallest_reliable_t": float(t_grid[reliable].min()) if reliable.any() else math.nan,
            "all_reliable": bool(unreliable.size == 0), "C": C}


def shift_modulus(tau: float, eps1: float, eps2: float, rho2: float) -> float:
    """``(1/2) * ln(1 + (eps1 - eps2)/(tau + eps2)) ** (rho2 + 1)``."""
    if not (0 <= eps2 <= eps1):
        raise ValueError("need 0 <= eps2 <= eps1")
    if tau + eps2 <= 0:
        raise ValueError("need tau + eps2 > 0")
    if rho2 < 1:
        raise ValueError("need rho2 >= 1")
    return 0.5 * math.log1p((eps1 - eps2) / (tau + eps2)) ** (rho2 + 1)


def shift_exponent(profile: SingularityProfile) -> float:
    """Exponent for :func:`shift_modulus`: the upper fitted exponent when the loss
    is infinite, otherwise 1."""
    verdict = classify_loss(profile)
    if verdict.variant is LossClass.INFINITE:
        return float(verdict.fitted_exponents[1])
    return 1.0


# --- derivative oracle -----------------------------------------------------------

def _fd4_mp(f, x, h, order):
    if order == 1:
        return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h)


def _rel_err(fd, an):
    scale = max(abs(fd), abs(an))
    return 0.0 if scale == 0 else abs(fd - an) / scale


def time_oracle_errors(c: TimeFunction, t_samples, dps: int = 40, rel_step: float = 1e-12):
    """Worst relative gap between closed-form ``c', c''`` and mpmath 4th-order differences."""
    worst = [0.0, 0.0]
    where = [None, None]
    with mpmath.workdps(dps):
        for t in t_samples:
            tm = mpmath.mpf(float(t))
            h = tm * rel_step
            for k, (order, an) in enumerate(((1, c.d1(float(t))), (2, c.d2(float(t))))):
                fd = float(_fd4_mp(c.value_mp, tm, h, order))
                e = _rel_err(fd, float(an))
                if e > worst[k]:
                    worst[k], where[k] = e, float(t)
    return worst, where


def space_oracle_errors(model: CoefficientModel, x_samples, dps: int = 40,
                        rel_step: float = 1e-12):
    worst = [0.0, 0.0]
    where = [None, None]
    with mpmath.workdps(dps):
        for x in x_samples:
            xm = mpmath.mpf(float(x))
            h = mpmath.sqrt(1 + xm * xm) * rel_step
            for k, order in enumerate((1, 2)):
                fd = float(_fd4_mp(model.spatial_mp, xm, h, order))
                e = _rel_err(fd, float(model.spatial(float(x), order)))
                if e > worst[k]:
                    worst[k], where[k] = e, float(x)
    return worst, where


def derivative_oracle_check(model, n: int = 1000, seed: int = 0, t_min: float = 1e-6,
                            x_max: float = 1e3) -> dict:
    """Closed-form derivatives against high-precision finite differences at random points.

    ``model`` is a :class:`CoefficientModel` or a bare time function.  Times
    are log-uniform in ``[t_min, T]`` and points log-uniform in magnitude up
    to ``x_max`` with random sign.
    """
    rng = np.random.default_rng(seed)
    if isinstance(model, TimeFunction):
        c, T, space = model, 1.0, None
    else:
        c, T, space = model.time_part, model.horizon_T, model
    t = np.exp(rng.uniform(math.log(t_min), math.log(T), n))
    (e1, e2), (w1, w2) = time_oracle_errors(c, t)
    out = {"time_d1": e1, "time_d2": e2, "time_argmax": [w1, w2]}
    if space is not None:
        x = rng.choice([-1.0, 1.0], n) * np.exp(rng.uniform(math.log(1e-3), math.log(x_max), n))
        (s1, s2), (v1, v2) = space_oracle_errors(space, x)
        out.update({"space_d1": s1, "space_d2": s2, "space_argmax": [v1, v2]})
    out["max_rel_error"] = max(v for k, v in out.items() if k.startswith(("time_d", "space_d")))
    return out


# --- catalog --------------------------------------------------------------------

def _exp_modulated(T=0.1, alpha=0.5, kappa1=0.5, kappa2=0.5):
    w = WeightPair(2.0, kappa1, kappa2)
    prof = profile_from_spec({"tag": "exp_modulated", "T": T, "alpha": alpha})
    return ExpModulated(alpha), SinBracket(2.0, 1.0, 1 - kappa2), w, prof, T


def _log_blowup(T=0.1):
    prof = profile_from_spec({"tag": "log_blowup", "T": T})
    return Log1pPower(1.0, 4.0), BracketPower(1.0, 0.0), WeightPair(), prof, T


def _tsin(T=0.1):
    prof = profile_from_spec({"tag": "log_psi", "T": T})
    return TSinInv(2.0, 1.0), BracketPower(1.0, 0.0), WeightPair(3.0, 1.0, 1.0), prof, T


def _constant(T=1.0, value=1.0):
    prof = profile_from_spec({"tag": "constant", "T": T})
    return Constant(value), BracketPower(1.0, 0.0), WeightPair(), prof, T


def _log_sine(T=0.1, base=2.0, amp=1.0, alpha=1.0):
    prof = profile_from_spec({"tag": "constant", "T": T})
    return LogSine(base, amp, alpha), BracketPower(1.0, 0.0), WeightPair(), prof, T


def _broken(T=0.1):
    """Time part ``0.5 + sin(ln 1/t)`` changes sign: ellipticity fails on purpose."""
    prof = profile_from_spec({"tag": "constant", "T": T})
    return LogSine(0.5, 1.0, 1.0), BracketPower(1.0, 0.0), WeightPair(), prof, T


MODEL_CATALOG = {
    "exp_modulated": _exp_modulated,
    "log_blowup": _log_blowup,
    "tsin": _tsin,
    "constant": _constant,
    "log_sine": _log_sine,
    "broken": _broken,
}


def model_from_spec(spec) -> CoefficientModel:
    """Catalog model from ``{"tag": name, **params}``; ``"custom"`` takes explicit parts.

    A custom spec carries ``time`` (time-function spec), ``space``
    (``{"tag": "bracket_power" | "sin_bracket", ...}``), ``weights``
    (``omega_coef``, ``kappa1``, ``kappa2``), ``profile`` and ``T``.
    """
    if isinstance(spec, CoefficientModel):
        return spec
    spec = dict(spec)
    tag = spec.pop("tag")
    if tag == "custom":
        T = float(spec.get("T", 1.0))
        time_part = time_function_from_spec(spec["time"])
        sp = dict(spec.get("space", {"tag": "bracket_power"}))
        space = SPACE_CATALOG[sp.pop("tag")](**sp)
        w = WeightPair(**spec.get("weights", {}))
        prof = profile_from_spec({"T": T, **spec["profile"]})
        return CoefficientModel(time_part, space, w, prof, T, "custom", {"tag": tag, **spec})
    try:
        factory = MODEL_CATALOG[tag]
    except KeyError:
        raise ValueError(f"unknown model tag {tag!r}") from None
    c, m, w, prof, T = factory(**spec)
    return CoefficientModel(c, m, w, prof, float(T), tag, {"tag": tag, **spec})
