"""Scalar functions of time with closed-form derivatives.

Every singular-in-time ingredient of the laboratory (profile components,
time parts of coefficients, mode-ODE speeds) is one of these objects.  Each
catalog entry exposes

* ``f(t)``, ``f.d1(t)``, ``f.d2(t)``: numpy-vectorised value and derivatives,
* ``f.value_mp(t)``: the value in mpmath arithmetic, used by the
  finite-difference oracle,
* ``f.kernel`` / ``f.kernel_args()``: a numba-compiled scalar evaluator that
  the mode integrator calls in its inner loop,
* ``f.plateaus()``: intervals on which the function is exactly constant.

The formulas are written once against an ``xp`` namespace (``numpy`` or
``mpmath``); the numba kernels duplicate only the value formula.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np
from numba import njit

__all__ = [
    "TimeFunction",
    "Constant",
    "Log1pPower",
    "AbsLogPower",
    "LogSine",
    "ExpModulated",
    "TSinInv",
    "PowerLaw",
    "CallableTime",
    "TIME_CATALOG",
    "time_function_from_spec",
]


def _clip01(r, xp):
    if xp is np:
        return np.clip(r, 0.0, 1.0)
    return min(max(r, 0), 1)


class TimeFunction:
    """Base class for catalog time functions."""

    tag = "abstract"
    regular_at_zero = False

    def _eval(self, t, xp):
        raise NotImplementedError

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self._eval(t, np)
        return out if out.ndim else float(out)

    def d1(self, t):
        raise NotImplementedError

    def d2(self, t):
        raise NotImplementedError

    def value_mp(self, t):
        return self._eval(mpmath.mpf(t), mpmath)

    kernel = None

    def kernel_args(self) -> np.ndarray:
        return np.zeros(1)

    def plateaus(self) -> list[tuple[float, float, float]]:
        return []

    def params(self) -> dict:
        return {}

    def spec(self) -> dict:
        return {"tag": self.tag, **self.params()}

    def sup(self, T: float, t_min: float = 1e-12, n: int = 4001) -> float:
        t = np.geomspace(t_min, T, n)
        return float(np.max(np.abs(self(t))))

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


def _as_float(x):
    return x if not isinstance(x, np.ndarray) or x.ndim else float(x)


# --- numba kernels -----------------------------------------------------------

@njit(cache=True)
def _k_const(t, p):
    return p[0]


@njit(cache=True)
def _k_log1p_power(t, p):
    return p[0] * math.log1p(1.0 / t) ** p[1]


@njit(cache=True)
def _k_abslog_power(t, p):
    return p[0] * (-math.log(t)) ** p[1]


@njit(cache=True)
def _k_logsine(t, p):
    return p[0] + p[1] * math.sin((-math.log(t)) ** p[2])


@njit(cache=True)
def _k_exp_modulated(t, p):
    L = -math.log(t)
    q = L ** (1.0 - p[0])
    return 2.0 + math.exp(-q) * math.sin(L ** (2.0 * p[0]) * math.exp(q))


@njit(cache=True)
def _k_tsin(t, p):
    return p[0] + p[1] * t * math.sin(1.0 / t)


@njit(cache=True)
def _k_power(t, p):
    return p[0] * t ** p[1]


# --- catalog -----------------------------------------------------------------

class Constant(TimeFunction):
    tag = "constant"
    regular_at_zero = True
    kernel = _k_const

    def __init__(self, value: float = 1.0):
        self.value = float(value)

    def _eval(self, t, xp):
        return t * 0 + self.value

    def d1(self, t):
        return _as_float(np.zeros_like(np.asarray(t, dtype=float)))

    def d2(self, t):
        return self.d1(t)

    def kernel_args(self):
        return np.array([self.value])

    def plateaus(self):
        return [(0.0, math.inf, self.value)]

    def params(self):
        return {"value": self.value}

    def sup(self, T, t_min=1e-12, n=2):
        return abs(self.value)


class Log1pPower(TimeFunction):
    """``coef * ln(1 + 1/t) ** power``."""

    tag = "log1p_power"
    kernel = _k_log1p_power

    def __init__(self, coef: float = 1.0, power: float = 1.0):
        self.coef = float(coef)
        self.power = float(power)

    def _eval(self, t, xp):
        return self.coef * xp.log1p(1 / t) ** self.power

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        ell = np.log1p(1 / t)
        dl = -1.0 / (t + t * t)
        return _as_float(self.coef * self.power * ell ** (self.power - 1) * dl)

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        p = self.power
        ell = np.log1p(1 / t)
        dl = -1.0 / (t + t * t)
        ddl = (1 + 2 * t) / (t + t * t) ** 2
        return _as_float(self.coef * p * ((p - 1) * ell ** (p - 2) * dl * dl
                                          + ell ** (p - 1) * ddl))

    def kernel_args(self):
        return np.array([self.coef, self.power])

    def params(self):
        return {"coef": self.coef, "power": self.power}


class AbsLogPower(TimeFunction):
    """``coef * |ln t| ** power`` on ``0 < t < 1``."""

    tag = "abslog_power"
    kernel = _k_abslog_power

    def __init__(self, coef: float = 1.0, power: float = 1.0):
        self.coef = float(coef)
        self.power = float(power)

    def _eval(self, t, xp):
        return self.coef * (-xp.log(t)) ** self.power

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        L = -np.log(t)
        return _as_float(-self.coef * self.power * L ** (self.power - 1) / t)

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        p = self.power
        L = -np.log(t)
        return _as_float(self.coef * p * ((p - 1) * L ** (p - 2) + L ** (p - 1)) / t**2)

    def kernel_args(self):
        return np.array([self.coef, self.power])

    def params(self):
        return {"coef": self.coef, "power": self.power}


class LogSine(TimeFunction):
    """``base + amp * sin(ln(1/t) ** alpha)``; very slow oscillations for alpha <= 1."""

    tag = "log_sine"
    kernel = _k_logsine

    def __init__(self, base: float = 2.0, amp: float = 1.0, alpha: float = 1.0):
        self.base = float(base)
        self.amp = float(amp)
        self.alpha = float(alpha)

    def _eval(self, t, xp):
        return self.base + self.amp * xp.sin((-xp.log(t)) ** self.alpha)

    def _phase(self, t):
        a = self.alpha
        L = -np.log(t)
        s = L**a
        s1 = -a * L ** (a - 1) / t
        s2 = (a * (a - 1) * L ** (a - 2) + a * L ** (a - 1)) / t**2
        return s, s1, s2

    def d1(self, t):
        s, s1, _ = self._phase(np.asarray(t, dtype=float))
        return _as_float(self.amp * np.cos(s) * s1)

    def d2(self, t):
        s, s1, s2 = self._phase(np.asarray(t, dtype=float))
        return _as_float(self.amp * (-np.sin(s) * s1 * s1 + np.cos(s) * s2))

    def kernel_args(self):
        return np.array([self.base, self.amp, self.alpha])

    def params(self):
        return {"base": self.base, "amp": self.amp, "alpha": self.alpha}


class ExpModulated(TimeFunction):
    """``2 + exp(-L**(1-a)) * sin(L**(2a) * exp(L**(1-a)))`` with ``L = |ln t|``.

    Bounded, but its first and second derivatives blow up like
    ``|ln t|**a / t`` and ``(|ln t|**a / t)**2 * exp(|ln t|**(1-a))``.
    """

    tag = "exp_modulated"
    kernel = _k_exp_modulated

    def __init__(self, alpha: float = 0.5):
        if not 0 < alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        self.alpha = float(alpha)

    def _eval(self, t, xp):
        a = self.alpha
        L = -xp.log(t)
        q = L ** (1 - a)
        return 2 + xp.exp(-q) * xp.sin(L ** (2 * a) * xp.exp(q))

    def _dL(self, t):
        # derivatives with respect to L = -ln t
        a = self.alpha
        L = -np.log(np.asarray(t, dtype=float))
        q = L ** (1 - a)
        qL = (1 - a) * L ** (-a)
        qLL = -a * (1 - a) * L ** (-a - 1)
        E = np.exp(q)
        env = 1.0 / E
        envL = -qL * env
        envLL = (qL * qL - qLL) * env
        phi = L ** (2 * a) * E
        phiL = (2 * a * L ** (2 * a - 1) + L ** (2 * a) * qL) * E
        phiLL = (2 * a * (2 * a - 1) * L ** (2 * a - 2)
                 + 4 * a * L ** (2 * a - 1) * qL
                 + L ** (2 * a) * (qLL + qL * qL)) * E
        s, c = np.sin(phi), np.cos(phi)
        FL = envL * s + env * c * phiL
        FLL = envLL * s + 2 * envL * c * phiL + env * (-s * phiL * phiL + c * phiLL)
        return FL, FLL

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        FL, _ = self._dL(t)
        return _as_float(-FL / t)

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        FL, FLL = self._dL(t)
        return _as_float((FLL + FL) / t**2)

    def kernel_args(self):
        return np.array([self.alpha])

    def params(self):
        return {"alpha": self.alpha}


class TSinInv(TimeFunction):
    """``base + amp * t * sin(1/t)``: bounded, infinitely many oscillations at 0."""

    tag = "tsin_inv"
    kernel = _k_tsin

    def __init__(self, base: float = 2.0, amp: float = 1.0):
        self.base = float(base)
        self.amp = float(amp)

    def _eval(self, t, xp):
        return self.base + self.amp * t * xp.sin(1 / t)

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        return _as_float(self.amp * (np.sin(1 / t) - np.cos(1 / t) / t))

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        return _as_float(-self.amp * np.sin(1 / t) / t**3)

    def kernel_args(self):
        return np.array([self.base, self.amp])

    def params(self):
        return {"base": self.base, "amp": self.amp}


class PowerLaw(TimeFunction):
    """``coef * t ** power``."""

    tag = "power"
    kernel = _k_power

    def __init__(self, coef: float = 1.0, power: float = -1.0):
        self.coef = float(coef)
        self.power = float(power)
        self.regular_at_zero = power >= 0

    def _eval(self, t, xp):
        return self.coef * t**self.power

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        return _as_float(self.coef * self.power * t ** (self.power - 1))

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        p = self.power
        return _as_float(self.coef * p * (p - 1) * t ** (p - 2))

    def kernel_args(self):
        return np.array([self.coef, self.power])

    def params(self):
        return {"coef": self.coef, "power": self.power}


def _fd4(f, t, h, order):
    """Fourth-order central difference with relative step ``h_t``."""
    if order == 1:
        return (f(t - 2 * h) - 8 * f(t - h) + 8 * f(t + h) - f(t + 2 * h)) / (12 * h)
    return (-f(t - 2 * h) + 16 * f(t - h) - 30 * f(t) + 16 * f(t + h) - f(t + 2 * h)) / (12 * h * h)


class CallableTime(TimeFunction):
    """Wrap a user callable; missing derivatives fall back to finite differences.

    The fallback uses fourth-order central differences with step
    ``max(1e-8, 1e-3 * t)`` so the stencil never reaches ``t <= 0``
    for ``t >= 1e-8``.
    """

    tag = "callable"

    def __init__(self, func, d1=None, d2=None, name: str = "callable"):
        self.func = func
        self._d1 = d1
        self._d2 = d2
        self.name = name

    def _eval(self, t, xp):
        if xp is np:
            return np.vectorize(self.func, otypes=[float])(t)
        return self.func(t)

    def _step(self, t):
        return np.maximum(1e-8, 1e-3 * t)

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        if self._d1 is not None:
            return _as_float(np.vectorize(self._d1, otypes=[float])(t))
        return _as_float(_fd4(self, t, self._step(t), 1))

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        if self._d2 is not None:
            return _as_float(np.vectorize(self._d2, otypes=[float])(t))
        return _as_float(_fd4(self, t, self._step(t), 2))

    def params(self):
        return {"name": self.name}


TIME_CATALOG: dict[str, type[TimeFunction]] = {
    cls.tag: cls
    for cls in (Constant, Log1pPower, AbsLogPower, LogSine, ExpModulated, TSinInv, PowerLaw)
}


def time_function_from_spec(spec) -> TimeFunction:
    """Build a catalog function from ``{"tag": ..., **params}`` or a bare number."""
    if isinstance(spec, TimeFunction):
        return spec
    if isinstance(spec, (int, float)):
        return Constant(spec)
    spec = dict(spec)
    tag = spec.pop("tag")
    try:
        cls = TIME_CATALOG[tag]
    except KeyError:
        raise ValueError(f"unknown time function tag {tag!r}") from None
    return cls(**spec)
