"""Singularity profiles, the loss scale and loss/oscillation classification."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .timefuncs import (
    AbsLogPower,
    Constant,
    Log1pPower,
    TimeFunction,
    time_function_from_spec,
)

__all__ = [
    "SingularityProfile",
    "LossClass",
    "LossVerdict",
    "ClassificationError",
    "OscillationClass",
    "OscillationReport",
    "vartheta",
    "probe_grid",
    "classify_loss",
    "oscillation_class",
    "check_profile",
    "PROFILE_CATALOG",
    "profile_from_spec",
]

# Auditable classification thresholds.
BOUNDED_SPREAD = 10.0
DIVERGENCE_FACTOR = 10.0
FINITE_SLOPE = 0.75
MONOTONE_RTOL = 1e-3


class ClassificationError(ValueError):
    """Raised when a ratio sequence is too irregular to classify."""

    def __init__(self, message, ratios=None):
        super().__init__(message)
        self.ratios = ratios


@dataclass(frozen=True)
class SingularityProfile:
    """The triple (theta, theta_tilde, psi) on (0, T]."""

    theta: TimeFunction
    theta_tilde: TimeFunction
    psi: TimeFunction
    horizon_T: float = 1.0
    catalog_tag: str = "custom"
    params: dict = field(default_factory=dict)

    def scale(self, lam: float) -> "SingularityProfile":
        """Profile with theta multiplied by ``lam``."""
        th = self.theta

        class _Scaled(TimeFunction):
            tag = "scaled"

            def _eval(self, t, xp):
                return lam * th._eval(t, xp)

            def d1(self, t):
                return lam * th.d1(t)

            def d2(self, t):
                return lam * th.d2(t)

        return SingularityProfile(_Scaled(), self.theta_tilde, self.psi, self.horizon_T,
                                  f"{self.catalog_tag}*{lam:g}", dict(self.params))

    def loss_scale_at_time(self, t):
        """``theta(t) * (theta_tilde(t) + psi(t))``, i.e. the loss scale at ``r = 1/t``."""
        return self.theta(t) * (self.theta_tilde(t) + self.psi(t))

    def spec(self) -> dict:
        return {"tag": self.catalog_tag, "T": self.horizon_T, **self.params}


def vartheta(profile: SingularityProfile, r):
    """Loss-scale function at frequency ``r``; requires ``1/r <= T``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(1.0 / r > profile.horizon_T * (1 + 1e-12)):
        raise ValueError(f"vartheta domain error: need r >= 1/T = {1 / profile.horizon_T:g}")
    out = profile.loss_scale_at_time(1.0 / r)
    return out if np.ndim(out) else float(out)


def probe_grid(T: float, n: int = 1000) -> np.ndarray:
    """Geometric grid ``T * 2**-j``, j = 0..n-1, decreasing toward zero."""
    return T * 2.0 ** -np.arange(n, dtype=float)


class LossClass(str, enum.Enum):
    ZERO = "Zero"
    ARBITRARILY_SMALL = "ArbitrarilySmall"
    FINITE = "Finite"
    INFINITE = "Infinite"


@dataclass
class LossVerdict:
    variant: LossClass
    fitted_exponents: tuple[float, float] | None
    tail_slope: float
    spread: float
    ratio_growth: float
    t: np.ndarray
    ratios: np.ndarray
    thresholds: dict

    def __post_init__(self):
        if self.variant is LossClass.INFINITE:
            r1, r2 = self.fitted_exponents
            if not (1 < r1 <= r2):
                raise ClassificationError(
                    f"infinite loss needs 1 < rho1 <= rho2, fitted ({r1:.3g}, {r2:.3g})",
                    self.ratios)

    def to_dict(self) -> dict:
        return {
            "class": self.variant.value,
            "fitted_exponents": self.fitted_exponents,
            "tail_slope": self.tail_slope,
            "spread": self.spread,
            "ratio_growth": self.ratio_growth,
            "thresholds": self.thresholds,
            "ratios": [[float(a), float(b)] for a, b in zip(self.t, self.ratios)],
        }


def _decade_mean(t, values, first: bool):
    lt = np.log10(t)
    mask = lt >= lt.max() - 1 if first else lt <= lt.min() + 1
    return float(np.mean(values[mask]))


def classify_loss(profile: SingularityProfile, probe: np.ndarray | None = None) -> LossVerdict:
    """Zero / arbitrarily small / finite / infinite loss from the growth of the loss scale.

    The loss scale is compared against ``ln(1 + 1/t)`` along a decreasing
    probe grid.  Rules, applied in order:

    * spread ``max/min`` of the loss scale below ``BOUNDED_SPREAD`` -> Zero;
    * last-decade ratio above ``DIVERGENCE_FACTOR`` times the first-decade
      ratio -> Infinite, with (rho1, rho2) the extreme secant slopes of
      ``ln vartheta`` against ``ln ln(1 + 1/t)``;
    * otherwise the tail log-log slope decides Finite (``>= FINITE_SLOPE``)
      versus ArbitrarilySmall.
    """
    t = probe_grid(profile.horizon_T) if probe is None else np.asarray(probe, dtype=float)
    if t.size < 16 or np.log10(t.max() / t.min()) < 6:
        raise ValueError("probe grid needs >= 16 samples spanning >= 6 decades")
    t = np.sort(t)[::-1]
    vt = np.asarray(profile.loss_scale_at_time(t), dtype=float)
    ell = np.log1p(1.0 / t)
    ratios = vt / ell
    thresholds = {"bounded_spread": BOUNDED_SPREAD, "divergence_factor": DIVERGENCE_FACTOR,
                  "finite_slope": FINITE_SLOPE, "monotone_rtol": MONOTONE_RTOL}

    spread = float(vt.max() / vt.min())
    growth = _decade_mean(t, ratios, first=False) / _decade_mean(t, ratios, first=True)
    x = np.log(ell)
    y = np.log(vt)
    half = slice(t.size // 2, None)
    slope = float(np.polyfit(x[half], y[half], 1)[0])

    def verdict(cls, exps=None):
        return LossVerdict(cls, exps, slope, spread, growth, t, ratios, thresholds)

    if spread < BOUNDED_SPREAD:
        return verdict(LossClass.ZERO)

    dr = np.diff(ratios) / ratios[:-1]
    if not (np.all(dr >= -MONOTONE_RTOL) or np.all(dr <= MONOTONE_RTOL)):
        raise ClassificationError("ratio sequence is not monotone; inconclusive", ratios)

    if growth > DIVERGENCE_FACTOR:
        secant = np.diff(y) / np.diff(x)
        secant = secant[np.isfinite(secant)]
        return verdict(LossClass.INFINITE, (float(secant.min()), float(secant.max())))
    if slope >= FINITE_SLOPE:
        return verdict(LossClass.FINITE)
    return verdict(LossClass.ARBITRARILY_SMALL)


class OscillationClass(str, enum.Enum):
    VERY_SLOW = "VerySlow"
    SLOW = "Slow"
    FAST = "Fast"
    VERY_FAST = "VeryFast"


@dataclass
class OscillationReport:
    variant: OscillationClass
    gamma: float
    gamma_raw: tuple[float, float]
    grid_gamma: float | None
    constants: tuple[float, float]
    smallest_usable_t: float

    def to_dict(self):
        return {"class": self.variant.value, "gamma": self.gamma,
                "gamma_raw": list(self.gamma_raw), "grid_gamma": self.grid_gamma,
                "constants": list(self.constants),
                "smallest_usable_t": self.smallest_usable_t}


def _envelope_slope(t, g, n_blocks=8):
    """Slope of the block-maximum envelope of ``ln g`` against ``ln ln(1 + 1/t)``."""
    x = np.log(np.log1p(1.0 / t))
    edges = np.linspace(x.min(), x.max(), n_blocks + 1)
    xs, ys = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (x >= lo) & (x <= hi) & (g > 0)
        if m.sum() < 2:
            continue
        k = np.argmax(g[m])
        xs.append(x[m][k])
        ys.append(np.log(g[m][k]))
    if len(xs) < 3:
        return 0.0
    return float(np.polyfit(xs, ys, 1)[0])


def oscillation_class(c: TimeFunction, gamma_grid=None, T: float = 1.0,
                      t_min: float = 1e-100, n: int = 6000,
                      band: float = 0.1) -> OscillationReport:
    """Fit the oscillation exponent gamma of ``c`` from its first two derivatives.

    ``|c^(j)(t)| t^j`` is sampled on a log grid down to ``t_min``; the
    envelope slope against ``ln ln(1 + 1/t)`` divided by ``j`` estimates
    gamma.  gamma within ``band`` of 0 is very slow, within ``band`` of 1
    fast, beyond ``1 + band`` very fast.
    """
    t = np.geomspace(T, t_min, n)
    with np.errstate(all="ignore"):
        g1 = np.abs(np.asarray(c.d1(t), dtype=float)) * t
        g2 = np.abs(np.asarray(c.d2(t), dtype=float)) * t * t
    ok = np.isfinite(g1) & np.isfinite(g2)
    if not ok.all():
        bad = np.flatnonzero(~ok)
        usable = t[: bad[0]]
        if usable.size < 100:
            raise FloatingPointError(
                f"derivative oracle failed; smallest usable t = {usable[-1] if usable.size else T:g}")
        t, g1, g2 = usable, g1[: bad[0]], g2[: bad[0]]
    if g1.max() == 0 and g2.max() == 0:
        return OscillationReport(OscillationClass.VERY_SLOW, 0.0, (0.0, 0.0),
                                 0.0 if gamma_grid is not None else None, (0.0, 0.0), float(t[-1]))
    s1 = _envelope_slope(t, g1)
    s2 = _envelope_slope(t, g2) / 2
    gamma = max(0.0, s1, s2)
    ell = np.log1p(1.0 / t)
    consts = (float(np.max(g1 / ell**gamma)), float(np.max(g2 / ell ** (2 * gamma))))

    grid_gamma = None
    if gamma_grid is not None:
        cand = [g for g in sorted(gamma_grid) if g >= 0 and gamma <= g + band / 2]
        grid_gamma = float(cand[0]) if cand else None

    if gamma <= band:
        cls = OscillationClass.VERY_SLOW
    elif abs(gamma - 1) <= band:
        cls = OscillationClass.FAST
    elif gamma < 1:
        cls = OscillationClass.SLOW
    else:
        cls = OscillationClass.VERY_FAST
    return OscillationReport(cls, float(gamma), (s1, s2), grid_gamma, consts, float(t[-1]))


def check_profile(profile: SingularityProfile, n: int = 10_000, seed: int = 0,
                  t_min: float | None = None) -> dict:
    """Sampled invariants: components >= 1, nonincreasing, loss scale monotone, log-type bound."""
    rng = np.random.default_rng(seed)
    T = profile.horizon_T
    lo = math.log(t_min if t_min is not None else T * 1e-12)
    t = np.sort(np.exp(rng.uniform(lo, math.log(T), n)))
    report = {}
    for name in ("theta", "theta_tilde", "psi"):
        f = getattr(profile, name)
        v = np.asarray(f(t), dtype=float)
        report[name] = {"min": float(v.min()),
                        "ge_one": bool(np.all(v >= 1 - 1e-12)),
                        "nonincreasing": bool(np.all(np.diff(v) <= 1e-12 * np.abs(v[1:]) + 1e-300))}
    r = 1.0 / t[::-1]
    vt = np.asarray(vartheta(profile, r), dtype=float)
    report["vartheta_nondecreasing"] = bool(np.all(np.diff(vt) >= -1e-12 * vt[1:]))
    # |vartheta'(r)| <= C vartheta(r)/r, via central differences in ln r
    lr = np.log(r)
    dv = np.gradient(vt, lr)  # r * vartheta'(r)
    report["log_type_constant"] = float(np.max(np.abs(dv) / vt))
    return report


# --- catalog -----------------------------------------------------------------

def _constant(T=1.0, theta=1.0, theta_tilde=1.0, psi=1.0):
    return (Constant(theta), Constant(theta_tilde), Constant(psi), T)


def _exp_modulated(T=0.1, alpha=0.5):
    return (AbsLogPower(1.0, alpha), Constant(3.0), AbsLogPower(1.0, 1 - alpha), T)


def _log_blowup(T=0.1, p_theta=3.0, p_theta_tilde=4.0):
    return (Log1pPower(1.0, p_theta), Log1pPower(1.0, p_theta_tilde), Constant(1.0), T)


def _log_psi(T=0.1):
    return (Constant(1.0), Constant(1.0), Log1pPower(1.0, 1.0), T)


def _log_power(T=0.1, theta=(1.0, 1.0), theta_tilde=(1.0, 0.0), psi=(1.0, 0.0)):
    def comp(cp):
        c, p = cp
        return Constant(c) if p == 0 else Log1pPower(c, p)
    return (comp(theta), comp(theta_tilde), comp(psi), T)


def _oscillatory(T=0.1, gamma=1.0):
    th = Constant(1.0) if gamma == 0 else Log1pPower(1.0, gamma)
    return (th, Constant(1.0), Constant(1.0), T)


def _activator_default(T=1.0):
    return (Log1pPower(1.0, 2.0), Constant(1.0), Log1pPower(1.0, 1.0), T)


PROFILE_CATALOG = {
    "constant": _constant,
    "exp_modulated": _exp_modulated,
    "log_blowup": _log_blowup,
    "log_psi": _log_psi,
    "log_power": _log_power,
    "oscillatory": _oscillatory,
    "activator_default": _activator_default,
}


def profile_from_spec(spec) -> SingularityProfile:
    """Build a profile from ``{"tag": name, **params}``.

    A ``"custom"`` tag takes explicit ``theta``/``theta_tilde``/``psi``
    time-function specs.
    """
    if isinstance(spec, SingularityProfile):
        return spec
    spec = dict(spec)
    tag = spec.pop("tag")
    if tag == "custom":
        T = float(spec.pop("T", 1.0))
        parts = [time_function_from_spec(spec.pop(k)) for k in ("theta", "theta_tilde", "psi")]
        if spec:
            raise ValueError(f"unknown profile keys {sorted(spec)}")
        return SingularityProfile(*parts, T, "custom", {})
    try:
        factory = PROFILE_CATALOG[tag]
    except KeyError:
        raise ValueError(f"unknown profile tag {tag!r}") from None
    params = {k: (tuple(v) if isinstance(v, list) else v) for k, v in spec.items()}
    th, tt, ps, T = factory(**params)
    return SingularityProfile(th, tt, ps, float(T), tag, spec)
