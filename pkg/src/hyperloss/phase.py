"""Spatial weights, Planck functions, the loss weight and the three-zone split of phase space."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .profiles import SingularityProfile, vartheta

__all__ = [
    "WeightPair",
    "PhaseParams",
    "ZoneLabel",
    "ZoneSplit",
    "bracket",
    "japanese",
    "planck_h",
    "theta_weight",
    "zone_split",
    "classify_zone",
    "zone_codes",
    "check_weight_axioms",
]


def japanese(x):
    """``<x> = (1 + |x|^2)^(1/2)`` elementwise for 1D points."""
    return np.sqrt(1.0 + np.square(x))


def bracket(xi, k: float = 1.0):
    """``(k^2 + |xi|^2)^(1/2)``; a sequence is read as one frequency vector."""
    if k < 1:
        raise ValueError(f"bracket parameter k must be >= 1, got {k}")
    if np.ndim(xi) == 0:
        return math.sqrt(k * k + float(xi) ** 2)
    return float(math.sqrt(k * k + float(np.dot(np.ravel(xi), np.ravel(xi)))))


def _bracket_1d(xi, k):
    return np.sqrt(k * k + np.square(xi))


@dataclass(frozen=True)
class WeightPair:
    """``omega(x) = c_omega <x>^kappa1`` and ``Phi(x) = <x>^kappa2`` for 1D points."""

    omega_coef: float = 1.0
    kappa1: float = 0.0
    kappa2: float = 0.0

    def __post_init__(self):
        if self.omega_coef < 1:
            raise ValueError("omega_coef must be >= 1 so that omega >= 1")
        if not 0 <= self.kappa1 <= self.kappa2 <= 1:
            raise ValueError("need 0 <= kappa1 <= kappa2 <= 1")

    def omega(self, x):
        return self.omega_coef * japanese(x) ** self.kappa1

    def phi(self, x):
        return japanese(x) ** self.kappa2

    def to_dict(self):
        return {"omega_coef": self.omega_coef, "kappa1": self.kappa1, "kappa2": self.kappa2}


@dataclass(frozen=True)
class PhaseParams:
    k: float = 1.0
    N: int = 1
    horizon_T: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.horizon_T <= 0:
            raise ValueError("horizon_T must be positive")


class ZoneLabel(str, enum.Enum):
    INT = "Int"
    MID = "Mid"
    EXT = "Ext"


_LABELS = (ZoneLabel.INT, ZoneLabel.MID, ZoneLabel.EXT)


def planck_h(x, xi, weights: WeightPair, k: float = 1.0):
    """``1 / (Phi(x) <xi>_k)``, elementwise over 1D points and frequencies."""
    if k < 1:
        raise ValueError("k must be >= 1")
    out = 1.0 / (weights.phi(x) * _bracket_1d(xi, k))
    return out if np.ndim(out) else float(out)


def theta_weight(x, xi, weights: WeightPair, profile: SingularityProfile, k: float = 1.0):
    """Loss weight: the loss scale evaluated at ``Phi(x) <xi>_k``."""
    return vartheta(profile, weights.phi(x) * _bracket_1d(xi, k))


@dataclass
class ZoneSplit:
    h: np.ndarray | float
    t_split: np.ndarray | float
    t_split_tilde: np.ndarray | float
    ext_empty: np.ndarray | bool


def zone_split(x, xi, weights: WeightPair, profile: SingularityProfile,
               params: PhaseParams) -> ZoneSplit:
    """Zone boundaries ``N h theta(h)`` and ``N h theta(h) theta_tilde(h) e^psi(h)``.

    Profile components are evaluated at ``min(h, T)``.  The second boundary
    is computed from the first, so the chain
    ``h <= t_split <= t_split_tilde`` holds exactly in floating point
    whenever the profile components are at least one.
    """
    h = planck_h(x, xi, weights, params.k)
    # Profiles live on (0, T]; beyond T they are continued by their value at T,
    # which keeps them >= 1 and nonincreasing.
    hp = np.minimum(h, profile.horizon_T)
    t = params.N * h * profile.theta(hp)
    tt = t * profile.theta_tilde(hp) * np.exp(profile.psi(hp))
    return ZoneSplit(h, t, tt, tt > params.horizon_T)


def zone_codes(t, split: ZoneSplit) -> np.ndarray:
    """0 (Int), 1 (Mid) or 2 (Ext) per time; intervals closed on the right."""
    t = np.asarray(t, dtype=float)
    return np.where(t <= split.t_split, 0, np.where(t <= split.t_split_tilde, 1, 2))


def classify_zone(t, x, xi, weights: WeightPair, profile: SingularityProfile,
                  params: PhaseParams):
    """Zone label of ``(t, x, xi)``; arrays give an array of labels."""
    if np.any(np.asarray(t) < 0) or np.any(np.asarray(t) > params.horizon_T):
        raise ValueError("t must lie in [0, T]")
    codes = zone_codes(t, zone_split(x, xi, weights, profile, params))
    if codes.ndim == 0:
        return _LABELS[int(codes)]
    return np.array([_LABELS[c] for c in codes.ravel()], dtype=object).reshape(codes.shape)


def check_weight_axioms(weights: WeightPair, n: int = 10_000, seed: int = 0,
                        xmax: float = 1e6, r: float = 0.5) -> dict:
    """Sampled weight axioms with fitted constants.

    Points are drawn log-uniformly in magnitude with random sign.  Reports
    the fitted constants of ``omega <= C Phi``, ``Phi <= C (1 + |x|)``,
    slow variation at radius ``r Phi(y)``, subadditivity, dilation
    monotonicity, the temperance exponent ``s`` in
    ``Phi(x)/Phi(y) <= 2^s (1 + |x - y|)^s`` and the strong-uncertainty
    exponent ``kappa`` in ``h <= (1 + |x| + |xi|)^-kappa``.
    """
    rng = np.random.default_rng(seed)

    def pts(m):
        return rng.choice([-1.0, 1.0], m) * np.exp(rng.uniform(math.log(1e-3), math.log(xmax), m))

    x, y, xi = pts(n), pts(n), np.abs(pts(n))
    om, ph = weights.omega(x), weights.phi(x)
    out = {
        "omega_ge_one": bool(np.all(om >= 1)),
        "phi_ge_one": bool(np.all(ph >= 1)),
        "omega_over_phi": float(np.max(om / ph)),
        "phi_over_linear": float(np.max(ph / (1 + np.abs(x)))),
    }
    yy = y + rng.uniform(-1, 1, n) * r * weights.phi(y)
    ratio = weights.phi(yy) / weights.phi(y)
    out["slowly_varying_C"] = float(max(ratio.max(), 1 / ratio.min()))
    out["subadditive"] = bool(np.all(weights.phi(x + y) <= (weights.phi(x) + weights.phi(y))
                                     * (1 + 1e-12)))
    a = rng.uniform(0, 1, n)
    out["dilation_monotone"] = bool(np.all(weights.phi(a * x) <= ph * (1 + 1e-12)))
    num = np.log(weights.phi(x) / weights.phi(y))
    den = np.log(2 * (1 + np.abs(x - y)))
    out["temperance_s"] = float(max(0.0, np.max(num / den)))
    h = 1.0 / (ph * _bracket_1d(xi, 1.0))
    out["uncertainty_kappa"] = float(np.min(-np.log(h) / np.log(1 + np.abs(x) + xi)))
    out["passed"] = bool(out["omega_ge_one"] and out["phi_ge_one"] and out["subadditive"]
                         and out["dilation_monotone"])
    return out
