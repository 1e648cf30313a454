"""Regularised characteristic roots, the zone-wise majorant and its time-integral bound."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientModel
from .phase import PhaseParams, WeightPair, _bracket_1d, zone_split
from .profiles import SingularityProfile

__all__ = [
    "cutoff",
    "RootPair",
    "calibrate_d",
    "characteristic_roots",
    "root_diagnostics",
    "Majorant",
    "majorant_eval",
    "Psi3Report",
    "verify_psi3",
]


def _f(u):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)


def cutoff(s):
    """Smooth cutoff: 1 for ``|s| <= 1``, 0 for ``|s| >= 2``, built from ``exp(-1/u)``."""
    s = np.abs(np.asarray(s, dtype=float))
    num = _f(2.0 - s)
    out = num / (num + _f(s - 1.0))
    return out if out.ndim else float(out)


def _symbol(model: CoefficientModel, t, x, xi, k):
    """Principal symbol ``a(t, x) <xi>_k^2`` (one space dimension)."""
    return model.spatial(x) * np.asarray(model.time_part(t), dtype=float) * _bracket_1d(xi, k) ** 2


@dataclass(frozen=True)
class RootPair:
    model: CoefficientModel
    params: PhaseParams
    d2: float

    @property
    def d1(self) -> float:
        return -self.d2

    def __call__(self, t, x, xi):
        return characteristic_roots(self.model, t, x, xi, self.params, self.d2)


def calibrate_d(model: CoefficientModel, params: PhaseParams, x, xi, n_t: int = 64) -> float:
    """``sup sqrt(a / (omega <xi>_k)^2)`` over the cutoff shoulder ``[t_split, 2 t_split]``."""
    X, XI = np.meshgrid(np.asarray(x, float), np.asarray(xi, float), indexing="ij")
    X, XI = X.ravel(), XI.ravel()
    sp = zone_split(X, XI, model.weights, model.profile, params)
    s = np.linspace(1.0, 2.0, n_t)
    T = np.minimum(np.outer(sp.t_split, s), params.horizon_T)
    a = model.spatial(X)[:, None] * np.asarray(model.time_part(T), dtype=float)
    return float(np.sqrt(np.max(a / model.weights.omega(X)[:, None] ** 2)))


def characteristic_roots(model: CoefficientModel, t, x, xi, params: PhaseParams, d2: float):
    """``lambda_j = d_j chi(t/t_split) omega <xi>_k + (1 - chi) (-1)^j sqrt(a)``, ``d_1 = -d_2``."""
    if d2 <= 0:
        raise ValueError("d2 must be positive")
    a = _symbol(model, t, x, xi, params.k)
    if np.any(a <= 0):
        raise ValueError("ellipticity failure: a(t, x, xi) <= 0")
    sp = zone_split(x, xi, model.weights, model.profile, params)
    chi = cutoff(np.asarray(t, dtype=float) / sp.t_split)
    scale = model.weights.omega(x) * _bracket_1d(xi, params.k)
    root = np.sqrt(a)
    lam1 = -d2 * chi * scale - (1 - chi) * root
    lam2 = d2 * chi * scale + (1 - chi) * root
    return lam1, lam2


def root_diagnostics(roots: RootPair, n: int = 10_000, seed: int = 0,
                     x_max: float = 1e3, xi_max: float = 1e6) -> dict:
    """Fitted ellipticity constant, upper-bound constant and shoulder continuity.

    Times are drawn log-uniformly around each sample's zone boundaries so
    every shoulder gets hit.
    """
    rng = np.random.default_rng(seed)
    m, p = roots.model, roots.params
    x = rng.choice([-1.0, 1.0], n) * np.exp(rng.uniform(math.log(1e-3), math.log(x_max), n))
    xi = np.exp(rng.uniform(0.0, math.log(xi_max), n))
    sp = zone_split(x, xi, m.weights, m.profile, p)
    t = np.minimum(sp.t_split * np.exp(rng.uniform(math.log(0.25), math.log(8.0), n)),
                   p.horizon_T)
    l1, l2 = roots(t, x, xi)
    scale = m.weights.omega(x) * _bracket_1d(xi, p.k)
    tt = np.maximum(1.0, np.asarray(m.profile.theta_tilde(t), dtype=float))
    lower = float(min(np.min(np.abs(l1) / scale), np.min(np.abs(l2) / scale)))
    upper = float(max(np.max(np.abs(l1) / (scale * tt)), np.max(np.abs(l2) / (scale * tt))))
    # continuity across the shoulder of one representative sample
    j = int(np.argmax(np.abs(l2) / scale))
    ts = np.linspace(0.5, 4.0, 4001) * sp.t_split[j]
    ts = ts[ts <= p.horizon_T]
    lam = roots(ts, np.full_like(ts, x[j]), np.full_like(ts, xi[j]))[1] / scale[j]
    jump = float(np.max(np.abs(np.diff(lam)))) if lam.size > 1 else 0.0
    return {"ellipticity_C": lower, "upper_C0": upper, "max_step_jump": jump,
            "d2": roots.d2, "n": n}


@dataclass(frozen=True)
class Majorant:
    kappa: float
    profile: SingularityProfile
    weights: WeightPair
    params: PhaseParams

    def components(self, t, x, xi):
        """The three cutoff-weighted terms (interior, middle, exterior), each times kappa."""
        prof, w, p = self.profile, self.weights, self.params
        sp = zone_split(x, xi, w, prof, p)
        t = np.asarray(t, dtype=float)
        chi1 = cutoff(t / sp.t_split)
        chi2 = cutoff(t / sp.t_split_tilde)
        br = _bracket_1d(xi, p.k)
        th = np.asarray(prof.theta(t), dtype=float)
        tt = np.asarray(prof.theta_tilde(t), dtype=float)
        ps = np.asarray(prof.psi(t), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = th / t
            interior = chi1 * w.omega(x) * br * tt
            middle = np.where(chi1 < 1, (1 - chi1) * chi2 * q, 0.0)
            exterior = np.where((chi1 < 1) & (chi2 < 1),
                                (1 - chi1) * (1 - chi2) * q * q * np.exp(ps) * tt**2
                                / (w.phi(x) * br), 0.0)
        return self.kappa * interior, self.kappa * middle, self.kappa * exterior

    def __call__(self, t, x, xi):
        a, b, c = self.components(t, x, xi)
        return a + b + c


def majorant_eval(profile, weights, params, kappa, t, x, xi):
    """Value of the majorant at ``(t, x, xi)``."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    out = Majorant(kappa, profile, weights, params)(t, x, xi)
    return out if np.ndim(out) else float(out)


@dataclass
class Psi3Report:
    x: np.ndarray
    xi: np.ndarray
    h: np.ndarray
    Theta: np.ndarray
    integral: np.ndarray
    pieces: np.ndarray
    piece_bounds: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.integral / self.Theta

    @property
    def sup_ratio(self) -> float:
        return float(np.max(self.ratio))

    @property
    def piece_ratios(self) -> np.ndarray:
        return self.pieces / self.piece_bounds

    def to_dict(self):
        pr = self.piece_ratios
        return {"sup_ratio": self.sup_ratio, "finite": bool(np.isfinite(self.sup_ratio)),
                "sup_piece_ratio": {"interior": float(pr[:, 0].max()),
                                    "middle": float(pr[:, 1].max()),
                                    "exterior": float(pr[:, 2].max())},
                "n_points": int(self.x.size)}


def _gl_nodes(n_sub, order):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, n_sub + 1)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def verify_psi3(profile: SingularityProfile, weights: WeightPair, params: PhaseParams,
                kappa: float, x, xi, n_sub: int = 64, order: int = 16,
                floor: float = 1e-30, chunk: int = 256) -> Psi3Report:
    """Time integral of the majorant over ``[0, T]`` divided by the loss weight.

    The integral is split at ``t_split, 2 t_split, t_split_tilde,
    2 t_split_tilde`` (clipped to ``T``) and computed per piece by composite
    Gauss-Legendre in ``ln t``.  Below ``floor * t_split`` only the interior
    term is alive; there ``theta_tilde`` is nonincreasing, so the remainder
    is bounded by ``t_f * theta_tilde(t_f)`` (exact for constant
    ``theta_tilde``), which is what gets added.

    Each piece is also returned against its zone-wise bound:
    ``theta_tilde(h) theta(h)`` for the interior and exterior terms and
    ``theta(h) (ln 2 + |ln theta_tilde(h)| + psi(h))`` for the middle term.
    """
    X, XI = np.meshgrid(np.asarray(x, float), np.asarray(xi, float), indexing="ij")
    X, XI = X.ravel(), XI.ravel()
    T = params.horizon_T
    maj = Majorant(kappa, profile, weights, params)
    sp = zone_split(X, XI, weights, profile, params)
    h = np.asarray(sp.h)
    th_h, tt_h, ps_h = (np.asarray(f(h), dtype=float)
                        for f in (profile.theta, profile.theta_tilde, profile.psi))
    Theta = th_h * (tt_h + ps_h)
    u_nodes, u_w = _gl_nodes(n_sub, order)

    total = np.zeros(X.size)
    pieces = np.zeros((X.size, 3))
    for s in range(0, X.size, chunk):
        sl = slice(s, min(s + chunk, X.size))
        ts, tts = sp.t_split[sl], sp.t_split_tilde[sl]
        t_f = np.minimum(ts * floor, T)
        bps = np.stack([t_f, ts, 2 * ts, tts, 2 * tts, np.full_like(ts, T)], axis=1)
        bps = np.minimum(np.maximum.accumulate(bps, axis=1), T)
        acc = np.zeros((bps.shape[0], 3))
        for j in range(bps.shape[1] - 1):
            lo, hi = np.log(bps[:, j]), np.log(bps[:, j + 1])
            span = hi - lo
            u = lo[:, None] + span[:, None] * u_nodes[None, :]
            t = np.exp(u)
            comps = maj.components(t, X[sl][:, None], XI[sl][:, None])
            for k, cval in enumerate(comps):
                acc[:, k] += (cval * t) @ u_w * span
        # remainder on [0, t_f]: interior term only
        br = _bracket_1d(XI[sl], params.k)
        acc[:, 0] += kappa * weights.omega(X[sl]) * br * t_f * np.asarray(
            profile.theta_tilde(t_f), dtype=float)
        pieces[sl] = acc
        total[sl] = acc.sum(axis=1)

    bounds = np.stack([tt_h * th_h,
                       th_h * (math.log(2) + np.abs(np.log(tt_h)) + ps_h),
                       tt_h * th_h], axis=1)
    return Psi3Report(X, XI, h, Theta, total, pieces, bounds)
