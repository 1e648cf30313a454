"""Experiment kinds, their parameter schemas and the tables/figures each one produces.

An experiment is a function ``(params, seed, threads) -> Outcome``.  The
CLI validates the parameter block against :data:`SCHEMAS`, runs the
experiment, then writes every table as CSV and every figure as SVG.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .activators import (ActivatorParams, ReferenceSpeed, build_instance, membership_check,
                         metric_dC)
from .coefficients import (derivative_oracle_check, default_grid, model_from_spec, shift_exponent,
                           verify_bounds)
from .phase import PhaseParams, WeightPair, zone_codes, zone_split
from .plotting import FigureSpec
from .profiles import check_profile, classify_loss, profile_from_spec
from .spectral import integrate_mode, ModeProblem, loss_fit, sweep
from .symbols import verify_psi3
from .timefuncs import time_function_from_spec
from .wavefd import WaveConfig, measure_speed, solve_wave


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InvariantViolation(AssertionError):
    """An experiment ran to completion but a checked property failed."""

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


@dataclass
class Table:
    name: str
    columns: list
    rows: list


@dataclass
class Outcome:
    tables: list = field(default_factory=list)
    figures: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)


# --- schema ------------------------------------------------------------------------

@dataclass(frozen=True)
class Field:
    kind: str  # int, float, bool, str, floats, spec
    default: object
    check: object = None  # callable value -> error message or None
    choices: tuple = ()


def _positive(v):
    return None if v > 0 else "must be positive"


def _at_least(lo):
    return lambda v: None if v >= lo else f"must be >= {lo}"


def _nonempty_positive(v):
    if len(v) == 0:
        return "must be a nonempty list"
    return None if all(x > 0 for x in v) else "entries must be positive"


def _check_value(path, f: Field, v):
    if f.kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(path, f"expected an integer, got {v!r}")
    elif f.kind == "float":
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(path, f"expected a finite number, got {v!r}")
        v = float(v)
    elif f.kind == "bool":
        if not isinstance(v, bool):
            raise ConfigError(path, f"expected true/false, got {v!r}")
    elif f.kind == "str":
        if not isinstance(v, str):
            raise ConfigError(path, f"expected a string, got {v!r}")
        if f.choices and v not in f.choices:
            raise ConfigError(path, f"must be one of {list(f.choices)}")
    elif f.kind == "floats":
        if not isinstance(v, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            raise ConfigError(path, "expected a list of numbers")
        v = [float(x) for x in v]
    elif f.kind == "spec":
        if not isinstance(v, dict):
            raise ConfigError(path, "expected an object")
    if f.check is not None:
        msg = f.check(v)
        if msg:
            raise ConfigError(path, msg)
    return v


_PROFILE = Field("spec", {"tag": "log_blowup"})
_WEIGHTS = Field("spec", {"omega_coef": 1.0, "kappa1": 0.5, "kappa2": 1.0})

SCHEMAS = {
    "profile-classify": {
        "profile": _PROFILE,
        "n_probe": Field("int", 1000, _at_least(16)),
        "n_check": Field("int", 10_000, _at_least(10)),
    },
    "zone-map": {
        "profile": _PROFILE,
        "weights": _WEIGHTS,
        "k": Field("float", 1.0, _at_least(1)),
        "N": Field("int", 1, _at_least(1)),
        "N_max": Field("int", 8, _at_least(1)),
        "n_samples": Field("int", 10_000, _at_least(1)),
        "n_t": Field("int", 64, _at_least(2)),
        "x_max": Field("float", 1e3, _positive),
        "xi_max": Field("float", 1e6, _positive),
    },
    "bound-check": {
        "model": Field("spec", {"tag": "tsin"}),
        "nt": Field("int", 400, _at_least(2)),
        "nx": Field("int", 201, _at_least(3)),
        "x_max": Field("float", 1e3, _positive),
        "max_beta": Field("int", 2, lambda v: None if 0 <= v <= 2 else "must be 0, 1 or 2"),
        "oracle_points": Field("int", 1000, _at_least(1)),
        "oracle_tol": Field("float", 1e-6, _positive),
    },
    "activator-sweep": {
        "activator": Field("spec", {}),
        "rhos": Field("floats", [1e3, 1e4, 1e5, 1e6], _nonempty_positive),
        "tol": Field("float", 1e-10, _positive),
        "steps_per_period": Field("float", 20.0, _positive),
        "points_per_period": Field("int", 32, _at_least(4)),
        "divergence": Field("float", 2.0, _positive),
    },
    "mode-sweep": {
        "coefficient": Field("spec", {"tag": "constant", "value": 1.0}),
        "rhos": Field("floats", [10.0, 100.0, 1000.0, 10000.0], _nonempty_positive),
        "T": Field("float", 1.0, _positive),
        "tol": Field("float", 1e-10, _positive),
        "n_report": Field("int", 21, _at_least(2)),
        "steps_per_period": Field("float", 20.0, _positive),
    },
    "loss-fit": {
        "coefficient": Field("spec", {"tag": "log_sine", "base": 2.0, "amp": 1.0}),
        "rhos": Field("floats", [], None),
        "rho_min": Field("float", 1e2, _positive),
        "rho_max": Field("float", 1e5, _positive),
        "n_rho": Field("int", 10, _at_least(2)),
        "T": Field("float", 1.0, _positive),
        "tol": Field("float", 1e-8, _positive),
        "steps_per_period": Field("float", 20.0, _positive),
        "zero_slope": Field("float", 0.05, _positive),
        "energy": Field("str", "raw", choices=("raw", "adapted")),
    },
    "psi3-check": {
        "profile": _PROFILE,
        "weights": _WEIGHTS,
        "k": Field("float", 0.0, lambda v: None if v == 0 or v >= 1 else "must be 0 (auto) or >= 1"),
        "N": Field("int", 2, _at_least(1)),
        "kappa": Field("float", 1.0, _positive),
        "n_grid": Field("int", 32, _at_least(2)),
        "x_max": Field("float", 1e3, _positive),
        "xi_max": Field("float", 1e6, _positive),
        "n_sub": Field("int", 64, _at_least(1)),
        "order": Field("int", 16, _at_least(2)),
    },
    "cone-test": {
        "model": Field("spec", {"tag": "tsin"}),
        "L": Field("float", 4.0, _positive),
        "dx": Field("float", 1e-3, _positive),
        "cfl": Field("float", 0.9, _positive),
        "t_end": Field("float", 0.1, _positive),
        "R": Field("float", 0.5, _positive),
        "datum": Field("str", "bump", choices=("bump", "smooth")),
        "velocity": Field("bool", False),
        "lower_order": Field("float", 0.0),
        "eta": Field("float", 1e-6, _positive),
        "n_snapshots": Field("int", 21, _at_least(2)),
        "snapshot_stride": Field("int", 10, _at_least(1)),
        "ratio_tol": Field("float", 1.05, _positive),
    },
}


def _build_spec(path, factory, spec):
    try:
        return factory(spec)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(path, f"invalid specification ({exc})") from None


def activator_params_from_spec(spec) -> ActivatorParams:
    spec = dict(spec)
    if "profile" in spec:
        spec["profile"] = profile_from_spec(spec["profile"])
    return ActivatorParams(**spec)


def _weights_from_spec(spec):
    return WeightPair(**spec)


# Nested objects are checked by building them once at validation time.
_SPEC_BUILDERS = {
    "profile": profile_from_spec,
    "weights": _weights_from_spec,
    "model": model_from_spec,
    "coefficient": time_function_from_spec,
    "activator": activator_params_from_spec,
}


def resolve_params(kind: str, params: dict, prefix: str = "params") -> dict:
    """Fill defaults, reject unknown keys and check every value; returns the resolved block."""
    if kind not in SCHEMAS:
        raise ConfigError("experiment", f"unknown experiment {kind!r}; "
                          f"choose from {sorted(SCHEMAS)}")
    if not isinstance(params, dict):
        raise ConfigError(prefix, "expected an object")
    schema = SCHEMAS[kind]
    unknown = sorted(set(params) - set(schema))
    if unknown:
        raise ConfigError(f"{prefix}.{unknown[0]}", "unknown key")
    out = {}
    for key, f in schema.items():
        path = f"{prefix}.{key}"
        v = _check_value(path, f, params.get(key, f.default))
        if f.kind == "spec":
            _build_spec(path, _SPEC_BUILDERS[key], v)
        out[key] = v
    if kind == "loss-fit" and not out["rhos"] and out["rho_max"] <= out["rho_min"]:
        raise ConfigError(f"{prefix}.rho_max", "must exceed rho_min")
    if kind == "zone-map" and out["N"] > out["N_max"]:
        raise ConfigError(f"{prefix}.N_max", "must be >= N")
    if kind == "cone-test" and out["cfl"] > 0.9:
        raise ConfigError(f"{prefix}.cfl", "must be <= 0.9")
    return out


# --- experiments -------------------------------------------------------------------

@dataclass
class _Split:
    t_split: object
    t_split_tilde: object


def run_profile_classify(p, seed, threads) -> Outcome:
    prof = profile_from_spec(p["profile"])
    checks = check_profile(prof, n=p["n_check"], seed=seed)
    verdict = classify_loss(prof, np.geomspace(prof.horizon_T, prof.horizon_T * 2.0**-999,
                                               p["n_probe"]))
    t = verdict.t
    ell = np.log1p(1.0 / t)
    rows = [[float(ti), float(li), float(prof.theta(ti)), float(prof.theta_tilde(ti)),
             float(prof.psi(ti)), float(vi * li), float(vi)]
            for ti, li, vi in zip(t, ell, verdict.ratios)]
    table = Table("loss_scale", ["t", "log1p_inv_t", "theta", "theta_tilde", "psi",
                                 "loss_scale", "ratio_to_log"], rows)
    fig = FigureSpec("loss_scale", "loss_scale", "log1p_inv_t", ["loss_scale"],
                     xlabel="ln(1 + 1/t)", ylabel="loss scale", logx=True, logy=True,
                     title=f"loss class: {verdict.variant.value}")
    out = Outcome([table], [fig])
    out.verdicts = {"loss_class": verdict.variant.value, "profile_checks": checks}
    out.constants = {k: v for k, v in verdict.to_dict().items() if k != "ratios"}
    out.constants["log_type_constant"] = checks["log_type_constant"]
    for name in ("theta", "theta_tilde", "psi"):
        if not (checks[name]["ge_one"] and checks[name]["nonincreasing"]):
            out.violations.append(f"{name} is not >= 1 and nonincreasing")
    if not checks["vartheta_nondecreasing"]:
        out.violations.append("loss scale is not nondecreasing")
    return out


def run_zone_map(p, seed, threads) -> Outcome:
    prof = profile_from_spec(p["profile"])
    w = _weights_from_spec(p["weights"])
    T = prof.horizon_T
    rng = np.random.default_rng(seed)
    n = p["n_samples"]
    x = rng.choice([-1.0, 1.0], n) * np.exp(rng.uniform(math.log(1e-3), math.log(p["x_max"]), n))
    xi = rng.choice([-1.0, 1.0], n) * np.exp(rng.uniform(0.0, math.log(p["xi_max"]), n))
    Ns = rng.integers(p["N"], p["N_max"] + 1, n)
    h = np.empty(n)
    ts = np.empty(n)
    tts = np.empty(n)
    for N in np.unique(Ns):
        m = Ns == N
        sp = zone_split(x[m], xi[m], w, prof, PhaseParams(p["k"], int(N), T))
        h[m], ts[m], tts[m] = sp.h, sp.t_split, sp.t_split_tilde
    chain = (h <= ts) & (ts <= tts)
    # h_tilde = Theta * h is reported only; nothing bounds it by 1
    hp = np.minimum(h, T)
    h_tilde = h * np.asarray(prof.theta(hp) * (prof.theta_tilde(hp) + prof.psi(hp)), dtype=float)
    # tiling: every time on the grid gets exactly one label, and labels are ordered
    tgrid = np.linspace(0.0, T, p["n_t"])
    codes = zone_codes(tgrid[None, :], _Split(ts[:, None], tts[:, None]))
    tiling_ok = bool(np.all(np.diff(codes, axis=1) >= 0))
    counts = np.stack([(codes == z).sum(axis=0) for z in range(3)], axis=1)
    probes = np.geomspace(T * 1e-4, T, 5)
    labels = zone_codes(probes[None, :], _Split(ts[:, None], tts[:, None]))
    samples = Table("zone_samples", ["x", "xi", "N", "h", "h_tilde", "t_split", "t_split_tilde",
                                     "chain_ok"] + [f"zone_at_t{j}" for j in range(probes.size)],
                    [[float(a), float(b), int(c), float(d), float(ht), float(e), float(f), int(g)]
                     + [int(v) for v in lab]
                     for a, b, c, d, ht, e, f, g, lab in zip(x, xi, Ns, h, h_tilde, ts, tts, chain,
                                                             labels)])
    probe_tab = Table("probe_times", ["index", "t"], [[j, float(t)] for j, t in enumerate(probes)])
    frac = Table("zone_fractions", ["t", "interior", "middle", "exterior"],
                 [[float(t)] + [float(v) / n for v in row] for t, row in zip(tgrid, counts)])
    # label slice over (log10 |xi|, t) at x = 0
    xs_ = np.geomspace(1.0, p["xi_max"], 48)
    sp = zone_split(np.zeros_like(xs_), xs_, w, prof, PhaseParams(p["k"], p["N"], T))
    codes_slice = zone_codes(tgrid[None, :], _Split(sp.t_split[:, None],
                                                    sp.t_split_tilde[:, None]))
    slice_tab = Table("zone_slice", ["log10_xi", "t", "zone"],
                      [[float(math.log10(v)), float(t), int(c)]
                       for v, row in zip(xs_, codes_slice) for t, c in zip(tgrid, row)])
    figs = [FigureSpec("zone_boundaries", "zone_samples", "h", ["t_split", "t_split_tilde"],
                       xlabel="h", ylabel="zone boundary", logx=True, logy=True, scatter=True),
            FigureSpec("zone_fractions", "zone_fractions", "t",
                       ["interior", "middle", "exterior"], ylabel="fraction of samples"),
            FigureSpec("zone_slice", "zone_slice", "log10_xi", ["t"], z="zone",
                       xlabel="log10 |xi|", title="zone label at x = 0 (0 int, 1 mid, 2 ext)")]
    out = Outcome([samples, probe_tab, frac, slice_tab], figs)
    out.verdicts = {"chain_holds": bool(chain.all()), "tiling_ok": tiling_ok}
    out.constants = {"n_samples": n, "chain_failures": int((~chain).sum()),
                     "ext_empty_fraction": float(np.mean(tts > T)),
                     "h_tilde_max": float(np.max(h_tilde))}
    if not chain.all():
        out.violations.append(f"h <= t_split <= t_split_tilde fails for {(~chain).sum()} samples")
    if not tiling_ok:
        out.violations.append("zone labels do not tile [0, T]")
    return out


def run_bound_check(p, seed, threads) -> Outcome:
    model = model_from_spec(p["model"])
    grid = default_grid(model.horizon_T, nt=p["nt"], nx=p["nx"], x_max=p["x_max"])
    rep = verify_bounds(model, grid, max_beta=p["max_beta"])
    oracle = derivative_oracle_check(model, n=p["oracle_points"], seed=seed)
    consts = Table("bound_constants", ["name", "value", "argmax_t", "argmax_x"],
                   [[k, v, rep.argmax[k][0], rep.argmax[k][1]] for k, v in rep.constants.items()])
    viol = Table("violations", ["t", "x", "a"], rep.violations)
    t = grid[0]
    profile_tab = Table("coefficient_trace", ["t", "time_part", "theta_tilde"],
                        [[float(ti), float(model.time_part(ti)),
                          float(model.profile.theta_tilde(ti))] for ti in t])
    fig = FigureSpec("coefficient_trace", "coefficient_trace", "t", ["time_part", "theta_tilde"],
                     logx=True, ylabel="value")
    out = Outcome([consts, viol, profile_tab], [fig])
    out.constants = {"C0": rep.C0, **rep.constants, "oracle": oracle}
    out.verdicts = {"bounds_ok": rep.ok, "n_violations": len(rep.violations),
                    "oracle_ok": bool(oracle["max_rel_error"] <= p["oracle_tol"])}
    if not rep.ok:
        out.violations.append(f"coefficient bounds fail: C0={rep.C0:.4g}, "
                              f"{len(rep.violations)} non-positive samples")
    if not out.verdicts["oracle_ok"]:
        out.violations.append(f"derivative oracle error {oracle['max_rel_error']:.3g}")
    return out


def run_activator_sweep(p, seed, threads) -> Outcome:
    params = activator_params_from_spec(p["activator"])
    ref = ReferenceSpeed(params)
    rows, insts, traces = [], [], []
    for rho in sorted(p["rhos"]):
        inst = build_instance(params, rho, points_per_period=p["points_per_period"])
        c = inst.coefficient
        tr = integrate_mode(ModeProblem(rho, c, params.T), tol=p["tol"],
                            report=np.array([0.0, params.T1, params.T]),
                            steps_per_period=p["steps_per_period"])
        mem = membership_check(c, params, points_per_period=p["points_per_period"])
        dc = metric_dC(c, ref, params, points_per_period=p["points_per_period"])
        E = float(tr.energy[-1])
        insts.append(inst)
        traces.append(tr)
        rows.append([rho, inst.a_rho, inst.b_rho, inst.n_a, inst.n_b, inst.theta_rho,
                     inst.psi_rho, inst.gamma_inverse, inst.gamma_verbatim, inst.phi_rho,
                     E, math.log(E), math.log(E) / math.log(rho), mem.C1, mem.C2, mem.c_min,
                     mem.c_max, dc["value"], int(inst.window_chain_ok)])
    cols = ["rho", "a_rho", "b_rho", "periods_a", "periods_b", "theta_rho", "psi_rho",
            "Gamma_inverse", "Gamma_verbatim", "phi", "energy_T", "log_energy",
            "log_energy_over_log_rho", "C1", "C2", "c_min", "c_max", "d_C", "window_chain_ok"]
    table = Table("activator_sweep", cols, rows)
    growth = np.array([r[12] for r in rows])
    dC = np.array([r[17] for r in rows])
    out = Outcome([table])
    n_pts = len(rows)
    if n_pts >= 2:
        fit = loss_fit(traces, params.T, rate=[r[9] for r in rows], min_points=2, min_decades=0,
                       divergence=p["divergence"])
        out.constants["phi_fit"] = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2}
        out.verdicts["loss_class"] = fit.variant.value
        out.figures.append(FigureSpec("energy_vs_phi", "activator_sweep", "phi", ["log_energy"],
                                      ylabel="ln E(T)", scatter=True,
                                      fit=(fit.slope, fit.intercept)))
    out.figures.append(FigureSpec("metric_vs_rho", "activator_sweep", "rho", ["d_C"],
                                  logx=True, logy=True, scatter=True))
    out.verdicts["growth_increasing"] = bool(np.all(np.diff(growth) > 0))
    out.verdicts["growth_ratio"] = float(growth[-1] / growth[0]) if growth[0] > 0 else None
    out.verdicts["d_C_decreasing"] = bool(np.all(np.diff(dC) < 0))
    out.verdicts["membership_ok"] = True
    out.constants["C1_range"] = [min(r[13] for r in rows), max(r[13] for r in rows)]
    out.constants["C2_range"] = [min(r[14] for r in rows), max(r[14] for r in rows)]
    out.metadata = {"activator": params.to_dict(), "cutoff": "septic smoothstep (C3)",
                    "instances": [i.to_dict() for i in insts]}
    return out


def run_mode_sweep(p, seed, threads) -> Outcome:
    c = time_function_from_spec(p["coefficient"])
    T = p["T"]
    rep = np.linspace(0.0, T, p["n_report"])
    traces = sweep(c, p["rhos"], T=T, tol=p["tol"], threads=threads, report=rep,
                   steps_per_period=p["steps_per_period"])
    rows = []
    for tr in traces:
        for ti, e in zip(tr.t, tr.energy):
            rows.append([tr.rho, float(ti), float(e)])
    summary = Table("mode_summary", ["rho", "energy_T", "energy_min", "energy_max",
                                     "accepted_steps", "rejected_steps"],
                    [[tr.rho, float(tr.energy[-1]), float(tr.energy.min()),
                      float(tr.energy.max()), tr.stats["accepted"], tr.stats["rejected"]]
                     for tr in traces])
    table = Table("mode_energy", ["rho", "t", "energy"], rows)
    fig = FigureSpec("mode_energy", "mode_energy", "t", ["energy"], group="rho",
                     ylabel="E(t)")
    out = Outcome([table, summary], [fig])
    out.constants = {"energy_range": [min(r[2] for r in rows), max(r[2] for r in rows)]}
    return out


def run_loss_fit(p, seed, threads) -> Outcome:
    c = time_function_from_spec(p["coefficient"])
    rhos = p["rhos"] or list(np.geomspace(p["rho_min"], p["rho_max"], p["n_rho"]))
    T = p["T"]
    traces = sweep(c, rhos, T=T, t_eval=T, tol=p["tol"], threads=threads,
                   steps_per_period=p["steps_per_period"])
    energy = None
    if p["energy"] == "adapted":
        energy = lambda tr: float(tr.adapted_energy(c)[-1])  # noqa: E731
    decades = math.log10(max(rhos) / min(rhos))
    fit = loss_fit(traces, T, zero_slope=p["zero_slope"], min_points=2,
                   min_decades=min(3.0, decades), energy=energy)
    rows = [[float(r), math.log(r), float(math.exp(le)), float(le), float(g)]
            for r, le, g in zip(np.exp(fit.rates), fit.log_energy, fit.growth_ratio)]
    table = Table("loss_fit", ["rho", "log_rho", "energy_T", "log_energy",
                               "log_energy_over_log_rho"], rows)
    fig = FigureSpec("loss_fit", "loss_fit", "log_rho", ["log_energy"], xlabel="ln rho",
                     ylabel="ln E(T)", scatter=True, fit=(fit.slope, fit.intercept))
    out = Outcome([table], [fig])
    out.constants = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2}
    out.verdicts = {"loss_class": fit.variant.value}
    return out


def psi3_grid(n: int, x_max: float = 1e3, xi_max: float = 1e6):
    """Origin plus ``n - 1`` log-spaced points from ``1e-2`` (both axes)."""
    x = np.concatenate([[0.0], np.geomspace(1e-2, x_max, n - 1)])
    xi = np.concatenate([[0.0], np.geomspace(1e-2, xi_max, n - 1)])
    return x, xi


def run_psi3_check(p, seed, threads) -> Outcome:
    prof = profile_from_spec(p["profile"])
    w = _weights_from_spec(p["weights"])
    T = prof.horizon_T
    k = p["k"] or max(1.0, 1.0 / T)
    params = PhaseParams(k, p["N"], T)
    n = p["n_grid"]
    x, xi = psi3_grid(n, p["x_max"], p["xi_max"])
    rep = verify_psi3(prof, w, params, p["kappa"], x, xi, n_sub=p["n_sub"], order=p["order"])
    pr = rep.piece_ratios
    rows = [[float(a), float(b), float(c), float(d), float(e), float(f), float(g), float(hh),
             float(ii)]
            for a, b, c, d, e, f, g, hh, ii in zip(rep.x, rep.xi, rep.h, rep.Theta, rep.integral,
                                                   rep.ratio, pr[:, 0], pr[:, 1], pr[:, 2])]
    table = Table("psi3", ["x", "xi", "h", "loss_weight", "integral", "ratio",
                           "interior_ratio", "middle_ratio", "exterior_ratio"], rows)
    fig = FigureSpec("psi3_ratio", "psi3", "h", ["ratio"], logx=True, scatter=True,
                     ylabel="integral / loss weight")
    out = Outcome([table], [fig])
    out.constants = rep.to_dict()
    out.constants["k"] = k
    out.verdicts = {"finite": bool(np.isfinite(rep.sup_ratio))}
    if not out.verdicts["finite"]:
        out.violations.append("majorant integral is not bounded by the loss weight")
    return out


def run_cone_test(p, seed, threads) -> Outcome:
    cfg = WaveConfig(p["model"], L=p["L"], dx=p["dx"], cfl=p["cfl"], t_end=p["t_end"], R=p["R"],
                     datum=p["datum"], velocity=p["velocity"], n_snapshots=p["n_snapshots"],
                     eta=p["eta"], lower_order=p["lower_order"])
    snaps = solve_wave(cfg)
    rep = measure_speed(snaps)
    ratio = rep.radius_ratio
    rows = [[float(t), float(r), float(pr), float(q), float(s) if math.isfinite(s) else ""]
            for t, r, pr, q, s in zip(rep.t, rep.radius, rep.predicted, ratio, rep.speed_ratio)]
    cone = Table("cone", ["t", "radius", "predicted", "radius_ratio", "speed_ratio"], rows)
    st = p["snapshot_stride"]
    xs = snaps.x[::st]
    us = snaps.u[:, ::st]
    snap = Table("snapshots", ["x"] + [f"u_t{i}" for i in range(us.shape[0])],
                 [[float(xv)] + [float(v) for v in us[:, j]] for j, xv in enumerate(xs)])
    times = Table("snapshot_times", ["index", "t"], [[i, float(t)] for i, t in enumerate(snaps.t)])
    fig = FigureSpec("cone_overlay", "cone", "t", ["radius", "predicted"], ylabel="support radius",
                     labels={"radius": "measured", "predicted": "cone prediction"})
    out = Outcome([cone, snap, times], [fig])
    energy = snaps.energy[np.isfinite(snaps.energy)]
    out.constants = {"gamma0": rep.gamma0, "R": rep.R, "dt": snaps.dt,
                     "max_radius_ratio": float(np.max(ratio)),
                     "final_speed_ratio": float(rep.speed_ratio[-1]),
                     "energy_drift": float(np.ptp(energy) / energy[0]) if energy.size else None}
    out.constants["shift_exponent"] = shift_exponent(cfg.model.profile)
    out.metadata = {"cone_report": rep.to_dict()}
    out.verdicts = {"contained": bool(np.max(ratio) <= p["ratio_tol"])}
    if not out.verdicts["contained"]:
        out.violations.append(f"support leaves the cone: max radius ratio {np.max(ratio):.4g}")
    return out


EXPERIMENTS = {
    "profile-classify": run_profile_classify,
    "zone-map": run_zone_map,
    "bound-check": run_bound_check,
    "activator-sweep": run_activator_sweep,
    "mode-sweep": run_mode_sweep,
    "loss-fit": run_loss_fit,
    "psi3-check": run_psi3_check,
    "cone-test": run_cone_test,
}

__all__ = ["ConfigError", "InvariantViolation", "Table", "Outcome", "Field", "SCHEMAS",
           "EXPERIMENTS", "resolve_params", "activator_params_from_spec", "psi3_grid"]
