"""Command line entry point: ``hyperloss run|validate|catalog``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 a checked property was violated.  Every failure prints one JSON object
with ``status``, ``exit_code``, ``error`` and ``message`` (plus ``field``
for configuration errors).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .activators import AdmissibilityError, MembershipError
from .coefficients import MODEL_CATALOG
from .experiments import EXPERIMENTS, SCHEMAS, ConfigError, InvariantViolation, resolve_params
from .plotting import render
from .profiles import PROFILE_CATALOG, ClassificationError
from .spectral import IntegrationError
from .timefuncs import TIME_CATALOG
from .wavefd import CFLError, SpongeError

log = logging.getLogger("hyperloss")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4
TOP_LEVEL = {"experiment", "seed", "output_dir", "threads", "params"}
OUT_ENV = "HYPERLOSS_OUT"


# --- configuration -----------------------------------------------------------------

def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read config: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return resolve_config(raw)


def resolve_config(raw) -> dict:
    """Validate a parsed config and return it with every default filled in."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = sorted(set(raw) - TOP_LEVEL)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    if "experiment" not in raw:
        raise ConfigError("experiment", "missing required key")
    kind = raw["experiment"]
    if not isinstance(kind, str):
        raise ConfigError("experiment", "expected a string")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", "expected a nonnegative integer")
    threads = raw.get("threads", 1)
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 0:
        raise ConfigError("threads", "expected a nonnegative integer (0 = auto)")
    out_dir = raw.get("output_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("output_dir", "expected a string")
    params = resolve_params(kind, raw.get("params", {}))
    return {"experiment": kind, "seed": seed, "threads": threads, "output_dir": out_dir,
            "params": params}


def config_hash(cfg: dict) -> str:
    """SHA-256 of the fields that determine results (output location and threads excluded)."""
    core = {k: cfg[k] for k in ("experiment", "seed", "params")}
    blob = json.dumps(core, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# --- output ------------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def write_csv(path: Path, columns, rows) -> str:
    """RFC 4180 CSV (CRLF, header row, shortest round-trip floats); returns the SHA-256."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _emit(payload: dict, stream=None):
    print(json.dumps(_jsonable(payload), sort_keys=True), file=stream or sys.stdout)


def _failure(code, exc, out_dir: Path | None = None, **extra) -> int:
    diag = {"status": "error", "exit_code": code, "error": type(exc).__name__,
            "message": str(exc), **extra}
    if out_dir is not None and out_dir.is_dir():
        (out_dir / "diagnostics.json").write_text(json.dumps(_jsonable(diag), indent=2,
                                                             sort_keys=True))
    _emit(diag)
    return code


def output_dir_for(cfg: dict, override: str | None) -> Path:
    if override:
        return Path(override)
    if cfg["output_dir"]:
        return Path(cfg["output_dir"])
    root = Path(os.environ.get(OUT_ENV, "hyperloss-out"))
    return root / f"{cfg['experiment']}-{config_hash(cfg)[:12]}"


def run_experiment(cfg: dict, out_dir: Path) -> tuple[int, dict]:
    """Run a resolved config and write its artifacts; returns (exit code, manifest)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    log.info("running %s into %s", cfg["experiment"], out_dir)
    stale = out_dir / "diagnostics.json"
    if stale.exists():
        stale.unlink()
    started = time.time()
    wall = time.perf_counter()
    outcome = EXPERIMENTS[cfg["experiment"]](cfg["params"], cfg["seed"], cfg["threads"])
    artifacts = []
    tables = {t.name: t for t in outcome.tables}
    for t in outcome.tables:
        path = out_dir / f"{t.name}.csv"
        digest = write_csv(path, t.columns, t.rows)
        artifacts.append({"path": path.name, "sha256": digest, "rows": len(t.rows)})
    for fig in outcome.figures:
        path = out_dir / f"{fig.name}.svg"
        render(fig, tables[fig.table], path)
        artifacts.append({"path": path.name, "source_table": fig.table})
    status = "violation" if outcome.violations else "ok"
    manifest = {
        "version": __version__,
        "experiment": cfg["experiment"],
        "config": cfg,
        "config_hash": config_hash(cfg),
        "started_unix": started,
        "wall_clock_s": time.perf_counter() - wall,
        "constants": outcome.constants,
        "verdicts": outcome.verdicts,
        "metadata": outcome.metadata,
        "violations": outcome.violations,
        "artifacts": artifacts,
        "status": status,
    }
    (out_dir / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2,
                                                      sort_keys=True))
    return (EXIT_INVARIANT if outcome.violations else EXIT_OK), manifest


# --- commands ------------------------------------------------------------------------

def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.threads is not None:
            if args.threads < 0:
                raise ConfigError("threads", "expected a nonnegative integer (0 = auto)")
            cfg["threads"] = args.threads
    except ConfigError as exc:
        return _failure(EXIT_CONFIG, exc, field=exc.path)
    out_dir = output_dir_for(cfg, args.out)
    try:
        code, manifest = run_experiment(cfg, out_dir)
    except (ConfigError, CFLError, AdmissibilityError) as exc:
        return _failure(EXIT_CONFIG, exc, out_dir, field=getattr(exc, "path", "params"))
    except (IntegrationError, FloatingPointError, ClassificationError, SpongeError,
            ZeroDivisionError, OverflowError) as exc:
        return _failure(EXIT_NUMERIC, exc, out_dir)
    except (MembershipError, InvariantViolation) as exc:
        return _failure(EXIT_INVARIANT, exc, out_dir)
    if code == EXIT_INVARIANT:
        return _failure(code, InvariantViolation("; ".join(manifest["violations"])), out_dir,
                        verdicts=manifest["verdicts"], output_dir=str(out_dir))
    _emit({"status": "ok", "exit_code": 0, "output_dir": str(out_dir),
           "verdicts": manifest["verdicts"]})
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _failure(EXIT_CONFIG, exc, field=exc.path)
    _emit({"status": "ok", "exit_code": 0, "config": cfg, "config_hash": config_hash(cfg)})
    return EXIT_OK


def cmd_catalog(args) -> int:
    _emit({
        "experiments": {k: sorted(v) for k, v in SCHEMAS.items()},
        "profiles": sorted(PROFILE_CATALOG) + ["custom"],
        "coefficients": sorted(MODEL_CATALOG) + ["custom"],
        "time_functions": sorted(TIME_CATALOG),
        "weights": ["omega_coef", "kappa1", "kappa2"],
    })
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyperloss", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", help=f"output directory (default: config output_dir, "
                                 f"else ${OUT_ENV}/<experiment>-<hash>)")
    p.add_argument("--threads", type=int, help="worker threads, 0 = auto")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("validate", help="check a config and print it with defaults filled in")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("catalog", help="list built-in profiles, coefficients and experiments")
    p.set_defaults(func=cmd_catalog)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
