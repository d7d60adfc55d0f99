"""Command-line experiment runner.

Verbs
-----
reference   compute and store the discrete steady solution for a config
run         one solve; writes ``history.csv`` and ``summary.json``
sweep       Cartesian product over the list-valued axes, plus ``aggregate.csv``

Configs are flat JSON documents; unknown keys are rejected. ``CDANSE_SEED``
in the environment overrides the ``seed`` key.
"""

from __future__ import annotations

import argparse
import base64
import csv
import hashlib
import itertools
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import export_history, format_float, summarize
from .fem import Field, IHMode
from .mesh import CoarseGrid, locate_observation_vertices, uniform_cavity_mesh
from .observations import make_observations
from .solvers import (
    STEPPERS,
    FlowContext,
    ReferenceError,
    SolverConfig,
    SolverError,
    Status,
    compute_reference,
    hybrid_cda_newton,
    iterate,
    nonlinear_residual,
)

log = logging.getLogger("cdanse")

METHODS = ("picard", "newton", "cda_picard", "hybrid")
SWEEP_AXES = ("Re", "mu", "N", "snr", "seed")
DEFAULTS = {
    "n": 32,
    "Re": 100.0,
    "lid_value": [1.0, 0.0],
    "gamma_gd": 1.0,
    "N": 10,
    "snr": 0.0,
    "seed": 0,
    "u_max": 1.0,
    "ih_mode": IHMode.POINT_VALUE.value,
    "method": "picard",
    "mu": 1.0,
    "tol_residual": 1e-8,
    "switch_tol": 1e-2,
    "max_iter": 500,
    "blowup_threshold": 1e4,
    "window": 10,
    "record_timing": False,
    "reference": None,
    "out": "results",
}
SUMMARY_COLUMNS = ("status", "iterations", "final_residual", "min_l2_error", "contraction_rate", "noise_norm",
                   "error_to_noise")


class ConfigError(ValueError):
    pass


# --- configuration ----------------------------------------------------------

def load_config(source) -> dict:
    """Read a config from a path, JSON text or mapping and fill in defaults."""
    if isinstance(source, dict):
        doc = dict(source)
    else:
        text = Path(source).read_text() if Path(str(source)).exists() else str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {**DEFAULTS, **doc}
    if os.environ.get("CDANSE_SEED"):
        cfg["seed"] = int(os.environ["CDANSE_SEED"])
    validate_config(cfg)
    return cfg


def _axis(cfg, key) -> list:
    v = cfg[key]
    return list(v) if isinstance(v, (list, tuple)) else [v]


def validate_config(cfg: dict):
    for key in SWEEP_AXES:
        if not _axis(cfg, key):
            raise ConfigError(f"sweep axis {key!r} is empty")
    for key, v in cfg.items():
        if isinstance(v, list) and key not in SWEEP_AXES + ("lid_value",):
            raise ConfigError(f"{key!r} cannot be a list")
    if cfg["method"] not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {cfg['method']!r}")
    if int(cfg["n"]) != cfg["n"] or cfg["n"] < 2:
        raise ConfigError(f"mesh size n must be an integer >= 2, got {cfg['n']!r}")
    if any(int(N) != N or N < 1 for N in _axis(cfg, "N")):
        raise ConfigError("coarse grid N must be a positive integer")
    if any(not Re > 0 for Re in _axis(cfg, "Re")):
        raise ConfigError("Re must be positive")
    if any(s < 0 for s in _axis(cfg, "snr")):
        raise ConfigError("snr must be nonnegative")
    if any(m < 0 for m in _axis(cfg, "mu")):
        raise ConfigError("mu must be nonnegative")
    if any(int(s) != s or not 0 <= s < 2**64 for s in _axis(cfg, "seed")):
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if len(cfg["lid_value"]) != 2:
        raise ConfigError("lid_value must have two components")
    IHMode(cfg["ih_mode"])


def expand(cfg: dict) -> list[dict]:
    """One config per point of the sweep grid, in lexicographic (Re, mu, N, snr, seed) order."""
    axes = [sorted(set(float(v) for v in _axis(cfg, k))) for k in SWEEP_AXES]
    runs = []
    for values in itertools.product(*axes):
        point = dict(cfg)
        for k, v in zip(SWEEP_AXES, values):
            point[k] = int(v) if k in ("N", "seed") else v
        runs.append(point)
    return runs


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def solver_config(cfg: dict) -> SolverConfig:
    return SolverConfig(nu=1.0 / float(cfg["Re"]), mu=float(cfg["mu"]), gamma_gd=float(cfg["gamma_gd"]),
                        tol_residual=float(cfg["tol_residual"]), max_iter=int(cfg["max_iter"]),
                        blowup_threshold=float(cfg["blowup_threshold"]), switch_tol=float(cfg["switch_tol"]),
                        ih_mode=cfg["ih_mode"], lid_value=tuple(cfg["lid_value"]))


def run_id(cfg: dict) -> str:
    return (f"{cfg['method']}_Re{float(cfg['Re']):g}_mu{float(cfg['mu']):g}_N{cfg['N']}"
            f"_snr{float(cfg['snr']):g}_seed{cfg['seed']}")


# --- field files ------------------------------------------------------------

_REFERENCE_KEYS = ("n", "Re", "gamma_gd", "lid_value")


def reference_key(cfg: dict) -> dict:
    return {"n": int(cfg["n"]), "Re": float(_axis(cfg, "Re")[0]), "gamma_gd": float(cfg["gamma_gd"]),
            "lid_value": [float(v) for v in cfg["lid_value"]]}


def write_field_file(path, u: Field, cfg: dict, extra: dict | None = None):
    d = u.dofmap
    header = {
        "format": "cdanse-field",
        "version": __version__,
        "n": d.mesh.n,
        "n_u": d.n_u,
        "n_p": d.n_p,
        "config_hash": config_hash(cfg),
        "config": cfg,
        **(extra or {}),
    }
    payload = base64.b64encode(np.asarray(u.values, dtype="<f8").tobytes()).decode("ascii")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"header": header, "payload": payload}, sort_keys=True, indent=1) + "\n")
    return path


def read_field_file(path, ctx: FlowContext) -> tuple[Field, dict]:
    doc = json.loads(Path(path).read_text())
    header = doc["header"]
    d = ctx.dofmap
    if header["n"] != d.mesh.n or header["n_u"] != d.n_u:
        raise ConfigError(f"{path}: field is for mesh n={header['n']} ({header['n_u']} velocity dofs), "
                          f"config uses n={d.mesh.n} ({d.n_u})")
    values = np.frombuffer(base64.b64decode(doc["payload"]), dtype="<f8").astype(float)
    return Field(d, values), header


def _reference_path(cfg: dict) -> Path:
    if cfg["reference"]:
        return Path(cfg["reference"])
    return Path(cfg["out"]) / f"reference_n{cfg['n']}_Re{float(cfg['Re']):g}.json"


def obtain_reference(cfg: dict, ctx: FlowContext) -> Field:
    """Load the cached reference for ``cfg`` or compute and store it."""
    path = _reference_path(cfg)
    if path.exists():
        u, header = read_field_file(path, ctx)
        want = reference_key(cfg)
        have = {k: header["config"].get(k) for k in _REFERENCE_KEYS}
        if json.dumps(have, sort_keys=True) != json.dumps(want, sort_keys=True):
            raise ConfigError(f"{path}: reference was computed for {have}, config needs {want}")
        return u
    if cfg["reference"]:
        raise ConfigError(f"reference file {path} does not exist")
    ref = compute_reference(ctx, solver_config(cfg))
    write_field_file(path, ref.velocity, reference_key(cfg), {"nonlinear_residual": ref.nonlinear_residual})
    return ref.velocity


# --- verbs ------------------------------------------------------------------

def cmd_reference(cfg: dict) -> int:
    cfg = {**cfg, "Re": _axis(cfg, "Re")[0]}
    ctx = FlowContext(uniform_cavity_mesh(int(cfg["n"])))
    try:
        ref = compute_reference(ctx, solver_config(cfg))
    except (ReferenceError, SolverError) as exc:
        print(f"reference failed: {exc}", file=sys.stderr)
        return 2
    path = write_field_file(_reference_path(cfg), ref.velocity, reference_key(cfg),
                            {"nonlinear_residual": ref.nonlinear_residual})
    print(f"reference Re={float(cfg['Re']):g} n={cfg['n']}: nonlinear residual {format_float(ref.nonlinear_residual)}")
    print(f"wrote {path}")
    return 0


def execute_run(cfg: dict) -> dict:
    """Run one configuration, write its outputs, and return its summary row."""
    ctx = FlowContext(uniform_cavity_mesh(int(cfg["n"])))
    scfg = solver_config(cfg)
    ref = obtain_reference(cfg, ctx)
    obs = None
    if cfg["method"] in ("cda_picard", "hybrid"):
        grid = CoarseGrid(int(cfg["N"]))
        obs = make_observations(ref, grid, locate_observation_vertices(ctx.mesh, grid), snr=float(cfg["snr"]),
                                seed=int(cfg["seed"]), u_max=float(cfg["u_max"]), ih_mode=cfg["ih_mode"])
    timer = time.perf_counter if cfg["record_timing"] else None
    u = ctx.initial_guess(scfg)
    try:
        if cfg["method"] == "hybrid":
            u, history = hybrid_cda_newton(u, obs, ctx, scfg, reference=ref, timer=timer)
        else:
            u, history = iterate(STEPPERS[cfg["method"]], u, ctx, scfg, obs=obs, reference=ref, timer=timer)
    except SolverError as exc:
        log.warning("%s: %s", run_id(cfg), exc)
        history = exc.history
    # algebraic residual of the final iterate: reported, never used for stopping
    alg = None
    if history.final_pressure is not None and np.all(np.isfinite(u.values)):
        alg = nonlinear_residual(u, history.final_pressure, ctx, scfg.replace(mu=0.0))
    summary = summarize(history, obs, int(cfg["window"]))
    outdir = Path(cfg["out"]) / run_id(cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    export_history(history, outdir / "history.csv", config=cfg)
    doc = {"config": cfg, "config_hash": config_hash(cfg), "summary": summary.to_dict(), "nonlinear_residual": alg}
    (outdir / "summary.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return {"run": run_id(cfg), **{k: cfg[k] for k in ("method",) + SWEEP_AXES}, **summary.to_dict()}


def cmd_run(cfg: dict, allow_failure: bool = False) -> int:
    runs = expand(cfg)
    if len(runs) != 1:
        raise ConfigError("run takes a single configuration; use sweep for list-valued axes")
    row = execute_run(runs[0])
    print(f"{row['run']}: {row['status']} after {row['iterations']} iterations, "
          f"final residual {format_float(row['final_residual'])}")
    if row["status"] != Status.CONVERGED.value and not allow_failure:
        return 1
    return 0


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def cmd_sweep(cfg: dict, jobs: int = 1) -> int:
    runs = expand(cfg)
    # references first, one per (n, Re), so parallel workers only read them
    for Re in sorted({r["Re"] for r in runs}):
        point = next(r for r in runs if r["Re"] == Re)
        obtain_reference(point, FlowContext(uniform_cavity_mesh(int(point["n"]))))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_safe_run, runs))
    else:
        rows = [_safe_run(r) for r in runs]
    columns = ("run", "method") + SWEEP_AXES + SUMMARY_COLUMNS + ("error",)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "aggregate.csv", "w", newline="") as fh:
        fh.write("# config=" + json.dumps(cfg, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])
    n_ok = sum(r.get("status") == Status.CONVERGED.value for r in rows)
    print(f"sweep: {len(rows)} runs, {n_ok} converged; table in {out / 'aggregate.csv'}")
    return 0


def _safe_run(cfg: dict) -> dict:
    try:
        return execute_run(cfg)
    except Exception as exc:  # failures are data in a sweep
        return {"run": run_id(cfg), **{k: cfg[k] for k in ("method",) + SWEEP_AXES}, "error": repr(exc)}


# --- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cdanse", description="Steady cavity flow with Picard, Newton and CDA-Picard.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb, help_text in (("reference", "compute and store the reference solution"),
                            ("run", "run one configuration"),
                            ("sweep", "run every point of the sweep axes")):
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output directory (overrides the config)")
        if verb == "run":
            p.add_argument("--allow-failure", action="store_true", help="exit 0 even if the run does not converge")
        if verb == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg["out"] = args.out
        if args.verb == "reference":
            return cmd_reference(cfg)
        if args.verb == "run":
            return cmd_run(cfg, args.allow_failure)
        return cmd_sweep(cfg, max(1, args.jobs))
    except (ConfigError, OSError) as exc:
        print(f"cdanse: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
