"""Post-processing of iteration histories.

Measured contraction rates, the rates and thresholds predicted by the
convergence theory for user-supplied constants, run summaries, and the
CSV/JSON history formats.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .fem import Field, velocity_gradients
from .fem.quadrature import TriangleRule
from .observations import ObservationSet, noise_interpolant_norm
from .solvers import IterationHistory, IterationRecord, SolverConfig, Status

CSV_COLUMNS = ("k", "l2_residual", "l2_error", "h1_norm", "wall_time_s", "phase")
DEFAULT_WINDOW = 10
_TINY = 100 * np.finfo(float).eps
_VERTEX_RULE = TriangleRule(np.eye(3), np.full(3, 1 / 3), 1)


class DiagnosticError(ValueError):
    pass


def _residuals(history) -> np.ndarray:
    if isinstance(history, IterationHistory):
        return history.residuals
    return np.asarray(history, dtype=float)


def contraction_rate(history, window: int = DEFAULT_WINDOW) -> float:
    """Geometric mean of successive residual ratios over the last ``window`` usable ratios.

    Residuals at or below 100 machine epsilons are treated as converged to
    round-off and dropped before forming ratios.

    Parameters
    ----------
    history : IterationHistory or array_like
        A history, or a plain sequence of residuals.
    window : int
        Number of trailing ratios to average, at least 2.

    Raises
    ------
    DiagnosticError
        If fewer than ``window + 1`` usable residuals are available.
    """
    if int(window) != window or window < 2:
        raise DiagnosticError(f"window must be an integer >= 2, got {window!r}")
    r = _residuals(history)
    r = r[np.isfinite(r) & (r > _TINY)]
    if len(r) < window + 1:
        raise DiagnosticError(f"need {window + 1} residuals above round-off, have {len(r)}")
    tail = r[-(window + 1):]
    return float(np.exp(np.mean(np.diff(np.log(tail)))))


def K1_estimate(reference: Field, rule=None) -> float:
    """Largest Frobenius norm of the reference velocity gradient.

    The P2 gradient is linear on each triangle and its norm is convex, so
    the elementwise maximum sits at a triangle vertex; by default those
    points are sampled, which gives the exact discrete supremum. Passing a
    quadrature ``rule`` samples its points instead (a lower bound).
    """
    if rule is None:
        rule = _VERTEX_RULE
    G = velocity_gradients(reference, rule)
    return float(np.sqrt(np.max(np.sum(G * G, axis=(-1, -2)))))


@dataclass(frozen=True)
class TheoryBounds:
    K1_estimate: float
    C_I_user: float
    nu: float
    mu: float
    H: float
    gamma: float
    predicted_rate: float
    lambda_hat: float
    lambda_bar: float
    mu_gt_2K1: bool
    H_small_enough: bool
    lambda_bar_gt_2: bool
    mu_ge_4K1sq: bool
    mu_le_nu_over_CI2H2: bool

    @property
    def flags(self) -> dict:
        return {k: getattr(self, k) for k in ("mu_gt_2K1", "H_small_enough", "lambda_bar_gt_2", "mu_ge_4K1sq",
                                              "mu_le_nu_over_CI2H2")}


def theory_report(config, K1_estimate: float, C_I_user: float = 1.0, H: float | None = None) -> TheoryBounds:
    """Evaluate the theoretical rate and hypothesis checks for the given constants.

    ``config`` is a :class:`SolverConfig` (``H`` must then be given) or a
    mapping with keys ``nu``, ``mu`` and ``H``. No solver decision depends on
    the result.
    """
    if isinstance(config, SolverConfig):
        nu, mu = config.nu, config.mu
    else:
        nu, mu = config["nu"], config["mu"]
        H = config.get("H", H)
    if H is None:
        raise DiagnosticError("coarse width H is required")
    for name, val in (("nu", nu), ("mu", mu), ("H", H), ("K1_estimate", K1_estimate), ("C_I_user", C_I_user)):
        if not val > 0:
            raise DiagnosticError(f"{name} must be positive, got {val!r}")
    inv = nu / (C_I_user**2 * H**2)
    gamma = min(inv, mu) / K1_estimate
    lam_bar = min(inv, mu / 2)
    return TheoryBounds(
        K1_estimate=K1_estimate, C_I_user=C_I_user, nu=nu, mu=mu, H=H,
        gamma=gamma,
        predicted_rate=math.sqrt(2 / gamma),
        lambda_hat=min(inv / 4, mu / 2),
        lambda_bar=lam_bar,
        mu_gt_2K1=mu > 2 * K1_estimate,
        H_small_enough=H < math.sqrt(nu / (2 * K1_estimate)) / C_I_user,
        lambda_bar_gt_2=lam_bar > 2,
        mu_ge_4K1sq=mu >= 4 * K1_estimate**2,
        mu_le_nu_over_CI2H2=mu <= inv,
    )


@dataclass(frozen=True)
class RunSummary:
    status: str
    iterations: int
    final_residual: float
    min_l2_error: float | None
    contraction_rate: float | None
    noise_norm: float | None
    error_to_noise: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(history: IterationHistory, obs: ObservationSet | None = None, window: int = DEFAULT_WINDOW) -> RunSummary:
    errors = history.errors
    min_err = float(np.nanmin(errors)) if len(errors) and np.any(np.isfinite(errors)) else None
    try:
        rate = contraction_rate(history, window)
    except DiagnosticError:
        rate = None
    noise = noise_interpolant_norm(obs) if obs is not None else None
    ratio = min_err / noise if (obs is not None and obs.snr > 0 and min_err is not None and noise > 0) else None
    status = history.status.value if history.status is not None else None
    return RunSummary(status, len(history), history.final_residual, min_err, rate, noise, ratio)


# --- serialization ----------------------------------------------------------

def format_float(x) -> str:
    """17 significant digits, enough to round-trip any float64."""
    if x is None:
        return "nan"
    return f"{float(x):.17g}"


def _canonical_config(config) -> dict | None:
    if config is None:
        return None
    if isinstance(config, SolverConfig):
        doc = {}
        for k, v in asdict(config).items():
            doc[k] = v.value if hasattr(v, "value") else (list(v) if isinstance(v, tuple) else v)
        return doc
    return dict(config)


def history_to_csv(history: IterationHistory, config=None) -> str:
    buf = io.StringIO()
    cfg = _canonical_config(config)
    if cfg is not None:
        buf.write("# config=" + json.dumps(cfg, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in history.records:
        w.writerow([r.k, format_float(r.l2_residual), format_float(r.l2_error), format_float(r.h1_norm),
                    format_float(r.wall_time), r.phase])
    return buf.getvalue()


def history_to_json(history: IterationHistory, config=None, summary: RunSummary | None = None) -> str:
    records = [{"k": r.k, "l2_residual": r.l2_residual, "l2_error": r.l2_error, "h1_norm": r.h1_norm,
                "wall_time_s": r.wall_time, "phase": r.phase} for r in history.records]
    doc = {
        "status": history.status.value if history.status is not None else None,
        "config": _canonical_config(config),
        "summary": summary.to_dict() if summary is not None else None,
        "records": records,
    }
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=True) + "\n"


def export_history(history: IterationHistory, path, format: str = "csv", config=None,
                   summary: RunSummary | None = None) -> Path:
    """Write ``history`` as CSV (columns :data:`CSV_COLUMNS`) or JSON.

    With ``config`` given, the CSV starts with a ``# config=`` comment line
    holding the resolved configuration as sorted-key JSON.
    """
    fmt = format.lower()
    if fmt == "csv":
        text = history_to_csv(history, config)
    elif fmt == "json":
        text = history_to_json(history, config, summary)
    else:
        raise ValueError(f"unknown history format {format!r}")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _parse_float(s: str) -> float | None:
    v = float(s)
    return None if math.isnan(v) else v


def import_history(path, format: str | None = None) -> IterationHistory:
    """Read a history written by :func:`export_history`."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    text = path.read_text()
    if fmt == "json":
        doc = json.loads(text)
        recs = [IterationRecord(r["k"], r["l2_residual"], r["l2_error"], r["h1_norm"], r["wall_time_s"], r["phase"])
                for r in doc["records"]]
        status = Status(doc["status"]) if doc.get("status") else None
        return IterationHistory(recs, status)
    if fmt != "csv":
        raise ValueError(f"unknown history format {fmt!r}")
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected CSV header {rows[0] if rows else None!r}")
    recs = [IterationRecord(int(k), float(res), _parse_float(err), float(h1), float(t), phase)
            for k, res, err, h1, t, phase in rows[1:]]
    return IterationHistory(recs)
