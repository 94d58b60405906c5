"""Run an ExperimentSpec and write its result table plus a manifest."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .. import __version__
from ..audit import collect_tallies, nonsignaling_audit_analytic, nonsignaling_audit_empirical, unary_audit
from ..chsh import CLASSICAL_BOUND, TSIRELSON_BOUND, ALGEBRAIC_BOUND, SettingsQuad, canonical_quad, chsh_estimate, chsh_value, TERMS
from ..models import apply_jamming, build_model, correlation, sample_outcomes
from ..optimize import lhv_max_chsh, nonsignaling_lp_max_chsh, tsirelson_search
from ..spacetime import Event, JammingConfig, config_verdict
from .config import ExperimentSpec, emit_config


@dataclass
class Result:
    columns: list[str]
    rows: list[dict[str, Any]]
    summary: dict[str, Any]
    # False when a --strict run should exit with a verdict failure
    ok: bool = True


@dataclass
class RunManifest:
    spec: dict[str, Any]
    spec_text: str
    version: str
    duration_s: float
    result_path: str
    summary: dict[str, Any]
    ok: bool


def fmt(value: float) -> str:
    return format(value, ".17g")


def _model(spec: ExperimentSpec, jammed: bool | None = None):
    jammed = spec.jammed if jammed is None else jammed
    return build_model(spec.model, spec.ramp, jammed, spec.jam_form)


def _quad(spec: ExperimentSpec) -> SettingsQuad:
    if spec.quad == "canonical":
        return canonical_quad()
    a, a_prime, b, b_prime = (float(v) for v in spec.quad.split(","))
    return SettingsQuad(a=a, a_prime=a_prime, b=b, b_prime=b_prime)


def _event(text: str) -> Event:
    t, *x = (float(v) for v in text.split(","))
    return Event(t, tuple(x))


def run_chsh(spec: ExperimentSpec) -> Result:
    model = _model(spec)
    quad = _quad(spec)
    if spec.n > 0:
        report = chsh_estimate(model, quad, spec.n, spec.seed, workers=spec.workers)
        mode = "empirical"
    else:
        report = chsh_value(model, quad)
        mode = "analytic"
    rows = []
    for term, (_, x, y, _) in zip(report.terms, TERMS):
        rows.append(
            {
                "term": term.name,
                "setting_x": getattr(quad, x),
                "setting_y": getattr(quad, y),
                "relative_angle": term.relative_angle,
                "correlation": term.correlation,
                "sign": term.sign,
                "contribution": term.contribution,
                "total": report.value,
                "standard_error": report.standard_error,
                "mode": mode,
            }
        )
    # an estimate only counts as exceeding a bound beyond 3 standard errors
    margin = 1e-12 + 3 * (report.standard_error or 0.0)
    summary = {
        "model": model.describe(),
        "value": report.value,
        "abs_value": abs(report.value),
        "standard_error": report.standard_error,
        "exceeds_classical": abs(report.value) > CLASSICAL_BOUND + margin,
        "exceeds_tsirelson": abs(report.value) > TSIRELSON_BOUND + margin,
    }
    return Result(list(rows[0]), rows, summary)


def run_audit(spec: ExperimentSpec) -> Result:
    model = _model(spec)
    reports = []
    kinds = ("nonsignaling", "empirical", "unary") if spec.audit == "all" else (spec.audit,)
    for kind in kinds:
        if kind == "nonsignaling":
            reports.append((kind, nonsignaling_audit_analytic(model, spec.grid)))
        elif kind == "empirical":
            n = spec.n or 100_000
            tallies = collect_tallies(model, _quad(spec), n, spec.seed, workers=spec.workers)
            reports.append((kind, nonsignaling_audit_empirical(tallies, spec.alpha)))
        else:
            original = _model(spec, jammed=False)
            reports.append((kind, unary_audit(original, apply_jamming(original, spec.jam_form), spec.grid)))
    rows = [
        {
            "audit": kind,
            "mode": r.mode,
            "passed": r.passed,
            "max_deviation": r.max_deviation,
            "threshold": r.threshold,
            "worst_case": r.worst_case,
        }
        for kind, r in reports
    ]
    ok = all(r.passed for _, r in reports)
    return Result(list(rows[0]), rows, {"model": model.describe(), "passed": ok}, ok)


def _argmax_text(report) -> str:
    arg = report.argmax
    if isinstance(arg, tuple):
        return " ".join(str(v) for v in arg)
    if isinstance(arg, SettingsQuad):
        return " ".join(f"{k}={fmt(getattr(arg, k))}" for k in ("a", "a_prime", "b", "b_prime"))
    return " ".join(fmt(v) for v in arg.flat())


def run_optimize(spec: ExperimentSpec) -> Result:
    methods = ("lhv", "tsirelson", "lp") if spec.method == "all" else (spec.method,)
    rows = []
    for method in methods:
        if method == "lhv":
            report, bound = lhv_max_chsh(), CLASSICAL_BOUND
        elif method == "tsirelson":
            report = tsirelson_search(spec.tolerance, restarts=spec.restarts, seed=spec.seed)
            bound = TSIRELSON_BOUND
        else:
            report, bound = nonsignaling_lp_max_chsh(), ALGEBRAIC_BOUND
        rows.append(
            {
                "method": method,
                "solver": report.method,
                "value": report.value,
                "reference_bound": bound,
                "error": report.value - bound,
                "min_value": report.extras.get("min"),
                "argmax": _argmax_text(report),
                "iterations": report.iterations,
                "converged": report.converged,
            }
        )
    summary = {r["method"]: r["value"] for r in rows}
    return Result(list(rows[0]), rows, summary, all(r["converged"] for r in rows))


def run_jamming(spec: ExperimentSpec) -> Result:
    cfg = JammingConfig(_event(spec.a), _event(spec.b), _event(spec.j))
    v = config_verdict(cfg, spec.budget, spec.seed)
    row = {
        "dim": cfg.d,
        "premises_ok": v.premises_ok,
        "binary_ok": v.binary_ok,
        "reversal": v.reversal,
        "numerical": v.numerical,
        "min_slack": v.min_slack,
        "comparison_t": v.comparison_point.t,
        "comparison_x": " ".join(fmt(c) for c in v.comparison_point.x),
        "witness_t": v.witness.t if v.witness else None,
        "witness_x": " ".join(fmt(c) for c in v.witness.x) if v.witness else None,
        "frame": v.frame,
    }
    ok = v.premises_ok and v.binary_ok
    return Result(list(row), [row], {k: row[k] for k in ("premises_ok", "binary_ok", "reversal")}, ok)


def run_sample(spec: ExperimentSpec) -> Result:
    model = _model(spec)
    a, b = sample_outcomes(model, spec.angle, spec.n, spec.seed, workers=spec.workers)
    rows = [{"index": i, "a": int(x), "b": int(y)} for i, (x, y) in enumerate(zip(a.tolist(), b.tolist()))]
    products = a.astype(np.int64) * b
    mean = float(products.mean())
    summary = {
        "model": model.describe(),
        "angle": spec.angle,
        "n": spec.n,
        "empirical_correlation": mean,
        "analytic_correlation": correlation(model, spec.angle),
        "standard_error": math.sqrt(max(0.0, 1 - mean * mean) / spec.n),
    }
    return Result(["index", "a", "b"], rows, summary)


DISPATCH = {
    "chsh": run_chsh,
    "audit": run_audit,
    "optimize": run_optimize,
    "jamming": run_jamming,
    "sample": run_sample,
}


def compute(spec: ExperimentSpec) -> Result:
    return DISPATCH[spec.command](spec)


# --- emission ------------------------------------------------------------------


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt(value)
    return str(value)


def to_csv(result: Result) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_cell(row[c]) for c in result.columns])
    return buf.getvalue()


def _json(value: Any) -> str:
    # hand-rolled so floats carry 17 significant digits
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt(value) if math.isfinite(value) else "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_json(v) for v in value) + "]"
    raise TypeError(f"cannot serialise {type(value).__name__}")


def to_json(result: Result) -> str:
    lines = ["{", f'  "columns": {_json(result.columns)},', '  "rows": [']
    body = [f"    {_json({c: row[c] for c in result.columns})}" for row in result.rows]
    lines.append(",\n".join(body))
    lines += ["  ]", "}"]
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest_path(result_path: Path) -> Path:
    return result_path.with_name(result_path.name + ".manifest.json")


def run(spec: ExperimentSpec) -> RunManifest:
    """Compute, then write the result file and its manifest.

    The manifest is written only after the result file is in place, so a
    failed write never leaves a manifest pointing at nothing.
    """
    start = time.perf_counter()
    result = compute(spec)
    duration = time.perf_counter() - start
    text = to_csv(result) if spec.format == "csv" else to_json(result)
    path = Path(spec.output_path())
    _atomic_write(path, text)
    manifest = RunManifest(
        spec=spec.to_dict(),
        spec_text=emit_config(spec),
        version=__version__,
        duration_s=duration,
        result_path=str(path),
        summary=result.summary,
        ok=result.ok,
    )
    _atomic_write(manifest_path(path), _json(manifest.__dict__) + "\n")
    return manifest
