"""File formats: canonical JSON for instances and reports, CSV for traces.

JSON is written with sorted keys and floats formatted to 17 significant
digits, so a parse/serialize round trip is byte-identical and outputs are
usable as golden files.  Instance files follow the schema

    {"n": int, "A": [[row-major matrix]], "g": [vector],
     "offset": float (optional, default 0), "meta": {"kind": str, "seed": int}}

Trace CSV has the header ``k,f,grad_norm,step_norm[,dist_to_xstar]`` with one
row per stored iterate (step_norm on row k is the length of the step that
produced iterate k, 0 for the start); lines starting with '#' carry the
config echo.
"""

from __future__ import annotations

import json

import numpy as np

from .descent import DescentTrace, RateReport
from .linalg import SymMatrix
from .loja import LojaEstimate
from .problem import Problem
from .stationary import StationaryPoint, StationarySet

TOOL_VERSION = "0.1.0"


class SchemaError(ValueError):
    """Malformed input file; the message names the offending field."""


def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    return format(float(x), ".17g")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    out: list[str] = []
    _write(obj, out)
    return "".join(out)


def _write(obj, out: list[str]):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            if i:
                out.append(", ")
            out.append(json.dumps(key))
            out.append(": ")
            _write(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(list(obj)):
            if i:
                out.append(", ")
            _write(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def problem_to_dict(problem: Problem) -> dict:
    return {
        "n": problem.n,
        "A": problem.A.mat,
        "g": problem.g,
        "offset": problem.offset,
        "meta": dict(problem.meta),
    }


def _require(cond: bool, field: str, detail: str):
    if not cond:
        raise SchemaError(f"field '{field}': {detail}")


def problem_from_dict(data) -> Problem:
    _require(isinstance(data, dict), "<root>", "expected a JSON object")
    for key in ("n", "A", "g"):
        _require(key in data, key, "missing required field")
    n = data["n"]
    _require(isinstance(n, int) and not isinstance(n, bool) and n >= 2, "n",
             "must be an integer >= 2")
    a = data["A"]
    _require(
        isinstance(a, list) and len(a) == n
        and all(isinstance(row, list) and len(row) == n for row in a),
        "A", f"must be an {n}x{n} array of numbers",
    )
    try:
        a_arr = np.array(a, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError("field 'A': entries must be numbers") from None
    _require(bool(np.all(np.isfinite(a_arr))), "A", "entries must be finite")
    asym = float(np.max(np.abs(a_arr - a_arr.T))) if n else 0.0
    _require(asym <= 1e-12 * (1.0 + float(np.max(np.abs(a_arr)))), "A",
             "must be symmetric")
    g = data["g"]
    _require(isinstance(g, list) and len(g) == n, "g",
             f"must be a vector of length {n}")
    try:
        g_arr = np.array(g, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError("field 'g': entries must be numbers") from None
    _require(bool(np.all(np.isfinite(g_arr))), "g", "entries must be finite")
    offset = data.get("offset", 0.0)
    _require(isinstance(offset, (int, float)) and not isinstance(offset, bool),
             "offset", "must be a number")
    meta = data.get("meta", {})
    _require(isinstance(meta, dict), "meta", "must be an object")
    return Problem(A=SymMatrix(a_arr), g=g_arr, offset=float(offset), meta=meta)


def read_problem(path: str) -> Problem:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON in {path}: {exc}") from None
    body = data.get("problem", data) if isinstance(data, dict) else data
    return problem_from_dict(body)


def stationary_point_to_dict(sp: StationaryPoint) -> dict:
    return {
        "x": sp.x,
        "lambda": sp.lam,
        "f_value": sp.f_value,
        "sigma_plus": sp.sigma_plus,
        "sigma_max": sp.sigma_max,
        "phi_singular": sp.phi_singular,
        "case_tag": sp.case_tag,
        "corollary2_holds": sp.corollary2_holds,
        "predicted_theta": sp.predicted_theta,
        "is_isolated": sp.is_isolated,
    }


def stationary_set_to_dict(sset: StationarySet) -> dict:
    return {
        "points": [stationary_point_to_dict(p) for p in sset.points],
        "has_continuum": sset.has_continuum,
        "continuum_families": [
            {
                "lambda": fam.lam,
                "radius": fam.radius,
                "dimension": fam.dimension,
                "fixed": fam.fixed,
                "basis": fam.basis.T,  # one row per family direction
            }
            for fam in sset.continuum_families
        ],
    }


def estimate_to_dict(est: LojaEstimate, point_index: int) -> dict:
    return {
        "theta_hat": est.theta_hat,
        "C_hat": est.C_hat,
        "slope_stderr": est.slope_stderr,
        "n_samples": est.n_samples,
        "radii": list(est.radii_schedule),
        "envelope": est.envelope,
        "point_index": point_index,
        "seed": est.seed,
    }


def rate_report_to_dict(report: RateReport, trace: DescentTrace) -> dict:
    return {
        "regime": report.regime.value,
        "fitted_Q": report.fitted_Q,
        "fitted_power": report.fitted_power,
        "C3_hat": report.C3_hat,
        "fit_window": list(report.fit_window),
        "residual": report.residual,
        "linear_residual": report.linear_residual,
        "sublinear_residual": report.sublinear_residual,
        "C1_hat": trace.C1_hat,
        "C2_hat": trace.C2_hat,
        "n_steps": trace.n_steps,
        "stop_reason": trace.stop_reason.value,
    }


def trace_to_csv(
    trace: DescentTrace,
    x_star: np.ndarray | None = None,
    header_comments: list[str] | None = None,
) -> str:
    cols = "k,f,grad_norm,step_norm"
    if x_star is not None:
        cols += ",dist_to_xstar"
        dists = np.linalg.norm(trace.iterates - x_star[None, :], axis=1)
    lines = [f"# {c}" for c in (header_comments or [])]
    lines.append(cols)
    for i, k in enumerate(trace.stored_steps):
        k = int(k)
        step = trace.step_norms[k - 1] if k >= 1 else 0.0
        row = [
            str(k),
            _fmt_float(trace.f_values[k]),
            _fmt_float(trace.grad_norms[k]),
            _fmt_float(step),
        ]
        if x_star is not None:
            row.append(_fmt_float(dists[i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
