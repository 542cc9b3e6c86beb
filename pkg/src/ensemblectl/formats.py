"""JSON system files, report serialization and CSV helpers."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import __version__
from .ensemble import EnsembleSystem, SpectralPoint, validate
from .errors import EnsembleCtlError, MalformedSystem, ParseError
from .linalg import Matrix
from .polyalg import Interval, IsolatingInterval, Poly, PolyMatrix, format_rational, parse_rational


# ---------------------------------------------------------------------------
# Reading
# ---------------------------------------------------------------------------


def read_json(path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def _rational(x) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise ParseError(f"expected a rational string, got {x!r}")
    try:
        return parse_rational(str(x))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def parse_poly(entry) -> Poly:
    if not isinstance(entry, dict) or not isinstance(entry.get("coeffs"), list):
        raise MalformedSystem(f"polynomial entry must be {{'coeffs': [...]}}, got {entry!r}")
    return Poly([_rational(c) for c in entry["coeffs"]])


def _poly_grid(rows, r: int, c: int, name: str) -> PolyMatrix:
    if not isinstance(rows, list) or len(rows) != r:
        raise MalformedSystem(f"{name} must have {r} rows")
    for row in rows:
        if not isinstance(row, list) or len(row) != c:
            raise MalformedSystem(f"every row of {name} must have {c} entries")
    return PolyMatrix([[parse_poly(e) for e in row] for row in rows])


def parse_system(doc) -> EnsembleSystem:
    """Build and validate an EnsembleSystem from a parsed SystemFile."""
    if not isinstance(doc, dict):
        raise MalformedSystem("system file must hold a JSON object")
    try:
        n, m = doc["state_dim"], doc["input_dim"]
        param = doc["parameter"]
        lo, hi = param["interval"]
        form = doc.get("form", "diagonal")
        A_rows, B_rows = doc["A"], doc["B"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedSystem(f"missing or malformed field: {exc}") from exc
    if not (isinstance(n, int) and isinstance(m, int)) or n < 1 or m < 1:
        raise MalformedSystem("state_dim and input_dim must be positive integers")
    sys = EnsembleSystem(
        n=n,
        m=m,
        K=(_rational(lo), _rational(hi)),
        A=_poly_grid(A_rows, n, n, "A"),
        B=_poly_grid(B_rows, n, m, "B"),
        form=form,
        parameter=str(param.get("name", "β")),
    )
    try:
        return validate(sys)
    except EnsembleCtlError as exc:
        if isinstance(exc, ValueError):
            raise MalformedSystem(str(exc)) from exc
        raise


def load_system(path) -> EnsembleSystem:
    return parse_system(read_json(path))


def parse_matrix(doc) -> Matrix:
    rows = doc.get("matrix") if isinstance(doc, dict) else doc
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise MalformedSystem("matrix file must hold a list of rows")
    if any(len(r) != len(rows[0]) for r in rows):
        raise MalformedSystem("ragged matrix")
    return Matrix([[_rational(x) for x in r] for r in rows])


def parse_eta(text: str) -> tuple:
    try:
        return tuple(parse_rational(t) for t in text.split(","))
    except ValueError as exc:
        raise ParseError(f"bad --eta value {text!r}") from exc


def parse_target(doc, n: int) -> tuple:
    """``(xF, x0)`` as tuples of n polynomials; x0 defaults to zero."""
    if not isinstance(doc, dict):
        raise MalformedSystem("target file must hold a JSON object")
    xF = doc.get("x_F", doc.get("xF"))
    x0 = doc.get("x0")
    if not isinstance(xF, list):
        raise MalformedSystem("target needs an 'x_F' list of polynomials")
    xF = tuple(parse_poly(e) for e in xF)
    x0 = tuple(parse_poly(e) for e in x0) if x0 is not None else tuple(Poly() for _ in range(n))
    return xF, x0


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------


def poly_to_json(p: Poly) -> dict:
    return {"coeffs": p.to_strings()}


def system_to_json(sys: EnsembleSystem) -> dict:
    return {
        "state_dim": sys.n,
        "input_dim": sys.m,
        "parameter": {"name": sys.parameter, "interval": [format_rational(v) for v in sys.K]},
        "form": sys.form,
        "A": [[poly_to_json(p) for p in row] for row in sys.A.tolist()],
        "B": [[poly_to_json(p) for p in row] for row in sys.B.tolist()],
    }


def real_to_json(x):
    if isinstance(x, IsolatingInterval):
        x = x.value()
    if isinstance(x, IsolatingInterval):
        return {
            "root_of": x.poly.to_strings(),
            "interval": [format_rational(x.lo), format_rational(x.hi)],
        }
    if isinstance(x, Interval):
        return {"interval": [format_rational(x.lo), format_rational(x.hi)]}
    return format_rational(Fraction(x))


def matrix_to_json(M) -> list:
    rows = M.tolist() if isinstance(M, Matrix) else M
    return [[real_to_json(x) for x in r] for r in rows]


def point_to_json(p: SpectralPoint) -> dict:
    return {
        "eta": [real_to_json(c) for c in p.coords],
        "preimages": [[real_to_json(b) for b in pre] for pre in p.preimages],
        "kappas": list(p.kappas),
        "N": p.N,
        "junction": list(p.junctions),
    }


def sample_to_json(s) -> dict:
    return {
        "eta": [real_to_json(c) for c in s.eta.coords],
        "C": matrix_to_json(s.C),
        "Bbar": matrix_to_json(s.Bbar),
        "P": matrix_to_json(s.P),
        "k": s.k,
        "block_sizes": list(s.block_sizes),
        "eigenvalue_sets": [[real_to_json(v) for v in grp] for grp in s.eigenvalue_sets],
    }


def report_to_json(report, config: dict) -> dict:
    nc = report.necessary
    w = report.witness
    witness = None
    if w is not None:
        witness = dict(point_to_json(w.point))
        witness.update(
            {
                "matrix": matrix_to_json(w.matrix),
                "rank": w.rank,
                "exact": w.exact,
                "reason": w.reason,
            }
        )
    return {
        "verdict": report.verdict,
        "scope": report.scope,
        "witness": witness,
        "necessary_checks": {
            "passed": nc.passed,
            "single_input_conditions_apply": nc.single_input_required,
            "injectivity": [{"index": i, "pass": ok} for i, ok in nc.injective],
            "disjointness": [{"pair": list(p), "pass": ok} for p, ok in nc.disjoint],
            "constant_eigenfunctions": list(nc.constant),
            "max_k": nc.max_k,
            "inputs": nc.m,
            "input_count_pass": nc.input_count_ok,
        },
        "tested_point_count": report.tested_points,
        "indeterminate_point_count": len(report.indeterminate_points),
        "certificate_sizes": dict(report.certificate_sizes),
        "canonical_samples": [sample_to_json(s) for s in report.canonical_samples],
        "tool_version": __version__,
        "config": dict(config),
    }


def dumps(obj) -> str:
    """Deterministic JSON text."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(x)
    return format(float(x), ".17g")


def dumps_float17(obj, indent: int = 0) -> str:
    """JSON text where every float is written with 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {dumps_float17(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(dumps_float17(v, indent + 1) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")
