"""Command-line front end: ``ensemblectl analyze|rcf|canon|steer``.

Exit codes
----------
0   Controllable / success
1   Uncontrollable (analyze); no canonical form exists (canon)
2   Indeterminate (analyze)
64  unreadable or unparsable input, bad arguments
65  well-formed JSON describing an invalid system or matrix
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .canon import rcf
from .decide import (
    CONTROLLABLE,
    DEFAULT_DENSITY,
    DEFAULT_PRECISION_BITS,
    INDETERMINATE,
    decide_uec,
    ensemble_canonical_form,
    single_input_canonical,
)
from .errors import (
    EnsembleCtlError,
    NotControllableAtEta,
    ParseError,
    PointwiseUncontrollable,
    ShapeMismatch,
)
from .formats import (
    dumps,
    dumps_float17,
    format_float,
    load_system,
    matrix_to_json,
    parse_eta,
    parse_matrix,
    parse_target,
    read_json,
    real_to_json,
    report_to_json,
    sample_to_json,
)
from .linalg import Matrix
from .steer import SteeringProblem, discretize, sample_functions, synthesize

EXIT_OK = 0
EXIT_UNCONTROLLABLE = 1
EXIT_INDETERMINATE = 2
EXIT_PARSE = 64
EXIT_MALFORMED = 65
PRECISION_ENV = "ENSEMBLECTL_PRECISION"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as Indeterminate
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def default_precision() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return DEFAULT_PRECISION_BITS
    try:
        bits = int(raw)
    except ValueError:
        raise ParseError(f"{PRECISION_ENV} must be an integer, got {raw!r}")
    if bits < 1:
        raise ParseError(f"{PRECISION_ENV} must be positive")
    return bits


def _fmt_matrix(M) -> str:
    rows = M.to_strings()
    width = max(len(x) for r in rows for x in r)
    return "\n".join("  [" + "  ".join(x.rjust(width) for x in r) + "]" for r in rows)


def _eta_text(coords) -> str:
    parts = []
    for c in coords:
        j = real_to_json(c)
        parts.append(j if isinstance(j, str) else f"~{float(c):.6g}")
    return "(" + ", ".join(parts) + ")"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    sys_ = load_system(args.system)
    bits = args.precision if args.precision is not None else default_precision()
    report = decide_uec(sys_, density=args.grid, precision_bits=bits)
    config = {"grid": args.grid, "precision_bits": bits, "system": Path(args.system).name}
    doc = report_to_json(report, config)
    print(f"verdict: {report.verdict} ({report.scope})")
    print(f"tested points: {report.tested_points}")
    nc = report.necessary
    print(f"necessary checks: {'pass' if nc.passed else 'fail'} (m={nc.m}, max k={nc.max_k})")
    if report.witness is not None:
        w = report.witness
        print(f"witness eta: {_eta_text(w.point.coords)}  rank: {w.rank}  reason: {w.reason}")
        if w.exact:
            print(_fmt_matrix(Matrix(w.matrix)))
    if args.report:
        Path(args.report).write_text(dumps(doc), encoding="utf-8")
    if report.verdict == CONTROLLABLE:
        return EXIT_OK
    if report.verdict == INDETERMINATE:
        return EXIT_INDETERMINATE
    return EXIT_UNCONTROLLABLE


def cmd_rcf(args) -> int:
    A = parse_matrix(read_json(args.matrix))
    res = rcf(A)  # similarity is verified inside
    factors = [a.format("λ") for a in res.factors.factors]
    print("invariant factors: " + ", ".join(factors))
    print("C =")
    print(_fmt_matrix(res.C))
    print("P =")
    print(_fmt_matrix(res.P))
    doc = {
        "invariant_factors": [a.to_strings() for a in res.factors.factors],
        "invariant_factors_text": factors,
        "C": matrix_to_json(res.C),
        "P": matrix_to_json(res.P),
    }
    print(dumps(doc), end="")
    return EXIT_OK


def cmd_canon(args) -> int:
    sys_ = load_system(args.system)
    if args.eta is not None:
        eta = parse_eta(args.eta)
        try:
            s = ensemble_canonical_form(sys_, eta)
        except NotControllableAtEta as exc:
            print(f"no canonical form: {exc}", file=sys.stderr)
            return EXIT_UNCONTROLLABLE
        print(f"eta: {_eta_text(s.eta.coords)}  k = {s.k}  block sizes = {list(s.block_sizes)}")
        print("C =")
        print(_fmt_matrix(s.C))
        print("Bbar =")
        print(_fmt_matrix(s.Bbar))
        print(dumps(sample_to_json(s)), end="")
        return EXIT_OK
    try:
        sc = single_input_canonical(sys_)
    except PointwiseUncontrollable as exc:
        print(f"no canonical form: {exc}", file=sys.stderr)
        return EXIT_UNCONTROLLABLE
    var = sys_.parameter
    print(f"det P({var}) = {sc.det.format(var)}")
    print(f"C({var}) =")
    for row in sc.C:
        print("  [" + ", ".join(c.format(var) for c in row) + "]")
    print("bbar = [" + ", ".join(str(x) for x in sc.bbar) + "]")
    doc = {
        "C": [[{"num": c.num.to_strings(), "den": c.den.to_strings()} for c in row] for row in sc.C],
        "C_text": [[c.format(var) for c in row] for row in sc.C],
        "bbar": [real_to_json(x) for x in sc.bbar],
        "det_P": sc.det.to_strings(),
        "P": [[{"coeffs": p.to_strings()} for p in row] for row in sc.P.tolist()],
    }
    print(dumps(doc), end="")
    return EXIT_OK


def cmd_steer(args) -> int:
    sys_ = load_system(args.system)
    xF_p, x0_p = parse_target(read_json(args.target), sys_.n)
    if len(xF_p) != sys_.n or len(x0_p) != sys_.n:
        raise ShapeMismatch(f"target needs {sys_.n} components")
    de = discretize(sys_, args.samples)
    xF = sample_functions(xF_p, de)
    x0 = sample_functions(x0_p, de)
    res = synthesize(SteeringProblem(xF=xF, x0=x0, T=args.time, steps=args.steps), de)
    prefix = args.out
    dt = args.time / args.steps
    with open(f"{prefix}_controls.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "t"] + [f"u{j + 1}" for j in range(sys_.m)])
        for k, row in enumerate(res.controls):
            w.writerow([k, format_float(k * dt)] + [format_float(u) for u in row])
    with open(f"{prefix}_residuals.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["beta", "residual"])
        for b, r in zip(de.samples, res.residual_per_sample):
            w.writerow([format_float(b), format_float(r)])
    summary = {
        "residual_sup": res.residual_sup,
        "reachability_rank": res.reachability_rank,
        "cutoff": res.cutoff,
        "singular_values": [float(s) for s in res.singular_values],
        "samples": args.samples,
        "steps": args.steps,
        "time": float(args.time),
        "tool_version": __version__,
    }
    Path(f"{prefix}_summary.json").write_text(dumps_float17(summary) + "\n", encoding="utf-8")
    print(f"residual_sup: {format_float(res.residual_sup)}")
    print(f"reachability rank: {res.reachability_rank} (cutoff {format_float(res.cutoff)})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ensemblectl", description="Ensemble controllability of linear parameterized systems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="decide uniform ensemble controllability")
    a.add_argument("system")
    a.add_argument("--grid", type=_positive_int, default=DEFAULT_DENSITY, help="grid points per axis")
    a.add_argument("--precision", type=_positive_int, default=None, help="maximum refinement bits")
    a.add_argument("--report", default=None, help="write the JSON report here")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("rcf", help="rational canonical form of a constant matrix")
    r.add_argument("matrix")
    r.set_defaults(func=cmd_rcf)

    c = sub.add_parser("canon", help="ensemble or single-input canonical form")
    c.add_argument("system")
    c.add_argument("--eta", default=None, help='comma separated rationals, e.g. "1,3"')
    c.set_defaults(func=cmd_canon)

    s = sub.add_parser("steer", help="synthesize piecewise-constant steering controls")
    s.add_argument("system")
    s.add_argument("--target", required=True)
    s.add_argument("--samples", type=_positive_int, default=9)
    s.add_argument("--steps", type=_positive_int, default=32)
    s.add_argument("--time", type=float, default=1.0)
    s.add_argument("--out", default="steer")
    s.set_defaults(func=cmd_steer)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (EnsembleCtlError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
