"""Command-line interface: compute, scan, roots, fit, validate.

All user-facing intensities are entered and reported as sqrt(lam), the
axis on which roots are near-equidistant; --lambda is accepted as a
convenience alias.  Output is JSON (compute, roots, fit) or CSV (scan) on
stdout, locale-independent and deterministic.

Exit codes: 0 success, 1 validation/computation failure, 2 scattering
length at a pole, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass

from mpmath import mp, mpf

from .connection import AtPoleError, scattering_length
from .mpkernel import make_context
from .oracle import PoleSignalError, oracle_scattering_length
from .roots import ScanRangeError, zeros_poles_table, fit_quasilinear
from .series import PotentialSpec
from .validation import AcceptanceSuite

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_POLE = 2
EXIT_USAGE = 64

POLE_TOKEN = "pole"
POLE_ATAN = 1.5707963  # printed verbatim, signed by the approached branch


class UsageError(Exception):
    """Invalid flag combination or argument value."""


@dataclass(frozen=True)
class ScanRow:
    """One scan grid point; a_over_r0 is None on pole-marked rows."""

    sqrt_lambda: float
    a_over_r0: float | None
    atan_a: float
    is_pole: bool


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def scan_rows(s: int, sqrt_lambda_min: float, sqrt_lambda_max: float,
              steps: int, digits: int = 10) -> list[ScanRow]:
    """Scattering length on a uniform sqrt(lam) grid with pole marking.

    Rows adjacent to a pole (detected by a sign change of W[w_2, w_reg]
    between grid neighbours, or by an exact at-pole hit) are marked: the
    grid point closest to the interpolated crossing carries the pole.
    """
    if not 0 < sqrt_lambda_min < sqrt_lambda_max:
        raise UsageError("need 0 < sqrt-lambda-min < sqrt-lambda-max")
    if steps < 1:
        raise UsageError("steps must be >= 1")
    ctx = make_context(digits)
    lo = mpf(repr(float(sqrt_lambda_min)))
    hi = mpf(repr(float(sqrt_lambda_max)))
    n = steps

    values: list[mpf | None] = []
    w2vals: list[mpf | None] = []
    xs: list[mpf] = []
    with mp.workdps(ctx.working_digits + 10):
        for i in range(n + 1):
            x = lo + (hi - lo) * i / n
            xs.append(x)
            spec = PotentialSpec(s, x * x)
            try:
                result = scattering_length(spec, ctx)
                values.append(result.a_over_r0)
                w2vals.append(result.w2.value)
            except AtPoleError:
                values.append(None)
                w2vals.append(None)

        pole_idx = {i for i, v in enumerate(values) if v is None}
        for i in range(n):
            f0, f1 = w2vals[i], w2vals[i + 1]
            if f0 is None or f1 is None or (f0 > 0) == (f1 > 0):
                continue
            # Crossing of W2: mark the grid point nearer the interpolated root.
            frac = abs(f0) / (abs(f0) + abs(f1))
            pole_idx.add(i if frac < 0.5 else i + 1)

        rows: list[ScanRow] = []
        prev_finite: mpf | None = None
        for i, x in enumerate(xs):
            if i in pole_idx:
                branch = values[i] if values[i] is not None else prev_finite
                sign = 1.0 if branch is None or branch >= 0 else -1.0
                rows.append(ScanRow(sqrt_lambda=float(x), a_over_r0=None,
                                    atan_a=sign * POLE_ATAN, is_pole=True))
            else:
                a = values[i]
                rows.append(ScanRow(sqrt_lambda=float(x), a_over_r0=float(a),
                                    atan_a=float(mp.atan(a)), is_pole=False))
            if values[i] is not None:
                prev_finite = values[i]
    return rows


def _parse_sqrt_lambda(args, dps: int) -> mpf:
    if (args.sqrt_lambda is None) == (args.lam is None):
        raise UsageError("exactly one of --sqrt-lambda / --lambda is required")
    with mp.workdps(dps):
        if args.sqrt_lambda is not None:
            sq = mpf(args.sqrt_lambda)
        else:
            lam = mpf(args.lam)
            if lam <= 0:
                raise UsageError("--lambda must be positive")
            sq = mp.sqrt(lam)
        if sq <= 0:
            raise UsageError("--sqrt-lambda must be positive")
        return sq


def _emit_json(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_compute(args) -> int:
    t0 = time.perf_counter()
    ctx = make_context(args.digits)
    dps = ctx.working_digits + 20
    sq = _parse_sqrt_lambda(args, dps)
    with mp.workdps(dps):
        spec = PotentialSpec(args.s, sq * sq, r0=mpf(args.r0))
    doc = {"s": args.s, "sqrt_lambda": float(sq), "method": args.method,
           "digits": args.digits}

    def finish(code: int) -> int:
        doc["elapsed_ms"] = 1000.0 * (time.perf_counter() - t0)
        _emit_json(doc)
        return code

    try:
        if args.method in ("connection", "both"):
            conn = scattering_length(spec, ctx)
            doc.update(a_over_r0=float(conn.a_over_r0), a=float(conn.a),
                       err_est=float(conn.err_est), n_used=conn.w1.n_used)
        if args.method in ("oracle", "both"):
            a_orac = oracle_scattering_length(spec, ctx)
            if args.method == "oracle":
                doc.update(a_over_r0=float(a_orac),
                           a=float(a_orac * spec.r0), n_used=None)
            else:
                with mp.workdps(ctx.working_digits):
                    c = mpf(doc["a_over_r0"])
                    scale = max(abs(c), abs(a_orac))
                    rel = float(abs(c - a_orac) / scale) if scale > 0 else 0.0
                doc.update(oracle_a_over_r0=float(a_orac),
                           relative_difference=rel)
    except (AtPoleError, PoleSignalError):
        doc["pole"] = True
        return finish(EXIT_POLE)
    return finish(EXIT_OK)


def cmd_scan(args) -> int:
    rows = scan_rows(args.s, args.sqrt_lambda_min, args.sqrt_lambda_max,
                     args.steps, digits=args.digits)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["sqrt_lambda", "a_over_r0", "atan_a"])
    for row in rows:
        if row.is_pole:
            writer.writerow([f"{row.sqrt_lambda:.12g}", POLE_TOKEN,
                             f"{row.atan_a:.8g}"])
        else:
            writer.writerow([f"{row.sqrt_lambda:.12g}", f"{row.a_over_r0:.12g}",
                             f"{row.atan_a:.10g}"])
    return EXIT_OK


def _kinds(arg: str) -> list[str]:
    return {"zeros": ["zero"], "poles": ["pole"],
            "both": ["zero", "pole"]}[arg]


def cmd_roots(args) -> int:
    ctx = make_context(8)
    records = []
    partial = False
    for kind in _kinds(args.kind):
        try:
            records.extend(zeros_poles_table(args.s, kind, args.count,
                                             args.digits, ctx))
        except ScanRangeError as exc:
            records.extend(exc.partial)
            partial = True
    if args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["kind", "index", "sqrt_lambda", "certified_err"])
        for rec in records:
            writer.writerow([rec.kind, rec.index,
                             f"{float(rec.sqrt_lambda):.15g}",
                             f"{float(rec.certified_err):.3g}"])
    else:
        doc = {"s": args.s, "count": args.count, "digits": args.digits,
               "records": [
                   {"kind": rec.kind, "index": rec.index,
                    "sqrt_lambda": float(rec.sqrt_lambda),
                    "certified_err": float(rec.certified_err)}
                   for rec in records]}
        if partial:
            doc["partial"] = True
        _emit_json(doc)
    return EXIT_FAILURE if partial else EXIT_OK


def cmd_fit(args) -> int:
    ctx = make_context(8)
    doc = {"s": args.s, "count": args.count, "digits": args.digits}
    residuals = []
    for kind, block in (("zero", "zeros"), ("pole", "poles")):
        records = zeros_poles_table(args.s, kind, args.count, args.digits, ctx)
        fit = fit_quasilinear(records)
        residuals.append(float(fit.residual))
        doc[block] = {
            "slope": float(fit.slope_A),
            "intercepts": [float(b) for b in fit.intercepts_B],
            "residual": float(fit.residual),
            "sqrt_lambdas": [float(r.sqrt_lambda) for r in records],
        }
    doc["max_residual"] = max(residuals)
    _emit_json(doc)
    return EXIT_OK


def cmd_validate(args) -> int:
    suite = AcceptanceSuite(args.level)
    results = suite.run_all(report=print)
    failures = [r for r in results if not r.passed]
    if failures:
        print(f"FAILED: {failures[0].name}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ljscatt",
                     description="Scattering lengths for (12, s) Lennard-Jones "
                                 "potentials: point values, scans, zero/pole "
                                 "tables, quasi-linear fits, self-validation.")
    sub = parser.add_subparsers(dest="command")

    def add_s(p):
        p.add_argument("--s", type=int, required=True, choices=(4, 5, 6, 7),
                       help="attractive exponent of the potential tail")

    p = sub.add_parser("compute", help="scattering length at one intensity")
    add_s(p)
    p.add_argument("--sqrt-lambda", help="square root of the intensity")
    p.add_argument("--lambda", dest="lam", help="intensity (alias for the square)")
    p.add_argument("--digits", type=int, default=15, help="target digits")
    p.add_argument("--method", choices=("connection", "oracle", "both"),
                   default="connection")
    p.add_argument("--r0", default="1", help="physical length scale")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("scan", help="CSV scan over a sqrt-lambda grid")
    add_s(p)
    p.add_argument("--sqrt-lambda-min", type=float, required=True)
    p.add_argument("--sqrt-lambda-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True,
                   help="number of grid intervals (rows = steps + 1)")
    p.add_argument("--digits", type=int, default=10)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("roots", help="table of zeros/poles of the scattering length")
    add_s(p)
    p.add_argument("--kind", choices=("zeros", "poles", "both"), default="both")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--digits", type=int, default=6,
                   help="certified digits of each root")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("fit", help="quasi-linear fit of root positions vs index")
    add_s(p)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--digits", type=int, default=8)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("validate", help="run the built-in acceptance checks")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ljscatt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScanRangeError, ArithmeticError) as exc:
        print(f"ljscatt: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
