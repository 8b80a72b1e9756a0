"""Zeros and poles of the scattering length as functions of sqrt(lam).

Zeros of a/r0 are roots of W[w_1, w_reg]; poles are roots of W[w_2, w_reg].
Root finding happens on the sqrt(lam) axis, where consecutive roots are
near-equidistant, with lam = sqrt(lam)^2 handed to the Wronskian.  The
certified backbone is bisection on sign changes (Wronskians are smooth but
no derivative is computed); secant steps accelerate only inside the
certified bracket.  A grid step of 1/4 cannot skip a sign change: the
smallest observed gap between neighbouring roots is about 1.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

from mpmath import mp, mpf

from .connection import wronskian
from .mpkernel import PrecisionContext, PrecisionExhaustedError, make_context, serialized
from .series import SUPPORTED_S, PotentialSpec, _to_mpf

RootKind = Literal["zero", "pole"]

GRID_STEP_MAX = mpf("0.25")
SCAN_CHUNK = 15
SQRT_LAMBDA_MAX = 100


class ScanRangeError(RuntimeError):
    """Scan heuristic exhausted before finding the requested roots."""

    def __init__(self, message: str, partial: list):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class RootRecord:
    """One zero or pole of the scattering length, certified by its bracket."""

    s: int
    kind: RootKind
    index: int
    sqrt_lambda: mpf
    certified_err: mpf


@dataclass(frozen=True)
class QuasiLinearFit:
    """Least-squares line through (n, sqrt(lam)_n) with per-n intercepts.

    intercepts_B[n] = sqrt_lambda[n] - slope_A * n exactly; their spread
    shows how nearly the intercept is independent of n.  residual is the
    largest deviation from the fitted line.
    """

    s: int
    kind: RootKind
    slope_A: mpf
    intercepts_B: tuple
    residual: mpf


def _kind_to_j(kind: RootKind) -> int:
    if kind == "zero":
        return 1
    if kind == "pole":
        return 2
    raise ValueError(f"kind must be 'zero' or 'pole', got {kind!r}")


def _sign_at(s: int, j: int, x: mpf, ctx: PrecisionContext) -> int:
    """Noise-aware sign of the relevant Wronskian at sqrt(lam) = x.

    0 means |value| is below the resolution floor: x is a root to within
    what this precision can certify.
    """
    spec = PotentialSpec(s, x * x)
    result = wronskian(spec, j, ctx)
    if abs(result.value) <= 10 * result.noise_floor:
        return 0
    return 1 if result.value > 0 else -1


def _value_at(s: int, j: int, x: mpf, ctx: PrecisionContext):
    spec = PotentialSpec(s, x * x)
    result = wronskian(spec, j, ctx)
    resolved = abs(result.value) > 10 * result.noise_floor
    return result.value, resolved


@serialized
def bracket_roots(s: int, kind: RootKind, sqrt_lambda_range, grid_step,
                  ctx: PrecisionContext) -> list[tuple[mpf, mpf]]:
    """All sign-change intervals of the relevant Wronskian on a uniform grid.

    The range must lie within [0, 100] (points at exactly 0 are skipped:
    the intensity must be positive) and the grid step must not exceed 1/4.
    Returns an empty list when there is no sign change.
    """
    if s not in SUPPORTED_S:
        raise ValueError(f"s must be one of {SUPPORTED_S}")
    j = _kind_to_j(kind)
    lo, hi = (_to_mpf(sqrt_lambda_range[0]), _to_mpf(sqrt_lambda_range[1]))
    step = _to_mpf(grid_step)
    if not (0 <= lo < hi <= SQRT_LAMBDA_MAX):
        raise ValueError(f"range must lie within (0, {SQRT_LAMBDA_MAX}], got ({lo}, {hi})")
    if not 0 < step <= GRID_STEP_MAX:
        raise ValueError(f"grid_step must be in (0, {GRID_STEP_MAX}], got {step}")

    with mp.workdps(max(ctx.working_digits, 30)):
        points = []
        k = 0
        x = lo
        while x < hi:
            if x > 0:
                points.append(x)
            k += 1
            x = lo + k * step
        points.append(hi)

        brackets = []
        prev_x = None
        prev_sign = None
        for x in points:
            sign = _sign_at(s, j, x, ctx)
            if sign == 0:
                # Grid point sits on a root: certify a half-step bracket.
                half = step / 2
                left, right = x - half, x + half
                sl = _sign_at(s, j, left, ctx)
                sr = _sign_at(s, j, right, ctx)
                if sl != 0 and sr != 0 and sl != sr:
                    brackets.append((left, right))
                    prev_x, prev_sign = right, sr
                    continue
                raise PrecisionExhaustedError(
                    f"could not certify a bracket around the on-grid root at "
                    f"sqrt(lam)={mp.nstr(x, 10)}", x=x)
            if prev_sign is not None and sign != prev_sign:
                brackets.append((prev_x, x))
            prev_x, prev_sign = x, sign
        return brackets


def _refine_ctx(digits: int, ctx: PrecisionContext) -> PrecisionContext:
    wanted = digits + 5
    if ctx.target_digits >= digits + 3:
        return ctx
    return make_context(wanted, max_escalations=ctx.max_escalations)


@serialized
def refine_root(s: int, kind: RootKind, bracket, digits: int,
                ctx: PrecisionContext) -> RootRecord:
    """Shrink a sign-change bracket to certified_err < 10**-digits.

    Bisection is the certified backbone; a secant candidate is used
    whenever it falls strictly inside the bracket (and a bisection step is
    forced every third iteration so the width provably shrinks).  The
    returned error equals the final bracket half-width.
    """
    j = _kind_to_j(kind)
    eval_ctx = _refine_ctx(digits, ctx)
    dps = max(eval_ctx.working_digits, digits + 30)
    with mp.workdps(dps):
        lo, hi = _to_mpf(bracket[0]), _to_mpf(bracket[1])
        if not lo < hi:
            raise ValueError(f"invalid bracket ({lo}, {hi})")
        target = mpf(10) ** (-digits)
        flo, lo_ok = _value_at(s, j, lo, eval_ctx)
        fhi, hi_ok = _value_at(s, j, hi, eval_ctx)
        if not (lo_ok and hi_ok) or (flo > 0) == (fhi > 0):
            raise ValueError(
                f"bracket endpoints do not give opposite Wronskian signs: "
                f"f({mp.nstr(lo, 10)})={mp.nstr(flo, 5)}, "
                f"f({mp.nstr(hi, 10)})={mp.nstr(fhi, 5)}")

        max_iter = 40 + 4 * int(math.log2(max(float((hi - lo) / target), 2.0)))
        iteration = 0
        while (hi - lo) / 2 >= target:
            if iteration > max_iter:
                raise PrecisionExhaustedError(
                    f"root refinement stalled in [{mp.nstr(lo, 12)}, {mp.nstr(hi, 12)}]",
                    lo=lo, hi=hi)
            width = hi - lo
            mid = None
            if iteration % 3 != 2 and fhi != flo:
                cand = hi - fhi * width / (fhi - flo)
                pad = width / 64
                if lo + pad < cand < hi - pad:
                    mid = cand
            if mid is None:
                mid = (lo + hi) / 2
            fm, ok = _value_at(s, j, mid, eval_ctx)
            if not ok:
                # mid lies on the root beyond this precision's resolution:
                # probe symmetrically to certify a tight bracket.
                eps = target * mpf("0.4")
                sl = _sign_at(s, j, mid - eps, eval_ctx)
                sr = _sign_at(s, j, mid + eps, eval_ctx)
                if sl != 0 and sr != 0 and sl != sr:
                    lo, hi = mid - eps, mid + eps
                    break
                raise PrecisionExhaustedError(
                    f"cannot resolve Wronskian sign at sqrt(lam)={mp.nstr(mid, 15)}",
                    x=mid)
            if (fm > 0) == (fhi > 0):
                hi, fhi = mid, fm
            else:
                lo, flo = mid, fm
            iteration += 1
        half = (hi - lo) / 2
        return RootRecord(s=s, kind=kind, index=0,
                          sqrt_lambda=lo + half, certified_err=half)


@serialized
def zeros_poles_table(s: int, kind: RootKind, count: int, digits: int,
                      ctx: PrecisionContext) -> list[RootRecord]:
    """The first `count` roots of one kind in increasing sqrt(lam).

    Scans in chunks of 15 along sqrt(lam) with grid step 1/4 until enough
    brackets are found (hard cap 10*count + 20, clipped to the supported
    range), then refines each bracket.  Raises ScanRangeError carrying the
    refined partial results when the cap is hit first.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    _kind_to_j(kind)
    scan_ctx = ctx if ctx.target_digits <= 10 else make_context(
        8, max_escalations=ctx.max_escalations)
    cap = min(10 * count + 20, SQRT_LAMBDA_MAX)
    step = GRID_STEP_MAX
    brackets: list[tuple[mpf, mpf]] = []
    with mp.workdps(max(ctx.working_digits, 30)):
        chunk_lo = mpf(0)
        while len(brackets) < count and chunk_lo < cap:
            chunk_hi = min(chunk_lo + SCAN_CHUNK, mpf(cap))
            found = bracket_roots(s, kind, (chunk_lo, chunk_hi), step, scan_ctx)
            for br in found:
                mid = (br[0] + br[1]) / 2
                if brackets and abs(mid - (brackets[-1][0] + brackets[-1][1]) / 2) < step / 2:
                    continue  # chunk-boundary duplicate
                brackets.append(br)
            chunk_lo = chunk_hi

    records = [
        replace(refine_root(s, kind, br, digits, ctx), index=i)
        for i, br in enumerate(brackets[:count])
    ]
    if len(records) < count:
        raise ScanRangeError(
            f"found only {len(records)} {kind}s for s={s} with sqrt(lam) <= {cap}",
            partial=records)
    return records


def fit_quasilinear(records: list[RootRecord]) -> QuasiLinearFit:
    """Least-squares slope of sqrt(lam)_n against n, with per-n intercepts."""
    if len(records) < 3:
        raise ValueError("need at least 3 records of one kind")
    kinds = {r.kind for r in records}
    if len(kinds) != 1:
        raise ValueError(f"records mix kinds {sorted(kinds)}")
    svals = {r.s for r in records}
    if len(svals) != 1:
        raise ValueError(f"records mix s values {sorted(svals)}")
    ordered = sorted(records, key=lambda r: r.index)
    with mp.workdps(50):
        xs = [mpf(r.index) for r in ordered]
        ys = [+r.sqrt_lambda for r in ordered]
        n = len(xs)
        xbar = sum(xs) / n
        ybar = sum(ys) / n
        sxx = sum((x - xbar) ** 2 for x in xs)
        sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
        slope = sxy / sxx
        b0 = ybar - slope * xbar
        intercepts = tuple(y - slope * x for x, y in zip(xs, ys))
        residual = max(abs(y - (slope * x + b0)) for x, y in zip(xs, ys))
    return QuasiLinearFit(s=ordered[0].s, kind=ordered[0].kind,
                          slope_A=slope, intercepts_B=intercepts,
                          residual=residual)
