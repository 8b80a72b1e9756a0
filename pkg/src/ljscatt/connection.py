"""Wronskians with the regular origin solution, and the scattering length.

The s-wave scattering length (in units of r0) is the quotient

    a/r0 = W[w_1, w_reg] / W[w_2, w_reg]

of the Wronskians of the two basic solutions with the solution that is
regular at the origin.  Direct differentiation is unusable because the
origin expansion is asymptotic; instead each Wronskian is assembled from
the convergent double-series contraction

    g(p, j) = sum_m b_m * ( sqrt(lam) * a_{-p+m-6, j}
                            + (-p + 2m - 1 + mu - nu_j) * a_{-p+m-1, j} )

(the coefficient combination produced by multiplying the basic series
against the origin series after stripping the exponential factor), and the
factorially weighted five-fold resummation

    W[w_j, w_reg] = sum_{k=0}^{4}  Gamma(n+1+d_kj) / (sqrt(lam)/5)^(n+d_kj)
                                   * g(-5n-k, j),
    d_kj = (-nu_j - mu + k) / 5,

valid for any integer n > sqrt(lam).  Recomputing with n+1 and comparing
is the built-in consistency test; on failure the working precision is
doubled and the computation retried.

Cancellation: the five weighted terms exceed the final Wronskian by a
factor that grows like 10**(0.65*sqrt(lam)); initial working precision is
therefore raised by ~0.7*sqrt(lam) digits on top of the context's working
digits, with escalation as the backstop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from mpmath import mp, mpf

from . import mpkernel
from .mpkernel import PrecisionContext, PrecisionExhaustedError, serialized
from .series import (
    CONSECUTIVE_SMALL_TERMS,
    PotentialSpec,
    nu_of,
    series_buffer,
    thome_buffer,
    thome_parameters,
    _GROW_CHUNK,
)


class BudgetError(ArithmeticError):
    """A Wronskian contraction exceeded its term budget."""


class AtPoleError(ArithmeticError):
    """The scattering length is indistinguishable from a pole at this precision.

    Carries the two Wronskian results so the caller sees the certified
    pole neighbourhood.
    """

    def __init__(self, spec: PotentialSpec, w1: "WronskianResult",
                 w2: "WronskianResult"):
        super().__init__(
            f"scattering length at a pole: |W2|={mp.nstr(abs(w2.value), 5)} "
            f"is not resolvable against |W1|={mp.nstr(abs(w1.value), 5)}")
        self.spec = spec
        self.w1 = w1
        self.w2 = w2


@dataclass(frozen=True)
class GammaCoefficient:
    """One contraction coefficient g(p, j) with its truncation bookkeeping."""

    p: int
    j: int
    value: mpf
    terms_used: int
    est_err: mpf


@dataclass(frozen=True)
class WronskianResult:
    """W[w_j, w_reg] with the n-consistency error estimate.

    ``noise_floor`` is the absolute resolution of ``value``: the magnitude
    of the largest intermediate contribution times the working round-off.
    Sign decisions (root bracketing) are only trusted when |value| clears it.
    """

    j: int
    value: mpf
    n_used: int
    consistency_err: mpf
    noise_floor: mpf


@dataclass(frozen=True)
class ScatteringResult:
    """Scattering length as the quotient of the two Wronskians."""

    spec: PotentialSpec
    a_over_r0: mpf
    err_est: mpf
    w1: WronskianResult
    w2: WronskianResult

    @property
    def a(self) -> mpf:
        """Dimensional scattering length, a_over_r0 * r0."""
        return self.a_over_r0 * self.spec.r0


def cancellation_guard(sqrt_lam) -> int:
    """Extra working digits needed against the Wronskian assembly cancellation."""
    return int(math.ceil(0.7 * float(sqrt_lam))) + 5


def default_n(sqrt_lam) -> int:
    """Resummation order: smallest comfortable integer above sqrt(lam).

    The +2 margin keeps all Gamma arguments comfortably positive and makes
    both consistency evaluations (n and n+1) valid.
    """
    return int(mp.ceil(sqrt_lam)) + 2


def _gamma_sum(spec: PotentialSpec, j: int, p: int, dps: int,
               a_buf, b_buf, term_budget: int) -> tuple[mpf, int, mpf, mpf]:
    """Contract the coefficient tables into g(p, j) at dps digits.

    Returns (value, terms_used, last_term_mag, part_scale).  part_scale is
    the largest pre-cancellation term magnitude, the scale against which
    round-off must be measured (the two coefficient parts of a term can
    cancel each other exactly).  Terminates after 25 consecutive terms
    below 10**-dps of that scale; expected decay is geometric with ratio
    2**(-1/5).
    """
    nu = nu_of(j)
    with mp.workdps(dps):
        beta, mu = thome_parameters(spec, "reg")
        tol = mpf(10) ** (-dps)
        a = a_buf.ensure(max(-p + 32, 32))
        b = b_buf.ensure(32)
        total = mpf(0)
        part_scale = mpf(0)
        small = 0
        m = 0
        while m <= term_budget:
            if m >= len(b):
                b = b_buf.ensure(m + _GROW_CHUNK)
            i2 = -p + m - 1
            if i2 >= len(a):
                a = a_buf.ensure(i2 + _GROW_CHUNK)
            a1 = a[i2 - 5] if i2 >= 5 else mpf(0)           # index -p+m-6
            a2 = a[i2] if i2 >= 0 else mpf(0)               # index -p+m-1
            u = -beta * a1
            v = (-p + 2 * m - 1 + mu - nu) * a2
            term = b[m] * (u + v)
            total += term
            parts = abs(b[m]) * (abs(u) + abs(v))
            if parts > part_scale:
                part_scale = parts
            if abs(term) <= tol * max(abs(total), part_scale):
                small += 1
                if small >= CONSECUTIVE_SMALL_TERMS:
                    return total, m + 1, abs(term), part_scale
            else:
                small = 0
            m += 1
    raise BudgetError(
        f"contraction g(p={p}, j={j}) did not settle within {term_budget} terms")


def _term_budget(dps: int) -> int:
    # Geometric decay 2**(-m/5) needs ~16.6 terms per digit.
    return 17 * dps + 600


@serialized
def gamma_p(spec: PotentialSpec, j: int, p: int, ctx: PrecisionContext) -> GammaCoefficient:
    """One contraction coefficient g(p, j) at the context's working precision."""
    dps = ctx.working_digits
    a_buf = series_buffer(spec, j, dps)
    b_buf = thome_buffer(spec, "reg", dps)
    value, used, last_mag, _ = _gamma_sum(spec, j, p, dps, a_buf, b_buf,
                                          _term_budget(dps))
    with mp.workdps(dps):
        r = mpf(2) ** (mpf(-1) / 5)
        est_err = last_mag * r / (1 - r)
    return GammaCoefficient(p=p, j=j, value=value, terms_used=used, est_err=est_err)


def _wronskian_once(spec: PotentialSpec, j: int, n: int,
                    eff: PrecisionContext) -> tuple[mpf, mpf]:
    """Evaluate the five-fold resummation at order n.

    Returns (value, amp) where amp is the largest intermediate magnitude,
    i.e. the scale against which round-off noise must be measured.
    """
    dps = eff.working_digits
    nu = nu_of(j)
    a_buf = series_buffer(spec, j, dps)
    b_buf = thome_buffer(spec, "reg", dps)
    budget = _term_budget(dps)
    with mp.workdps(dps):
        sq = spec.sqrt_lam()
        _, mu = thome_parameters(spec, "reg")
        total = mpf(0)
        amp = mpf(0)
        for k in range(5):
            delta = (-nu - mu + k) / mpf(5)
            g, _, _, part_scale = _gamma_sum(spec, j, -5 * n - k, dps,
                                             a_buf, b_buf, budget)
            factor = (mpkernel.gamma(n + 1 + delta, eff)
                      / mpkernel.pow_real(sq / 5, n + delta, eff))
            contrib = factor * g
            total += contrib
            amp = max(amp, abs(contrib), abs(factor) * part_scale)
        return total, amp


@serialized
def wronskian(spec: PotentialSpec, j: int, ctx: PrecisionContext,
              n: int | None = None) -> WronskianResult:
    """W[w_j, w_reg], consistency-checked between resummation orders n and n+1.

    The value is accepted once |value(n) - value(n+1)| is below
    10**-target of max(|value|, amp * 10**-target), where amp is the
    cancellation scale; otherwise the working precision is doubled and the
    computation retried, up to the context's escalation budget.
    """
    nu_of(j)  # validate j
    current = ctx
    diagnostics = []
    while True:
        with mp.workdps(current.working_digits):
            sq = spec.sqrt_lam()
            n_val = default_n(sq) if n is None else int(n)
            if not n_val > sq:
                raise ValueError(f"resummation order n={n_val} must exceed "
                                 f"sqrt(lam)={mp.nstr(sq, 10)}")
        eff = replace(current,
                      working_digits=current.working_digits + cancellation_guard(sq))
        try:
            v_n, amp_n = _wronskian_once(spec, j, n_val, eff)
            v_n1, amp_n1 = _wronskian_once(spec, j, n_val + 1, eff)
        except BudgetError:
            current = mpkernel.escalate(current)
            continue
        with mp.workdps(eff.working_digits):
            consistency_err = abs(v_n - v_n1)
            amp = max(amp_n, amp_n1)
            tol = ctx.tolerance
            # Noise-aware resolution test, intersected with the plain
            # absolute-floor contract so both hold on success.
            ok = (consistency_err <= tol * max(abs(v_n), amp * tol)
                  and consistency_err <= tol * max(mpf(1), abs(v_n)))
            noise_floor = amp * mpf(10) ** (-(eff.working_digits - 5))
        if ok:
            return WronskianResult(j=j, value=v_n, n_used=n_val,
                                   consistency_err=consistency_err,
                                   noise_floor=noise_floor)
        diagnostics.append((current.working_digits, v_n, v_n1))
        try:
            current = mpkernel.escalate(current)
        except PrecisionExhaustedError:
            raise PrecisionExhaustedError(
                f"Wronskian consistency not reached for j={j}: "
                f"value(n={n_val})={mp.nstr(v_n, 10)}, "
                f"value(n+1)={mp.nstr(v_n1, 10)}, "
                f"mismatch={mp.nstr(consistency_err, 5)}",
                value_n=v_n, value_n1=v_n1, mismatch=consistency_err,
                history=diagnostics) from None


@serialized
def scattering_length(spec: PotentialSpec, ctx: PrecisionContext) -> ScatteringResult:
    """Scattering length in units of r0; raises AtPoleError near poles.

    A pole is declared when |W2| cannot be resolved at target precision
    against |W1| (i.e. |a/r0| would exceed 10**target_digits) or when W2
    is below its own noise floor.
    """
    w1 = wronskian(spec, 1, ctx)
    w2 = wronskian(spec, 2, ctx)
    with mp.workdps(ctx.working_digits):
        if (abs(w2.value) <= ctx.tolerance * abs(w1.value)
                or abs(w2.value) <= 10 * w2.noise_floor):
            raise AtPoleError(spec, w1, w2)
        a = w1.value / w2.value
        err_est = (w1.consistency_err + abs(a) * w2.consistency_err) / abs(w2.value)
    return ScatteringResult(spec=spec, a_over_r0=a, err_est=err_est, w1=w1, w2=w2)
