"""Power-series and exponential-series solutions of the zero-energy radial equation.

In the dimensionless variable z = r/r0 the zero-energy radial equation for
the (12, s) potential of intensity lam reads

    -z^2 w''(z) + lam (z^-10 - z^(-s+2)) w(z) = 0.

Two kinds of expansions are generated here:

* the two convergent "basic" solutions about the regular point at infinity,

      w_j(z) = z^nu_j * sum_n a_{n,j} z^-n,   nu_1 = 1, nu_2 = 0,

  with a_{0,j} = 1, a_{1,1} = 0 and

      a_{n,j} = lam (a_{n-10,j} - a_{n-s+2,j}) / ((n - nu_j)(n + 1 - nu_j)),

  coefficients with negative index being zero;

* the two formal exponential-times-power solutions about the irregular
  singular point at the origin,

      w ~ exp(beta z^-5 / 5) z^mu * sum_n b_n z^n,   beta^2 = lam,

  where beta = -sqrt(lam) selects the branch that vanishes at the origin
  ("reg") and beta = +sqrt(lam) the one that blows up ("irr"); mu = 3 for
  s in {4, 5, 6} and mu = 3 + beta/2 for s = 7.  The b-series is asymptotic
  (generally divergent) and is only ever summed to its smallest term.

Coefficient tables are cached keyed by (s, lam, index-or-branch,
working digits) and extended lazily, since the Wronskian assembly in
:mod:`ljscatt.connection` consumes them at many shifted indices.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Literal

from mpmath import mp, mpf

from .mpkernel import PrecisionContext, serialized

Branch = Literal["reg", "irr"]

SUPPORTED_S = (4, 5, 6, 7)

# Hard caps; the termination rules below stop far earlier in practice.
DEFAULT_TERM_BUDGET = 60_000
_GROW_CHUNK = 256
_CACHE_MAX_ENTRIES = 48

# Consecutive negligible terms required before a convergent sum is accepted.
# Guards against the periodic zero patterns of the recurrences (index
# couplings of 10, s-2 and 5).
CONSECUTIVE_SMALL_TERMS = 25


class TermBudgetError(ArithmeticError):
    """A series did not meet its termination rule within the term budget."""


class ZTooLargeError(ArithmeticError):
    """The asymptotic series cannot reach the requested tolerance at this z."""


def _to_mpf(value) -> mpf:
    """Convert to mpf; decimal strings are parsed at >= 80 digits."""
    if isinstance(value, str):
        with mp.workdps(max(mp.dps, 80)):
            return mpf(value)
    return mpf(value)


@dataclass(frozen=True)
class PotentialSpec:
    """One (12, s) potential: attractive exponent s, intensity lam, length scale r0.

    The overall energy prefactor of the potential is absorbed into the
    dimensionless intensity lam and carries no independent state.
    """

    s: int
    lam: mpf
    r0: mpf = mpf(1)

    def __post_init__(self):
        object.__setattr__(self, "lam", _to_mpf(self.lam))
        object.__setattr__(self, "r0", _to_mpf(self.r0))
        if self.s not in SUPPORTED_S:
            raise ValueError(
                f"s must be one of {SUPPORTED_S} (recurrences are valid for "
                f"integer 3 < s <= 7), got {self.s}")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.r0 > 0:
            raise ValueError(f"r0 must be positive, got {self.r0}")

    def sqrt_lam(self) -> mpf:
        """sqrt(lam) at the current mpmath precision."""
        return mp.sqrt(self.lam)


@dataclass(frozen=True)
class SeriesTabulation:
    """Coefficients a_{0..N,j} of one basic solution, frozen at working precision."""

    spec: PotentialSpec
    j: int
    nu: int
    coeffs: tuple


@dataclass(frozen=True)
class ThomeTabulation:
    """Coefficients b_{0..N} of one exponential-series solution at the origin."""

    spec: PotentialSpec
    branch: Branch
    beta: mpf
    mu: mpf
    coeffs: tuple


def nu_of(j: int) -> int:
    if j not in (1, 2):
        raise ValueError(f"solution index j must be 1 or 2, got {j}")
    return 1 if j == 1 else 0


def thome_parameters(spec: PotentialSpec, branch: Branch) -> tuple[mpf, mpf]:
    """(beta, mu) for the requested branch at the current precision."""
    if branch not in ("reg", "irr"):
        raise ValueError(f"branch must be 'reg' or 'irr', got {branch!r}")
    sq = spec.sqrt_lam()
    beta = -sq if branch == "reg" else sq
    mu = mpf(3) if spec.s != 7 else 3 + beta / 2
    return beta, mu


class _CoeffBuffer:
    """Growable coefficient table; extension is lock-guarded, reads are lock-free."""

    __slots__ = ("coeffs", "_lock", "_grow")

    def __init__(self, grow):
        self.coeffs: list = []
        self._lock = threading.Lock()
        self._grow = grow

    def ensure(self, n: int) -> list:
        if len(self.coeffs) <= n:
            with self._lock:
                while len(self.coeffs) <= n:
                    self._grow(self.coeffs, len(self.coeffs) + _GROW_CHUNK)
        return self.coeffs


_cache: dict = {}
_cache_lock = threading.Lock()


def _cache_get(key, factory) -> _CoeffBuffer:
    with _cache_lock:
        buf = _cache.get(key)
        if buf is None:
            buf = factory()
            if len(_cache) >= _CACHE_MAX_ENTRIES:
                _cache.pop(next(iter(_cache)))
            _cache[key] = buf
        return buf


def clear_cache():
    with _cache_lock:
        _cache.clear()


def _a_grow(spec: PotentialSpec, j: int, dps: int):
    nu = nu_of(j)
    s = spec.s

    def grow(coeffs: list, upto: int):
        with mp.workdps(dps):
            lam = +spec.lam
            if not coeffs:
                coeffs.append(mpf(1))
            n = len(coeffs)
            while n <= upto:
                if n == 1 and j == 1:
                    # (n - nu)(n + 1 - nu) vanishes here; the value is forced.
                    coeffs.append(mpf(0))
                else:
                    t1 = coeffs[n - 10] if n >= 10 else mpf(0)
                    t2 = coeffs[n - s + 2] if n >= s - 2 else mpf(0)
                    coeffs.append(lam * (t1 - t2) / ((n - nu) * (n + 1 - nu)))
                n += 1

    return grow


def _b_grow(spec: PotentialSpec, branch: Branch, dps: int):
    s = spec.s

    def grow(coeffs: list, upto: int):
        with mp.workdps(dps):
            lam = +spec.lam
            beta, mu = thome_parameters(spec, branch)
            if not coeffs:
                coeffs.append(mpf(1))
            n = len(coeffs)
            while n <= upto:
                prev5 = coeffs[n - 5] if n >= 5 else mpf(0)
                if s == 7:
                    coeffs.append(
                        (n - 2 + beta / 2) * (n - 3 + beta / 2) * prev5 / (2 * n * beta))
                else:
                    tlam = coeffs[n + s - 7] if n + s - 7 >= 0 else mpf(0)
                    coeffs.append(
                        (lam * tlam + (n - 2) * (n - 3) * prev5) / (2 * n * beta))
                n += 1

    return grow


def _lam_key(spec: PotentialSpec):
    return spec.lam._mpf_


def series_buffer(spec: PotentialSpec, j: int, dps: int) -> _CoeffBuffer:
    key = ("a", spec.s, _lam_key(spec), j, dps)
    return _cache_get(key, lambda: _CoeffBuffer(_a_grow(spec, j, dps)))


def thome_buffer(spec: PotentialSpec, branch: Branch, dps: int) -> _CoeffBuffer:
    key = ("b", spec.s, _lam_key(spec), branch, dps)
    return _cache_get(key, lambda: _CoeffBuffer(_b_grow(spec, branch, dps)))


@serialized
def a_coeffs(spec: PotentialSpec, j: int, N: int, ctx: PrecisionContext) -> SeriesTabulation:
    """Tabulate a_{0..N,j} at the context's working precision."""
    if N < 0:
        raise ValueError("N must be >= 0")
    buf = series_buffer(spec, j, ctx.working_digits)
    coeffs = buf.ensure(N)
    return SeriesTabulation(spec=spec, j=j, nu=nu_of(j), coeffs=tuple(coeffs[:N + 1]))


@serialized
def b_coeffs(spec: PotentialSpec, branch: Branch, N: int,
             ctx: PrecisionContext) -> ThomeTabulation:
    """Tabulate b_{0..N} for one branch at the context's working precision."""
    if N < 0:
        raise ValueError("N must be >= 0")
    buf = thome_buffer(spec, branch, ctx.working_digits)
    coeffs = buf.ensure(N)
    with mp.workdps(ctx.working_digits):
        beta, mu = thome_parameters(spec, branch)
    return ThomeTabulation(spec=spec, branch=branch, beta=beta, mu=mu,
                           coeffs=tuple(coeffs[:N + 1]))


def _eval_extra_digits(sq: mpf, z: mpf) -> int:
    # The partial sums of the basic series transiently exceed the final value
    # by roughly 10**(0.4*sqrt(lam)/z); carry that many extra digits.
    return int(math.ceil(0.5 * float(sq) / float(z))) + 5


@serialized
def eval_w(spec: PotentialSpec, j: int, z, ctx: PrecisionContext,
           term_budget: int = DEFAULT_TERM_BUDGET) -> tuple[mpf, mpf]:
    """Evaluate (w_j(z), w_j'(z)) by direct summation; valid for z >= 1.

    Terminates once 25 consecutive terms are below 10**-working_digits of
    the partial sum.  Relative error is below 10**-(working_digits - 10).
    """
    nu = nu_of(j)
    z = _to_mpf(z)
    if not z >= 1:
        raise ValueError(f"eval_w requires z >= 1, got {z}")
    with mp.workdps(ctx.working_digits):
        extra = _eval_extra_digits(spec.sqrt_lam(), z)
    dps = ctx.working_digits + extra
    buf = series_buffer(spec, j, dps)
    coeffs = buf.ensure(min(1024, term_budget))
    with mp.workdps(dps):
        tol = mpf(10) ** (-ctx.working_digits)
        zv = +z
        zinv = 1 / zv
        zpow = zv ** nu
        value = mpf(0)
        deriv = mpf(0)
        small = 0
        n = 0
        while n <= term_budget:
            if n >= len(coeffs):
                coeffs = buf.ensure(n + _GROW_CHUNK)
            term = coeffs[n] * zpow
            value += term
            deriv += term * (nu - n)
            if abs(term) <= tol * abs(value):
                small += 1
                if small >= CONSECUTIVE_SMALL_TERMS:
                    return value, deriv / zv
            else:
                small = 0
            zpow *= zinv
            n += 1
    raise TermBudgetError(
        f"basic series for j={j} at z={z} did not settle within {term_budget} terms")


@serialized
def thome_logderiv(spec: PotentialSpec, z, ctx: PrecisionContext,
                   tol=None, term_budget: int = DEFAULT_TERM_BUDGET) -> tuple[mpf, mpf]:
    """Logarithmic derivative of the regular origin solution at small z.

    Returns (logderiv, trunc_err) where

        logderiv = sqrt(lam) z^-6 + mu/z + (sum n b_n z^(n-1)) / (sum b_n z^n)

    and the asymptotic b-series is truncated at its smallest term (or as
    soon as terms fall below ``tol`` relative to the partial sum).
    trunc_err is the magnitude of the first omitted term relative to the sum.
    Raises ZTooLargeError when the smallest term cannot reach ``tol``;
    the caller must then decrease z.
    """
    z = _to_mpf(z)
    if not 0 < z < 1:
        raise ValueError(f"thome_logderiv requires 0 < z < 1, got {z}")
    dps = ctx.working_digits + 10
    buf = thome_buffer(spec, "reg", dps)
    coeffs = buf.ensure(512)
    with mp.workdps(dps):
        if tol is None:
            tol = ctx.tolerance
        else:
            tol = mpf(tol)
        beta, mu = thome_parameters(spec, "reg")
        zv = +z
        terms = []
        running = mpf(0)
        zpow = mpf(1)
        min_mag = None
        min_idx = 0
        prev_mag = None
        growth_run = 0
        zero_run = 0
        stop_idx = None       # first term index past which nothing is summed
        reached_tol = False
        n = 0
        while n <= term_budget:
            if n >= len(coeffs):
                coeffs = buf.ensure(n + _GROW_CHUNK)
            term = coeffs[n] * zpow
            terms.append(term)
            running += term
            if term == 0:
                # Exactly solvable intensities terminate the series outright.
                zero_run += 1
                if zero_run >= CONSECUTIVE_SMALL_TERMS and n >= 1:
                    reached_tol = True
                    stop_idx = n + 1
                    break
            else:
                zero_run = 0
                mag = abs(term)
                if min_mag is None or mag < min_mag:
                    min_mag = mag
                    min_idx = n
                if running != 0 and mag <= tol * abs(running):
                    reached_tol = True
                    stop_idx = n + 1
                    break
                # Magnitudes oscillate on the way down (the couplings are
                # sparse), so a single upward jump proves nothing; declare
                # the asymptotic turning point only on persistent growth or
                # an unambiguous blow-up past the running minimum.
                growth_run = growth_run + 1 if (prev_mag is not None
                                                and mag > prev_mag) else 0
                prev_mag = mag
                if growth_run >= 12 or mag >= mpf("1e12") * min_mag:
                    stop_idx = min_idx + 1
                    break
            zpow *= zv
            n += 1
        if stop_idx is None:
            raise TermBudgetError(
                f"origin series at z={z} did not settle within {term_budget} terms")
        S = mpf(0)
        Sp = mpf(0)
        for i in range(stop_idx):
            S += terms[i]
            Sp += i * terms[i]
        if reached_tol:
            omitted = abs(terms[stop_idx - 1])
        else:
            omitted = next((abs(t) for t in terms[stop_idx:] if t != 0),
                           min_mag if min_mag is not None else mpf(0))
        trunc_err = omitted / abs(S)
        if not reached_tol and trunc_err > tol:
            raise ZTooLargeError(
                f"smallest term of the origin series at z={z} is {mp.nstr(trunc_err, 5)} "
                f"of the sum, above the requested tolerance {mp.nstr(tol, 5)}")
        logderiv = -beta * zv ** (-6) + mu / zv + (Sp / zv) / S
        return logderiv, trunc_err
