"""Arbitrary-precision arithmetic kernel.

Every numerical operation in this package runs under an explicit
:class:`PrecisionContext` that separates the accuracy the caller wants
(``target_digits``) from the accuracy the intermediate arithmetic carries
(``working_digits``).  The gap between the two absorbs the massive
cancellation that occurs when the factorially-weighted Wronskian sums are
assembled; see :mod:`ljscatt.connection`.

Backed by mpmath (with the gmpy backend when available).  All operations
are pure functions of their inputs and context: identical inputs give
bit-identical outputs, and contexts are immutable values.  mpmath's
precision state is process-global, so the public operations of this
package serialize on one re-entrant lock (:func:`serialized`); under the
interpreter lock this costs nothing and makes concurrent callers with
different contexts safe.
"""

from __future__ import annotations

import functools
import os
import threading
from dataclasses import dataclass, replace

from mpmath import mp, mpf

_GLOBAL_LOCK = threading.RLock()


def serialized(fn):
    """Run a public operation under the package-wide precision lock."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with _GLOBAL_LOCK:
            return fn(*args, **kwargs)

    return wrapper

DEFAULT_GUARD_DIGITS = 30
PRECISION_GUARD_ENV = "SCATT_PRECISION_GUARD"


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PrecisionExhaustedError(ArithmeticError):
    """Escalation budget spent without reaching the requested accuracy.

    Carries whatever diagnostic data the failing computation had, so the
    caller can report the mismatch instead of a bare failure.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


def guard_digits() -> int:
    """Guard digits added on top of 2x target when building default contexts.

    ``SCATT_PRECISION_GUARD`` overrides the default of 30.  Values below 30
    are clamped up: 2*target + 30 is the floor every context must satisfy.
    """
    raw = os.environ.get(PRECISION_GUARD_ENV)
    if raw is None:
        return DEFAULT_GUARD_DIGITS
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(
            f"{PRECISION_GUARD_ENV} must be an integer, got {raw!r}") from exc
    return max(value, DEFAULT_GUARD_DIGITS)


@dataclass(frozen=True)
class PrecisionContext:
    """Immutable precision policy: target accuracy, working accuracy, escalation budget.

    ``working_digits >= 2*target_digits + 30`` is enforced at creation; the
    surplus guards against cancellation.  :func:`escalate` doubles the
    working digits, at most ``max_escalations`` times.
    """

    target_digits: int
    working_digits: int
    max_escalations: int = 4
    escalations_used: int = 0

    def __post_init__(self):
        if self.target_digits < 1:
            raise ValueError("target_digits must be a positive integer")
        if self.working_digits < 2 * self.target_digits + 30:
            raise ValueError(
                "working_digits must be at least 2*target_digits + 30 "
                f"(got {self.working_digits} for target {self.target_digits})")
        if self.max_escalations < 0:
            raise ValueError("max_escalations must be >= 0")
        if not 0 <= self.escalations_used <= self.max_escalations:
            raise ValueError("escalations_used out of range")

    @property
    def tolerance(self) -> mpf:
        """10**(-target_digits), the accuracy the caller asked for."""
        return mpf(10) ** (-self.target_digits)


def make_context(target_digits: int = 15, *, guard: int | None = None,
                 extra_digits: int = 0, max_escalations: int = 4) -> PrecisionContext:
    """Build a context with the default working-digit policy.

    working = 2*target + guard + extra, where ``guard`` defaults to
    :func:`guard_digits` (environment-overridable) and ``extra_digits``
    lets callers add problem-size-dependent headroom.
    """
    g = max(guard if guard is not None else guard_digits(), DEFAULT_GUARD_DIGITS)
    return PrecisionContext(
        target_digits=target_digits,
        working_digits=2 * target_digits + g + max(extra_digits, 0),
        max_escalations=max_escalations,
    )


def escalate(ctx: PrecisionContext) -> PrecisionContext:
    """Return a context with doubled working digits; the original is unchanged."""
    if ctx.escalations_used >= ctx.max_escalations:
        raise PrecisionExhaustedError(
            f"escalation budget exhausted after {ctx.escalations_used} doublings "
            f"(working_digits={ctx.working_digits})",
            context=ctx)
    return replace(ctx, working_digits=2 * ctx.working_digits,
                   escalations_used=ctx.escalations_used + 1)


def working_precision(ctx: PrecisionContext, extra: int = 0):
    """Context manager running mpmath at ctx.working_digits (+extra) decimal digits."""
    return mp.workdps(ctx.working_digits + extra)


@serialized
def gamma(x, ctx: PrecisionContext) -> mpf:
    """Gamma function on positive real arguments.

    Relative error below 10**-(working_digits - 5).  Negative or zero
    arguments signal an upstream indexing bug and raise DomainError.
    """
    with working_precision(ctx, extra=5):
        xv = mpf(x)
        if xv <= 0:
            raise DomainError(f"gamma requires x > 0, got {xv}")
        result = mp.gamma(xv)
    with working_precision(ctx):
        return +result


@serialized
def pow_real(x, y, ctx: PrecisionContext) -> mpf:
    """x**y for positive real x.

    Relative error below 10**-(working_digits - 5); DomainError for x <= 0.
    """
    with working_precision(ctx, extra=5):
        xv = mpf(x)
        yv = mpf(y)
        if xv <= 0:
            raise DomainError(f"pow_real requires x > 0, got {xv}")
        result = mp.power(xv, yv)
    with working_precision(ctx):
        return +result
