"""Arbitrary-precision reals and their base-2 log-domain companions.

Every numeric quantity in this package is an ``mpmath.mpf``.  Public
functions take a ``bits`` argument (the mantissa width) and perform
their arithmetic inside ``mpmath.workprec(bits)`` with round-to-nearest,
ties-to-even; results are immutable snapshots that can be shared freely
across threads or precision contexts.  Exponents are plain Python
integers, so magnitudes far beyond ``2**(2**20)`` are representable --
only the mantissa is limited by ``bits``.

The ``Log2Real`` mirror stores a number as ``(sign, log2 |value|)`` so
that recurrences whose iterates have base-2 logarithms in the hundreds
of millions can be followed without ever leaving the log domain, and
cross-checked against the linear-domain computation where both exist.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import mpmath
from mpmath import mpf, workprec

from .errors import DomainError, PrecisionError

DEFAULT_BITS = 256
MIN_BITS = 64

#: extra mantissa bits used internally so that the final rounding step
#: dominates the error of intermediate operations
_GUARD = 16

RealLike = Union[mpf, int, float, str]


def require_bits(bits: int) -> int:
    if int(bits) < MIN_BITS:
        raise PrecisionError(
            f"mantissa width must be at least {MIN_BITS} bits, got {bits}"
        )
    return int(bits)


def to_real(value: RealLike, bits: int = DEFAULT_BITS) -> mpf:
    """Convert ``value`` to an mpf rounded to a ``bits``-wide mantissa."""
    require_bits(bits)
    with workprec(bits):
        return +mpf(value)


def with_precision(x: RealLike, bits: int) -> mpf:
    """Re-round ``x`` to ``bits`` mantissa bits (nearest, ties to even).

    Deterministic and idempotent: re-rounding a value already
    representable in ``bits`` bits returns it unchanged.
    """
    return to_real(x, bits)


def ln2(bits: int = DEFAULT_BITS) -> mpf:
    with workprec(require_bits(bits)):
        return +mpmath.ln(2)


def pow2(w: RealLike, bits: int = DEFAULT_BITS) -> mpf:
    """``2**w`` where the integer part of ``w`` may be astronomically large.

    The exponent is split into integer and fractional parts so only
    ``2**frac`` needs transcendental evaluation; the integer part becomes
    an exact ``ldexp`` shift.  Safe for ``|w|`` up to at least ``2**20``.
    """
    require_bits(bits)
    with workprec(bits + _GUARD):
        w = mpf(w)
        n = mpmath.floor(w)
        frac = w - n  # exact: the fractional bits of a p-bit mantissa
        value = mpmath.power(2, frac)
    with workprec(bits):
        return +mpmath.ldexp(value, int(n))


def log2(x: RealLike, bits: int = DEFAULT_BITS) -> mpf:
    """Base-2 logarithm of a positive real, exact-exponent aware."""
    require_bits(bits)
    with workprec(bits + _GUARD):
        x = mpf(x)
        if x <= 0:
            raise DomainError(f"log2 requires a positive argument, got {x}")
        value = mpmath.log(x, 2)
    return with_precision(value, bits)


@dataclass(frozen=True)
class Log2Real:
    """A real number stored as a sign and the log2 of its magnitude.

    ``sign`` is -1, 0 or +1; ``log2_magnitude`` is meaningless (and set
    to zero) when ``sign == 0``.  Instances are immutable.
    """

    sign: int
    log2_magnitude: mpf

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise DomainError(f"sign must be -1, 0 or +1, got {self.sign}")

    @classmethod
    def zero(cls) -> "Log2Real":
        return cls(0, mpf(0))

    @classmethod
    def from_log2(cls, log2_magnitude: RealLike, bits: int = DEFAULT_BITS) -> "Log2Real":
        return cls(1, to_real(log2_magnitude, bits))

    @classmethod
    def from_real(cls, x: RealLike, bits: int = DEFAULT_BITS) -> "Log2Real":
        require_bits(bits)
        with workprec(bits):
            x = mpf(x)
        if x == 0:
            return cls.zero()
        sign = 1 if x > 0 else -1
        return cls(sign, log2(abs(x), bits))

    def to_real(self, bits: int = DEFAULT_BITS) -> mpf:
        """Round-trip back to the linear domain (relative error 2^-(bits-8))."""
        if self.sign == 0:
            return mpf(0)
        magnitude = pow2(self.log2_magnitude, bits)
        return magnitude if self.sign > 0 else -magnitude


def log_sum(a: Log2Real, b: Log2Real, bits: int = DEFAULT_BITS) -> Log2Real:
    """log2-domain addition: ``log2(2**a + 2**b)`` for non-negative operands.

    Only non-negative values are tracked in the log domain, so operands
    with negative sign are rejected.  A zero operand returns the other
    operand unchanged (exactly).  Relative error of the resulting
    exponent is at most ``2**-(bits-8)``.
    """
    require_bits(bits)
    if a.sign < 0 or b.sign < 0:
        raise DomainError("log_sum is defined for non-negative operands only")
    if a.sign == 0:
        return b
    if b.sign == 0:
        return a
    hi, lo = a.log2_magnitude, b.log2_magnitude
    if hi < lo:
        hi, lo = lo, hi
    with workprec(bits + _GUARD):
        delta = hi - lo
        # log2(2^hi + 2^lo) = hi + log2(1 + 2^-delta)
        correction = mpmath.log1p(mpmath.power(2, -delta)) / mpmath.ln(2)
        value = hi + correction
    return Log2Real(1, with_precision(value, bits))


def log2_two_u_minus_1(log2_u: mpf, bits: int = DEFAULT_BITS) -> mpf:
    """``log2(2*u - 1)`` computed from ``log2(u)`` without forming ``u``.

    Uses ``log2(2u - 1) = 1 + log2(u) + log2(1 - 2^-(log2(u)+1))``; the
    correction underflows harmlessly once ``log2(u)`` is large.
    """
    require_bits(bits)
    with workprec(bits + _GUARD):
        t = mpf(log2_u) + 1
        correction = mpmath.log1p(-mpmath.power(2, -t)) / mpmath.ln(2)
        return +(t + correction)


# --- exact dyadic helpers -------------------------------------------------
#
# mpf values are dyadic rationals, so sums/differences/products can be
# carried out exactly (the mantissa grows as needed).  Sign decisions made
# on exact quantities are therefore never wrong, which the geometric
# oracle relies on.

def exact_add(a: mpf, b: mpf) -> mpf:
    return mpmath.fadd(a, b, exact=True)


def exact_sub(a: mpf, b: mpf) -> mpf:
    return mpmath.fsub(a, b, exact=True)


def exact_mul(a: mpf, b: mpf) -> mpf:
    return mpmath.fmul(a, b, exact=True)


def render_real(x: RealLike, bits: int = DEFAULT_BITS, max_digits: int = 50) -> str:
    """Shortest decimal string that parses back to ``x`` at ``bits``.

    Capped at ``max_digits`` significant digits; beyond the cap the
    rendering is truncated rather than exact (a 256-bit mantissa needs
    ~78 digits to round-trip).
    """
    require_bits(bits)
    with workprec(bits):
        x = mpf(x)
        lo, hi = 1, max_digits
        best = mpmath.nstr(x, max_digits)
        if mpf(best) != x:
            return best
        while lo < hi:
            mid = (lo + hi) // 2
            s = mpmath.nstr(x, mid)
            if mpf(s) == x:
                hi = mid
                best = s
            else:
                lo = mid + 1
        return mpmath.nstr(x, lo)
