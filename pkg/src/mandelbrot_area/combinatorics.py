"""Binary digit sums, 2-adic valuations and the denominator exponent bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .arith import DyadicRational

INFINITY = math.inf


@dataclass(frozen=True)
class DigitExpansion:
    """Base-2 digits of a non-negative integer, least significant first."""

    bits: tuple[int, ...]

    @classmethod
    def of(cls, m: int) -> "DigitExpansion":
        if m < 0:
            raise ValueError("negative integers have no digit expansion")
        bits = []
        while m:
            bits.append(m & 1)
            m >>= 1
        return cls(tuple(bits))

    @property
    def value(self) -> int:
        return sum(d << i for i, d in enumerate(self.bits))

    @property
    def top(self) -> int:
        """Position of the leading digit, -1 for zero."""
        return len(self.bits) - 1


def sum_of_digits(n: int, m: int) -> int:
    """Number of 1 bits of ``m`` at positions ``>= n``."""
    if n < 0 or m < 0:
        raise ValueError("n and m must be non-negative")
    count = 0
    m >>= n
    while m:
        count += m & 1
        m >>= 1
    return count


def p_bound(n: int, m: int) -> int:
    """Exponent ``2m - 2^(n+2) + 4 - s(n, m)``.

    For ``m >= 2^(n+1) - 1`` every table entry times ``2**p_bound(n, m)`` is
    an integer.  Outside that range the value is returned unchanged (it may
    be negative) and carries no meaning.
    """
    return 2 * m - (1 << (n + 2)) + 4 - sum_of_digits(n, m)


def two_adic_valuation(x) -> float | int:
    """2-adic valuation of an int, Fraction or DyadicRational; inf for zero."""
    if isinstance(x, DyadicRational):
        return INFINITY if x.numerator == 0 else _int_valuation(x.numerator) - x.exponent
    if isinstance(x, Fraction):
        if x == 0:
            return INFINITY
        return _int_valuation(x.numerator) - _int_valuation(x.denominator)
    x = int(x)
    return INFINITY if x == 0 else _int_valuation(x)


def _int_valuation(a: int) -> int:
    return (a & -a).bit_length() - 1


def factorial_valuation(k: int) -> int:
    if k < 0:
        raise ValueError("k must be non-negative")
    return k - sum_of_digits(0, k)
