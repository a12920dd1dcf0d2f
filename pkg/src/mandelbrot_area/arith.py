"""Exact dyadic rationals and general rationals.

Every coefficient produced by the backward recursion has a power-of-two
denominator, so the exact engine only ever needs values of the form
``a / 2**e``.  :class:`DyadicRational` keeps them normalized (odd numerator
or zero) which makes equality, hashing and valuations trivial.
"""

from __future__ import annotations

import math
from decimal import Decimal, localcontext
from fractions import Fraction

# Only the contour oracle needs denominators that are not powers of two.
BigRational = Fraction


class DyadicRational:
    """Exact value ``numerator / 2**exponent``.

    Construction normalizes: the stored numerator is odd (or zero, with
    exponent zero).  A negative exponent is folded into the numerator.
    """

    __slots__ = ("numerator", "exponent")

    def __init__(self, numerator: int = 0, exponent: int = 0):
        numerator = int(numerator)
        exponent = int(exponent)
        if numerator == 0:
            exponent = 0
        else:
            tz = (numerator & -numerator).bit_length() - 1
            if exponent < 0:
                numerator <<= -exponent
                exponent = 0
            shift = min(tz, exponent)
            numerator >>= shift
            exponent -= shift
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "exponent", exponent)

    def __setattr__(self, name, value):
        raise AttributeError("DyadicRational is immutable")

    @classmethod
    def from_scaled(cls, scaled: int, scale: int) -> "DyadicRational":
        """Value of ``scaled / 2**scale``."""
        return cls(int(scaled), scale)

    @classmethod
    def parse(cls, text: str) -> "DyadicRational":
        """Parse ``"a/2^e"``, ``"a/d"`` with ``d`` a power of two, or an integer."""
        text = text.strip()
        if "/" not in text:
            return cls(int(text), 0)
        num, den = text.split("/", 1)
        den = den.strip()
        if den.startswith("2^"):
            return cls(int(num), int(den[2:]))
        d = int(den)
        if d <= 0 or d & (d - 1):
            raise ValueError(f"denominator {d} is not a power of two")
        return cls(int(num), d.bit_length() - 1)

    # -- conversions -----------------------------------------------------
    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __float__(self) -> float:
        return dyadic_to_float(self)

    def scaled(self, scale: int) -> int:
        """Integer ``self * 2**scale``; requires ``scale >= exponent``."""
        if scale < self.exponent:
            raise ValueError("scale below exponent loses bits")
        return self.numerator << (scale - self.exponent)

    def to_decimal(self, digits: int | None = None) -> str:
        """Decimal rendering; exact when ``digits`` is None."""
        if self.exponent == 0:
            return str(self.numerator)
        exact = Decimal(self.numerator * 5**self.exponent).scaleb(-self.exponent)
        if digits is None:
            return format(exact, "f")
        with localcontext() as ctx:
            ctx.prec = digits
            return format(+exact, f".{digits - 1}e")

    def __str__(self) -> str:
        return f"{self.numerator}/2^{self.exponent}"

    def __repr__(self) -> str:
        return f"DyadicRational({self.numerator}, {self.exponent})"

    # -- comparison ------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, DyadicRational):
            return self.numerator == other.numerator and self.exponent == other.exponent
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        return NotImplemented

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        return self.to_fraction() < _as_fraction(other)

    def __le__(self, other):
        return self.to_fraction() <= _as_fraction(other)

    def __bool__(self):
        return self.numerator != 0

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else dyadic_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else dyadic_add(self, -other)

    def __rsub__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else dyadic_add(other, -self)

    def __mul__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else dyadic_mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return DyadicRational(-self.numerator, self.exponent)

    def __abs__(self):
        return DyadicRational(abs(self.numerator), self.exponent)


def _coerce(x) -> DyadicRational | None:
    if isinstance(x, DyadicRational):
        return x
    if isinstance(x, int):
        return DyadicRational(x, 0)
    return None


def _as_fraction(x) -> Fraction:
    return x.to_fraction() if isinstance(x, DyadicRational) else Fraction(x)


def dyadic_add(a: DyadicRational, b: DyadicRational) -> DyadicRational:
    e = max(a.exponent, b.exponent)
    return DyadicRational(
        (a.numerator << (e - a.exponent)) + (b.numerator << (e - b.exponent)), e
    )


def dyadic_mul(a: DyadicRational, b: DyadicRational) -> DyadicRational:
    # odd * odd is odd, so the product is already normalized
    return DyadicRational(a.numerator * b.numerator, a.exponent + b.exponent)


def dyadic_halve(a: DyadicRational) -> DyadicRational:
    return DyadicRational(a.numerator, a.exponent + 1)


def dyadic_to_float(a: DyadicRational) -> float:
    """Correctly rounded (nearest-even) conversion.

    Raises OverflowError when the value is outside the float range.
    """
    if a.exponent == 0:
        value = float(a.numerator)
    else:
        # int / int true division in CPython is correctly rounded
        value = a.numerator / (1 << a.exponent)
    if math.isinf(value):
        raise OverflowError(f"{a} exceeds the float range")
    return value
