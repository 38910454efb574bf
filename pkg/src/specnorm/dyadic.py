"""Exact dyadic rationals ``m / 2**k``.

Every value that the decomposition machinery produces (Fourier coefficients,
subspace averages, p-th power gaps) has a power-of-two denominator, so this
small field is closed under everything we need and keeps all comparisons
exact.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational

__all__ = ["Dyadic", "as_dyadic", "as_fraction"]

_PATTERN = re.compile(r"^\s*(-?\d+)\s*(?:/\s*2\^(\d+))?\s*$")


def _trailing_zeros(x: int) -> int:
    return (x & -x).bit_length() - 1


class Dyadic:
    """Normalized ``numerator / 2**log2_denominator``.

    The numerator is odd unless the value is zero, and zero is stored as
    ``0 / 2**0``; equality of values is therefore equality of fields.
    """

    __slots__ = ("numerator", "log2_denominator")

    def __init__(self, numerator: int = 0, log2_denominator: int = 0):
        numerator = int(numerator)
        if log2_denominator < 0:
            numerator <<= -log2_denominator
            log2_denominator = 0
        if numerator == 0:
            log2_denominator = 0
        elif log2_denominator:
            tz = min(_trailing_zeros(numerator), log2_denominator)
            numerator >>= tz
            log2_denominator -= tz
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "log2_denominator", log2_denominator)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    def __reduce__(self):
        return (Dyadic, (self.numerator, self.log2_denominator))

    # construction -----------------------------------------------------

    @classmethod
    def from_fraction(cls, q) -> "Dyadic":
        q = Fraction(q)
        den = q.denominator
        if den & (den - 1):
            raise ValueError(f"{q} is not a dyadic rational")
        return cls(q.numerator, den.bit_length() - 1)

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse the ``"num/2^k"`` (or bare integer) rendering."""
        m = _PATTERN.match(text)
        if not m:
            raise ValueError(f"not a dyadic literal: {text!r}")
        return cls(int(m.group(1)), int(m.group(2) or 0))

    # conversions ------------------------------------------------------

    @property
    def denominator(self) -> int:
        return 1 << self.log2_denominator

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.log2_denominator)

    def is_integer(self) -> bool:
        return self.log2_denominator == 0

    def __float__(self) -> float:
        return float(self.to_fraction())

    def __int__(self) -> int:
        return int(self.to_fraction())

    def __bool__(self) -> bool:
        return self.numerator != 0

    def __repr__(self) -> str:
        return f"Dyadic({self})"

    def __str__(self) -> str:
        if self.log2_denominator == 0:
            return str(self.numerator)
        return f"{self.numerator}/2^{self.log2_denominator}"

    # arithmetic -------------------------------------------------------

    def _align(self, other: "Dyadic"):
        k = max(self.log2_denominator, other.log2_denominator)
        a = self.numerator << (k - self.log2_denominator)
        b = other.numerator << (k - other.log2_denominator)
        return a, b, k

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b, k = self._align(other)
        return Dyadic(a + b, k)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b, k = self._align(other)
        return Dyadic(a - b, k)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Dyadic(self.numerator * other.numerator,
                      self.log2_denominator + other.log2_denominator)

    __rmul__ = __mul__

    def __pow__(self, p: int):
        if not isinstance(p, int) or p < 0:
            return NotImplemented
        return Dyadic(self.numerator ** p, self.log2_denominator * p)

    def __neg__(self):
        return Dyadic(-self.numerator, self.log2_denominator)

    def __pos__(self):
        return self

    def __abs__(self):
        return Dyadic(abs(self.numerator), self.log2_denominator)

    def shift(self, k: int) -> "Dyadic":
        """Multiply by ``2**k`` (``k`` may be negative)."""
        return Dyadic(self.numerator, self.log2_denominator - k)

    def __truediv__(self, other):
        # only powers of two keep us inside the dyadic field
        if isinstance(other, int) and other > 0 and not other & (other - 1):
            return self.shift(-(other.bit_length() - 1))
        return self.to_fraction() / Fraction(other)

    # comparison -------------------------------------------------------

    def _cmp_key(self, other):
        if isinstance(other, Dyadic):
            a, b, _ = self._align(other)
            return a, b
        if isinstance(other, int):
            return self.numerator, other << self.log2_denominator
        if isinstance(other, (Rational, float)):
            return self.to_fraction(), other
        return None

    def __eq__(self, other):
        key = self._cmp_key(other)
        if key is None:
            return NotImplemented
        return key[0] == key[1]

    def __lt__(self, other):
        key = self._cmp_key(other)
        if key is None:
            return NotImplemented
        return key[0] < key[1]

    def __le__(self, other):
        key = self._cmp_key(other)
        if key is None:
            return NotImplemented
        return key[0] <= key[1]

    def __gt__(self, other):
        key = self._cmp_key(other)
        if key is None:
            return NotImplemented
        return key[0] > key[1]

    def __ge__(self, other):
        key = self._cmp_key(other)
        if key is None:
            return NotImplemented
        return key[0] >= key[1]

    def __hash__(self):
        return hash(self.to_fraction())


def _coerce(x):
    if isinstance(x, Dyadic):
        return x
    if isinstance(x, int):
        return Dyadic(x)
    if isinstance(x, Fraction):
        try:
            return Dyadic.from_fraction(x)
        except ValueError:
            return NotImplemented
    return NotImplemented


def as_dyadic(x) -> Dyadic:
    """Coerce ints, dyadic Fractions and ``"num/2^k"`` strings."""
    if isinstance(x, str):
        return Dyadic.parse(x)
    d = _coerce(x)
    if d is NotImplemented:
        raise TypeError(f"cannot represent {x!r} as a dyadic rational")
    return d


def as_fraction(x) -> Fraction:
    if isinstance(x, Dyadic):
        return x.to_fraction()
    return Fraction(x)
