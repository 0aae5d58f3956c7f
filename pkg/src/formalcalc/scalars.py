"""Exact complex rational scalars.

The discrete backend and the exact evaluation paths of the smooth
backend produce QC values: complex numbers whose real and imaginary
parts are fractions.Fraction. Arithmetic between QC values is exact.
Mixing a QC with a float, complex, or mpmath value falls back to
ordinary inexact complex arithmetic, so exactness is preserved by
construction exactly as long as every operand is exact.
"""

from __future__ import annotations

import sys
from fractions import Fraction

_HASH_IMAG = sys.hash_info.imag


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, float):
        # read floats through their decimal string so JSON literals like
        # 0.1 mean 1/10, not the nearest binary double
        return Fraction(str(v))
    raise TypeError("cannot interpret %r as a rational" % (v,))


class QC:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _frac(re)
        self.im = _frac(im)

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, QC):
            return QC(self.re + other.re, self.im + other.im)
        if isinstance(other, (int, Fraction)):
            return QC(self.re + other, self.im)
        return complex(self) + other

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, QC):
            return QC(self.re - other.re, self.im - other.im)
        if isinstance(other, (int, Fraction)):
            return QC(self.re - other, self.im)
        return complex(self) - other

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, QC):
            return QC(self.re * other.re - self.im * other.im,
                      self.re * other.im + self.im * other.re)
        if isinstance(other, (int, Fraction)):
            return QC(self.re * other, self.im * other)
        return complex(self) * other

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            other = QC(other)
        if isinstance(other, QC):
            d = other.re * other.re + other.im * other.im
            if d == 0:
                raise ZeroDivisionError("division by exact zero")
            return QC((self.re * other.re + self.im * other.im) / d,
                      (self.im * other.re - self.re * other.im) / d)
        return complex(self) / other

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return QC(other) / self
        return other / complex(self)

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __pos__(self):
        return self

    def conjugate(self):
        return QC(self.re, -self.im)

    # -- comparisons and conversions -----------------------------------

    def __eq__(self, other):
        if isinstance(other, QC):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction, float)):
            return self.im == 0 and self.re == other
        if isinstance(other, complex):
            return self.re == other.real and self.im == other.imag
        return NotImplemented

    def __hash__(self):
        # mirror Python's numeric hash so QC(3) hashes like 3 and
        # QC(1, 2) hashes like complex(1, 2)
        return hash(self.re) + _HASH_IMAG * hash(self.im)

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __abs__(self):
        return abs(complex(self))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return "QC(%s)" % (self.re,)
        return "QC(%s, %s)" % (self.re, self.im)

    def __str__(self):
        if self.im == 0:
            return rat_str(self.re)
        return "%s%+si" % (rat_str(self.re), self.im)

    @property
    def is_real(self) -> bool:
        return self.im == 0


QC_ZERO = QC(0)
QC_ONE = QC(1)


def qc(v) -> QC:
    """Coerce an exact value (int, Fraction, str, pair, QC) to QC."""
    if isinstance(v, QC):
        return v
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise TypeError("complex literal needs exactly two entries")
        return QC(_frac(v[0]), _frac(v[1]))
    return QC(_frac(v))


def rat_str(f: Fraction) -> str:
    if f.denominator == 1:
        return str(f.numerator)
    return "%d/%d" % (f.numerator, f.denominator)


def rat_from_json(v) -> Fraction:
    """Rational from a JSON literal: int, 'p/q' string, or decimal float."""
    return _frac(v)


def rat_to_json(f: Fraction):
    if f.denominator == 1:
        return f.numerator
    return rat_str(f)


def qc_from_json(v) -> QC:
    """QC from a JSON literal: number, 'p/q', or [re, im] pair."""
    return qc(v)


def qc_to_json(v: QC):
    if v.im == 0:
        return rat_to_json(v.re)
    return [rat_to_json(v.re), rat_to_json(v.im)]


def to_complex(v) -> complex:
    """Flatten a QC or any numeric value to a Python complex."""
    if isinstance(v, QC):
        return complex(v)
    return complex(v)
