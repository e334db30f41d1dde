"""Exact scalars: rationals and Gaussian rationals.

All arithmetic in the package is exact. Real values are ``fractions.Fraction``;
complex values use :class:`QQi`, which interoperates with ``int`` and
``Fraction`` operands. Every scalar supports ``.conjugate()``.
"""
from __future__ import annotations

from fractions import Fraction


class QQi:
    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _lift(other):
        if isinstance(other, QQi):
            return other
        if isinstance(other, (int, Fraction)):
            return QQi(other, 0)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QQi(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QQi(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("QQi division by zero")
        num = self * o.conjugate()
        return QQi(num.re / d, num.im / d)

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o / self

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __pow__(self, k: int):
        if k < 0:
            return (QQi(1) / self) ** (-k)
        out = QQi(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self):
        return QQi(self.re, -self.im)

    def __eq__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return False
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __repr__(self):
        return f"QQi({self.re}, {self.im})"


def simplify(x):
    """Demote a QQi with zero imaginary part to a Fraction."""
    if isinstance(x, QQi) and x.im == 0:
        return x.re
    return x


def root_of_unity(order: int, power: int):
    """Exact e^(2 pi i power/order); only orders dividing 4 are Gaussian rational."""
    if 4 % order:
        raise ValueError(f"primitive {order}-th roots of unity are not Gaussian rationals")
    k = (power * (4 // order)) % 4
    return (Fraction(1), QQi(0, 1), Fraction(-1), QQi(0, -1))[k]


def is_nonnegative(x) -> bool:
    x = simplify(x)
    return not isinstance(x, QQi) and x >= 0


def to_json(x):
    """Serialize a scalar as an exact "num/den" string (or a re/im pair)."""
    x = simplify(x)
    if isinstance(x, QQi):
        return {"im": to_json(x.im), "re": to_json(x.re)}
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"
