"""Exact arithmetic in Q(sqrt(n)): numbers a + b*sqrt(n) with rational a, b."""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath


def _log10_bound(x: Fraction) -> int:
    """Integer upper bound on log10|x| (0 for x = 0)."""
    if x == 0:
        return 0
    return int((abs(x.numerator).bit_length() - x.denominator.bit_length() + 1) * 0.30103) + 1


class Surd:
    __slots__ = ("a", "b", "n")

    def __init__(self, a=0, b=0, n: int = 1):
        if n < 1:
            raise ValueError("radicand must be a positive integer")
        root = math.isqrt(n)
        a, b = Fraction(a), Fraction(b)
        if root * root == n:
            a, b, n = a + b * root, Fraction(0), 1
        elif b == 0:
            n = 1
        self.a, self.b, self.n = a, b, n

    @classmethod
    def sqrt(cls, n: int) -> Surd:
        return cls(0, 1, n)

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def _coerce(self, other) -> Surd:
        if isinstance(other, Surd):
            if other.n != self.n and not (other.is_rational or self.is_rational):
                raise ValueError(f"mixed radicands {self.n} and {other.n}")
            return other
        return Surd(other, 0, self.n)

    def _field(self, other: Surd) -> int:
        return self.n if self.n != 1 else other.n

    def __add__(self, other):
        o = self._coerce(other)
        return Surd(self.a + o.a, self.b + o.b, self._field(o))

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.a, -self.b, self.n)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        n = self._field(o)
        return Surd(self.a * o.a + self.b * o.b * n, self.a * o.b + self.b * o.a, n)

    __rmul__ = __mul__

    def conjugate(self) -> Surd:
        return Surd(self.a, -self.b, self.n)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.n

    def inverse(self) -> Surd:
        nrm = self.norm()
        if nrm == 0:
            raise ZeroDivisionError("inverse of zero")
        c = self.conjugate()
        return Surd(c.a / nrm, c.b / nrm, self.n)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        base = self if k >= 0 else self.inverse()
        out = Surd(1, 0, self.n)
        k = abs(k)
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.a == o.a and self.b == o.b and (self.b == 0 or self.n == o.n)

    def __hash__(self):
        return hash((self.a, self.b, self.n))

    def sign(self) -> int:
        """Exact sign, by comparing a^2 with b^2 n when a and b disagree."""
        sa, sb = (self.a > 0) - (self.a < 0), (self.b > 0) - (self.b < 0)
        if sb == 0 or sa == sb:
            return sa or sb
        if sa == 0:
            return sb
        diff = self.a * self.a - self.b * self.b * self.n
        return sa if diff > 0 else (sb if diff < 0 else 0)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def to_mpf(self, dps: int = 50):
        with mpmath.workdps(dps):
            return +(mpmath.mpf(self.a.numerator) / self.a.denominator
                     + mpmath.mpf(self.b.numerator) / self.b.denominator * mpmath.sqrt(self.n))

    def __float__(self) -> float:
        if self.is_rational:
            return float(self.a)
        # The two parts may cancel; carry their magnitude on top of 40 digits.
        digits = 40 + max(0, _log10_bound(self.a), _log10_bound(self.b * self.n))
        return float(self.to_mpf(digits))

    def exact_str(self) -> str:
        if self.is_rational:
            return str(self.a)
        root = f"{abs(self.b)}*sqrt({self.n})"
        if self.a == 0:
            return root if self.b > 0 else f"-{root}"
        return f"{self.a} {'+' if self.b > 0 else '-'} {root}"

    def __repr__(self) -> str:
        return f"Surd({self.exact_str()})"
