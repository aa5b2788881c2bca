"""Exact truncated power series.

Coefficients live in any commutative ring that accepts rational scalars:
plain :class:`fractions.Fraction` values, or :class:`Poly` values that are
polynomials in one free symbol with rational coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence, Union

MAX_ORDER = 16

Scalar = Union[int, Fraction]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"exact rational expected, got {type(x).__name__}")


class Poly:
    """Polynomial in a single symbol with exact rational coefficients.

    ``Poly([c0, c1, c2])`` represents ``c0 + c1*b + c2*b**2``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Scalar] = ()):
        c = [_as_fraction(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(c)

    @classmethod
    def symbol(cls) -> "Poly":
        return cls([0, 1])

    @staticmethod
    def _lift(other) -> "Poly":
        if isinstance(other, Poly):
            return other
        return Poly([_as_fraction(other)])

    def __add__(self, other):
        o = self._lift(other)
        k = max(len(self.coeffs), len(o.coeffs))
        a = self.coeffs + (Fraction(0),) * (k - len(self.coeffs))
        b = o.coeffs + (Fraction(0),) * (k - len(o.coeffs))
        return Poly(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-x for x in self.coeffs)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        if not self.coeffs or not o.coeffs:
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x == 0:
                continue
            for j, y in enumerate(o.coeffs):
                out[i + j] += x * y
        return Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        d = _as_fraction(other)
        return Poly(x / d for x in self.coeffs)

    def __eq__(self, other):
        try:
            return self.coeffs == self._lift(other).coeffs
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def even_part_in_square(self) -> "Poly":
        """Rewrite an even polynomial in b as a polynomial in b**2."""
        if any(c != 0 for c in self.coeffs[1::2]):
            raise ValueError("polynomial is not even in its symbol")
        return Poly(self.coeffs[0::2])

    def strip_symbol_factor(self) -> tuple[int, "Poly"]:
        """Split off the largest power of the symbol: ``b**k * rest``."""
        k = 0
        while k < len(self.coeffs) and self.coeffs[k] == 0:
            k += 1
        return k, Poly(self.coeffs[k:])

    def __repr__(self):
        if not self.coeffs:
            return "Poly(0)"
        terms = [f"{c}*b^{i}" if i else f"{c}" for i, c in enumerate(self.coeffs) if c != 0]
        return "Poly(" + " + ".join(terms) + ")"


def _zero_like(x):
    return Poly() if isinstance(x, Poly) else Fraction(0)


def _is_zero(x) -> bool:
    return x == 0 if not isinstance(x, Poly) else not x.coeffs


class RationalSeries:
    """Truncated power series ``sum_j c_j y**j`` for ``j <= truncation_order``.

    Binary operations truncate at the smaller of the two orders.
    """

    __slots__ = ("coefficients", "truncation_order")

    def __init__(self, coefficients: Sequence, truncation_order: int | None = None):
        coeffs = [c if isinstance(c, Poly) else _as_fraction(c) for c in coefficients]
        if truncation_order is None:
            truncation_order = max(len(coeffs) - 1, 0)
        if truncation_order < 0:
            raise ValueError("truncation_order must be non-negative")
        if truncation_order > MAX_ORDER:
            raise ValueError(f"truncation_order capped at {MAX_ORDER}")
        zero = _zero_like(coeffs[0]) if coeffs else Fraction(0)
        coeffs = coeffs[: truncation_order + 1]
        coeffs += [zero] * (truncation_order + 1 - len(coeffs))
        self.coefficients = tuple(coeffs)
        self.truncation_order = truncation_order

    @classmethod
    def variable(cls, order: int) -> "RationalSeries":
        """The series of ``y`` itself."""
        return cls([0, 1], order)

    def __len__(self):
        return len(self.coefficients)

    def __getitem__(self, j):
        return self.coefficients[j]

    def _coerce(self, other) -> "RationalSeries":
        if isinstance(other, RationalSeries):
            return other
        return RationalSeries([other], self.truncation_order)

    def __add__(self, other):
        o = self._coerce(other)
        k = min(self.truncation_order, o.truncation_order)
        return RationalSeries([self[j] + o[j] for j in range(k + 1)], k)

    __radd__ = __add__

    def __neg__(self):
        return RationalSeries([-c for c in self.coefficients], self.truncation_order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, RationalSeries):
            return series_mul(self, other)
        return RationalSeries([c * other for c in self.coefficients], self.truncation_order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, RationalSeries):
            raise TypeError("series division is not supported; use series_pow(s, -1)")
        d = _as_fraction(other)
        return RationalSeries([c / d for c in self.coefficients], self.truncation_order)

    def __pow__(self, exponent):
        return series_pow(self, exponent)

    def __eq__(self, other):
        if not isinstance(other, RationalSeries):
            return NotImplemented
        return (self.truncation_order == other.truncation_order
                and all(_is_zero(a - b) for a, b in zip(self.coefficients, other.coefficients)))

    def __hash__(self):
        return hash((self.coefficients, self.truncation_order))

    def is_zero(self) -> bool:
        return all(_is_zero(c) for c in self.coefficients)

    def __repr__(self):
        return f"RationalSeries({list(self.coefficients)!r}, order={self.truncation_order})"


def series_mul(a: RationalSeries, b: RationalSeries) -> RationalSeries:
    """Cauchy product truncated at ``min(order(a), order(b))``."""
    k = min(a.truncation_order, b.truncation_order)
    out = []
    for j in range(k + 1):
        acc = _zero_like(a[0]) if not isinstance(b[0], Poly) else Poly()
        for i in range(j + 1):
            if _is_zero(a[i]) or _is_zero(b[j - i]):
                continue
            acc = acc + a[i] * b[j - i]
        out.append(acc)
    return RationalSeries(out, k)


def _binomial(alpha: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for i in range(k):
        out = out * (alpha - i) / (i + 1)
    return out


def series_pow(a: RationalSeries, exponent) -> RationalSeries:
    """Raise a series to a rational power.

    Non-negative integer powers use repeated multiplication. Any other exponent
    needs a constant term equal to one and uses the binomial expansion
    ``(1 + u)**alpha = sum_k binom(alpha, k) u**k``.

    Raises
    ------
    ValueError
        If the exponent is fractional or negative and the constant term is not 1.
    """
    alpha = _as_fraction(exponent)
    order = a.truncation_order
    if alpha.denominator == 1 and alpha >= 0:
        result = RationalSeries([1], order)
        for _ in range(int(alpha)):
            result = series_mul(result, a)
        return result
    if not _is_zero(a[0] - 1):
        raise ValueError("fractional or negative power needs a unit constant term")
    u = a - 1
    result = RationalSeries([1], order)
    term = RationalSeries([1], order)
    for k in range(1, order + 1):
        term = series_mul(term, u)
        if term.is_zero():
            break
        result = result + term * _binomial(alpha, k)
    return result


def series_diff(a: RationalSeries, times: int = 1) -> RationalSeries:
    """Differentiate ``times`` times.

    Each derivative loses one order of known coefficients; the order never
    drops below zero, where the series is identically zero.
    """
    if times < 0:
        raise ValueError("times must be non-negative")
    out = a
    for _ in range(times):
        k = out.truncation_order
        if k == 0:
            out = RationalSeries([_zero_like(out[0])], 0)
            continue
        out = RationalSeries([out[j] * j for j in range(1, k + 1)], k - 1)
    return out
