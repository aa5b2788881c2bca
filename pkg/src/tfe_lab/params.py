"""Exponents and derived constants of the problem."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ParameterError


def double_factorial(k: int) -> int:
    """``k!! = k (k-2) (k-4) ...`` with ``0!! = (-1)!! = 1``."""
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def critical_absorption_exponent(n: float, N: int, m: int = 2) -> float:
    """``p0 = 1 + n + 2m/N``."""
    return 1.0 + n + 2.0 * m / N


def similarity_exponent(n: float, N: int, m: int = 2) -> float:
    """``beta = 1 / (2m + nN)``."""
    return 1.0 / (2 * m + n * N)


def explicit_profile_constant(m: int, N: int) -> Fraction:
    """Constant ``c0`` of the n = 1 profile ``c0 (1 - r^2)^m``.

    Obtained by requiring the radial ``Delta^{m-1}`` of ``c0 (1 - r^2)^m`` to have
    ``r^2``-coefficient ``(-1)^m beta / 2`` with ``beta = 1/(2m + N)``.
    The radial Laplacian maps ``r^{2k}`` to ``2k (2k + N - 2) r^{2k-2}``.
    """
    if m < 1 or N < 1:
        raise ParameterError("need m >= 1 and N >= 1")
    # coefficients of (1 - r^2)^m in powers of r^2
    poly = [Fraction(math.comb(m, k) * (-1) ** k) for k in range(m + 1)]
    for _ in range(m - 1):
        poly = [poly[k + 1] * (2 * (k + 1)) * (2 * (k + 1) + N - 2) for k in range(len(poly) - 1)]
    beta = Fraction(1, 2 * m + N)
    target = (-1) ** m * beta / 2
    return target / poly[1]


@dataclass(frozen=True)
class ProblemParams:
    """Exponents ``(n, N, m, p)`` and derived constants.

    ``p`` defaults to the critical value ``p0``. ``c0`` is the explicit-profile
    constant, defined only for ``n = 1``; it is ``None`` otherwise.
    """

    n: float
    N: int = 1
    m: int = 2
    p: float | None = None
    beta: float = field(init=False)
    p0: float = field(init=False)

    def __post_init__(self):
        if not (self.n >= 0.0 and math.isfinite(self.n)):
            raise ParameterError(f"mobility exponent n must be >= 0, got {self.n}")
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"dimension N must be a positive integer, got {self.N}")
        if int(self.m) != self.m or self.m < 2:
            raise ParameterError(f"half-order m must be an integer >= 2, got {self.m}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "beta", similarity_exponent(self.n, self.N, self.m))
        object.__setattr__(self, "p0", critical_absorption_exponent(self.n, self.N, self.m))
        if self.p is None:
            object.__setattr__(self, "p", self.p0)
        elif not self.p > 1.0:
            raise ParameterError(f"absorption exponent p must exceed 1, got {self.p}")

    @property
    def mu(self) -> float:
        """Interface exponent ``3/n`` (requires ``n > 0``)."""
        if self.n <= 0.0:
            raise ParameterError("mu = 3/n needs n > 0")
        return 3.0 / self.n

    @property
    def c0(self) -> float | None:
        if self.n != 1.0:
            return None
        return float(explicit_profile_constant(self.m, self.N))

    @property
    def is_critical(self) -> bool:
        return abs(self.p - self.p0) <= 1e-12 * self.p0

    def as_dict(self) -> dict:
        out = {"n": self.n, "N": self.N, "m": self.m, "p": self.p,
               "beta": self.beta, "p0": self.p0}
        out["mu"] = self.mu if self.n > 0 else None
        out["c0"] = self.c0
        return out
