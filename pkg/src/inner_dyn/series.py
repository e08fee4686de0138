"""Truncated power series at the origin.

Coefficients are produced by exact recurrences (Cauchy products, the
exponential ODE recurrence, geometric expansions of rational factors).
:func:`series_from_samples` is the independent check: a trapezoid-rule
Cauchy integral on a circle of radius ``r``. Round-off in that route grows
like ``r**-n``, which is why it is only used as an oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConditioningWarning, DomainError, OrderMismatchError

DEFAULT_ORDER = 64
DEFAULT_RADIUS = 0.5
CONDITIONING_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class PowerSeries:
    """Taylor coefficients ``c_0 .. c_M`` of a function analytic at 0.

    Attributes
    ----------
    coeffs : ndarray of complex128
        Read-only coefficient array of length ``order + 1``.
    warning : str or None
        Set when the series came from an ill-conditioned computation.
    """

    coeffs: np.ndarray
    warning: Optional[str] = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128).reshape(-1)
        if c.size < 1:
            raise DomainError("a power series needs at least the constant coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def __getitem__(self, n):
        return self.coeffs[n]

    def __repr__(self):
        return f"PowerSeries(order={self.order}, coeffs={np.array2string(self.coeffs[:6], precision=6)}...)"

    @classmethod
    def zeros(cls, order: int) -> "PowerSeries":
        return cls(np.zeros(order + 1, dtype=np.complex128))

    @classmethod
    def constant(cls, value, order: int) -> "PowerSeries":
        c = np.zeros(order + 1, dtype=np.complex128)
        c[0] = value
        return cls(c)

    @classmethod
    def monomial(cls, n: int, order: int, value=1.0) -> "PowerSeries":
        c = np.zeros(order + 1, dtype=np.complex128)
        if n <= order:
            c[n] = value
        return cls(c)

    def _check(self, other: "PowerSeries"):
        if other.order != self.order:
            raise OrderMismatchError(f"orders differ: {self.order} vs {other.order}")

    def __add__(self, other):
        if isinstance(other, PowerSeries):
            self._check(other)
            return PowerSeries(self.coeffs + other.coeffs)
        c = self.coeffs.copy()
        c[0] += other
        return PowerSeries(c)

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PowerSeries):
            return series_mul(self, other)
        return PowerSeries(self.coeffs * other)

    __rmul__ = __mul__

    def __call__(self, z):
        """Evaluate the truncated polynomial by Horner's rule."""
        z = np.asarray(z, dtype=np.complex128)
        out = np.zeros_like(z)
        for c in self.coeffs[::-1]:
            out = out * z + c
        return out

    def conj_coeffs(self) -> np.ndarray:
        return np.conj(self.coeffs)

    def truncate(self, order: int) -> "PowerSeries":
        if order > self.order:
            raise OrderMismatchError(f"cannot extend order {self.order} to {order}")
        return PowerSeries(self.coeffs[: order + 1], self.warning)

    def sum_sq(self) -> float:
        """``sum |c_n|**2``; at most 1 for a truncated inner function."""
        return float(np.sum(np.abs(self.coeffs) ** 2))


def series_mul(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    """Truncated Cauchy product ``sum_k a_k b_{n-k}``."""
    a._check(b)
    m = a.order
    return PowerSeries(np.convolve(a.coeffs, b.coeffs)[: m + 1])


def series_pow(a: PowerSeries, n: int) -> PowerSeries:
    """``a**n`` for a non-negative integer ``n`` by repeated squaring."""
    if n < 0:
        raise DomainError("negative powers are not supported; use series_reciprocal")
    result = PowerSeries.constant(1.0, a.order)
    base = a
    while n:
        if n & 1:
            result = series_mul(result, base)
        n >>= 1
        if n:
            base = series_mul(base, base)
    return result


def series_powers(a: PowerSeries, count: int) -> list[PowerSeries]:
    """``[a**1, a**2, ..., a**count]`` by successive products."""
    out = []
    cur = a
    for _ in range(count):
        out.append(cur)
        cur = series_mul(cur, a)
    return out


def series_reciprocal(a: PowerSeries) -> PowerSeries:
    """``1/a``, requires ``a_0 != 0``."""
    c = a.coeffs
    if c[0] == 0:
        raise DomainError("reciprocal needs a nonzero constant term")
    m = a.order
    r = np.zeros(m + 1, dtype=np.complex128)
    r[0] = 1.0 / c[0]
    for n in range(1, m + 1):
        r[n] = -np.dot(c[1 : n + 1], r[n - 1 :: -1][:n]) / c[0]
    return PowerSeries(r)


def series_exp(g: PowerSeries) -> PowerSeries:
    """``exp(g)`` via ``n s_n = sum_{k=1}^n k g_k s_{n-k}``."""
    c = g.coeffs
    m = g.order
    kg = np.arange(m + 1) * c
    s = np.zeros(m + 1, dtype=np.complex128)
    s[0] = np.exp(c[0])
    for n in range(1, m + 1):
        # s[n-1::-1][:n] is s_{n-1}, ..., s_0
        s[n] = np.dot(kg[1 : n + 1], s[n - 1 :: -1][:n]) / n
    return PowerSeries(s)


def series_compose(f: PowerSeries, g: PowerSeries) -> PowerSeries:
    """``f(g(z))`` truncated at the common order; requires ``g_0 == 0``.

    Horner's scheme over truncated series. With ``g_0 = 0`` each product
    raises the valuation, so the truncated result is exact to order M.
    """
    f._check(g)
    if g.coeffs[0] != 0:
        raise DomainError("series_compose requires g(0) == 0")
    m = f.order
    gc = g.coeffs
    out = np.zeros(m + 1, dtype=np.complex128)
    for c in f.coeffs[::-1]:
        out = np.convolve(out, gc)[: m + 1]
        out[0] += c
    return PowerSeries(out)


def series_mobius(p0, p1, q0, q1, order: int) -> PowerSeries:
    """Taylor series of ``(p0 + p1 z) / (q0 + q1 z)``; requires ``q0 != 0``."""
    if q0 == 0:
        raise DomainError("denominator vanishes at the origin")
    n = np.arange(order + 1)
    geo = (1.0 / q0) * (-q1 / q0) ** n
    c = p0 * geo
    c[1:] += p1 * geo[:-1]
    return PowerSeries(c)


def series_from_samples(
    func: Callable, order: int, r: float = DEFAULT_RADIUS, n_points: Optional[int] = None
) -> PowerSeries:
    """Taylor coefficients by the trapezoid rule on ``|z| = r``.

    ``c_n = (1/N) sum_k f(r w^k) w^{-kn} / r^n`` with ``w = exp(2 pi i/N)``
    and ``N = 4 * order`` unless given. ``func`` must accept an ndarray.

    Warns with :class:`ConditioningWarning` (and records it on the result)
    when ``r**-order`` exceeds ``1e12``.
    """
    if not 0.0 < r < 1.0:
        raise DomainError(f"sampling radius must lie in (0, 1), got {r}")
    if order < 0:
        raise DomainError("order must be non-negative")
    big_n = n_points if n_points is not None else max(4 * order, 8)
    if big_n <= order:
        raise DomainError("need more sample points than coefficients")
    z = r * np.exp(2j * np.pi * np.arange(big_n) / big_n)
    vals = np.asarray(func(z), dtype=np.complex128)
    coeffs = np.fft.fft(vals)[: order + 1] / big_n
    coeffs = coeffs * r ** (-np.arange(order + 1, dtype=float))
    warning = None
    amplification = r ** (-order)
    if amplification > CONDITIONING_LIMIT:
        warning = f"rescale factor r**-M = {amplification:.3g} exceeds {CONDITIONING_LIMIT:.0e}"
        warnings.warn(warning, ConditioningWarning, stacklevel=2)
    return PowerSeries(coeffs, warning)


def factorial_series(order: int) -> PowerSeries:
    """``exp(z)``: coefficients ``1/n!``; handy as a reference."""
    return PowerSeries([1.0 / math.factorial(n) for n in range(order + 1)])
