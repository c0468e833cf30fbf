"""Truncated power series over mpmath complex numbers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import mpmath
from mpmath import mp

from .precision import to_mpc


class SeriesError(ValueError):
    pass


@dataclass(frozen=True)
class TruncatedSeries:
    """sum_n coeffs[n] (w - base)^n kept through ``order``."""

    base: mpmath.mpc
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "base", to_mpc(self.base))
        object.__setattr__(self, "coeffs", tuple(to_mpc(c) for c in self.coeffs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_list(cls, coeffs: Sequence, base=0) -> "TruncatedSeries":
        return cls(to_mpc(base), tuple(coeffs))

    def __call__(self, w):
        x = to_mpc(w) - self.base
        acc = mp.mpc(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self.base, self.coeffs[: order + 1])


def star_convolve(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """Borel-plane convolution (f * g)(w) = int_0^w f(s) g(w - s) ds, term by term.

    Coefficient n of the result is sum_{i+j=n-1} f_i g_j i! j! / n!; the
    result is truncated at the smaller of the two orders.
    """
    if f.base != g.base:
        raise SeriesError("star_convolve needs both series at the same base point")
    order = min(f.order, g.order)
    fa = [f.coeffs[i] * mp.factorial(i) for i in range(order + 1)]
    ga = [g.coeffs[j] * mp.factorial(j) for j in range(order + 1)]
    out = [mp.mpc(0)]
    for n in range(1, order + 1):
        acc = mp.mpc(0)
        for i in range(n):
            acc += fa[i] * ga[n - 1 - i]
        out.append(acc / mp.factorial(n))
    return TruncatedSeries(f.base, tuple(out))


def ser_mul(a: Sequence, b: Sequence, n: int | None = None) -> list:
    if n is None:
        n = min(len(a), len(b))
    out = []
    for k in range(n):
        acc = mp.mpc(0)
        for i in range(max(0, k - len(b) + 1), min(k, len(a) - 1) + 1):
            acc += a[i] * b[k - i]
        out.append(acc)
    return out


def ser_inv(a: Sequence, n: int | None = None) -> list:
    if n is None:
        n = len(a)
    if a[0] == 0:
        raise SeriesError("series with zero constant term is not invertible")
    inv0 = 1 / mp.mpc(a[0])
    out = [inv0]
    for k in range(1, n):
        acc = mp.mpc(0)
        for i in range(1, min(k, len(a) - 1) + 1):
            acc += a[i] * out[k - i]
        out.append(-acc * inv0)
    return out


def ser_div(a: Sequence, b: Sequence, n: int | None = None) -> list:
    if n is None:
        n = min(len(a), len(b))
    if b[0] == 0:
        raise SeriesError("division by a series with zero constant term")
    inv0 = 1 / mp.mpc(b[0])
    out = []
    for k in range(n):
        acc = mp.mpc(a[k]) if k < len(a) else mp.mpc(0)
        for i in range(1, min(k, len(b) - 1) + 1):
            acc -= b[i] * out[k - i]
        out.append(acc * inv0)
    return out


def ser_deriv(a: Sequence) -> list:
    return [k * a[k] for k in range(1, len(a))]


def ser_integ(a: Sequence, c0=0) -> list:
    return [mp.mpc(c0)] + [a[k] / (k + 1) for k in range(len(a))]


def ser_log(a: Sequence, n: int | None = None) -> list:
    """log of a series with a[0] != 0 (principal log of the constant term)."""
    if n is None:
        n = len(a)
    da = ser_deriv(list(a) + [mp.mpc(0)])[: n]
    q = ser_div(da, a, n - 1) if n > 1 else []
    return ser_integ(q, mp.log(a[0]))[:n]


def ser_exp(a: Sequence, n: int | None = None) -> list:
    if n is None:
        n = len(a)
    out = [mp.exp(a[0])]
    da = [k * a[k] for k in range(1, len(a))]
    for k in range(1, n):
        acc = mp.mpc(0)
        for j in range(1, min(k, len(a) - 1) + 1):
            acc += da[j - 1] * out[k - j]
        out.append(acc / k)
    return out


def ser_pow(a: Sequence, alpha, n: int | None = None) -> list:
    """a^alpha using the principal branch at the constant term."""
    if n is None:
        n = len(a)
    alpha = to_mpc(alpha)
    a0 = mp.mpc(a[0])
    if a0 == 0:
        raise SeriesError("power of a series with zero constant term")
    # J. C. P. Miller recurrence for b = a^alpha
    b = [a0 ** alpha]
    for k in range(1, n):
        acc = mp.mpc(0)
        for j in range(1, min(k, len(a) - 1) + 1):
            acc += (alpha * j - (k - j)) * a[j] * b[k - j]
        b.append(acc / (k * a0))
    return b
