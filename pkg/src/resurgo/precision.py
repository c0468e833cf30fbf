"""Working-precision configuration and the precision-tagged complex type."""

from __future__ import annotations

import os
from contextlib import contextmanager
from typing import Iterator

import mpmath
from mpmath import mp

DEFAULT_PRECISION = 256
ENV_VAR = "RESURGO_PRECISION"


class PrecisionError(ValueError):
    pass


def default_precision() -> int:
    """Default working precision in bits, honouring ``RESURGO_PRECISION``."""
    raw = os.environ.get(ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_PRECISION
    try:
        bits = int(raw)
    except ValueError as exc:
        raise PrecisionError(f"{ENV_VAR} must be an integer, got {raw!r}") from exc
    if bits < 53:
        raise PrecisionError(f"{ENV_VAR} must be at least 53 bits, got {bits}")
    return bits


def resolve(prec: int | None) -> int:
    return default_precision() if prec is None else int(prec)


@contextmanager
def working(prec: int | None = None) -> Iterator[int]:
    """Run a block at ``prec`` bits (default precision when None)."""
    bits = resolve(prec)
    with mp.workprec(bits):
        yield bits


def to_mpc(x) -> mpmath.mpc:
    """Coerce numbers, strings, exact rationals and BigComplex into an mpc."""
    if isinstance(x, mpmath.mpc):
        return x
    if isinstance(x, BigComplex):
        return x.value
    conv = getattr(x, "to_mpc", None)
    if conv is not None:
        return conv()
    if isinstance(x, str):
        return mpmath.mpc(*_parse_complex_str(x))
    return mp.mpc(x)


def _parse_complex_str(s: str) -> tuple:
    s = s.strip().replace(" ", "")
    if "," in s:
        re_, im_ = s.split(",", 1)
        return mp.mpf(re_), mp.mpf(im_)
    v = mp.mpmathify(s.replace("i", "j"))
    return mp.re(v), mp.im(v)


class BigComplex:
    """Complex number carrying its own precision.

    Arithmetic between operands of different precision is carried out and
    rounded at the smaller of the two precisions.
    """

    __slots__ = ("_value", "precision")

    def __init__(self, real=0, imag=0, precision: int | None = None):
        bits = resolve(precision)
        if bits <= 0:
            raise PrecisionError("precision must be positive")
        with mp.workprec(bits):
            if isinstance(real, (mpmath.mpc, complex, BigComplex)) and imag == 0:
                v = to_mpc(real)
                self._value = mp.mpc(+v.real, +v.imag)
            else:
                self._value = mp.mpc(real, imag)
        self.precision = bits

    @classmethod
    def from_mpc(cls, value, precision: int | None = None) -> "BigComplex":
        return cls(to_mpc(value), 0, precision)

    @property
    def value(self) -> mpmath.mpc:
        return self._value

    @property
    def real(self):
        return self._value.real

    @property
    def imag(self):
        return self._value.imag

    def _binary(self, other, fn) -> "BigComplex":
        if isinstance(other, BigComplex):
            bits = min(self.precision, other.precision)
            ov = other.value
        else:
            bits = self.precision
            ov = to_mpc(other)
        with mp.workprec(bits):
            out = fn(+self._value, +ov)
        return BigComplex(out, 0, bits)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self):
        return BigComplex(-self._value, 0, self.precision)

    def __abs__(self):
        with mp.workprec(self.precision):
            return abs(self._value)

    def __eq__(self, other):
        if isinstance(other, BigComplex):
            return self._value == other._value
        try:
            return self._value == to_mpc(other)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self._value, self.precision))

    def __complex__(self):
        return complex(self._value)

    def __repr__(self):
        return f"BigComplex({mp.nstr(self._value, 20)}, prec={self.precision})"

    def to_json(self) -> list:
        with mp.workprec(self.precision):
            digits = int(self.precision * 0.30103) + 2
            return [mp.nstr(self._value.real, digits), mp.nstr(self._value.imag, digits)]
