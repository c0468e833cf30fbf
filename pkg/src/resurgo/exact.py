"""Exact arithmetic over the Gaussian rationals Q(i).

``GaussianRational`` is the coefficient field, ``Poly`` holds ascending
coefficient tuples and ``RatFunc`` keeps a coprime numerator/denominator
pair with a monic denominator.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd as igcd
from typing import Iterable, Sequence

import mpmath
from mpmath import mp


class ExactArithmeticError(ArithmeticError):
    pass


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot build an exact rational from {x!r}")


class GaussianRational:
    """p + q i with p, q exact rationals."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussianRational) and im == 0:
            self.re, self.im = re.re, re.im
            return
        self.re = _frac(re)
        self.im = _frac(im)

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, complex):
            if x.real != int(x.real) or x.imag != int(x.imag):
                raise TypeError("only integer-valued Python complex values are exact")
            return cls(int(x.real), int(x.imag))
        return cls(x)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def __add__(self, o):
        o = _coerce_or_none(o)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = _coerce_or_none(o)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        o = _coerce_or_none(o)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, o):
        o = _coerce_or_none(o)
        if o is None:
            return NotImplemented
        if self.im == 0 and o.im == 0:
            return GaussianRational(self.re * o.re, 0)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = _coerce_or_none(o)
        if o is None:
            return NotImplemented
        if o.is_zero():
            raise ZeroDivisionError("division by zero Gaussian rational")
        if o.im == 0:
            return GaussianRational(self.re / o.re, self.im / o.re)
        n = o.re * o.re + o.im * o.im
        return GaussianRational((self.re * o.re + self.im * o.im) / n, (self.im * o.re - self.re * o.im) / n)

    def __rtruediv__(self, o):
        o = _coerce_or_none(o)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return GaussianRational(1) / (self ** (-k))
        out, base = GaussianRational(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __eq__(self, o):
        o = _coerce_or_none(o)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return not self.is_zero()

    def to_mpc(self) -> mpmath.mpc:
        return mp.mpc(mp.mpf(self.re.numerator) / self.re.denominator,
                      mp.mpf(self.im.numerator) / self.im.denominator)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({self})"

    def __str__(self):
        return format_gaussian(self)


def _coerce_or_none(x):
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussianRational(x)
    return None


def _fstr(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_gaussian(c: GaussianRational) -> str:
    """Render in the spec-file literal grammar, e.g. ``3/4``, ``-2i``, ``(1/2+3i)``."""
    if c.im == 0:
        return _fstr(c.re)
    if c.re == 0:
        return _fstr(c.im) + "i"
    sign = "+" if c.im > 0 else "-"
    return f"({_fstr(c.re)}{sign}{_fstr(abs(c.im))}i)"


ZERO = GaussianRational(0)
ONE = GaussianRational(1)


class Poly:
    """Univariate polynomial with Gaussian-rational coefficients, ascending order."""

    __slots__ = ("coeffs", "_numeric")

    def __init__(self, coeffs: Iterable = ()):
        cs = [GaussianRational.coerce(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        self.coeffs: tuple[GaussianRational, ...] = tuple(cs)

    @classmethod
    def _raw(cls, cs: list) -> "Poly":
        while cs and cs[-1].is_zero():
            cs.pop()
        p = object.__new__(cls)
        p.coeffs = tuple(cs)
        return p

    @classmethod
    def const(cls, c) -> "Poly":
        return cls([c])

    @classmethod
    def monomial(cls, c, k: int) -> "Poly":
        return cls([0] * k + [c])

    @classmethod
    def z(cls) -> "Poly":
        return cls([0, 1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_const(self) -> bool:
        return len(self.coeffs) <= 1

    def lc(self) -> GaussianRational:
        return self.coeffs[-1] if self.coeffs else ZERO

    def valuation(self) -> int:
        """Order of vanishing at z = 0 (0 for the zero polynomial)."""
        for k, c in enumerate(self.coeffs):
            if not c.is_zero():
                return k
        return 0

    def is_monomial(self) -> bool:
        return bool(self.coeffs) and all(c.is_zero() for c in self.coeffs[:-1])

    def __add__(self, o):
        o = _as_poly(o)
        a, b = self.coeffs, o.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for k, c in enumerate(b):
            out[k] = out[k] + c
        return Poly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw([-c for c in self.coeffs])

    def __sub__(self, o):
        return self + (-_as_poly(o))

    def __rsub__(self, o):
        return _as_poly(o) - self

    def __mul__(self, o):
        if isinstance(o, (int, Fraction, GaussianRational)):
            c = GaussianRational.coerce(o)
            if c.is_zero():
                return Poly()
            return Poly._raw([x * c for x in self.coeffs])
        o = _as_poly(o)
        a, b = self.coeffs, o.coeffs
        if not a or not b:
            return Poly()
        if len(a) == 1:
            return o * a[0]
        if len(b) == 1:
            return self * b[0]
        out = [ZERO] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x.is_zero():
                continue
            for j, y in enumerate(b):
                if not y.is_zero():
                    out[i + j] = out[i + j] + x * y
        return Poly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out, base = Poly([1]), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def divmod(self, o: "Poly") -> tuple["Poly", "Poly"]:
        o = _as_poly(o)
        if o.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if self.degree < o.degree:
            return Poly(), self
        rem = list(self.coeffs)
        inv_lc = ONE / o.lc()
        db = o.degree
        q = [ZERO] * (self.degree - db + 1)
        bc = o.coeffs
        for k in range(self.degree - db, -1, -1):
            c = rem[k + db] * inv_lc
            q[k] = c
            if c.is_zero():
                continue
            for j in range(db + 1):
                if not bc[j].is_zero():
                    rem[k + j] = rem[k + j] - c * bc[j]
        return Poly._raw(q), Poly._raw(rem[:db])

    def __floordiv__(self, o):
        return self.divmod(o)[0]

    def __mod__(self, o):
        return self.divmod(o)[1]

    def exact_div(self, o: "Poly") -> "Poly":
        q, r = self.divmod(o)
        if not r.is_zero():
            raise ExactArithmeticError("polynomial division is not exact")
        return q

    def monic(self) -> "Poly":
        if self.is_zero():
            return self
        lc = self.lc()
        if lc == ONE:
            return self
        inv = ONE / lc
        return Poly._raw([c * inv for c in self.coeffs])

    def derivative(self) -> "Poly":
        return Poly._raw([c * k for k, c in enumerate(self.coeffs)][1:])

    def shift(self, a) -> "Poly":
        """Coefficients of p(z + a)."""
        a = GaussianRational.coerce(a)
        cs = list(self.coeffs)
        n = len(cs)
        for i in range(n):
            for k in range(n - 2, i - 1, -1):
                cs[k] = cs[k] + a * cs[k + 1]
        return Poly._raw(cs)

    def __call__(self, x):
        if isinstance(x, (int, Fraction, GaussianRational)):
            x = GaussianRational.coerce(x)
            acc = ZERO
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        return self.eval_mpc(x)

    def eval_mpc(self, x) -> mpmath.mpc:
        x = mp.mpc(x)
        cache = getattr(self, "_numeric", None)
        cs = cache[1] if cache is not None and cache[0] == mp.prec else self.mpc_coeffs()
        acc = mp.mpc(0)
        for c in reversed(cs):
            acc = acc * x + c
        return acc

    def mpc_coeffs(self) -> list:
        # cached per working precision; hot in root tracking and quadrature
        cache = getattr(self, "_numeric", None)
        if cache is None or cache[0] != mp.prec:
            cache = (mp.prec, [c.to_mpc() for c in self.coeffs])
            self._numeric = cache
        return list(cache[1])

    def __eq__(self, o):
        if isinstance(o, (int, Fraction, GaussianRational)):
            o = Poly([o])
        if not isinstance(o, Poly):
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        return format_poly(self)


def _as_poly(x) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, (int, Fraction, GaussianRational)):
        return Poly([x])
    raise TypeError(f"cannot use {type(x).__name__} as a polynomial")


def format_poly(p: Poly, var: str = "z") -> str:
    if p.is_zero():
        return "0"
    parts = []
    for k in range(p.degree, -1, -1):
        c = p.coeffs[k]
        if c.is_zero():
            continue
        if k == 0:
            mono = ""
        elif k == 1:
            mono = var
        else:
            mono = f"{var}^{k}"
        neg = c.im == 0 and c.re < 0
        mag = -c if neg else c
        cs = format_gaussian(mag)
        if mono and mag == ONE:
            body = mono
        elif mono:
            body = f"{cs}*{mono}"
        else:
            body = cs
        parts.append(("-" if neg else "+", body))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic greatest common divisor (the zero pair gives 0)."""
    if a.is_zero():
        return b.monic()
    if b.is_zero():
        return a.monic()
    if a.is_const() or b.is_const():
        return Poly([1])
    if a.is_monomial() or b.is_monomial():
        m, other = (a, b) if a.is_monomial() else (b, a)
        return Poly.monomial(1, min(m.degree, other.valuation()))
    if a.degree < b.degree:
        a, b = b, a
    a, b = a.monic(), b.monic()
    while not b.is_zero():
        a, b = b, (a % b).monic()
    return a


class RatFunc:
    """Canonical rational function num/den: coprime, den monic, den nonzero."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, _canonical: bool = False):
        num = _as_poly(num)
        den = Poly([1]) if den is None else _as_poly(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if not _canonical:
            if num.is_zero():
                den = Poly([1])
            else:
                g = poly_gcd(num, den)
                if g.degree > 0:
                    num = num.exact_div(g)
                    den = den.exact_div(g)
                lc = den.lc()
                if lc != ONE:
                    inv = ONE / lc
                    num = num * inv
                    den = den * inv
        self.num = num
        self.den = den

    @classmethod
    def const(cls, c) -> "RatFunc":
        return cls(Poly([c]), Poly([1]), _canonical=True)

    @classmethod
    def z(cls) -> "RatFunc":
        return cls(Poly.z(), Poly([1]), _canonical=True)

    @classmethod
    def coerce(cls, x) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, Poly):
            return cls(x, Poly([1]), _canonical=True)
        return cls.const(x)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.degree == 0

    def is_const(self) -> bool:
        return self.den.degree == 0 and self.num.degree <= 0

    def __add__(self, o):
        o = _as_rat(o)
        if o is None:
            return NotImplemented
        if self.den == o.den:
            return RatFunc(self.num + o.num, self.den)
        if self.is_poly() and o.is_poly():
            return RatFunc(self.num + o.num, Poly([1]), _canonical=True)
        g = poly_gcd(self.den, o.den)
        d1 = self.den.exact_div(g)
        d2 = o.den.exact_div(g)
        num = self.num * d2 + o.num * d1
        return RatFunc(num, d1 * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, _canonical=True)

    def __sub__(self, o):
        o = _as_rat(o)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, o):
        o = _as_rat(o)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, o):
        o = _as_rat(o)
        if o is None:
            return NotImplemented
        if self.is_zero() or o.is_zero():
            return RatFunc.const(0)
        g1 = poly_gcd(self.num, o.den)
        g2 = poly_gcd(o.num, self.den)
        n1 = self.num.exact_div(g1) if g1.degree > 0 else self.num
        d2 = o.den.exact_div(g1) if g1.degree > 0 else o.den
        n2 = o.num.exact_div(g2) if g2.degree > 0 else o.num
        d1 = self.den.exact_div(g2) if g2.degree > 0 else self.den
        num = n1 * n2
        den = d1 * d2
        lc = den.lc()
        if lc != ONE:
            inv = ONE / lc
            num, den = num * inv, den * inv
        return RatFunc(num, den, _canonical=True)

    __rmul__ = __mul__

    def reciprocal(self) -> "RatFunc":
        if self.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RatFunc(self.den, self.num)

    def __truediv__(self, o):
        o = _as_rat(o)
        if o is None:
            return NotImplemented
        return self * o.reciprocal()

    def __rtruediv__(self, o):
        o = _as_rat(o)
        if o is None:
            return NotImplemented
        return o * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.reciprocal() ** (-k)
        return RatFunc(self.num ** k, self.den ** k, _canonical=True)

    def derivative(self) -> "RatFunc":
        return ratfunc_derivative(self)

    def __call__(self, x):
        if isinstance(x, (int, Fraction, GaussianRational)):
            d = self.den(x)
            if d.is_zero():
                raise ZeroDivisionError("evaluation at a pole")
            return self.num(x) / d
        return self.eval_mpc(x)

    def eval_mpc(self, x) -> mpmath.mpc:
        d = self.den.eval_mpc(x)
        if d == 0:
            raise ZeroDivisionError("evaluation at a pole")
        return self.num.eval_mpc(x) / d

    def valuation(self) -> int:
        """Order at z = 0: positive for zeros, negative for poles."""
        if self.is_zero():
            return 0
        return self.num.valuation() - self.den.valuation()

    def shift(self, a) -> "RatFunc":
        """The rational function z -> f(z + a)."""
        return RatFunc(self.num.shift(a), self.den.shift(a))

    def __eq__(self, o):
        o = _as_rat(o)
        if o is None:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RatFunc({self})"

    def __str__(self):
        return format_ratfunc(self)


def _as_rat(x):
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, Poly):
        return RatFunc.coerce(x)
    if isinstance(x, (int, Fraction, GaussianRational)):
        return RatFunc.const(x)
    return None


def ratfunc_arith(a: RatFunc, b: RatFunc, op: str) -> RatFunc:
    """Exact add/sub/mul/div of rational functions, canonicalized."""
    a, b = RatFunc.coerce(a), RatFunc.coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def ratfunc_derivative(a: RatFunc) -> RatFunc:
    """Quotient-rule derivative, canonicalized."""
    a = RatFunc.coerce(a)
    if a.is_poly():
        return RatFunc(a.num.derivative() * (ONE / a.den.lc()), Poly([1]), _canonical=True)
    if a.den.is_monomial():
        # d/dz (n z^-k) = (z n' - k n) z^-(k+1)
        k = a.den.degree
        num = Poly.z() * a.num.derivative() - a.num * k
        return RatFunc(num, Poly.monomial(1, k + 1))
    # (n/d)' = (n' d - n d') / d^2; use g = gcd(d, d') to keep degrees low
    d = a.den
    dp = d.derivative()
    g = poly_gcd(d, dp)
    dg = d.exact_div(g)
    num = a.num.derivative() * dg - a.num * dp.exact_div(g)
    return RatFunc(num, dg * d)


def _integer_pair(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    """Scale num/den jointly so both have coprime integer (Gaussian) coefficients."""
    parts = [x for c in num.coeffs + den.coeffs for x in (c.re, c.im)]
    lcm = reduce(lambda u, v: u * v // igcd(u, v), (x.denominator for x in parts), 1)
    g = reduce(igcd, (abs(x.numerator) * (lcm // x.denominator) for x in parts if x != 0), 0) or 1
    s = Fraction(lcm, g)
    return num * s, den * s


def format_ratfunc(r: RatFunc) -> str:
    """Integer-coefficient rendering such as ``-3/(4*z^3)``."""
    if r.is_poly():
        return format_poly(r.num)
    num, den = _integer_pair(r.num, r.den)
    ns = format_poly(num)
    if sum(1 for c in num.coeffs if not c.is_zero()) > 1:
        ns = f"({ns})"
    ds = format_poly(den)
    if not ds.replace("^", "").isalnum():
        ds = f"({ds})"
    return f"{ns}/{ds}"
