"""Local expansions about a point: Laurent series of rational functions,
chi' branches as power series, and generalized (Frobenius) series."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
from mpmath import mp

from .exact import GaussianRational, Poly, RatFunc
from .precision import to_mpc
from .series import SeriesError, ser_deriv, ser_mul

MAX_DENOMINATOR = 10 ** 6


class LocalExpansionError(ArithmeticError):
    pass


def snap_rational(x, tol=None, max_den: int = MAX_DENOMINATOR) -> Fraction | None:
    """The nearby small-denominator rational of a real number, if any."""
    x = mp.mpf(x)
    if tol is None:
        tol = mp.mpf(2) ** (-mp.prec / 2)
    q = Fraction(int(mp.nint(x * max_den)), max_den).limit_denominator(max_den)
    if abs(x - mp.mpf(q.numerator) / q.denominator) <= tol * max(1, abs(x)):
        return q
    return None


def snap_point(z, tol=None) -> GaussianRational | None:
    if isinstance(z, GaussianRational):
        return z
    if isinstance(z, int):
        return GaussianRational(z)
    z = to_mpc(z)
    re, im = snap_rational(z.real, tol), snap_rational(z.imag, tol)
    if re is None or im is None:
        return None
    return GaussianRational(re, im)


def snap_complex(z, tol=None):
    """GaussianRational when z is numerically a small-denominator rational, else z."""
    g = snap_point(z, tol)
    return g if g is not None else to_mpc(z)


def _numeric_shift(cs: list, a) -> list:
    cs = list(cs)
    n = len(cs)
    for i in range(n):
        for k in range(n - 2, i - 1, -1):
            cs[k] = cs[k] + a * cs[k + 1]
    return cs


def laurent(r: RatFunc, z0, n: int) -> tuple[int, list]:
    """(v, c) with r(z0 + t) = t^v (c_0 + c_1 t + ...), n coefficients.

    Exact arithmetic is used when z0 is a small-denominator Gaussian rational.
    """
    if r.is_zero():
        return 0, [mp.mpc(0)] * n
    g = snap_point(z0)
    if g is not None:
        num, den = r.num.shift(g), r.den.shift(g)
        vn, vd = num.valuation(), den.valuation()
        a = [c.to_mpc() for c in num.coeffs[vn:]]
        b = [c.to_mpc() for c in den.coeffs[vd:]]
    else:
        z0 = to_mpc(z0)
        with mp.workprec(mp.prec + 64):
            a = _numeric_shift(r.num.mpc_coeffs(), z0)
            b = _numeric_shift(r.den.mpc_coeffs(), z0)
        tol = mp.mpf(2) ** (-mp.prec + 16)
        vn = _strip(a, tol)
        vd = _strip(b, tol)
        a, b = a[vn:], b[vd:]
    out = []
    inv0 = 1 / b[0]
    for k in range(n):
        acc = a[k] if k < len(a) else mp.mpc(0)
        for i in range(1, min(k, len(b) - 1) + 1):
            acc -= b[i] * out[k - i]
        out.append(acc * inv0)
    return vn - vd, out


def _strip(cs: list, tol) -> int:
    scale = max(abs(c) for c in cs)
    v = 0
    while v < len(cs) - 1 and abs(cs[v]) <= tol * scale:
        v += 1
    return v


def taylor(r: RatFunc, z0, n: int) -> list:
    """Taylor coefficients of r at a regular point z0 (leading zeros included)."""
    v, cs = laurent(r, z0, n)
    if v < 0:
        raise LocalExpansionError("pole at the expansion point")
    return ([mp.mpc(0)] * v + cs)[:n]


def _poly_series(cs: Sequence, x: Sequence, n: int) -> list:
    """sum_i cs[i](t) x(t)^i by Horner on truncated series."""
    acc = list(cs[-1])
    for c in reversed(cs[:-1]):
        acc = ser_mul(acc, x, n)
        acc = [acc[k] + c[k] for k in range(n)]
    return acc


@dataclass(frozen=True)
class BranchSeries:
    """chi'(z0 + t) = t^(gamma-1) (v_0 + v_1 t + ...) on one branch of the singulant equation."""

    center: mpmath.mpc
    gamma: int
    scaled: tuple          # v_k
    coeffs: tuple          # c_i(z0 + t) Taylor series, c_i = (-1)^i P_i

    def chiprime(self) -> list:
        return [mp.mpc(0)] * (self.gamma - 1) + list(self.scaled)

    def chi(self) -> list:
        """chi(z0 + t) - chi(z0)."""
        cp = self.chiprime()
        return [mp.mpc(0)] + [cp[k] / (k + 1) for k in range(len(cp))]


def branch_series(eq, z0, guess, n: int, gamma: int = 1) -> BranchSeries:
    """Power series of chi' at z0 by Newton iteration on truncated series.

    With gamma > 1 the branch vanishes like t^(gamma-1) at z0 and the equation
    is rescaled by v = t^(gamma-1) u so that u(0) is a simple root.
    """
    N = eq.degree
    shift = gamma - 1
    m = n + shift * N
    cs = []
    for i, c in enumerate(eq.coeffs):
        t = taylor(c, z0, m)
        need = shift * (N - i)
        tol = mp.mpf(2) ** (-mp.prec / 2) * max([1] + [abs(x) for x in t])
        if any(abs(x) > tol for x in t[:need]):
            raise LocalExpansionError(f"coefficient {i} is too singular for a chi' zero of order {shift}")
        cs.append(list(t[need:need + n]) + [mp.mpc(0)] * max(0, n - len(t[need:])))
    lead = [c[0] for c in cs]
    from .roots import aberth
    trimmed = list(lead)
    while len(trimmed) > 1 and trimmed[-1] == 0:
        trimmed.pop()
    roots = aberth(trimmed) if len(trimmed) > 2 else [-trimmed[0] / trimmed[1]]
    u0 = min(roots, key=lambda r: abs(r - guess))
    dcs = [[i * x for x in cs[i]] for i in range(1, N + 1)]
    fv0 = sum(i * lead[i] * u0 ** (i - 1) for i in range(1, N + 1))
    if abs(fv0) <= mp.mpf(2) ** (-mp.prec / 3) * max(1, max(abs(x) for x in lead)):
        raise LocalExpansionError("the selected chi' root is not simple at the expansion point")
    u = [u0] + [mp.mpc(0)] * (n - 1)
    k = 1
    while True:
        F = _poly_series(cs, u, n)
        Fv = _poly_series(dcs, u, n)
        from .series import ser_div
        delta = ser_div(F, Fv, n)
        u = [u[j] - delta[j] for j in range(n)]
        if k >= n:
            break
        k *= 2
    return BranchSeries(to_mpc(z0), gamma, tuple(u), tuple(tuple(c) for c in cs))


# Laurent arithmetic on (valuation, coefficients) pairs

def lmul(a: tuple, b: tuple, n: int) -> tuple:
    return a[0] + b[0], ser_mul(a[1], b[1], n)


def ldiv(a: tuple, b: tuple, n: int) -> tuple:
    vb, cb = b
    cb = list(cb)
    while cb and abs(cb[0]) <= mp.mpf(2) ** (-mp.prec / 2) * max([abs(x) for x in cb[1:4]] + [0]):
        cb.pop(0)
        vb += 1
    if not cb:
        raise SeriesError("division by a zero series")
    from .series import ser_div
    return a[0] - vb, ser_div(a[1], cb + [mp.mpc(0)] * (n - len(cb)), n)


def lcoeff(a: tuple, k: int):
    v, cs = a
    j = k - v
    return cs[j] if 0 <= j < len(cs) else mp.mpc(0)


@dataclass
class GenSeries:
    """sum over parts of t^rho_p * (c_p0 + c_p1 t + ...)."""

    parts: list  # [(rho, [coeffs])]

    def __call__(self, t):
        acc = mp.mpc(0)
        for rho, cs in self.parts:
            s = mp.mpc(0)
            for c in reversed(cs):
                s = s * t + c
            acc += (mp.mpc(t) ** rho if rho != 0 else 1) * s
        return acc

    def deriv(self) -> "GenSeries":
        out = []
        for rho, cs in self.parts:
            d = [(rho + j) * c for j, c in enumerate(cs)]
            if rho == 0:
                out.append((mp.mpf(0), d[1:]))
            else:
                out.append((rho - 1, d))
        return GenSeries(out)


def solve_first_order(R: tuple, f: GenSeries | None, n: int, beta, constant,
                      res_tol=None) -> GenSeries:
    """Solve a' = R a + f near t = 0 where R has at most a simple pole.

    ``beta`` is the residue of R; the homogeneous part t^beta (1 + ...) is
    scaled by ``constant``. Each part of f yields one particular part.
    """
    vR, cR = R
    if vR < -1:
        raise LocalExpansionError("irregular singular point of the coefficient ODE")
    Rt = [lcoeff(R, k) for k in range(n)]          # regular part R_0 + R_1 t + ...
    parts = []
    if constant != 0:
        h = [mp.mpc(1)]
        for j in range(1, n):
            h.append(sum(Rt[l] * h[j - 1 - l] for l in range(j)) / j)
        parts.append((beta, [constant * x for x in h]))
    if res_tol is None:
        res_tol = mp.mpf(2) ** (-mp.prec / 2)
    for rho_f, fs in (f.parts if f is not None else []):
        rho = rho_f + 1
        p = []
        for j in range(n):
            rhs = (fs[j] if j < len(fs) else 0) + sum(Rt[l] * p[j - 1 - l] for l in range(j))
            d = rho + j - beta
            if abs(d) <= res_tol:
                if abs(rhs) > res_tol * max(1, max([abs(x) for x in fs] + [1])):
                    raise LocalExpansionError("logarithmic resonance in the coefficient chain")
                p.append(mp.mpc(0))
            else:
                p.append(rhs / d)
        parts.append((rho, p))
    return GenSeries(parts)
