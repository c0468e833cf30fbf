"""ODE specification, exact perturbative series, singular set and Borel germs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import mpmath
from mpmath import mp

from .exact import GaussianRational, Poly, RatFunc, poly_gcd
from .precision import resolve, to_mpc
from .roots import cluster, poly_roots

INDEPENDENT = ("z", "epsilon")


class SpecError(ValueError):
    pass


class DegenerateBalanceError(SpecError):
    """P0 vanishes identically, so the leading-order balance cannot be solved."""


class PoleEvaluationError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class ODESpec:
    """sum_i P_i(z) eps^i d^i y/dz^i = sum_k eps^k F_k(z).

    With ``independent="epsilon"`` the operator is instead sum_i P_i (eps^2 d/deps)^i,
    the Euler-type form in which the parameter itself is the variable; the
    P_i then act as constants (z only labels a family).
    """

    coeffs: tuple
    forcing: tuple = ()
    independent: str = "z"

    def __post_init__(self):
        cs = tuple(RatFunc.coerce(c) for c in self.coeffs)
        fs = tuple(RatFunc.coerce(f) for f in self.forcing)
        object.__setattr__(self, "coeffs", cs)
        object.__setattr__(self, "forcing", fs)
        if len(cs) < 2:
            raise SpecError("an ODE of order N >= 1 needs coefficients P_0..P_N")
        if cs[-1].is_zero():
            raise SpecError("leading coefficient P_N must be nonzero")
        if self.independent not in INDEPENDENT:
            raise SpecError(f"independent must be one of {INDEPENDENT}")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def F(self, k: int) -> RatFunc:
        return self.forcing[k] if k < len(self.forcing) else RatFunc.const(0)


@dataclass(frozen=True)
class PerturbativeSeries:
    terms: tuple
    spec: ODESpec | None = None

    def __len__(self):
        return len(self.terms)

    def __getitem__(self, n) -> RatFunc:
        return self.terms[n]

    @property
    def M(self) -> int:
        return len(self.terms) - 1


def _rising(m: int, i: int) -> int:
    out = 1
    for j in range(i):
        out *= m + j
    return out


def expand_perturbative(spec: ODESpec, M: int = 200) -> PerturbativeSeries:
    """Exact terms y_0..y_M from P_0 y_n = F_n - sum_{i>=1} P_i D^i y_{n-i}."""
    if M < 0:
        raise ValueError("M must be non-negative")
    P = spec.coeffs
    if P[0].is_zero():
        raise DegenerateBalanceError("P_0 is identically zero; the leading balance is degenerate")
    inv0 = P[0].reciprocal()
    N = spec.order
    terms: list[RatFunc] = []
    derivs: list[list[RatFunc]] = []  # derivs[m][i] = i-th z-derivative of y_m
    for n in range(M + 1):
        rhs = spec.F(n)
        for i in range(1, min(N, n) + 1):
            if P[i].is_zero():
                continue
            m = n - i
            if spec.independent == "z":
                d = derivs[m][i]
            else:
                r = _rising(m, i)
                d = terms[m] * r if r else RatFunc.const(0)
            if not d.is_zero():
                rhs = rhs - P[i] * d
        y = rhs * inv0
        terms.append(y)
        if spec.independent == "z":
            chain = [y]
            for _ in range(N):
                chain.append(chain[-1].derivative())
            derivs.append(chain)
    return PerturbativeSeries(tuple(terms), spec)


def recurrence_residuals(series: PerturbativeSeries, spec: ODESpec) -> list[RatFunc]:
    """Exact order-by-order residuals of the substituted series (all zero when consistent)."""
    out = []
    N = spec.order
    for n in range(len(series)):
        acc = -spec.F(n)
        for i in range(0, min(N, n) + 1):
            y = series[n - i]
            if spec.independent == "z":
                for _ in range(i):
                    y = y.derivative()
            else:
                y = y * _rising(n - i, i) if i else y
            acc = acc + spec.coeffs[i] * y
        out.append(acc)
    return out


# singular set

@dataclass(frozen=True)
class SingularPoint:
    z: mpmath.mpc
    source: str
    order: int
    delta: int = 0

    def to_json(self) -> dict:
        return {"z": [mp.nstr(self.z.real, 30), mp.nstr(self.z.imag, 30)],
                "source": self.source, "order": self.order, "delta": self.delta}


@dataclass(frozen=True)
class PhysicalSingularSet:
    points: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def locations(self) -> list:
        return [p.z for p in self.points]

    def near(self, z, radius) -> SingularPoint | None:
        z = to_mpc(z)
        for p in self.points:
            if abs(p.z - z) <= radius * max(1, abs(p.z)):
                return p
        return None


def squarefree(p: Poly) -> Poly:
    if p.degree <= 1:
        return p
    if p.is_monomial():
        return Poly.z()
    g = poly_gcd(p, p.derivative())
    return p.exact_div(g) if g.degree > 0 else p


def _root_set(polys, prec) -> list:
    """Distinct roots of the given polynomials (squarefree parts de-duplicated)."""
    seen = set()
    pts = []
    for p in polys:
        if p.degree < 1:
            continue
        s = squarefree(p).monic()
        if s in seen:
            continue
        seen.add(s)
        pts.extend(r for r, _ in poly_roots(s, precision=prec))
    return pts


def squarefree_decomposition(p: Poly) -> list[tuple[Poly, int]]:
    """Yun's algorithm: p = lc * prod s_k^k with squarefree, pairwise coprime s_k."""
    if p.degree < 1:
        return []
    if p.is_monomial():
        return [(Poly.z(), p.degree)]
    out = []
    a = p.monic()
    b = a.derivative()
    c = poly_gcd(a, b)
    w = a.exact_div(c)
    y = b.exact_div(c)
    k = 1
    while w.degree > 0:
        z_ = y - w.derivative()
        g = poly_gcd(w, z_)
        if g.degree > 0:
            out.append((g, k))
        w = w.exact_div(g)
        y = z_.exact_div(g)
        k += 1
    return out


def pole_order(r: RatFunc, z, radius) -> int:
    """Multiplicity of z as a root of the denominator of r (0 when regular)."""
    if r.den.degree < 1:
        return 0
    z = to_mpc(z)
    if z == 0:
        return r.den.valuation()
    for s, k in squarefree_decomposition(r.den):
        with mp.workprec(mp.prec + 64):
            val = abs(s.eval_mpc(z))
            scale = max(abs(c) for c in s.mpc_coeffs()) * max(1, abs(z)) ** s.degree
        if val <= radius * scale:
            return k
    return 0


def singular_set(series: PerturbativeSeries, spec: ODESpec | None = None,
                 precision: int | None = None) -> PhysicalSingularSet:
    """Gamma_z: poles of y_0..y_M together with zeros and poles of the P_i.

    Each point records its source, the largest pole order among the computed
    terms (``order``) and the pole order of y_1 (``delta``).
    """
    if len(series) == 0:
        raise ValueError("series must be nonempty")
    prec = resolve(precision)
    with mp.workprec(prec):
        radius = mp.mpf(2) ** (-prec / 4)
        forcing_poles = _root_set([f.den for f in spec.forcing], prec) if spec else []
        coeff_zeros = _root_set([c.num for c in spec.coeffs], prec) if spec and spec.independent == "z" else []
        coeff_poles = _root_set([c.den for c in spec.coeffs], prec) if spec and spec.independent == "z" else []
        y_poles = _root_set([t.den for t in series.terms], prec)
        candidates = forcing_poles + coeff_zeros + coeff_poles + y_poles
        if not candidates:
            return PhysicalSingularSet(())
        merged = cluster(candidates, radius)

        def hit(pt, group):
            return any(abs(pt - g) <= radius * max(1, abs(g)) for g in group)

        points = []
        for z, _ in merged:
            if hit(z, forcing_poles):
                source = "forcing-pole"
            elif hit(z, coeff_zeros):
                source = "coefficient-zero"
            elif hit(z, coeff_poles):
                source = "coefficient-pole"
            else:
                source = "forcing-pole"
            order = 0
            dens = {t.den for t in series.terms if t.den.degree > 0}
            for d in dens:
                order = max(order, pole_order(RatFunc(Poly([1]), d, _canonical=True), z, radius))
            delta = pole_order(series[1], z, radius) if len(series) > 1 else 0
            points.append(SingularPoint(+z, source, order, delta))
        points.sort(key=lambda p: (float(abs(p.z)), float(mp.arg(p.z)) if p.z != 0 else 0.0))
        return PhysicalSingularSet(tuple(points))


# Borel germs

@dataclass(frozen=True)
class BorelGerm:
    """u_n = y_{n+1}(z0)/n! with the O(eps^0) part y_0(z0) kept separately."""

    z0: mpmath.mpc
    coeffs: tuple
    constant: mpmath.mpc
    precision: int

    def __len__(self):
        return len(self.coeffs)

    def __call__(self, w):
        acc = mp.mpc(0)
        for c in reversed(self.coeffs):
            acc = acc * w + c
        return acc

    def to_series(self):
        from .series import TruncatedSeries
        return TruncatedSeries(mp.mpc(0), self.coeffs)

    @classmethod
    def from_coefficients(cls, coeffs: Sequence, constant=0, z0=0, precision: int | None = None):
        prec = resolve(precision)
        with mp.workprec(prec):
            return cls(to_mpc(z0), tuple(to_mpc(c) for c in coeffs), to_mpc(constant), prec)


def _exact_point(z0):
    if isinstance(z0, GaussianRational):
        return z0
    if isinstance(z0, (int,)):
        return GaussianRational(z0)
    return None


def evaluate_term(r: RatFunc, z0, exact_z=None):
    if exact_z is not None:
        d = r.den(exact_z)
        if d.is_zero():
            raise PoleEvaluationError("base point is a pole of a perturbative term")
        return (r.num(exact_z) / d).to_mpc()
    with mp.workprec(mp.prec + 64):
        d = r.den.eval_mpc(z0)
        if d == 0:
            raise PoleEvaluationError("base point is a pole of a perturbative term")
        v = r.num.eval_mpc(z0) / d
    return +v


def borel_germ(series: PerturbativeSeries, z0, precision: int | None = None) -> BorelGerm:
    """Germ of the parametric Borel transform at z0.

    Gaussian-rational base points are evaluated exactly before rounding;
    others are evaluated with 64 guard bits.
    """
    prec = resolve(precision)
    exact_z = _exact_point(z0)
    with mp.workprec(prec):
        z = to_mpc(z0)
        radius = mp.mpf(2) ** (-prec / 4)
        for d in {squarefree(t.den) for t in series.terms if t.den.degree > 0}:
            with mp.workprec(prec + 64):
                val = abs(d.eval_mpc(z))
                scale = max(abs(c) for c in d.mpc_coeffs()) * max(1, abs(z)) ** d.degree
            if val <= radius * scale:
                raise PoleEvaluationError(f"base point {mp.nstr(z, 10)} lies on the singular set")
        constant = evaluate_term(series[0], z, exact_z) if len(series) else mp.mpc(0)
        coeffs = []
        fact = mp.mpf(1)
        for n in range(len(series) - 1):
            if n:
                fact *= n
            coeffs.append(evaluate_term(series[n + 1], z, exact_z) / fact)
        return BorelGerm(z, tuple(coeffs), constant, prec)


# Borel-plane operator

@dataclass(frozen=True)
class BorelOperator:
    """sum of coeff(z) * w^wpow * d_z^dz * d_w^dw over ``terms``.

    ``cauchy_data[k]`` is d_w^k y_B at w=0, i.e. y_{k+1}(z); ``leading_data``
    is the first nonzero entry and ``leading_index`` its perturbative order.
    """

    terms: tuple
    cauchy_data: tuple
    leading_data: RatFunc
    leading_index: int
    kind: str

    def describe(self) -> str:
        from .exact import format_ratfunc
        parts = []
        for c, dz, dw, wp in self.terms:
            ops = []
            if wp:
                ops.append("w" if wp == 1 else f"w^{wp}")
            if dz:
                ops.append("d_z" if dz == 1 else f"d_z^{dz}")
            if dw:
                ops.append("d_w" if dw == 1 else f"d_w^{dw}")
            parts.append(f"({format_ratfunc(c)})" + ("*" + "*".join(ops) if ops else ""))
        return " + ".join(parts)

    def same_operator(self, other: "BorelOperator") -> bool:
        """Equality up to an overall constant factor."""
        a = {(dz, dw, wp): c for c, dz, dw, wp in self.terms}
        b = {(dz, dw, wp): c for c, dz, dw, wp in other.terms}
        if a.keys() != b.keys():
            return False
        ratio = None
        for k in a:
            r = a[k] / b[k]
            if not r.is_const():
                return False
            if ratio is None:
                ratio = r
            elif r != ratio:
                return False
        return True


def borel_transform_ode(spec: ODESpec, data_terms: int | None = None) -> BorelOperator:
    N = spec.order
    terms = []
    for i, c in enumerate(spec.coeffs):
        if c.is_zero():
            continue
        if spec.independent == "z":
            terms.append((c, i, N - i, 0))
        else:
            terms.append((c, 0, 0, i))
    n_data = max(N, 1) if data_terms is None else data_terms
    series = expand_perturbative(spec, n_data + len(spec.forcing))
    data = tuple(series[k + 1] for k in range(n_data))
    lead, idx = RatFunc.const(0), 1
    for k in range(1, len(series)):
        if not series[k].is_zero():
            lead, idx = series[k], k
            break
    return BorelOperator(tuple(terms), data, lead, idx,
                         "differential" if spec.independent == "z" else "multiplicative")
