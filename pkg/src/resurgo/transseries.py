"""Trans-series assembly: local exponents, coefficient transport along the
singulant, inner problems at a boundary layer and the resulting jumps.

Near a Borel singularity the germ is written

    y_B(w, z) ~ (w - chi(z))^(-alpha) sum_i a_i(z) (w - chi(z))^i.

Substituting into the Borel operator gives the singulant equation at leading
order and a chain of first-order ODEs for the a_i at the next orders. Their
initial constants come from the inner problem in s = w/chi(z) at a boundary
layer z_star, where chi(z_star) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
from mpmath import mp

from .exact import RatFunc, format_ratfunc
from .jumps import jump_from_local_expansion, switch_from_late_terms
from .local import (BranchSeries, GenSeries, LocalExpansionError, branch_series, laurent, lcoeff,
                    ldiv, lmul, snap_complex, snap_rational, solve_first_order, taylor)
from .perturbative import ODESpec, PerturbativeSeries
from .precision import resolve, to_mpc
from .series import ser_deriv, ser_mul, ser_pow
from .singulant import ComplexPath, SingulantBranch, SingulantEquation, singulant_equation


class TransSeriesError(ArithmeticError):
    pass


class ConnectionFitError(TransSeriesError):
    pass


class ClosedFormError(TransSeriesError):
    pass


def _frac_or_mpc(x):
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    x = to_mpc(x)
    if abs(x.imag) <= mp.mpf(2) ** (-mp.prec / 2) * max(1, abs(x)):
        q = snap_rational(x.real)
        if q is not None:
            return q
    return x


def _num(x):
    if isinstance(x, Fraction):
        return mp.mpf(x.numerator) / x.denominator
    return x


def _is_nonneg_int(x) -> bool:
    return isinstance(x, Fraction) and x.denominator == 1 and x >= 0


# local exponents

@dataclass(frozen=True)
class LocalExponents:
    gamma: int
    delta: int
    beta: object
    alpha: object = None

    def __post_init__(self):
        if not isinstance(self.gamma, int) or self.gamma < 1:
            raise ValueError("gamma must be a positive integer")
        if not isinstance(self.delta, int) or self.delta < 0:
            raise ValueError("delta must be a non-negative integer")
        beta = _frac_or_mpc(self.beta)
        object.__setattr__(self, "beta", beta)
        expected = (beta + self.delta) / self.gamma
        if self.alpha is None:
            object.__setattr__(self, "alpha", expected)
        elif _frac_or_mpc(self.alpha) != expected:
            raise ValueError("alpha must equal (beta + delta)/gamma")
        else:
            object.__setattr__(self, "alpha", expected)

    @property
    def integer_alpha(self) -> int | None:
        a = self.alpha
        if isinstance(a, Fraction) and a.denominator == 1:
            return int(a)
        return None

    def to_json(self) -> dict:
        def s(x):
            return str(x) if isinstance(x, Fraction) else mp.nstr(x, 20)
        return {"gamma": self.gamma, "delta": self.delta, "beta": s(self.beta), "alpha": s(self.alpha)}


def _transport_series(eq: SingulantEquation, bs: BranchSeries, n: int) -> tuple:
    """Laurent series (sigma_v, R) with R = -sigma_vv chi'' / (2 sigma_v)."""
    v = (0, bs.chiprime()[:n] + [mp.mpc(0)] * max(0, n - len(bs.chiprime())))
    N = eq.degree
    cs = [(0, list(taylor(c, bs.center, n))) for c in eq.coeffs]
    sv = [mp.mpc(0)] * n
    svv = [mp.mpc(0)] * n
    powers = [[mp.mpc(1)] + [mp.mpc(0)] * (n - 1)]
    for _ in range(N):
        powers.append(ser_mul(powers[-1], v[1], n))
    for i in range(1, N + 1):
        term = ser_mul(cs[i][1], powers[i - 1], n)
        sv = [a + i * b for a, b in zip(sv, term)]
        if i >= 2:
            term2 = ser_mul(cs[i][1], powers[i - 2], n)
            svv = [a + i * (i - 1) * b for a, b in zip(svv, term2)]
    chi2 = ser_deriv(v[1] + [mp.mpc(0)])[:n]
    num = (0, [-x / 2 for x in ser_mul(svv, chi2, n)])
    R = ldiv(num, (0, sv), n) if any(x != 0 for x in num[1]) else (0, [mp.mpc(0)] * n)
    return (0, sv), R


def _indicial_beta(eq: SingulantEquation, bs: BranchSeries, n: int = 12):
    _, R = _transport_series(eq, bs, n)
    if R[0] < -1 and any(abs(lcoeff(R, k)) > mp.mpf(2) ** (-mp.prec / 2) for k in range(R[0], -1)):
        raise TransSeriesError("a_0 ODE has an irregular singular point: beta is not determinable")
    return _frac_or_mpc(lcoeff(R, -1))


def _first_nonzero_term(series: PerturbativeSeries):
    for k in range(1, len(series)):
        if not series[k].is_zero():
            return k, series[k]
    raise TransSeriesError("the perturbative series has no nonzero term beyond order 0")


def local_exponents(series: PerturbativeSeries, branch: SingulantBranch, z_star=None,
                    a0_ode_local=None, spec: ODESpec | None = None) -> LocalExponents:
    """gamma from the branch, delta from the pole of y_1, beta from the a_0 ODE."""
    spec = spec or series.spec
    z_star = branch.z_star if z_star is None else to_mpc(z_star)
    _, y1 = _first_nonzero_term(series)
    v, _ = laurent(y1, z_star, 1)
    delta = max(0, -v)
    if a0_ode_local is not None:
        beta = a0_ode_local
    else:
        eq = singulant_equation(spec)
        bs = branch_series(eq, z_star, branch.gamma * branch.local_coefficient(), 12, branch.gamma)
        beta = _indicial_beta(eq, bs)
    return LocalExponents(branch.gamma, delta, beta)


# coefficient recurrence

@dataclass(frozen=True)
class CoefficientRecurrence:
    """sigma_v a_n' + (1/2) sigma_vv chi'' a_n = P_2 a_(n-1)'' / (n - alpha) for N = 2.

    sigma(v) = sum_i P_i (-v)^i. The a_0 equation holds for every N; the
    chain for n >= 1 is available for N <= 2 (for N = 1 every a_n is constant).
    """

    spec: ODESpec
    equation: SingulantEquation
    alpha: object = None
    unconstrained: tuple = ()

    @property
    def order(self) -> int:
        return self.spec.order

    def describe(self) -> list[str]:
        N = self.order
        if N == 2:
            P = self.spec.coeffs[1] / self.spec.coeffs[2]
            p = format_ratfunc(P)
            return [f"(({p}) - 2 chi') a_0' - chi'' a_0 = 0",
                    f"(n - alpha) a_n' (({p}) - 2 chi') + a_(n-1)'' - chi'' (n - alpha) a_n = 0"]
        if N == 1:
            return ["a_n' = 0"]
        return ["sigma_v(chi') a_0' + sigma_vv(chi') chi'' a_0 / 2 = 0"]

    def a0_coefficients(self, z, v, dv=None):
        """(A, B) with A a_0' + B a_0 = 0 at z on the branch with chi' = v."""
        z, v = to_mpc(z), to_mpc(v)
        cs = self.equation.numeric(z)
        if dv is None:
            dv = self.equation.dv(z, v)
        sv = sum(i * c * v ** (i - 1) for i, c in enumerate(cs) if i)
        svv = sum(i * (i - 1) * c * v ** (i - 2) for i, c in enumerate(cs) if i > 1)
        return sv, svv * dv / 2

    def residual(self, n: int, z, v, a, da, d2prev=0):
        """Relative residual of the n-th transport equation at a point."""
        A, B = self.a0_coefficients(z, v)
        lhs = A * da + B * a
        rhs = 0
        if n and self.order == 2:
            rhs = self.equation.coeffs[2].eval_mpc(z) * d2prev / (n - _num(self.alpha))
        scale = max(abs(A * da), abs(B * a), abs(rhs), mp.mpf(2) ** (-mp.prec))
        return abs(lhs - rhs) / scale


def coefficient_recurrence(spec: ODESpec, branch: SingulantBranch | None = None,
                           alpha=None, order: int = 4) -> CoefficientRecurrence:
    if spec.independent != "z":
        raise TransSeriesError("the coefficient recurrence needs a z-dependent ODE")
    eq = singulant_equation(spec)
    alpha = _frac_or_mpc(alpha) if alpha is not None else None
    bad = ()
    if isinstance(alpha, Fraction) and alpha.denominator == 1 and 1 <= alpha <= order:
        bad = (int(alpha),)
    return CoefficientRecurrence(spec, eq, alpha, bad)


# coefficient tracks

@dataclass(frozen=True)
class CoefficientTrack:
    index: int
    path: ComplexPath
    values: tuple
    constant: object
    matched: bool
    residual: object = 0

    def to_json(self) -> dict:
        def pair(x):
            return [mp.nstr(x.real, 25), mp.nstr(x.imag, 25)]
        return {"index": self.index, "constant": pair(to_mpc(self.constant)), "matched": self.matched,
                "residual": mp.nstr(self.residual, 5), "values": [pair(v) for v in self.values]}


def _radius(cs: Sequence, tail: int = 8):
    best = mp.inf
    n = len(cs)
    for k in range(max(1, n - tail), n):
        c = abs(cs[k])
        if c > 0:
            best = min(best, c ** (-mp.mpf(1) / k))
    return best


def _lseries_gen_mul(S: tuple, g: GenSeries, n: int) -> GenSeries:
    vS, cS = S
    return GenSeries([(rho + vS, ser_mul(cS, cs, n)) for rho, cs in g.parts])


def _chain_sources(rec: CoefficientRecurrence, bs: BranchSeries, sv: tuple, n: int, idx: int):
    """Laurent series of P_2 / ((idx - alpha) sigma_v) multiplying a_(idx-1)''."""
    p2 = (0, list(taylor(rec.spec.coeffs[2], bs.center, n)))
    S = ldiv(p2, sv, n)
    scale = 1 / (idx - _num(rec.alpha))
    return S[0], [scale * x for x in S[1]]


def _n_tracks(rec: CoefficientRecurrence, wanted: int) -> int:
    N = rec.order
    if N > 2 and wanted > 1:
        raise TransSeriesError("coefficient tracks beyond a_0 are implemented for N <= 2")
    ia = None
    a = rec.alpha
    if isinstance(a, Fraction) and a.denominator == 1 and a >= 1:
        ia = int(a)
    if ia is not None:
        wanted = min(wanted, ia)
    return wanted


def propagate_coefficients(rec: CoefficientRecurrence, init: Sequence, path: ComplexPath,
                           chiprime0, z_star=None, gamma: int = 1,
                           taylor_order: int | None = None) -> list[CoefficientTrack]:
    """Solve the a_i chain along ``path``.

    When ``z_star`` is given (and equals the path start) the entries of
    ``init`` are matched constants a_(i,0) in a_i ~ a_(i,0) (z - z_star)^beta;
    otherwise they are the values a_i(path[0]). ``chiprime0`` selects the
    branch: chi'(path[0]), or the leading coefficient of chi'/(z-z_star)^(gamma-1)
    at a boundary layer. Tracks stop at index alpha - 1 when alpha is a
    positive integer, since a_alpha is not fixed by the recurrence.
    """
    N = rec.order
    m = _n_tracks(rec, len(init))
    K = taylor_order or max(30, mp.prec // 4)
    eq = rec.equation
    zs = list(path.samples)
    tol = mp.mpf(2) ** (-mp.prec / 4)
    values = [[] for _ in range(m)]
    resid = [mp.mpf(0)] * m

    def chain_at(bs: BranchSeries, start_vals: list, gen: bool, beta=None):
        sv, R = _transport_series(eq, bs, K)
        series = []
        for i in range(m):
            if N == 1:
                f = None
            elif i:
                S = _chain_sources(rec, bs, sv, K, i)
                f = _lseries_gen_mul(S, series[i - 1].deriv().deriv(), K)
            else:
                f = None
            if gen:
                series.append(solve_first_order(R, f, K, beta, start_vals[i]))
            else:
                if R[0] < 0 and any(abs(x) > 0 for x in R[1][:-R[0]]):
                    raise TransSeriesError(f"singular point of the transport equation near {mp.nstr(bs.center, 8)}")
                series.append(_taylor_solve(R, f, K, start_vals[i]))
        return series, R

    # first center
    z0 = zs[0]
    if z_star is not None:
        if abs(to_mpc(z_star) - z0) > mp.mpf(2) ** (-mp.prec / 2) * max(1, abs(z0)):
            raise ValueError("the path must start at z_star")
        bs = branch_series(eq, z0, chiprime0, K, gamma)
        _, R = _transport_series(eq, bs, K)
        beta = lcoeff(R, -1)
        qb = snap_rational(beta.real) if abs(beta.imag) < tol else None
        beta = mp.mpf(qb.numerator) / qb.denominator if qb is not None else beta
        series, R = chain_at(bs, list(init[:m]), True, beta)
        rho = _radius([lcoeff(R, k) for k in range(K)])
        rho = min(rho, _radius(bs.scaled))
        for i in range(m):
            values[i].append(_gen_value_at_zero(series[i]))
    else:
        v0 = to_mpc(chiprime0)
        bs = branch_series(eq, z0, v0, K, 1)
        series, R = chain_at(bs, [to_mpc(x) for x in init[:m]], False)
        rho = min(_radius(R[1]), _radius(bs.scaled))
        for i in range(m):
            values[i].append(series[i](0))
    center = z0
    at_star = z_star is not None
    for target in zs[1:]:
        if at_star and abs(target - center) <= rho / 3:
            # still inside the disc of the local Frobenius expansion
            for i in range(m):
                values[i].append(series[i](target - center))
            continue
        at_star = False
        while True:
            h = target - center
            step = h
            if abs(h) > rho / 3:
                step = h * (rho / 3) / abs(h)
            znew = center + step
            vals = [s(step) for s in series]
            dvals = [s.deriv()(step) for s in series]
            d2 = [s.deriv().deriv()(step) for s in series]
            vguess = _eval_plain(bs.chiprime(), step)
            bs = branch_series(eq, znew, vguess, K, 1)
            series, R = chain_at(bs, vals, False)
            v = bs.scaled[0]
            for i in range(m):
                r = rec.residual(i, znew, v, vals[i], dvals[i], d2[i - 1] if i else 0) if N > 1 else \
                    abs(dvals[i]) / max(abs(vals[i]), mp.mpf(2) ** (-mp.prec))
                if vals[i] == 0 and dvals[i] == 0:
                    r = mp.mpf(0)
                resid[i] = max(resid[i], r)
            rho = min(_radius(R[1]), _radius(bs.scaled))
            center = znew
            if step == h:
                break
        for i in range(m):
            values[i].append(series[i](0))
    for i in range(m):
        if resid[i] > tol:
            raise TransSeriesError(f"track {i} residual {mp.nstr(resid[i], 5)} exceeds tolerance")
    return [CoefficientTrack(i, path, tuple(values[i]), init[i], z_star is not None, resid[i])
            for i in range(m)]


def _gen_value_at_zero(g: GenSeries):
    acc = mp.mpc(0)
    for rho, cs in g.parts:
        r = to_mpc(rho)
        if r == 0:
            acc += cs[0]
        elif r.real > 0:
            continue
        elif any(c != 0 for c in cs):
            return mp.mpc(mp.inf)
    return acc


def _eval_plain(cs, t):
    acc = mp.mpc(0)
    for c in reversed(cs):
        acc = acc * t + c
    return acc


class _Taylor(GenSeries):
    pass


def _taylor_solve(R: tuple, f: GenSeries | None, K: int, a0) -> GenSeries:
    """Taylor solution of a' = R a + f at a regular point."""
    Rt = [lcoeff(R, k) for k in range(K)]
    fs = [mp.mpc(0)] * K
    if f is not None:
        for rho, cs in f.parts:
            r = int(mp.nint(to_mpc(rho).real))
            for j, c in enumerate(cs):
                if 0 <= r + j < K:
                    fs[r + j] += c
    a = [to_mpc(a0)]
    for j in range(K - 1):
        acc = fs[j] + sum(Rt[l] * a[j - l] for l in range(j + 1))
        a.append(acc / (j + 1))
    return GenSeries([(mp.mpf(0), a)])


# inner problem

@dataclass(frozen=True)
class InnerProblem:
    """sum_d q_d(s) phi^(d)(s) = 0 with q_d coefficient lists (ascending in s)."""

    k: int
    beta: object
    coeffs: tuple
    initial: tuple
    alpha: object
    chi0: object
    gamma: int
    decoupled: bool
    singular_point: object = 1

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def exact_coefficients(self) -> list:
        return [[snap_complex(c) for c in q] for q in self.coeffs]

    def exact_initial(self) -> list:
        return [snap_complex(c) for c in self.initial]

    def leading_at(self, s):
        acc = mp.mpc(0)
        for c in reversed(self.coeffs[-1]):
            acc = acc * s + c
        return acc


def _op_apply(op: dict, c, gamma) -> dict:
    """(c - gamma s D) applied on the left of sum_d q_d(s) D^d."""
    out: dict = {}

    def add(d, q):
        cur = out.get(d, [])
        if len(cur) < len(q):
            cur = cur + [mp.mpc(0)] * (len(q) - len(cur))
        out[d] = [a + (q[j] if j < len(q) else 0) for j, a in enumerate(cur)]

    for d, q in op.items():
        add(d, [c * x for x in q])
        dq = [j * q[j] for j in range(1, len(q))]
        add(d, [mp.mpc(0)] + [-gamma * x for x in dq])    # -gamma s q'
        add(d + 1, [mp.mpc(0)] + [-gamma * x for x in q])  # -gamma s q D
    return out


def inner_operator(p: Sequence, chi0, gamma: int, beta) -> list:
    """Coefficients of sum_i p_i chi0^i prod_(j<i) (-beta - gamma(N-i) - j - gamma s D) D^(N-i)."""
    N = len(p) - 1
    total: dict = {}
    for i, pi in enumerate(p):
        if pi == 0:
            continue
        op = {N - i: [mp.mpc(1)]}
        for j in range(i):
            op = _op_apply(op, -beta - gamma * (N - i) - j, gamma)
        scale = pi * chi0 ** i
        for d, q in op.items():
            cur = total.get(d, [])
            q = [scale * x for x in q]
            n = max(len(cur), len(q))
            total[d] = [(cur[j] if j < len(cur) else 0) + (q[j] if j < len(q) else 0) for j in range(n)]
    out = []
    for d in range(N + 1):
        q = total.get(d, [mp.mpc(0)])
        while len(q) > 1 and q[-1] == 0:
            q = q[:-1]
        out.append(tuple(mp.mpc(x) for x in q))
    return out


def build_inner_problem(spec: ODESpec, branch: SingulantBranch, z_star, exponents: LocalExponents,
                        k: int, series: PerturbativeSeries) -> InnerProblem:
    """Inner ODE in s = w/chi for the z^(k - delta) layer, with initial data from the germ."""
    z_star = to_mpc(z_star)
    N = spec.order
    gamma = exponents.gamma
    eq = singulant_equation(spec)
    n_loc = 8
    bs = branch_series(eq, z_star, gamma * branch.local_coefficient(), n_loc + k + 2, gamma)
    chi = bs.chi()
    chi0 = chi[gamma]
    tol = mp.mpf(2) ** (-mp.prec / 2)
    decoupled = all(abs(c) <= tol * abs(chi0) for c in chi[gamma + 1:])
    p = []
    for i, P in enumerate(spec.coeffs):
        need = (gamma - 1) * (N - i)
        v, cs = laurent(P, z_star, n_loc)
        if P.is_zero():
            p.append(mp.mpc(0))
            continue
        if v < need and any(abs(lcoeff((v, cs), j)) > tol for j in range(v, need)):
            raise TransSeriesError(f"P_{i} is too singular at z_star for the inner scaling")
        p.append(lcoeff((v, cs), need))
        if any(abs(lcoeff((v, cs), j)) > tol * max(1, abs(p[-1])) for j in range(need + 1, need + n_loc)):
            decoupled = False
    if abs(p[-1]) <= tol:
        raise TransSeriesError("leading coefficient P_N vanishes at z_star")
    beta_in = exponents.delta - k
    coeffs = inner_operator(p, chi0, gamma, beta_in)
    lead1 = sum(coeffs[-1])
    scale = max(abs(c) for q in coeffs for c in q)
    if abs(lead1) > mp.mpf(2) ** (-mp.prec / 3) * scale:
        raise TransSeriesError("the inner operator is not singular at s = 1")
    # phi_k^(n)(0) = n! [t^(k - delta)] u_n chi^n with u_n = y_(n+1)/n!
    chi_scaled = [c / chi0 for c in chi[gamma:]]
    initial = []
    for n in range(N):
        target = k - exponents.delta - gamma * n
        y = series[n + 1] if n + 1 < len(series) else RatFunc.const(0)
        if y.is_zero():
            initial.append(mp.mpc(0))
            continue
        length = max(1, target + 8)
        v, cs = laurent(y, z_star, length + 2)
        need = target - v + 1
        if need <= 0:
            initial.append(mp.mpc(0))
            continue
        pw = ser_pow(chi_scaled[:need] + [mp.mpc(0)] * max(0, need - len(chi_scaled)), n, need) \
            if n else [mp.mpc(1)] + [mp.mpc(0)] * (need - 1)
        cs = cs + [mp.mpc(0)] * max(0, need - len(cs))
        val = sum(cs[j] * pw[need - 1 - j] for j in range(need)) * chi0 ** n
        initial.append(val)   # n! cancels the 1/n! in u_n
    return InnerProblem(k, beta_in, tuple(coeffs), tuple(initial), exponents.alpha, chi0, gamma, decoupled)


def solve_inner_series(problem: InnerProblem, M: int) -> list:
    """Taylor coefficients phi_0..phi_M of the inner solution at s = 0."""
    q = problem.coeffs
    N = problem.order
    lead = q[N][0]
    if abs(lead) <= mp.mpf(2) ** (-mp.prec / 2) * max(abs(c) for qq in q for c in qq):
        raise TransSeriesError("s = 0 is a singular point of the inner ODE (nested boundary layer)")
    phi = [to_mpc(problem.initial[j]) / mp.factorial(j) for j in range(N)]
    if all(x == 0 for x in phi):
        return [mp.mpc(0)] * (M + 1)

    def ff(m, d):
        out = mp.mpf(1)
        for r in range(d):
            out *= m - r
        return out

    for n in range(0, M + 1 - N):
        acc = mp.mpc(0)
        for d in range(N + 1):
            for j, c in enumerate(q[d]):
                if c == 0 or (d == N and j == 0):
                    continue
                m = n - j + d
                if n - j < 0:
                    continue
                acc += c * ff(m, d) * phi[m]
        phi.append(-acc / (lead * ff(n + N, N)))
    return phi[: M + 1]


def connection_constants(coeffs: Sequence, alpha, depth: int = 3, count: int = 2,
                         window: float = 0.4, stability_tol=1e-6, fit_tol=None) -> list:
    """C_0, C_1, ... in phi_n ~ Gamma(n+alpha)/Gamma(n+1) (C_0 + C_1/(n+alpha-1) + ...).

    Least squares over the last ``window`` fraction of the coefficients with
    ``count + depth`` terms; C_0 must be stable under a shift of the window.
    """
    cs = [to_mpc(c) for c in coeffs]
    if all(c == 0 for c in cs):
        return [mp.mpc(0)] * count
    alpha = to_mpc(_num(_frac_or_mpc(alpha)))
    M = len(cs) - 1
    if M < 20:
        raise ConnectionFitError("at least 20 coefficients are needed")
    nterms = count + depth

    def fit(lo, hi):
        rows, rhs = [], []
        for n in range(lo, hi + 1):
            g = mp.exp(mp.loggamma(n + alpha) - mp.loggamma(n + 1))
            y = cs[n] / g
            row, b = [], mp.mpc(1)
            for j in range(nterms):
                row.append(b)
                b = b / (n + alpha - 1 - j)
            rows.append(row)
            rhs.append(y)
        A = mp.matrix(rows)
        x = mp.qr_solve(A, mp.matrix(rhs))[0]
        sol = [x[j] for j in range(nterms)]
        res = max(abs(sum(r[j] * sol[j] for j in range(nterms)) - y) / max(abs(y), mp.mpf(2) ** -mp.prec)
                  for r, y in zip(rows, rhs))
        return sol, res

    lo = int(M * (1 - window))
    sol, res = fit(lo, M)
    shift = max(2, (M - lo) // 8)
    sol2, _ = fit(lo - shift, M - shift)
    if fit_tol is None:
        fit_tol = mp.mpf(10) ** -8
    if res > fit_tol:
        raise ConnectionFitError(f"fit residual {mp.nstr(res, 5)} too large (wrong alpha or a nearer singularity)")
    ref = max(abs(sol[0]), mp.mpf(2) ** (-mp.prec / 2))
    if abs(sol[0] - sol2[0]) > stability_tol * ref:
        raise ConnectionFitError("C_0 is not stable across window shifts")
    return sol[:count]


def local_from_connection(constants: Sequence, alpha) -> list:
    """D_i in phi ~ sum D_i (1-s)^(i-alpha): D_i = C_i Gamma(alpha - i)."""
    alpha = to_mpc(_num(_frac_or_mpc(alpha)))
    out = []
    for i, c in enumerate(constants):
        a = alpha - i
        if a.imag == 0 and a.real <= 0 and a.real == int(a.real):
            out.append(mp.mpc(0))
        else:
            out.append(to_mpc(c) * mp.gamma(a))
    return out


def matched_constants(exponents: LocalExponents, chi0, inner_local: dict, count: int) -> list:
    """a_(i,0) = (-chi0)^(alpha-i) D_(k_i, i) with k_i = beta - gamma(alpha - i) + delta."""
    out = []
    alpha = exponents.alpha
    for i in range(count):
        k = exponents.beta - exponents.gamma * (alpha - i) + exponents.delta
        if not _is_nonneg_int(_frac_or_mpc(k)):
            out.append(mp.mpc(0))
            continue
        D = inner_local.get(int(k))
        d = D[i] if D is not None and i < len(D) else mp.mpc(0)
        out.append((-to_mpc(chi0)) ** (to_mpc(_num(alpha)) - i) * d)
    return out


def inner_indices(exponents: LocalExponents, count: int) -> list[int]:
    ks = []
    for i in range(count):
        k = _frac_or_mpc(exponents.beta - exponents.gamma * (exponents.alpha - i) + exponents.delta)
        if _is_nonneg_int(k):
            ks.append(int(k))
    return sorted(set(ks))


# components and jumps

@dataclass
class TransSeriesComponent:
    branch: SingulantBranch
    exponents: LocalExponents
    tracks: list
    order: int
    constants: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def sample_index(self, z) -> int:
        z = to_mpc(z)
        zs = self.branch.path.samples
        j = min(range(len(zs)), key=lambda k: abs(zs[k] - z))
        if abs(zs[j] - z) > mp.mpf(2) ** (-mp.prec / 3) * max(1, abs(z)):
            raise ValueError("z is not a sample of the component path")
        return j

    def to_json(self) -> dict:
        def pair(x):
            x = to_mpc(x)
            return [mp.nstr(x.real, 25), mp.nstr(x.imag, 25)]
        return {"branch": self.branch.to_json(), "exponents": self.exponents.to_json(),
                "order": self.order, "matched_constants": [pair(c) for c in self.constants],
                "tracks": [t.to_json() for t in self.tracks], "notes": list(self.notes)}


def stokes_jump(component: TransSeriesComponent, z, epsilon, order: int = 0):
    """Counterclockwise Hankel jump of e^(-w/eps) y_B about chi(z), through ``order``."""
    j = component.sample_index(z)
    chi = component.branch.chi[j]
    alpha = component.exponents.alpha
    ia = component.exponents.integer_alpha
    coeffs = []
    for i in range(order + 1):
        if i < len(component.tracks):
            coeffs.append(component.tracks[i].values[j])
        elif ia is not None and i >= ia:
            coeffs.append(mp.mpc(0))   # 1/Gamma(alpha - i) vanishes
        else:
            raise ValueError(f"order {order} exceeds the available tracks")
    return jump_from_local_expansion(chi, epsilon, _num(alpha), coeffs, "w-chi")


def general_switch(g, chi, z, epsilon):
    """2 pi i eps g(chi/eps, z) e^(-chi/eps); g is a callable or a fitted late-term model."""
    fn = g.g if hasattr(g, "g") else g
    return switch_from_late_terms(fn, chi, z, epsilon)


def build_component(spec: ODESpec, series: PerturbativeSeries, branch: SingulantBranch,
                    order: int = 1, inner_terms: int = 200, depth: int = 3) -> TransSeriesComponent:
    """Exponents, inner matching and coefficient tracks for one singulant branch."""
    exps = local_exponents(series, branch, spec=spec)
    rec = coefficient_recurrence(spec, branch, exps.alpha)
    m = _n_tracks(rec, order + 1)
    notes = []
    if m < order + 1:
        notes.append(f"a_{m} is not fixed by the recurrence (n = alpha); higher tracks omitted")
    chi0 = None
    inner_local = {}
    for k in inner_indices(exps, m):
        prob = build_inner_problem(spec, branch, branch.z_star, exps, k, series)
        chi0 = prob.chi0
        if not prob.decoupled:
            notes.append(f"inner problem k={k} uses leading local forms only")
        phi = solve_inner_series(prob, inner_terms)
        C = connection_constants(phi, exps.alpha, depth=depth, count=m)
        inner_local[k] = local_from_connection(C, exps.alpha)
    if chi0 is None:
        chi0 = branch.local_coefficient()
    consts = matched_constants(exps, chi0, inner_local, m)
    tracks = propagate_coefficients(rec, consts, branch.path, exps.gamma * branch.local_coefficient(),
                                    z_star=branch.z_star, gamma=exps.gamma)
    return TransSeriesComponent(branch, exps, tracks, order, consts, notes)


# first-order closed forms

def _callable(f):
    if isinstance(f, RatFunc):
        return f.eval_mpc
    return f


def first_order_closed_form(G, H, w, z, chi: Callable | None = None, steps: int = 16,
                            maxiter: int = 60):
    """y_B(w, z) = H(zeta)/G(zeta) with chi(zeta) = chi(z) - w, chi' = G.

    zeta is continued from zeta = z at w = 0 by Newton steps along a straight
    homotopy in w. ``chi`` is an antiderivative of G; without it the integral
    of G is taken numerically along the segment from z.
    """
    Gf, Hf = _callable(G), _callable(H)
    w, z = to_mpc(w), to_mpc(z)
    if w == 0:
        return Hf(z) / Gf(z)
    if chi is not None:
        cz = chi(z)

        def phi(zeta, target):
            return chi(zeta) - cz + target
    else:
        def phi(zeta, target):
            return mp.quad(lambda t: Gf(z + t * (zeta - z)), [0, 1]) * (zeta - z) + target

    tol = mp.mpf(2) ** (-mp.prec + 16)
    zeta = z
    for k in range(1, steps + 1):
        target = w * k / steps
        g = Gf(zeta)
        zeta = zeta - (w / steps) / g
        for _ in range(maxiter):
            g = Gf(zeta)
            if g == 0:
                raise ClosedFormError("chi' vanishes: turning point of chi")
            d = phi(zeta, target) / g
            zeta -= d
            if abs(d) <= tol * max(1, abs(zeta)):
                break
        else:
            raise ClosedFormError("Newton iteration for chi^(-1) did not converge")
    return Hf(zeta) / Gf(zeta)


def inhomogeneous_borel_integral(H_B: Callable, w, z, H0=None):
    """y_B = H0(z - w) + integral_(z-w)^z H_B(w - z + t, t) dt for d_z y + d_w y = H_B."""
    w, z = to_mpc(w), to_mpc(z)
    base = mp.mpc(0)
    if H0 is not None:
        base = _callable(H0)(z - w)
    a = z - w
    val = mp.quad(lambda u: H_B(w - z + a + u * w, a + u * w), [0, 1]) * w
    return base + val
