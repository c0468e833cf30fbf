"""Independent numerical checks: Taylor-series ODE integration, direct jump
measurement between Laplace rays, and late-term model fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np
from mpmath import mp
from scipy.optimize import least_squares

from .borel import LaplaceConfig, PadeApproximant, continuation, laplace_sum
from .exact import RatFunc
from .local import taylor
from .perturbative import BorelGerm, ODESpec, PerturbativeSeries, borel_germ, expand_perturbative
from .precision import resolve, to_mpc
from .series import ser_mul
from .singulant import ComplexPath


class StepSizeError(ArithmeticError):
    pass


class NoiseFloorError(ArithmeticError):
    def __init__(self, message: str, noise=None):
        super().__init__(message)
        self.noise = noise


class FitError(ArithmeticError):
    pass


# ODE integration

@dataclass(frozen=True)
class ODESolutionSample:
    path: ComplexPath
    values: tuple        # per sample: (y, y', ..., y^(N-1))
    epsilon: object
    errors: tuple        # accumulated local error estimates per sample
    steps: int = 0

    def y(self, k: int = -1):
        return self.values[k][0]


def _operator_polys(spec: ODESpec, z_label) -> tuple[list, list]:
    """For the eps-variable form: polynomials q_d(x) with sum_d q_d D^d = sum_i P_i (x^2 D)^i."""
    z_label = to_mpc(z_label)
    N = spec.order
    total = [[mp.mpc(0)] for _ in range(N + 1)]
    op = {0: [mp.mpc(1)]}  # (x^2 D)^i as {d: poly}
    for i in range(N + 1):
        p = spec.coeffs[i].eval_mpc(z_label)
        for d, q in op.items():
            cur = total[d]
            if len(cur) < len(q):
                cur.extend([mp.mpc(0)] * (len(q) - len(cur)))
            for j, c in enumerate(q):
                cur[j] += p * c
        new: dict = {}
        for d, q in op.items():
            # x^2 D (q D^d) = x^2 q' D^d + x^2 q D^(d+1)
            dq = [j * q[j] for j in range(1, len(q))]
            for key, poly in ((d, [mp.mpc(0)] * 2 + dq), (d + 1, [mp.mpc(0)] * 2 + list(q))):
                cur = new.setdefault(key, [])
                if len(cur) < len(poly):
                    cur.extend([mp.mpc(0)] * (len(poly) - len(cur)))
                for j, c in enumerate(poly):
                    cur[j] += c
        op = new
    forcing = [mp.mpc(0)] * (len(spec.forcing) + 1)
    for k in range(len(spec.forcing)):
        forcing[k] = spec.F(k).eval_mpc(z_label)
    return total, forcing


def _shift_poly(cs: list, a, n: int) -> list:
    cs = list(cs)
    m = len(cs)
    for i in range(m):
        for k in range(m - 2, i - 1, -1):
            cs[k] = cs[k] + a * cs[k + 1]
    return (cs + [mp.mpc(0)] * n)[:n]


class _Coefficients:
    """Taylor data of sum_d c_d(x) y^(d) = f(x) about any center."""

    def __init__(self, spec: ODESpec, epsilon, z_label):
        self.spec = spec
        self.N = spec.order
        if spec.independent == "epsilon":
            self.polys, self.force = _operator_polys(spec, z_label)
        else:
            self.eps = to_mpc(epsilon)

    def at(self, x, n: int):
        if self.spec.independent == "epsilon":
            cs = [_shift_poly(q, x, n) for q in self.polys]
            f = _shift_poly(self.force, x, n)
            return cs, f
        cs = []
        for i, P in enumerate(self.spec.coeffs):
            e = self.eps ** i
            cs.append([e * c for c in taylor(P, x, n)])
        f = [mp.mpc(0)] * n
        e = mp.mpc(1)
        for k in range(len(self.spec.forcing)):
            t = taylor(self.spec.F(k), x, n)
            f = [a + e * b for a, b in zip(f, t)]
            e *= self.eps
        return cs, f


def _local_taylor(cs: list, f: list, init: list, K: int) -> list:
    N = len(cs) - 1
    lead = cs[N][0]
    if lead == 0:
        raise StepSizeError("leading coefficient vanishes at the expansion point")
    Y = [to_mpc(init[j]) / mp.factorial(j) for j in range(N)]

    def ff(m, d):
        out = mp.mpf(1)
        for r in range(d):
            out *= m - r
        return out

    for m in range(K - N + 1):
        acc = f[m] if m < len(f) else mp.mpc(0)
        for d in range(N + 1):
            cd = cs[d]
            for l in range(0, min(m, len(cd) - 1) + 1):
                if d == N and l == 0:
                    continue
                c = cd[l]
                if c != 0:
                    acc -= c * ff(m - l + d, d) * Y[m - l + d]
        Y.append(acc / (lead * ff(m + N, N)))
    return Y


def _eval_derivs(Y: list, h, N: int) -> list:
    out = []
    cur = list(Y)
    for _ in range(N):
        acc = mp.mpc(0)
        for c in reversed(cur):
            acc = acc * h + c
        out.append(acc)
        cur = [k * cur[k] for k in range(1, len(cur))]
    return out


def integrate_ode(spec: ODESpec, epsilon, path, initial: Sequence, order: int | None = None,
                  z_label=0, tol=None, precision: int | None = None) -> ODESolutionSample:
    """Taylor-series marching along the samples of ``path``.

    For the z-form the independent variable is z and ``epsilon`` is fixed; for
    the eps-form the path lives in the eps-plane and the P_i are evaluated at
    ``z_label``. Steps are chosen so the last two retained Taylor terms stay
    below ``tol`` (default 2^(-precision/2)) relative to the solution.
    """
    prec = resolve(precision)
    if isinstance(path, ComplexPath):
        zs = list(path.samples)
    else:
        zs = [to_mpc(p) for p in path]
        path = ComplexPath(tuple(zs))
    with mp.workprec(prec + 16):
        K = order or max(30, int(prec * 0.2))
        if tol is None:
            tol = mp.mpf(2) ** (-prec / 2)
        coef = _Coefficients(spec, epsilon, z_label)
        N = spec.order
        state = [to_mpc(v) for v in initial]
        if len(state) != N:
            raise ValueError(f"need {N} initial values")
        values = [tuple(state)]
        errors = [mp.mpf(0)]
        err_acc = mp.mpf(0)
        steps = 0
        x = zs[0]
        for target in zs[1:]:
            total = abs(target - x)
            while x != target:
                cs, f = coef.at(x, K + 1)
                Y = _local_taylor(cs, f, state, K)
                scale = max(abs(v) for v in state) or mp.mpf(1)
                h_max = mp.inf
                for j in (K - 1, K):
                    if Y[j] != 0:
                        h_max = min(h_max, (tol * scale / abs(Y[j])) ** (mp.mpf(1) / j))
                d = target - x
                if abs(d) <= h_max:
                    h = d
                else:
                    h = d * h_max / abs(d)
                if abs(h) < mp.mpf(2) ** (-prec / 4) * max(total, mp.mpf(2) ** (-prec / 4)):
                    raise StepSizeError(f"step size underflow near {mp.nstr(x, 10)}")
                state = _eval_derivs(Y, h, N)
                err_acc += (abs(Y[K]) * abs(h) ** K + abs(Y[K - 1]) * abs(h) ** (K - 1))
                x = target if h == d else x + h
                steps += 1
            values.append(tuple(+v for v in state))
            errors.append(+err_acc)
        return ODESolutionSample(path, tuple(values), to_mpc(epsilon) if epsilon is not None else None,
                                 tuple(errors), steps)


def ode_residual(spec: ODESpec, epsilon, x, derivs: Sequence, z_label=0):
    """Relative residual of the ODE at x given (y, y', ..., y^(N))."""
    coef = _Coefficients(spec, epsilon, z_label)
    cs, f = coef.at(to_mpc(x), 1)
    terms = [cs[d][0] * derivs[d] for d in range(len(cs))]
    lhs = sum(terms)
    scale = max([abs(t) for t in terms] + [abs(f[0]), mp.mpf(2) ** (-mp.prec)])
    return abs(lhs - f[0]) / scale


def asymptotic_initial_values(series: PerturbativeSeries, epsilon, z=0) -> list:
    """Optimally truncated sum y_n eps^n and its first N-1 derivatives in the ODE variable."""
    spec = series.spec
    N = spec.order
    eps = to_mpc(epsilon)
    z = to_mpc(z)
    terms = [series[n].eval_mpc(z) * eps ** n for n in range(len(series))]
    mags = [abs(t) for t in terms]
    stop = len(terms)
    for n in range(2, len(terms)):
        if mags[n] > mags[n - 1] and mags[n - 1] != 0:
            stop = n
            break
    out = []
    if spec.independent == "epsilon":
        for d in range(N):
            acc = mp.mpc(0)
            for n in range(d, stop):
                c = series[n].eval_mpc(z)
                fall = mp.mpf(1)
                for r in range(d):
                    fall *= n - r
                acc += c * fall * eps ** (n - d)
            out.append(acc)
        return out
    for d in range(N):
        acc = mp.mpc(0)
        for n in range(stop):
            r = series[n]
            for _ in range(d):
                r = r.derivative()
            acc += r.eval_mpc(z) * eps ** n
        out.append(acc)
    return out


# jump measurement

@dataclass(frozen=True)
class JumpMeasurement:
    value: mpmath.mpc
    noise: object
    thetas: tuple
    epsilon: object

    def __complex__(self):
        return complex(self.value)

    def to_json(self) -> dict:
        return {"value": [mp.nstr(self.value.real, 30), mp.nstr(self.value.imag, 30)],
                "noise": mp.nstr(self.noise, 5), "thetas": [mp.nstr(t, 15) for t in self.thetas],
                "epsilon": [mp.nstr(to_mpc(self.epsilon).real, 20), mp.nstr(to_mpc(self.epsilon).imag, 20)]}


def measure_jump(source, epsilon, z_probe=None, geometry: tuple | None = None, terms: int = 200,
                 pade_orders: tuple | None = None, quadrature=None,
                 precision: int | None = None) -> JumpMeasurement:
    """L(theta_minus) - L(theta_plus): the counterclockwise Stokes jump between two rays.

    ``source`` is an ODESpec (expanded to ``terms`` and continued by Pade at
    z_probe), a BorelGerm, a PadeApproximant, or a callable Borel function.
    Default rays sit a quarter turn either side of arg eps. Both rays share
    the same continuation and breakpoint grid, so the perturbative parts
    cancel to working precision.
    """
    prec = resolve(precision)
    with mp.workprec(prec):
        eps = to_mpc(epsilon)
        if geometry is None:
            a = mp.arg(eps)
            geometry = (a - mp.pi / 4, a + mp.pi / 4)
        tm, tp = (mp.mpf(t) for t in geometry)
        if isinstance(source, ODESpec):
            series = expand_perturbative(source, terms)
            source = borel_germ(series, z_probe if z_probe is not None else 0, prec)
        cfg = LaplaceConfig(quadrature=quadrature) if quadrature is not None else LaplaceConfig()

        def jump(f, constant):
            sing = None if isinstance(f, PadeApproximant) else []
            lm = laplace_sum(f, eps, tm, cfg, sing, constant, prec)
            lp = laplace_sum(f, eps, tp, cfg, sing, constant, prec)
            err = lm.error + lp.error + mp.mpf(2) ** (-prec + 8) * max(abs(lm.value), abs(lp.value))
            return lm.value - lp.value, err

        if isinstance(source, BorelGerm):
            # two continuations; their disagreement is part of the noise
            L, M = pade_orders or _default_orders(len(source))
            value, noise = jump(continuation(source, (L, M), prec), source.constant)
            L2, M2 = max(1, L - 10), max(1, M - 10)
            other, err2 = jump(continuation(source, (L2, M2), prec), source.constant)
            noise += err2 + abs(other - value)
        else:
            value, noise = jump(source, None)
        if abs(value) <= 10 * noise:
            raise NoiseFloorError(f"jump {mp.nstr(abs(value), 5)} is below the noise floor "
                                  f"{mp.nstr(noise, 5)}", noise)
        return JumpMeasurement(value, noise, (tm, tp), eps)


def _default_orders(n: int) -> tuple:
    # far-diagonal orders from a long germ tend to carry spurious doublets near
    # the rays; a moderate order already resolves the nearest singularities
    L = min(40, (n - 1) // 2)
    return L, L + 1 if 2 * L + 1 < n else L


# late-term fitting

MODELS = ("power", "log-over-s", "power-log", "power-log2")
_LOG_POWER = {"power": 0, "log-over-s": 1, "power-log": 1, "power-log2": 2}


@dataclass
class LateTermFit:
    """f_n ~ chi^(-n) n^(alpha-1) sum_(j<=p) sum_k c[j][k] (log n)^j n^(-k).

    ``residual`` is the largest relative deviation over ``window``.
    """

    model: str
    chi: mpmath.mpc
    alpha: object
    log_power: int
    coefficients: list
    residual: float
    window: tuple
    candidates: dict = field(default_factory=dict)
    custom: Callable | None = None

    def value(self, n):
        if self.custom is not None:
            return self.custom(n)
        n = mp.mpf(n)
        ln = mp.log(n)
        acc = mp.mpc(0)
        for j, row in enumerate(self.coefficients):
            for k, c in enumerate(row):
                acc += to_mpc(complex(c)) * ln ** j * n ** (-k)
        return acc * n ** (mp.mpf(self.alpha) - 1) * to_mpc(self.chi) ** (-n)

    def g(self, n, z=None):
        """n chi^n f_n continued to complex n, so that u_n ~ g(n)/(n chi^n)."""
        n = to_mpc(n)
        ln = mp.log(n)
        acc = mp.mpc(0)
        for j, row in enumerate(self.coefficients):
            for k, c in enumerate(row):
                acc += to_mpc(complex(c)) * ln ** j * n ** (-k)
        return acc * n ** mp.mpf(self.alpha)

    def leading(self) -> tuple:
        """(c, alpha, p) of the leading behaviour c n^alpha (log n)^p of g."""
        return complex(self.coefficients[self.log_power][0]), self.alpha, self.log_power

    def leading_switch(self) -> str:
        c, a, p = self.leading()
        cs = _fmt_complex(c)
        parts = ["2*pi*i*eps", f"({cs})"]
        if abs(a) > 1e-9:
            parts.append(f"(chi/eps)^{_fmt_real(a)}")
        if p:
            parts.append("log(chi/eps)" + (f"^{p}" if p > 1 else ""))
        parts.append("exp(-chi/eps)")
        return "*".join(parts)

    def switch_expression(self, max_power: int = 3, tol: float = 1e-8):
        """Leading Stokes contribution 2 pi i eps g(chi/eps) e^(-chi/eps) as a sympy expression.

        The fitted leading coefficient is identified as r chi^m with r a small
        rational, so the result is symbolic in (eps, chi).
        """
        import sympy as sp
        eps, chi = sp.symbols("epsilon chi", positive=True)
        c, a, p = self.leading()
        r, m = _identify_monomial(c, complex(self.chi), max_power, tol)
        if r is None:
            raise FitError(f"leading coefficient {c} is not a rational multiple of a power of chi")
        a_sym = sp.nsimplify(round(a) if abs(a - round(a)) < 1e-6 else a, rational=True)
        n = chi / eps
        expr = 2 * sp.pi * sp.I * eps * r * chi ** m * n ** a_sym * sp.log(n) ** p * sp.exp(-chi / eps)
        return expr, eps, chi

    def to_json(self) -> dict:
        return {"model": self.model, "chi": [float(to_mpc(self.chi).real), float(to_mpc(self.chi).imag)],
                "alpha": float(self.alpha), "log_power": self.log_power,
                "coefficients": [[[c.real, c.imag] for c in row] for row in self.coefficients],
                "residual": self.residual, "window": list(self.window),
                "candidates": {k: v for k, v in self.candidates.items()}}


def _identify_monomial(c: complex, chi: complex, max_power: int, tol: float):
    """(r, m) with c = r chi^m, r a rational of small denominator, smallest |m| first."""
    import sympy as sp
    from fractions import Fraction
    for m in sorted(range(-max_power, max_power + 1), key=abs):
        q = c / chi ** m
        if abs(q.imag) > tol * max(1.0, abs(q)):
            continue
        f = Fraction(q.real).limit_denominator(1000)
        if abs(float(f) - q.real) <= tol * max(1.0, abs(q.real)):
            return sp.Rational(f.numerator, f.denominator), m
    return None, None


def _fmt_real(x: float) -> str:
    r = round(x)
    return str(int(r)) if abs(x - r) < 1e-6 else f"{x:.8g}"


def _fmt_complex(c: complex) -> str:
    if abs(c.imag) < 1e-8 * max(1.0, abs(c)):
        return _fmt_real(c.real)
    return f"{c.real:.8g}{c.imag:+.8g}i"


def _ratio_chi(cs: list, hi: int):
    """chi from a Richardson-accelerated ratio test at the end of the window."""
    # r_n = chi (1 + a/n + ...): first-order Richardson in 1/n
    n1 = hi - 2
    r1, r0 = cs[n1 + 1] / cs[n1 + 2], cs[n1] / cs[n1 + 1]
    return (n1 + 1) * r1 - n1 * r0


def _design(ns: np.ndarray, p: int, K: int) -> np.ndarray:
    cols = []
    ln = np.log(ns)
    for j in range(p + 1):
        for k in range(K):
            cols.append(ln ** j * ns ** (-float(k)))
    return np.stack(cols, axis=1)


def _householder_lsq(rows: list, rhs: list) -> list:
    """Least squares for a real m x q system with several right-hand sides (columns of rhs)."""
    m, q = len(rows), len(rows[0])
    A = [list(r) + list(b) for r, b in zip(rows, rhs)]
    width = len(A[0])
    for k in range(q):
        norm = mp.sqrt(mp.fsum(A[i][k] ** 2 for i in range(k, m)))
        if norm == 0:
            continue
        alpha = -norm if A[k][k] >= 0 else norm
        v = [A[i][k] for i in range(k, m)]
        v[0] -= alpha
        vv = mp.fsum(x * x for x in v)
        if vv == 0:
            continue
        for j in range(k, width):
            dot = mp.fsum(v[i - k] * A[i][j] for i in range(k, m))
            f = 2 * dot / vv
            if f:
                for i in range(k, m):
                    A[i][j] -= f * v[i - k]
    out = []
    for c in range(q, width):
        x = [mp.mpf(0)] * q
        for k in reversed(range(q)):
            acc = A[k][c] - mp.fsum(A[k][j] * x[j] for j in range(k + 1, q))
            x[k] = acc / A[k][k] if A[k][k] != 0 else mp.mpf(0)
        out.append(x)
    return out


def _coarse_fit(cs: list, ns: list, chi0, p: int, alpha_free: bool, alpha0: float, K: int):
    """Double-precision variable projection: (chi, alpha) nonlinear, the c_jk linear."""
    nsa = np.array(ns, dtype=float)
    A = _design(nsa, p, K)
    logs = [mp.log(to_mpc(cs[n])) for n in ns]
    logchi0 = mp.log(chi0)

    def solve(params):
        dlr, dli, a = params
        lc = logchi0 + mp.mpc(dlr, dli)
        y = np.array([complex(mp.exp(lf + n * lc - (a - 1) * mp.log(n))) for n, lf in zip(ns, logs)])
        if not np.all(np.isfinite(y)) or np.any(np.abs(y) < 1e-290):
            raise ValueError("scaled coefficients overflow")
        w = 1.0 / np.abs(y)
        coef, *_ = np.linalg.lstsq(A * w[:, None], y * w, rcond=None)
        return coef, (A @ coef - y) * w

    def resid(x):
        params = tuple(x) if alpha_free else (x[0], x[1], alpha0)
        with np.errstate(all="ignore"):
            try:
                r = solve(params)[1]
            except (OverflowError, ValueError, np.linalg.LinAlgError):
                r = np.full(len(ns), 1e3)
        if not np.all(np.isfinite(r)):
            r = np.full(len(ns), 1e3)
        return np.concatenate([r.real, r.imag])

    x0 = [0.0, 0.0, alpha0] if alpha_free else [0.0, 0.0]
    sol = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
    params = tuple(sol.x) if alpha_free else (sol.x[0], sol.x[1], alpha0)
    coef, r = solve(params)
    chi = mp.exp(logchi0 + mp.mpc(params[0], params[1]))
    rows = [list(coef[j * K:(j + 1) * K]) for j in range(p + 1)]
    return chi, float(params[2]), rows, float(np.max(np.abs(r)))


_FIT_PREC = 128


class _Window:
    """Fit window data at the refinement precision."""

    def __init__(self, cs: list, ns: list):
        self.ns = ns
        self.logs = [mp.log(to_mpc(cs[n])) for n in ns]
        self.lns = [mp.log(n) for n in ns]
        self.lo = mp.mpf(ns[0])

    def basis(self, p: int, K: int) -> list:
        return [[ln ** j * (self.lo / n) ** k for j in range(p + 1) for k in range(K)]
                for n, ln in zip(self.ns, self.lns)]

    def linear(self, basis, logchi, a):
        """Weighted linear solve at fixed (chi, alpha): (cre, cim, relative residuals)."""
        ys = [mp.exp(lf + n * logchi - (a - 1) * ln) for n, lf, ln in zip(self.ns, self.logs, self.lns)]
        ws = [1 / abs(y) for y in ys]
        rows = [[b * w for b in row] for row, w in zip(basis, ws)]
        rhs = [[y.real * w, y.imag * w] for y, w in zip(ys, ws)]
        cre, cim = _householder_lsq(rows, rhs)
        r = []
        for row, y, w in zip(basis, ys, ws):
            fit = mp.mpc(mp.fsum(c * b for c, b in zip(cre, row)), mp.fsum(c * b for c, b in zip(cim, row)))
            r.append((fit - y) * w)
        return cre, cim, r


def _refine(win: _Window, logchi, a, p: int, K: int, alpha_free: bool, iterations: int = 20):
    """Gauss-Newton on (log chi, alpha) with the linear coefficients projected out."""
    basis = win.basis(p, K)

    def evaluate(x):
        lc = logchi + mp.mpc(x[0], x[1])
        cre, cim, r = win.linear(basis, lc, x[2] if alpha_free else a)
        return [v.real for v in r] + [v.imag for v in r], cre, cim

    x = [mp.mpf(0), mp.mpf(0)] + ([mp.mpf(a)] if alpha_free else [])
    r, cre, cim = evaluate(x)
    norm = mp.sqrt(mp.fsum(v * v for v in r))
    h = mp.mpf(2) ** (-mp.prec / 3)
    for _ in range(iterations):
        cols = []
        for k in range(len(x)):
            xp = list(x)
            xp[k] += h
            rp = evaluate(xp)[0]
            cols.append([(u - v) / h for u, v in zip(rp, r)])
        J = [[cols[k][i] for k in range(len(x))] for i in range(len(r))]
        step = _householder_lsq(J, [[-v] for v in r])[0]
        t = mp.mpf(1)
        improved = False
        for _ in range(6):
            xn = [u + t * s for u, s in zip(x, step)]
            rn, cren, cimn = evaluate(xn)
            nn = mp.sqrt(mp.fsum(v * v for v in rn))
            if nn < norm:
                x, r, cre, cim, norm = xn, rn, cren, cimn, nn
                improved = True
                break
            t /= 2
        if not improved or max(abs(s) for s in step) * t < mp.mpf(2) ** (-mp.prec / 2):
            break
    lc = logchi + mp.mpc(x[0], x[1])
    a = x[2] if alpha_free else mp.mpf(a)
    m = len(r) // 2
    res = max(abs(mp.mpc(r[i], r[i + m])) for i in range(m))
    return lc, a, _rows(win, cre, cim, p, K), float(res)


def _rows(win: _Window, cre, cim, p: int, K: int) -> list:
    return [[complex(mp.mpc(cre[j * K + k], cim[j * K + k]) * win.lo ** k) for k in range(K)]
            for j in range(p + 1)]


def _lead_share(rows: list, p: int, n: int) -> float:
    """Share of the leading term c_p0 (log n)^p in the fitted value at n."""
    ln = math.log(n)
    lead = abs(rows[p][0]) * ln ** p
    total = abs(sum(c * ln ** j * n ** (-k) for j, row in enumerate(rows) for k, c in enumerate(row)))
    return lead / total if total else 0.0


def late_term_fit(coeffs: Sequence, candidates: Sequence = MODELS, window: float = 0.4,
                  terms: int = 5, threshold: float = 1e-3, custom: Callable | None = None,
                  significance: float = 1e-4, separation: float = 1e4,
                  floor: float = 1e-30, fine_terms: int = 10) -> LateTermFit:
    """Fit the late coefficients to the candidate models and keep the simplest adequate one.

    Each model is first fitted in double precision, then sharpened by
    Gauss-Newton at higher precision with ``fine_terms`` corrections in 1/n.
    The models nest: alpha is only fixed up to integer shifts, which are
    resolved by taking the smallest alpha whose leading coefficient is
    significant. A model is adequate when its residual is below ``floor`` or
    within ``separation`` of the best candidate, and below ``threshold``.
    ``custom`` is a callable n -> model value compared directly.
    """
    cs = [to_mpc(c) for c in coeffs]
    if len(cs) < 40:
        raise FitError("at least 40 coefficients are needed")
    hi = len(cs) - 1
    lo = int(hi * (1 - window))
    ns = [n for n in range(lo, hi + 1) if cs[n] != 0]
    if len(ns) < 10:
        raise FitError("too few nonzero coefficients in the fit window")
    results: dict = {}
    chi0 = _ratio_chi(cs, hi)
    alpha0 = float(mp.re(1 - (hi - 1) * (cs[hi - 1] / cs[hi] / chi0 - 1))) if chi0 != 0 else 1.0
    coarse = {}
    for name in candidates:
        free = name != "log-over-s"
        try:
            coarse[name] = _coarse_fit(cs, ns, chi0, _LOG_POWER[name], free, alpha0 if free else 1.0, terms)
        except (ValueError, np.linalg.LinAlgError, ZeroDivisionError):
            continue
    if not coarse and custom is None:
        raise FitError("no candidate model could be fitted")
    chosen = None
    if coarse:
        chi_c = min(coarse.values(), key=lambda r: r[3])[0]
        with mp.workprec(_FIT_PREC):
            win = _Window(cs, ns)
            sharp = None
            for name in candidates:
                if name not in coarse:
                    continue
                p = _LOG_POWER[name]
                free = name != "log-over-s"
                _, a_c, rows_c, res_c = coarse[name]
                if res_c > 1e-2:
                    results[name] = coarse[name]
                    continue
                K = max(terms, min(fine_terms, (len(ns) - 4) // (p + 1)))
                starts = [1.0]
                if free:
                    starts = []
                    for cand in (round(a_c), round(2 * a_c) / 2, a_c):
                        if all(abs(cand - s0) > 1e-3 for s0 in starts):
                            starts.append(float(cand))
                # seed chi from the best refined model so far: its chi is far sharper
                start = mp.log(chi_c) if sharp is None else sharp[0]
                best = None
                for s0 in starts:
                    # chi first at fixed alpha (well conditioned), then alpha if needed
                    fit = _refine(win, start, s0, p, K, False)
                    if free and fit[3] > floor:
                        fit2 = _refine(win, fit[0], s0, p, K, True)
                        if fit2[3] < fit[3]:
                            fit = fit2
                    if best is None or fit[3] < best[3]:
                        best = fit
                    if best[3] <= floor:
                        break
                lc, a, rows, res = best
                if free:
                    basis = win.basis(p, K)
                    while _lead_share(rows, p, hi) <= significance:
                        cre, cim, r = win.linear(basis, lc, a - 1)
                        res2 = float(max(abs(v) for v in r))
                        if res2 > max(10 * res, floor):
                            break
                        a, rows, res = a - 1, _rows(win, cre, cim, p, K), res2
                if sharp is None or res < sharp[1]:
                    sharp = (lc, res)
                entry = (mp.exp(lc), float(a), rows, res)
                results[name] = entry
                if res <= floor and res <= threshold and _lead_share(rows, p, hi) > significance:
                    chosen = name
                    break
    if custom is not None:
        res = max(float(abs(custom(n) / cs[n] - 1)) for n in ns)
        results["custom"] = (None, None, [], res)
    summary = {k: v[3] for k, v in results.items()}
    if chosen is None:
        best = min(summary.values())
        for name in list(candidates) + (["custom"] if custom is not None else []):
            if name not in results:
                continue
            chi, a, rows, res = results[name]
            if res > max(separation * best, floor) or res > threshold:
                continue
            if rows and _lead_share(rows, _LOG_POWER[name], hi) <= significance:
                continue
            chosen = name
            break
    if chosen is None:
        raise FitError(f"no candidate below the residual threshold {threshold}: {summary}")
    chi, a, rows, res = results[chosen]
    if chosen == "custom":
        return LateTermFit("custom", mp.mpc(0), 0, 0, [], res, (lo, hi), summary, custom)
    return LateTermFit(chosen, chi, a, _LOG_POWER[chosen], rows, res, (lo, hi), summary)
