"""Borel-plane continuation: Pade approximants, singularity detection, Laplace and Hankel integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
from mpmath import mp

from .contour import QuadratureConfig, QuadratureError, circle_integral, hankel_loop, ray_integral
from .perturbative import BorelGerm
from .precision import resolve, to_mpc
from .roots import RootFindingError, cluster, poly_roots


class PadeError(ArithmeticError):
    pass


class RayError(ValueError):
    """The Laplace ray meets a singularity or the integrand does not decay."""


# Pade

@dataclass(frozen=True)
class PadeApproximant:
    """num/den in the variable w - base, with poles given in absolute coordinates.

    ``poles`` holds (location, residue, multiplicity); residue is None for
    multiple poles. ``L`` and ``M`` are the requested orders, ``degree`` the
    (num, den) degrees actually used after removing rank deficiency.
    """

    num: tuple
    den: tuple
    poles: tuple
    L: int
    M: int
    degree: tuple
    base: mpmath.mpc = mp.mpc(0)
    source: tuple = ()

    def __call__(self, w):
        x = to_mpc(w) - self.base
        p = mp.mpc(0)
        for c in reversed(self.num):
            p = p * x + c
        q = mp.mpc(0)
        for c in reversed(self.den):
            q = q * x + c
        return p / q

    def taylor(self, n: int) -> list:
        from .series import ser_div
        return ser_div(list(self.num) + [0] * n, list(self.den) + [0] * n, n)


def _solve_complete_pivot(A: list, b: list, tol):
    """Gaussian elimination with complete pivoting; None when a pivot falls below tol * first pivot."""
    n = len(A)
    A = [row[:] + [b[i]] for i, row in enumerate(A)]
    cols = list(range(n))
    first = None
    for k in range(n):
        best, bi, bj = mp.mpf(-1), k, k
        for i in range(k, n):
            row = A[i]
            for j in range(k, n):
                a = abs(row[j])
                if a > best:
                    best, bi, bj = a, i, j
        if first is None:
            first = best
        if best == 0 or best <= tol * first:
            return None
        A[k], A[bi] = A[bi], A[k]
        if bj != k:
            for row in A:
                row[k], row[bj] = row[bj], row[k]
            cols[k], cols[bj] = cols[bj], cols[k]
        piv = A[k][k]
        rk = A[k]
        for i in range(k + 1, n):
            f = A[i][k] / piv
            if f != 0:
                ri = A[i]
                for j in range(k, n + 1):
                    ri[j] -= f * rk[j]
    x = [mp.mpc(0)] * n
    for k in reversed(range(n)):
        acc = A[k][n]
        for j in range(k + 1, n):
            acc -= A[k][j] * x[j]
        x[k] = acc / A[k][k]
    out = [mp.mpc(0)] * n
    for k in range(n):
        out[cols[k]] = x[k]
    return out


def _solve_den(c: list, L: int, M: int, tol):
    """Denominator q (q_0 = 1) of the [L/M] Pade form, or None if rank deficient."""
    if M == 0:
        return [mp.mpc(1)]
    A = [[c[L + 1 + r - j] if L + 1 + r - j >= 0 else mp.mpc(0) for j in range(1, M + 1)]
         for r in range(M)]
    b = [-c[L + 1 + r] for r in range(M)]
    x = _solve_complete_pivot(A, b, tol)
    if x is None:
        return None
    return [mp.mpc(1)] + x


def pade_coefficients(coeffs: Sequence, L: int, M: int, tol=None) -> tuple[list, list, int, int]:
    """Numerator/denominator coefficients of the [L/M] Pade approximant.

    The Toeplitz system is solved at working precision. When it is numerically
    rank deficient (the data is secretly of lower type), both degrees are
    reduced together until the system is well posed, as in the robust Pade
    construction of Gonnet, Guettel and Trefethen.
    """
    c = [to_mpc(x) for x in coeffs]
    if L + M + 1 > len(c):
        raise PadeError(f"[{L}/{M}] needs {L + M + 1} coefficients, only {len(c)} available")
    if tol is None:
        tol = mp.mpf(2) ** (-int(mp.prec * 0.7))
    scale = max(abs(x) for x in c[: L + M + 1])
    if scale == 0:
        return [mp.mpc(0)], [mp.mpc(1)], 0, 0
    l, m = L, M
    while True:
        q = _solve_den(c, l, m, tol)
        if q is not None:
            break
        if m == 0:
            raise PadeError("singular Toeplitz system; reduce M")
        m -= 1
        l = max(l - 1, 0)
    p = []
    for k in range(l + 1):
        acc = mp.mpc(0)
        for j in range(min(k, m) + 1):
            acc += q[j] * c[k - j]
        p.append(acc)
    # trailing coefficients that vanish to working accuracy
    while len(p) > 1 and abs(p[-1]) <= tol * scale:
        p.pop()
    while len(q) > 1 and abs(q[-1]) <= tol * max(abs(v) for v in q):
        q.pop()
    return p, q, len(p) - 1, len(q) - 1


def _poly_eval(cs, x):
    acc = mp.mpc(0)
    for c in reversed(cs):
        acc = acc * x + c
    return acc


def _poles(p: list, q: list, base, precision: int) -> tuple:
    if len(q) < 2:
        return ()
    try:
        rts = poly_roots(q, precision=precision)
    except RootFindingError:
        rts = poly_roots(q, precision=precision, maxiter=2000)
    dq = [k * q[k] for k in range(1, len(q))]
    out = []
    for r, m in rts:
        res = _poly_eval(p, r) / _poly_eval(dq, r) if m == 1 else None
        out.append((r + base, res, m))
    return tuple(out)


def pade(germ, L: int, M: int, precision: int | None = None, base=0) -> PadeApproximant:
    """[L/M] Pade approximant of a germ (BorelGerm or coefficient sequence)."""
    prec = resolve(precision)
    coeffs = germ.coeffs if isinstance(germ, BorelGerm) else tuple(germ)
    with mp.workprec(prec):
        p, q, dl, dm = pade_coefficients(coeffs, L, M)
        poles = _poles(p, q, to_mpc(base), prec)
        return PadeApproximant(tuple(p), tuple(q), poles, L, M, (dl, dm), to_mpc(base),
                               tuple(to_mpc(c) for c in coeffs))


def pade_about_singularity(coeff_samples: Sequence, chi, L: int | None = None,
                           M: int | None = None, precision: int | None = None) -> PadeApproximant:
    """Pade of sum a_i t^i with t = w - chi, exposing singularities seen from chi."""
    if len(coeff_samples) < 8:
        raise PadeError("at least 8 coefficients are needed about a singularity")
    n = len(coeff_samples)
    if M is None:
        M = n // 2
    if L is None:
        L = n - 1 - M
    return pade(list(coeff_samples), L, M, precision, base=chi)


# singularity detection

@dataclass(frozen=True)
class DetectionConfig:
    """Heuristic thresholds for reading singularities off Pade pole clouds.

    Poles are stable when they move by less than ``stability_tol`` (relative to
    max(1,|w|)) between the given order and the comparison order shifted by
    ``order_step``. A branch cut is declared when at least ``min_string`` poles
    lie on a common ray within ``angle_tol`` radians with monotone spacing.
    Poles closer than ``merge_tol`` are merged into one singularity, and simple
    poles whose residue is below ``residue_tol`` times the largest residue are
    discarded as spurious pole/zero pairs.
    """

    stability_tol: float = 1e-8
    order_step: int = 2
    angle_tol: float = 0.05
    min_string: int = 4
    merge_tol: float = 1e-5
    residue_tol: float = 1e-20
    refine_heads: bool = True
    max_radius_factor: float = 20.0


@dataclass(frozen=True)
class BorelSingularity:
    chi: mpmath.mpc
    kind: str
    alpha: object = None
    support: tuple = ()
    residue: object = None

    def to_json(self) -> dict:
        return {
            "chi": [mp.nstr(self.chi.real, 25), mp.nstr(self.chi.imag, 25)],
            "kind": self.kind,
            "alpha": None if self.alpha is None else mp.nstr(to_mpc(self.alpha).real, 12),
            "support": [[mp.nstr(s.real, 15), mp.nstr(s.imag, 15)] for s in self.support],
        }


def _rel(a, b):
    return abs(a - b) / max(1, abs(b))


def _find_strings(points: list, cfg: DetectionConfig) -> list[list]:
    """Aligned pole strings: >= min_string poles on a ray from the innermost member.

    Members are ordered by distance from the head and the string is cut at the
    first place where the gaps stop growing monotonically.
    """
    strings = []
    used: set[int] = set()
    order = sorted(range(len(points)), key=lambda i: float(abs(points[i])))
    for h in order:
        if h in used:
            continue
        head = points[h]
        groups: dict[int, list[int]] = {}
        rays = []
        for j in order:
            if j == h or j in used:
                continue
            d = points[j] - head
            if abs(d) == 0 or abs(points[j]) < abs(head):
                continue
            ang = float(mp.arg(d))
            placed = False
            for gi, a in enumerate(rays):
                diff = abs((ang - a + math.pi) % (2 * math.pi) - math.pi)
                if diff < cfg.angle_tol:
                    groups[gi].append(j)
                    placed = True
                    break
            if not placed:
                rays.append(ang)
                groups[len(rays) - 1] = [j]
        best = best_all = None
        for members in groups.values():
            members = sorted(members, key=lambda j: float(abs(points[j] - head)))
            everything = members
            chain = [head] + [points[j] for j in members]
            keep = 1
            prev_gap = None
            for k in range(len(chain) - 1):
                gap = float(abs(chain[k + 1] - chain[k]))
                if prev_gap is not None and gap < prev_gap * 0.999:
                    break
                prev_gap = gap
                keep = k + 1
            members = members[:keep]
            if len(members) + 1 < cfg.min_string:
                continue
            if best is None or len(members) > len(best):
                best, best_all = members, everything
        if best is not None:
            strings.append([h] + best)
            # the far part of the same ray belongs to this cut as well
            used.update([h] + best_all)
    return strings


def refine_head(chain: Sequence):
    """Branch-point estimate from the two innermost poles of a string.

    Pade poles approximating a cut cluster like Chebyshev nodes at a free
    endpoint, p_k ~ b + c (2k-1)^2, so b ~ p_1 - (p_2 - p_1)/8.
    """
    if len(chain) < 2:
        return chain[0]
    return chain[0] - (chain[1] - chain[0]) / 8


def estimate_alpha(coeffs: Sequence, chi, window: int = 10):
    """Log-log slope estimate of alpha from u_n chi^n ~ n^(alpha-1)."""
    n = len(coeffs)
    chi = to_mpc(chi)
    pts = []
    for k in range(max(1, n - window), n):
        v = abs(to_mpc(coeffs[k]) * chi ** k)
        if v == 0:
            return None
        pts.append((mp.log(k), mp.log(v)))
    if len(pts) < 2:
        return None
    (x0, y0), (x1, y1) = pts[-2], pts[-1]
    return 1 + (y1 - y0) / (x1 - x0)


def detect_singularities(p: PadeApproximant, stability: DetectionConfig | None = None,
                         precision: int | None = None) -> list[BorelSingularity]:
    """Stable isolated poles and branch-cut heads of a Pade approximant.

    This is a heuristic: stability is judged against a second Pade of order
    shifted by ``order_step`` built from the same source coefficients.
    """
    cfg = stability or DetectionConfig()
    prec = resolve(precision)
    with mp.workprec(prec):
        poles = list(p.poles)
        if not poles:
            return []
        src = p.source
        other = None
        step = cfg.order_step
        if src:
            if p.L + p.M + 1 + 2 * step <= len(src):
                other = pade(src, p.L + step, p.M + step, prec, base=p.base)
            elif p.M - step >= 1:
                other = pade(src, max(p.L - step, 0), p.M - step, prec, base=p.base)
            if other is not None and other.degree == p.degree and p.degree[1] - step >= 1:
                # both orders collapsed to the same numerical rank: compare below it
                other = pade(src, max(p.degree[0] - step, 0), p.degree[1] - step, prec, base=p.base)
        # radius cut-off: ignore poles far outside the region the data can resolve
        locs = [pl[0] for pl in poles]
        nearest = min(float(abs(x - p.base)) for x in locs) or 1.0
        rmax = cfg.max_radius_factor * nearest
        # merge near-coincident poles (a split multiple pole)
        merged = cluster(locs, mp.mpf(cfg.merge_tol))
        groups = []
        for centre, size in merged:
            members = [pl for pl in poles if abs(pl[0] - centre) <= cfg.merge_tol * max(1, abs(centre))]
            mult = sum(pl[2] for pl in members)
            groups.append((centre, mult, members))
        groups = [g for g in groups if abs(g[0] - p.base) <= rmax]
        other_locs = [pl[0] for pl in other.poles] if other is not None else None

        def stable(x):
            if other_locs is None:
                return True
            return any(_rel(x, y) < cfg.stability_tol for y in other_locs) or \
                any(_rel(x, c) < cfg.stability_tol for c, _ in cluster(other_locs, mp.mpf(cfg.merge_tol)))

        biggest = max((abs(pl[1]) for pl in poles if pl[1] is not None), default=mp.mpf(0))

        def significant(members):
            if any(res is None for _, res, _m in members):
                return True
            total = sum(abs(res) for _, res, _m in members)
            return total > cfg.residue_tol * biggest

        groups = [g for g in groups if significant(g[2])]
        isolated = [g for g in groups if stable(g[0])]
        iso_ids = {id(g) for g in isolated}
        rest = [g[0] for g in groups if id(g) not in iso_ids]
        out = []
        for s in _find_strings([x - p.base for x in rest], cfg):
            pts = [rest[i] for i in s]
            head = refine_head(pts) if cfg.refine_heads else pts[0]
            out.append(BorelSingularity(+head, "branch-cut-head", None, tuple(pts)))
        for centre, mult, members in isolated:
            res = members[0][1] if mult == 1 else None
            out.append(BorelSingularity(+centre, "isolated-pole", mult, tuple(m[0] for m in members), res))
        out.sort(key=lambda s: float(abs(s.chi - p.base)))
        return out


# Laplace and Hankel integrals

@dataclass(frozen=True)
class RaySum:
    epsilon: mpmath.mpc
    theta: object
    value: mpmath.mpc
    error: object

    def to_json(self) -> dict:
        return {"epsilon": [mp.nstr(self.epsilon.real, 20), mp.nstr(self.epsilon.imag, 20)],
                "theta": mp.nstr(self.theta, 20),
                "value": [mp.nstr(self.value.real, 40), mp.nstr(self.value.imag, 40)],
                "error": mp.nstr(self.error, 5)}


@dataclass(frozen=True)
class LaplaceConfig:
    tube: float = 1e-3
    pade_orders: tuple | None = None
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)


def continuation(germ: BorelGerm, orders: tuple | None = None, precision: int | None = None):
    """Default Pade continuation of a germ, near-diagonal from all coefficients."""
    n = len(germ.coeffs)
    if orders is None:
        M = n // 2
        L = n - 1 - M
    else:
        L, M = orders
    return pade(germ, L, M, precision)


def _angle_gap(a, b) -> float:
    return abs((float(a) - float(b) + math.pi) % (2 * math.pi) - math.pi)


def check_ray(singularities: Sequence, theta, tube) -> None:
    for s in singularities:
        chi = to_mpc(getattr(s, "chi", s))
        if chi == 0:
            raise RayError("a singularity sits at the origin of the Laplace ray")
        dist = abs(chi) * math.sin(min(_angle_gap(mp.arg(chi), theta), math.pi / 2))
        if _angle_gap(mp.arg(chi), theta) < math.pi / 2 and dist <= tube * max(1, float(abs(chi))):
            raise RayError(f"ray at angle {float(theta):.6g} hits the singularity at {mp.nstr(chi, 10)}")


def laplace_sum(source, epsilon, theta, config: LaplaceConfig | None = None,
                singularities: Sequence | None = None, constant=None,
                precision: int | None = None) -> RaySum:
    """Integral of e^(-w/eps) yhat(w) along the ray arg w = theta, plus the constant part.

    ``source`` is a BorelGerm (continued by Pade), a PadeApproximant, or a
    callable yhat. Singularities of the Pade continuation are checked against
    the ray unless an explicit list is given.
    """
    cfg = config or LaplaceConfig()
    prec = resolve(precision)
    with mp.workprec(prec):
        eps = to_mpc(epsilon)
        theta = mp.mpf(theta)
        decay = mp.cos(theta - mp.arg(eps))
        if decay <= mp.mpf(10) ** -6:
            raise RayError("e^(-w/eps) does not decay along this ray; non-convergent tail")
        c0 = mp.mpc(0)
        if isinstance(source, BorelGerm):
            c0 = source.constant
            f = continuation(source, cfg.pade_orders, prec)
            sing = singularities if singularities is not None else [pl[0] for pl in f.poles if abs(pl[1] or 1) > 0]
        elif isinstance(source, PadeApproximant):
            f = source
            sing = singularities if singularities is not None else [pl[0] for pl in f.poles]
        else:
            f = source
            sing = singularities or []
        if constant is not None:
            c0 = to_mpc(constant)
        check_ray(sing, theta, cfg.tube)
        with mp.workprec(prec + 32):
            scale = abs(eps) / decay
            val, err = ray_integral(lambda w: mp.exp(-w / eps) * f(w), mp.mpc(0), theta, scale,
                                    cfg.quadrature)
        return RaySum(eps, theta, +(val + c0), err)


def hankel_quadrature(f: Callable, chi, epsilon, half_width=None, direction=None,
                      quadrature: QuadratureConfig | None = None,
                      precision: int | None = None):
    """Counterclockwise Hankel-loop integral of e^(-w/eps) f(w) around chi.

    The loop wraps the ray from chi in ``direction`` (default arg eps, the
    direction along which the exponential decays); f must be continuous on the
    loop, i.e. its own cut from chi must run along the same ray. Half-width
    defaults to |eps|/4.
    """
    cfg = quadrature or QuadratureConfig()
    prec = resolve(precision)
    with mp.workprec(prec):
        eps = to_mpc(epsilon)
        chi = to_mpc(chi)
        d = mp.arg(eps) if direction is None else mp.mpf(direction)
        h = half_width if half_width is not None else (cfg.half_width or abs(eps) / 4)
        with mp.workprec(prec + 32):
            val, err = hankel_loop(lambda w: mp.exp(-w / eps) * f(w), chi, d, h, abs(eps), cfg)
        tol = cfg.rel_tol if cfg.rel_tol is not None else mp.mpf(2) ** (-prec / 3)
        ref = abs(mp.exp(-chi / eps)) * max(1, abs(val) / max(abs(mp.exp(-chi / eps)), mp.mpf(10) ** -1000))
        if cfg.strict and err > tol * ref:
            raise QuadratureError(f"Hankel loop error estimate {mp.nstr(err, 5)} too large")
        return +val


def coefficients_via_hankel(f: Callable, singularities: Sequence, n: int,
                            half_width=None, quadrature: QuadratureConfig | None = None,
                            precision: int | None = None):
    """Taylor coefficient f_n from Hankel loops in the cylinder variable w = log x.

    With x = e^w the Cauchy integral for f_n becomes a sum over horizontal
    Hankel loops starting at log(chi) for each singularity chi, traversed
    clockwise (the counterclockwise Cauchy circle pushed to the right).
    Singularities sharing an argument are wrapped by a single loop from the
    innermost one.
    """
    cfg = quadrature or QuadratureConfig()
    prec = resolve(precision)
    if n < 0:
        raise ValueError("n must be non-negative")
    with mp.workprec(prec):
        sing = [to_mpc(s) for s in singularities]
        heads: dict = {}
        for s in sing:
            if s == 0:
                raise ValueError("singularity at the expansion point")
            key = round(float(mp.arg(s)), 12)
            if key not in heads or abs(s) < abs(heads[key]):
                heads[key] = s
        centres = [mp.log(s) for s in heads.values()]
        if half_width is None:
            gap = mp.mpf(1)
            for i, a in enumerate(centres):
                for b in centres[i + 1:]:
                    gap = min(gap, abs(mp.im(a) - mp.im(b)))
            half_width = min(mp.mpf(1) / 4, gap / 4)
        total = mp.mpc(0)
        with mp.workprec(prec + 32):
            for c in centres:
                val, err = hankel_loop(lambda w: mp.exp(-n * w) * f(mp.exp(w)), c, 0, half_width,
                                       mp.mpf(1) / max(n, 1), cfg)
                total += val
            out = -total / (2j * mp.pi)
        return +out


def germ_from_function(f: Callable, n: int, radius, center=0, points: int | None = None,
                       precision: int | None = None) -> list:
    """Taylor coefficients 0..n-1 of f about ``center`` by the trapezoid rule on a circle."""
    prec = resolve(precision)
    if points is None:
        points = 2 * n + prec
    with mp.workprec(prec + 32):
        r = mp.mpf(radius)
        c = to_mpc(center)
        unit = [mp.expj(2 * mp.pi * j / points) for j in range(points)]
        vals = [f(c + r * u) for u in unit]
        out = []
        for k in range(n):
            acc = mp.mpc(0)
            for j, v in enumerate(vals):
                acc += v * unit[(-j * k) % points]
            out.append(acc / (points * r ** k))
    with mp.workprec(prec):
        return [+x for x in out]
