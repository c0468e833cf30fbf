"""Singulant equation, chi' branch tracking, chi integration and Stokes-line tracing.

For y ~ e^(-chi/eps) each eps d/dz contributes a factor -chi', so the
singulant satisfies sum_i P_i(z) (-chi')^i = 0. For second order this is
(chi')^2 - P chi' + Q = 0 and for first order chi' = G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
from mpmath import mp

from .exact import RatFunc
from .perturbative import ODESpec, PhysicalSingularSet
from .precision import resolve, to_mpc
from .roots import aberth


class TurningPointError(ArithmeticError):
    """Two chi' tracks collide: chi^(-1) is multivalued at ``location``."""

    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


class SingulantIntegrationError(ArithmeticError):
    pass


class TracingError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SingulantEquation:
    """sum_i c_i(z) v^i = 0 in v = chi', with c_i = (-1)^i P_i."""

    coeffs: tuple

    @classmethod
    def from_coefficients(cls, P: Sequence) -> "SingulantEquation":
        return cls(tuple(RatFunc.coerce(p) * ((-1) ** i) for i, p in enumerate(P)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def numeric(self, z) -> list:
        return [c.eval_mpc(z) for c in self.coeffs]

    def residual(self, z, v):
        cs = self.numeric(z)
        acc = mp.mpc(0)
        for c in reversed(cs):
            acc = acc * v + c
        scale = max(abs(c) * max(1, abs(v)) ** i for i, c in enumerate(cs))
        return acc, scale

    def roots_at(self, z) -> list:
        cs = self.numeric(z)
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        n = len(cs) - 1
        if n <= 0:
            return []
        if n == 1:
            return [-cs[0] / cs[1]]
        if n == 2:
            c, b, a = cs
            d = mp.sqrt(b * b - 4 * a * c)
            # avoid cancellation in the smaller root
            q = -(b + d) / 2 if abs(b + d) >= abs(b - d) else -(b - d) / 2
            if q == 0:
                return [mp.mpc(0), mp.mpc(0)]
            return [q / a, c / q]
        return aberth(cs)

    def dv(self, z, v):
        """d chi'/dz along a branch, by implicit differentiation."""
        acc_z = mp.mpc(0)
        acc_v = mp.mpc(0)
        for i, c in enumerate(self.coeffs):
            acc_z += c.derivative().eval_mpc(z) * v ** i
            if i:
                acc_v += i * c.eval_mpc(z) * v ** (i - 1)
        return -acc_z / acc_v


def singulant_equation(spec: ODESpec) -> SingulantEquation:
    if spec.order < 1:
        raise ValueError("order must be at least 1")
    return SingulantEquation.from_coefficients(spec.coeffs)


# paths

@dataclass(frozen=True)
class ComplexPath:
    samples: tuple
    max_step: object = None

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, k):
        return self.samples[k]

    @classmethod
    def segment(cls, a, b, n: int = 16) -> "ComplexPath":
        a, b = to_mpc(a), to_mpc(b)
        return cls(tuple(a + (b - a) * k / n for k in range(n + 1)), abs(b - a) / n)

    @classmethod
    def polyline(cls, points: Sequence, max_step) -> "ComplexPath":
        pts = [to_mpc(p) for p in points]
        out = [pts[0]]
        for a, b in zip(pts, pts[1:]):
            n = max(1, int(mp.ceil(abs(b - a) / max_step)))
            out.extend(a + (b - a) * k / n for k in range(1, n + 1))
        return cls(tuple(out), mp.mpf(max_step))

    @classmethod
    def circle(cls, center, radius, n: int = 64, start_angle=0) -> "ComplexPath":
        c = to_mpc(center)
        r = mp.mpf(radius)
        pts = tuple(c + r * mp.expj(start_angle + 2 * mp.pi * k / n) for k in range(n + 1))
        return cls(pts, 2 * mp.pi * r / n)

    def avoids(self, gamma: PhysicalSingularSet, margin) -> bool:
        interior = self.samples[1:-1]
        return all(abs(z - p) > margin for z in interior for p in gamma.locations())


# root tracking

@dataclass(frozen=True)
class RootTracks:
    path: ComplexPath
    tracks: tuple
    start_collision: bool = False

    def branch(self, k: int) -> tuple:
        return self.tracks[k]


def _min_sep(vals) -> mpmath.mpf:
    best = mp.inf
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            best = min(best, abs(vals[i] - vals[j]))
    return best


def _match(cur, new):
    """Assignment of each current root to a distinct new root, or None if ambiguous."""
    sep = _min_sep(new)
    out = []
    for c in cur:
        j = min(range(len(new)), key=lambda k: abs(new[k] - c))
        if abs(new[j] - c) >= sep / 3:
            return None
        out.append(j)
    if len(set(out)) != len(out):
        return None
    return [new[j] for j in out]


def continue_roots(eq: SingulantEquation, path: ComplexPath, start_roots: Sequence | None = None,
                   collision_tol=None, max_halvings: int = 40,
                   allow_endpoint_collision: bool = True) -> RootTracks:
    """Follow all N roots chi'(z) along ``path`` without swapping identities.

    Steps are halved until every track moves by less than a third of the
    separation between the new roots. A collision at the start (or end) of
    the path is tolerated when ``allow_endpoint_collision`` is set; branch
    identity is then fixed just off the endpoint. A collision in the interior
    raises TurningPointError with its location.
    """
    if collision_tol is None:
        collision_tol = mp.mpf(2) ** (-mp.prec / 4)
    zs = list(path.samples)
    if len(zs) < 2:
        raise ValueError("path needs at least two samples")
    z0 = zs[0]
    roots0 = [to_mpc(r) for r in start_roots] if start_roots is not None else eq.roots_at(z0)
    scale0 = max([1] + [abs(r) for r in roots0])
    out_path = [z0]
    start_collision = len(roots0) > 1 and _min_sep(roots0) <= collision_tol * scale0
    if start_collision:
        if not allow_endpoint_collision:
            raise TurningPointError("start roots collide", z0)
        # fix identities at a point just off the start
        frac = mp.mpf(2) ** -24
        zeps = z0 + frac * (zs[1] - z0)
        cur = eq.roots_at(zeps)
        tracks = [[min(roots0, key=lambda r: abs(r - c))] for c in cur]
        for t, c in zip(tracks, cur):
            t.append(c)
        out_path.append(zeps)
        za = zeps
    else:
        cur = list(roots0)
        tracks = [[r] for r in cur]
        za = z0
    for idx, zb in enumerate(zs[1:], start=1):
        last = idx == len(zs) - 1
        t = mp.mpf(0)
        dt = mp.mpf(1)
        base = za
        halvings = 0
        while t < 1:
            step = min(dt, 1 - t)
            znew = base + (zb - base) * (t + step)
            new = eq.roots_at(znew)
            sc = max([1] + [abs(r) for r in new])
            collide = len(new) > 1 and _min_sep(new) <= collision_tol * sc
            if collide and last and t + step >= 1 and allow_endpoint_collision:
                matched = [min(new, key=lambda r: abs(r - c)) for c in cur]
            elif collide:
                matched = None
            else:
                matched = _match(cur, new)
            if matched is None:
                dt = step / 2
                halvings += 1
                if halvings > max_halvings:
                    raise TurningPointError(
                        f"chi' tracks collide near z = {mp.nstr(znew, 12)}; turning point", znew)
                continue
            if abs(zb - base) * step < collision_tol ** 2 * max(1, abs(znew)):
                # steps shrinking geometrically toward a square-root collision
                raise TurningPointError(
                    f"chi' tracks collide near z = {mp.nstr(znew, 12)}; turning point", znew)
            cur = matched
            t += step
            for tr, c in zip(tracks, cur):
                tr.append(c)
            out_path.append(znew)
            dt = min(step * 2, mpmath.mpf(1))
            halvings = 0
        za = zb
    steps = [abs(b - a) for a, b in zip(out_path, out_path[1:])]
    return RootTracks(ComplexPath(tuple(out_path), max(steps)), tuple(tuple(t) for t in tracks),
                      start_collision)


# chi integration

@lru_cache(maxsize=32)
def _gauss_legendre(n: int, prec: int):
    with mp.workprec(prec + 20):
        nodes, weights = [], []
        for k in range(1, n + 1):
            x = mp.cos(mp.pi * (k - mp.mpf(1) / 4) / (n + mp.mpf(1) / 2))
            for _ in range(100):
                p0, p1 = mp.mpf(1), x
                for j in range(2, n + 1):
                    p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
                dp = n * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < mp.mpf(2) ** (-prec - 10):
                    break
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
    return tuple(nodes), tuple(weights)


def gauss_segment(f: Callable, a, b, n: int):
    nodes, weights = _gauss_legendre(n, mp.prec)
    half = (b - a) / 2
    mid = (a + b) / 2
    return half * sum(w * f(mid + half * x) for x, w in zip(nodes, weights))


class EquationBranch:
    """Evaluates chi' on one branch by nearest-root selection from a guess."""

    def __init__(self, eq: SingulantEquation):
        self.eq = eq

    def select(self, z, guess):
        roots = self.eq.roots_at(z)
        return min(roots, key=lambda r: abs(r - guess))

    def segment_integral(self, za, zb, va, vb, endpoint_singular: bool = False):
        """Integral of chi' from za to zb with a nested-rule error estimate."""
        def f(z):
            t = (z - za) / (zb - za) if zb != za else 0
            return self.select(z, va + t * (vb - va))

        if endpoint_singular:
            val, err = mp.quad(lambda t: f(za + t * (zb - za)), [0, 1], error=True)
            return val * (zb - za), err * abs(zb - za)
        tol = mp.mpf(2) ** (-mp.prec / 3) * max(1, abs(va), abs(vb)) * abs(zb - za)
        lo = gauss_segment(f, za, zb, 8)
        hi = gauss_segment(f, za, zb, 16)
        if abs(hi - lo) > tol:
            lo, hi = hi, gauss_segment(f, za, zb, 32)
        return hi, abs(hi - lo)


class ClosedFormBranch:
    """A branch given by explicit chi and chi' callables."""

    def __init__(self, chi: Callable, chiprime: Callable):
        self.chi = chi
        self.chiprime = chiprime


@dataclass
class SingulantBranch:
    branch_id: int
    z_star: mpmath.mpc
    path: ComplexPath
    chiprime: tuple
    chi: tuple
    gamma: int
    gamma_estimate: object = None
    error: object = 0
    equation: SingulantEquation | None = None
    closed_form: ClosedFormBranch | None = None

    def evaluator(self):
        return self.closed_form if self.closed_form is not None else EquationBranch(self.equation)

    def local_coefficient(self):
        """X_1 in chi ~ X_1 (z - z_star)^gamma, from the innermost path sample."""
        for z, c in zip(self.path.samples[1:], self.chi[1:]):
            if z != self.z_star and c != 0:
                return c / (z - self.z_star) ** self.gamma
        raise SingulantIntegrationError("no sample off z_star")

    def to_json(self) -> dict:
        def pair(x):
            return [mp.nstr(x.real, 25), mp.nstr(x.imag, 25)]
        return {"branch": self.branch_id, "z_star": pair(self.z_star), "gamma": self.gamma,
                "path": [pair(z) for z in self.path.samples],
                "chi": [pair(c) for c in self.chi], "chiprime": [pair(v) for v in self.chiprime]}


def _vanishing_order(values: Sequence, radii: Sequence):
    (r1, c1), (r2, c2) = (radii[0], values[0]), (radii[1], values[1])
    if c1 == 0 or c2 == 0:
        return None
    return (mp.log(abs(c2)) - mp.log(abs(c1))) / (mp.log(r2) - mp.log(r1))


def build_branch(eq: SingulantEquation, path: ComplexPath, branch: int, z_star=None,
                 start_roots: Sequence | None = None, tol=None) -> SingulantBranch:
    """Track chi' along ``path`` (starting at z_star) and integrate the chosen branch."""
    tracks = continue_roots(eq, path, start_roots)
    return integrate_singulant(eq, tracks, branch, z_star, tol)


def integrate_singulant(eq: SingulantEquation, tracks: RootTracks, branch: int, z_star=None,
                    tol=None) -> SingulantBranch:
    """chi(z) = integral of chi' from z_star along the tracked path, so chi(z_star) = 0.

    The first segment is integrated with tanh-sinh quadrature, which tolerates
    an integrable singularity of chi' at z_star; interior segments use nested
    Gauss-Legendre rules. gamma is read off the log|chi| slope at z_star.
    """
    zs = tracks.path.samples
    z_star = zs[0] if z_star is None else to_mpc(z_star)
    if abs(zs[0] - z_star) > mp.mpf(2) ** (-mp.prec / 2) * max(1, abs(z_star)):
        raise ValueError("the path must start at z_star")
    vs = tracks.tracks[branch]
    ev = EquationBranch(eq)
    if tol is None:
        tol = mp.mpf(2) ** (-mp.prec / 3)
    chi = [mp.mpc(0)]
    total_err = mp.mpf(0)
    acc = mp.mpc(0)
    for k in range(len(zs) - 1):
        singular = k == 0 or (k == 1 and tracks.start_collision)
        val, err = ev.segment_integral(zs[k], zs[k + 1], vs[k], vs[k + 1], endpoint_singular=singular)
        if not mp.isfinite(val):
            raise SingulantIntegrationError("chi' is not integrable at z_star")
        acc += val
        total_err += err
        chi.append(acc)
    scale = max([1] + [abs(c) for c in chi])
    if total_err > tol * scale:
        raise SingulantIntegrationError(
            f"integration error estimate {mp.nstr(total_err, 5)} exceeds tolerance")
    # local vanishing order from two radii along the first segment
    d = zs[1] - z_star
    u = d / abs(d)
    r1 = min(abs(d), mp.mpf(1)) * mp.mpf(10) ** -4
    r2 = r1 * mp.mpf(10) ** -2
    v1 = ev.select(z_star + r1 * u, vs[0] + (vs[1] - vs[0]) * r1 / abs(d))
    v2 = ev.select(z_star + r2 * u, vs[0] + (vs[1] - vs[0]) * r2 / abs(d))
    c1, _ = ev.segment_integral(z_star, z_star + r1 * u, vs[0], v1, endpoint_singular=True)
    c2, _ = ev.segment_integral(z_star, z_star + r2 * u, vs[0], v2, endpoint_singular=True)
    est = _vanishing_order([c1, c2], [r1, r2])
    if est is None:
        gamma = 0
    else:
        gamma = int(mp.nint(est.real if isinstance(est, mpmath.mpc) else est))
    return SingulantBranch(branch, z_star, tracks.path, vs, tuple(chi), gamma, est, total_err, eq)


def closed_form_branch(chi: Callable, chiprime: Callable, z_star, path: ComplexPath,
                       gamma: int = 1, branch_id: int = 0) -> SingulantBranch:
    zs = path.samples
    return SingulantBranch(branch_id, to_mpc(z_star), path, tuple(chiprime(z) for z in zs),
                           tuple(chi(z) for z in zs), gamma, gamma, 0, None,
                           ClosedFormBranch(chi, chiprime))


# Stokes lines

@dataclass(frozen=True)
class StokesLine:
    branch_id: int
    points: tuple
    chi: tuple
    status: str

    def to_json(self) -> dict:
        return {"branch": self.branch_id, "status": self.status,
                "points": [[mp.nstr(z.real, 20), mp.nstr(z.imag, 20)] for z in self.points]}


def _inside(z, domain) -> bool:
    re0, im0, re1, im1 = domain
    return re0 <= z.real <= re1 and im0 <= z.imag <= im1


class _Stepper:
    """Advance (z, chi, chi') to a new point along one branch."""

    def __init__(self, branch: SingulantBranch):
        self.branch = branch
        self.closed = branch.closed_form
        self.ev = None if self.closed else EquationBranch(branch.equation)

    def advance(self, z, chi, v, znew, singular_start=False):
        if self.closed is not None:
            return self.closed.chi(znew), self.closed.chiprime(znew)
        eq = self.branch.equation
        try:
            guess = v + eq.dv(z, v) * (znew - z)
        except ZeroDivisionError:
            guess = v
        vnew = self.ev.select(znew, guess)
        val, _ = self.ev.segment_integral(z, znew, v, vnew, endpoint_singular=singular_start)
        return chi + val, vnew


def trace_stokes_line(branch: SingulantBranch, domain: Sequence, step=None,
                      singular_set: Sequence = (), max_points: int = 4000,
                      im_tol=None) -> list[StokesLine]:
    """Trace Im chi = 0, Re chi > 0 out of z_star, one line per seed direction.

    Seeds come from chi ~ X_1 (z - z_star)^gamma: directions where the local
    model is real and positive. Each line is followed by predictor (tangent
    conj(chi')) and corrector (Newton on Im chi across the line) steps until it
    leaves ``domain`` = (re0, im0, re1, im1), approaches a point of
    ``singular_set``, closes on itself, or stops having Re chi > 0.
    """
    domain = tuple(mp.mpf(x) for x in domain)
    if step is None:
        step = mp.sqrt((domain[2] - domain[0]) ** 2 + (domain[3] - domain[1]) ** 2) / 200
    step = mp.mpf(step)
    if im_tol is None:
        im_tol = mp.mpf(10) ** -14
    g = branch.gamma
    if g < 1:
        return []
    X1 = branch.local_coefficient()
    z0 = branch.z_star
    stepper = _Stepper(branch)
    lines = []
    sing = [to_mpc(s) for s in singular_set if abs(to_mpc(s) - z0) > step / 4]
    for k in range(g):
        theta = (-mp.arg(X1) + 2 * mp.pi * k) / g
        u = mp.expj(theta)
        z1 = z0 + step * u
        chi1, v1 = stepper.advance(z0, mp.mpc(0), branch.chiprime[0], z1, singular_start=True)
        if chi1.real <= 0:
            continue
        pts, chis = [z0], [mp.mpc(0)]
        z, chi, v = z1, chi1, v1
        status = "max-points"
        for _ in range(max_points):
            # corrector: move across the line until Im chi vanishes
            ok = False
            for _it in range(30):
                if abs(chi.imag) <= im_tol * abs(chi):
                    ok = True
                    break
                if v == 0:
                    break
                dirn = 1j * mp.conj(v) / abs(v)
                t = -chi.imag / abs(v)
                zc = z + t * dirn
                chi, v = stepper.advance(z, chi, v, zc)
                z = zc
            if not ok:
                raise TracingError(f"corrector failed near z = {mp.nstr(z, 10)}")
            if chi.real <= 0:
                status = "re-chi-nonpositive"
                break
            pts.append(z)
            chis.append(chi)
            if not _inside(z, domain):
                status = "left-domain"
                break
            if any(abs(z - s) < step for s in sing):
                status = "hit-singular-set"
                break
            if len(pts) > 10 and abs(z - pts[1]) < step / 2:
                status = "closed"
                break
            # predictor along the tangent on which chi increases
            tangent = mp.conj(v) / abs(v) if v != 0 else u
            zn = z + step * tangent
            chi, v = stepper.advance(z, chi, v, zn)
            z = zn
        lines.append(StokesLine(branch.branch_id, tuple(pts), tuple(chis), status))
    return lines
