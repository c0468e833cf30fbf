"""Simultaneous (Aberth-Ehrlich) polynomial root finding at working precision."""

from __future__ import annotations

from typing import Sequence

import mpmath
import numpy as np
from mpmath import mp

from .exact import Poly
from .precision import resolve


class RootFindingError(ArithmeticError):
    """Raised when the iteration fails to reach the residual target."""


def _coefficients(p) -> tuple[list, bool]:
    if isinstance(p, Poly):
        return [c.to_mpc() for c in p.coeffs], True
    cs = [mp.mpc(c) for c in p]
    while cs and cs[-1] == 0:
        cs.pop()
    return cs, False


def _initial_guesses(cs: list) -> list:
    n = len(cs) - 1
    try:
        lead = cs[-1]
        scaled = [complex(c / lead) for c in reversed(cs)]
        arr = np.asarray(scaled, dtype=complex)
        if np.all(np.isfinite(arr)):
            guesses = np.roots(arr)
            if len(guesses) == n and np.all(np.isfinite(guesses)):
                out = []
                for k, g in enumerate(guesses):
                    # nudge so that numerically coincident seeds stay distinct
                    jitter = 1e-9 * (1 + abs(g)) * complex(np.cos(1.7 * k + 0.3), np.sin(1.7 * k + 0.3))
                    out.append(mp.mpc(complex(g) + jitter))
                return out
    except (OverflowError, ValueError, ZeroDivisionError):
        pass
    radius = max(abs(cs[k] / cs[-1]) ** (mp.mpf(1) / (n - k)) for k in range(n) if cs[k] != 0)
    return [radius * mp.expj(2 * mp.pi * k / n + mp.mpf("0.4")) for k in range(n)]


def _horner2(cs: list, x):
    p = cs[-1]
    dp = mp.mpc(0)
    for c in reversed(cs[:-1]):
        dp = dp * x + p
        p = p * x + c
    return p, dp


def aberth(cs: Sequence, maxiter: int | None = None, tol=None) -> list:
    """Approximate all roots of the polynomial with ascending coefficients ``cs``.

    Runs at the ambient mpmath precision. Roots whose Newton-Aberth correction
    falls below ``tol`` are frozen; iteration also stops when corrections stall.
    """
    cs = list(cs)
    n = len(cs) - 1
    if n < 1:
        return []
    if n == 1:
        return [-cs[0] / cs[1]]
    z = _initial_guesses(cs)
    if tol is None:
        tol = mp.mpf(2) ** (-(mp.prec - 8))
    if maxiter is None:
        maxiter = 100 + 4 * n
    active = [True] * n
    history: list = []
    for _ in range(maxiter):
        worst = mp.mpf(0)
        for k in range(n):
            if not active[k]:
                continue
            zk = z[k]
            p, dp = _horner2(cs, zk)
            if p == 0:
                active[k] = False
                continue
            s = mp.mpc(0)
            for j in range(n):
                if j != k:
                    d = zk - z[j]
                    if d != 0:
                        s += 1 / d
            ratio = p / dp if dp != 0 else p
            denom = 1 - ratio * s
            w = ratio / denom if denom != 0 else ratio
            z[k] = zk - w
            size = abs(w) / max(1, abs(z[k]))
            if size <= tol:
                active[k] = False
            worst = max(worst, size)
        if not any(active):
            break
        history.append(worst)
        if len(history) > 12 and history[-1] > history[-12] / 2:
            break
    return z


def _polish(cs: list, r, m: int, steps: int = 8):
    """Newton on the (m-1)-th derivative, where an m-fold root becomes simple."""
    d = list(cs)
    for _ in range(m - 1):
        d = [k * d[k] for k in range(1, len(d))]
    if len(d) < 2:
        return r
    for _ in range(steps):
        p, dp = _horner2(d, r)
        if dp == 0:
            break
        step = p / dp
        r = r - step
        if abs(step) <= mp.mpf(2) ** (-mp.prec + 4) * max(1, abs(r)):
            break
    return r


def cluster(points: Sequence, radius) -> list[tuple[mpmath.mpc, int]]:
    """Group points closer than ``radius`` (scaled by max(1,|z|)); return (mean, size)."""
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            scale = max(1, abs(points[i]))
            if abs(points[i] - points[j]) <= radius * scale:
                parent[find(i)] = find(j)
    groups: dict[int, list] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(points[i])
    out = []
    for members in groups.values():
        out.append((sum(members) / len(members), len(members)))
    return out


def poly_roots(p, precision: int | None = None, cluster_radius=None,
               maxiter: int | None = None) -> list[tuple[mpmath.mpc, int]]:
    """Roots of ``p`` with multiplicities.

    ``p`` is an exact ``Poly`` or a sequence of ascending complex coefficients.
    Exact input is iterated at roughly twice the requested precision so that
    multiple roots separate into tight clusters; clusters within
    ``2^(-precision/4)`` are merged and reported with their size.
    """
    prec = resolve(precision)
    cs0, exact = _coefficients(p)
    if not cs0:
        raise ValueError("the zero polynomial has no well-defined roots")
    internal = 2 * prec + 32 if exact else prec + 32
    with mp.workprec(internal):
        cs, _ = _coefficients(p)
        zero_mult = 0
        while cs and cs[0] == 0:
            cs.pop(0)
            zero_mult += 1
        found = aberth(cs, maxiter=maxiter)
        if cluster_radius is None:
            cluster_radius = mp.mpf(2) ** (-prec / 4)
        result = cluster(found, cluster_radius) if found else []
        result = [(_polish(cs, r, m), m) for r, m in result]
        if zero_mult:
            result.append((mp.mpc(0), zero_mult))
        scale = max(abs(c) for c in cs0)
        limit = mp.mpf(2) ** (-prec / 2) * scale
        full, _ = _coefficients(p)
        n = len(full) - 1
        for r, _m in result:
            val = _horner2(full, r)[0]
            bound = limit * max(1, abs(r)) ** n
            if abs(val) > bound:
                raise RootFindingError(
                    f"residual {mp.nstr(abs(val), 5)} at root {mp.nstr(r, 10)} exceeds {mp.nstr(bound, 5)}; "
                    "increase the working precision or the iteration cap")
    with mp.workprec(prec):
        result = [(+r, m) for r, m in result]
    result.sort(key=lambda t: (float(abs(t[0])), float(mp.arg(t[0])) if t[0] != 0 else 0.0))
    return result
