"""Gamma-function ratio asymptotics and the Hankel representation of 1/Gamma."""

from __future__ import annotations

from mpmath import mp

from .contour import QuadratureConfig, QuadratureError, hankel_loop
from .precision import resolve, to_mpc
from .series import ser_inv, ser_pow


def gamma_ratio_coefficients(alpha, order: int) -> list:
    """c_k with Gamma(n+alpha)/Gamma(n+1) ~ n^(alpha-1) sum_k c_k n^(-k).

    c_k = binom(alpha-1, k) k! [t^k] (t/(1-e^(-t)))^alpha, the generalized
    Bernoulli form of the Tricomi-Erdelyi expansion.
    """
    alpha = to_mpc(alpha)
    m = order + 1
    base = [mp.mpf(-1) ** k / mp.factorial(k + 1) for k in range(m)]  # (1-e^-t)/t
    kernel = ser_pow(ser_inv(base, m), alpha, m)
    out = []
    falling = mp.mpc(1)
    for k in range(m):
        out.append(falling * kernel[k])
        falling *= alpha - 1 - k
    return out


def gamma_ratio_expansion(n: int, alpha, order: int, precision: int | None = None):
    """Truncated large-n expansion of Gamma(n+alpha)/Gamma(n+1).

    Returns n^(alpha-1) (1 + alpha(alpha-1)/(2n) + ...) through n^(-order).
    For integer alpha >= 1 the series terminates and the value is exact.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if order < 0:
        raise ValueError("order must be non-negative")
    with mp.workprec(resolve(precision)):
        alpha = to_mpc(alpha)
        cs = gamma_ratio_coefficients(alpha, order)
        nn = mp.mpf(n)
        s = mp.mpc(0)
        for k in reversed(range(order + 1)):
            s = s / nn + cs[k]
        val = nn ** (alpha - 1) * s
        return val.real if val.imag == 0 else val


def reciprocal_gamma_hankel(alpha, quadrature: QuadratureConfig | None = None,
                            precision: int | None = None):
    """1/Gamma(alpha) from -(1/2 pi i) times the loop integral of (-t)^(-alpha) e^(-t).

    The loop wraps the positive real axis counterclockwise with the principal
    branch of (-t)^(-alpha), whose cut lies inside the loop. Nonpositive
    integers return 0 exactly.
    """
    cfg = quadrature or QuadratureConfig()
    with mp.workprec(resolve(precision)):
        alpha = to_mpc(alpha)
        if alpha.imag == 0 and alpha.real <= 0 and alpha.real == int(alpha.real):
            return mp.mpf(0)
        h = mp.mpf(cfg.half_width) if cfg.half_width is not None else mp.mpf(1) / 2
        with mp.workprec(mp.prec + 20):
            val, err = hankel_loop(lambda t: (-t) ** (-alpha) * mp.exp(-t), 0, 0, h, 1, cfg)
            out = -val / (2j * mp.pi)
        tol = cfg.rel_tol if cfg.rel_tol is not None else mp.mpf(2) ** (-mp.prec / 2)
        if err > tol * max(abs(out), 1):
            raise QuadratureError(f"Hankel quadrature error estimate {mp.nstr(err, 5)} too large")
        out = +out
        return out.real if abs(out.imag) <= abs(out) * mp.mpf(2) ** (-mp.prec + 8) else out
