"""Single source of truth for Hankel-loop jump normalization.

Local form about a Borel singularity chi (principal powers, cut running
radially outward from chi):

    y_B(w) ~ sum_i C_i (1 - w/chi)^(i - alpha)

The counterclockwise loop integral of e^(-w/eps) (1 - w/chi)^(-b) around that
cut is

    J_b = -2 pi i chi (chi/eps)^(b-1) e^(-chi/eps) / Gamma(b).

Coefficients given in the (w - chi) form, sum_i a_i (w - chi)^(i - alpha), are
converted with (w - chi)^p := (-chi)^p (1 - w/chi)^p. Every jump reported by
the package goes through these functions.
"""

from __future__ import annotations

from typing import Sequence

from mpmath import mp

from .precision import to_mpc


def loop_power_integral(chi, epsilon, b):
    """J_b for a single power; zero when b is a nonpositive integer."""
    chi, eps, b = to_mpc(chi), to_mpc(epsilon), to_mpc(b)
    return -2j * mp.pi * chi * (chi / eps) ** (b - 1) * mp.exp(-chi / eps) * mp.rgamma(b)


def canonical_coefficients(coeffs: Sequence, chi, alpha) -> list:
    """C_i = a_i (-chi)^(i - alpha) from (w - chi)-form coefficients a_i."""
    chi, alpha = to_mpc(chi), to_mpc(alpha)
    return [to_mpc(a) * (-chi) ** (i - alpha) for i, a in enumerate(coeffs)]


def jump_from_local_expansion(chi, epsilon, alpha, coeffs: Sequence, form: str = "w-chi"):
    """Counterclockwise Hankel-loop integral of e^(-w/eps) y_B about chi.

    ``form`` is "w-chi" for sum a_i (w-chi)^(i-alpha) or "canonical" for
    sum C_i (1-w/chi)^(i-alpha).
    """
    if form == "w-chi":
        cs = canonical_coefficients(coeffs, chi, alpha)
    elif form == "canonical":
        cs = [to_mpc(c) for c in coeffs]
    else:
        raise ValueError("form must be 'w-chi' or 'canonical'")
    alpha = to_mpc(alpha)
    total = mp.mpc(0)
    for i, c in enumerate(cs):
        if c != 0:
            total += c * loop_power_integral(chi, epsilon, alpha - i)
    return total


def switch_from_late_terms(g, chi, z, epsilon):
    """2 pi i eps g(chi/eps, z) e^(-chi/eps) for late terms u_n ~ g(n, z)/(n chi^n)."""
    chi, eps = to_mpc(chi), to_mpc(epsilon)
    return 2j * mp.pi * eps * to_mpc(g(chi / eps, z)) * mp.exp(-chi / eps)
