from fractions import Fraction

import pytest
from mpmath import mp

from resurgo.exact import GaussianRational, RatFunc
from resurgo.jumps import jump_from_local_expansion
from resurgo.perturbative import ODESpec, expand_perturbative
from resurgo.singulant import ComplexPath, continue_roots, integrate_singulant, singulant_equation
from resurgo.transseries import (InnerProblem, LocalExponents, build_component, build_inner_problem,
                                 coefficient_recurrence, connection_constants, first_order_closed_form,
                                 general_switch, inhomogeneous_borel_integral, local_exponents,
                                 propagate_coefficients, solve_inner_series, stokes_jump)

I = mp.mpc(0, 1)


def _branch_to(spec, z_star, target, chiprime_near, n=8):
    eq = singulant_equation(spec)
    tr = continue_roots(eq, ComplexPath.segment(z_star, target, n))
    k = min(range(eq.degree), key=lambda j: abs(tr.branch(j)[-1] - chiprime_near))
    return integrate_singulant(eq, tr, k, z_star)


@pytest.fixture(scope="module")
def worked():
    with mp.workprec(256):
        z = RatFunc.z()
        spec = ODESpec([2 * z * z, -3 * z, 1], [z])
        series = expand_perturbative(spec, 8)
        branch = _branch_to(spec, 0, I, -I)      # chi' = -z, chi(i) = 1/2
        comp = build_component(spec, series, branch, order=1)
        return spec, series, branch, comp


def test_worked_exponents(worked):
    _, series, branch, _ = worked
    exps = local_exponents(series, branch)
    assert (exps.gamma, exps.delta, exps.beta, exps.alpha) == (2, 3, 1, 2)


def test_example_exponents(z):
    F = 1 / ((1 - z) * (2 - z))
    spec = ODESpec([1 - z, 2, 1], [F])
    series = expand_perturbative(spec, 4)
    assert series[1] == 2 * (-5 + 3 * z) / ((-2 + z) ** 2 * (-1 + z) ** 4)
    branch = _branch_to(spec, 1, 2, 1 + mp.sqrt(2))
    exps = local_exponents(series, branch)
    assert (exps.gamma, exps.delta, exps.beta, exps.alpha) == (1, 4, 0, 4)


def test_alpha_formula():
    assert LocalExponents(1, 0, Fraction(3)).alpha == 3
    assert LocalExponents(2, 3, 1).alpha == 2
    with pytest.raises(ValueError):
        LocalExponents(2, 3, 1, alpha=5)


def test_recurrence_description(worked_spec):
    rec = coefficient_recurrence(worked_spec, alpha=2)
    assert rec.describe()[0] == "((-3*z) - 2 chi') a_0' - chi'' a_0 = 0"
    assert rec.unconstrained == (2,)


def test_worked_a0_track_is_linear(worked):
    _, _, branch, comp = worked
    a0 = comp.tracks[0]
    for z, v in zip(branch.path.samples[1:], a0.values[1:]):
        assert abs(v - (-mp.sqrt(2) / 8) * z) < mp.mpf(10) ** -30


def test_matched_constants(worked):
    comp = worked[3]
    assert abs(comp.constants[0] / (-mp.sqrt(2) / 8) - 1) < 1e-8
    assert abs(comp.constants[1]) < 1e-8


def test_example_a1_closed_form(z):
    spec = ODESpec([1 - z, 2, 1])
    alpha = Fraction(1, 3)
    rec = coefficient_recurrence(spec, alpha=alpha)
    path = ComplexPath.segment(1, mp.mpf(5) / 2, 6)
    tracks = propagate_coefficients(rec, [1, 0], path, 2)
    k = mp.mpf(5) / (48 * (mp.mpf(1) / 3 - 1))
    for x, a0, a1 in list(zip(path.samples, tracks[0].values, tracks[1].values))[1::]:
        assert abs(a0 - x ** (-mp.mpf(1) / 4)) < mp.mpf(10) ** -30
        assert abs(a1 - (-k * x ** (-mp.mpf(1) / 4) + k * x ** (-mp.mpf(7) / 4))) < mp.mpf(10) ** -25


def test_zero_constant_track(z):
    rec = coefficient_recurrence(ODESpec([1 - z, 2, 1]), alpha=Fraction(1, 3))
    tracks = propagate_coefficients(rec, [0], ComplexPath.segment(1, 2, 4), 2)
    assert all(v == 0 for v in tracks[0].values)


def test_constant_P_gives_constant_a0():
    rec = coefficient_recurrence(ODESpec([3, 4, 1]), alpha=Fraction(1, 2))
    tracks = propagate_coefficients(rec, [mp.mpc(2, 1)], ComplexPath.segment(0, mp.mpc(1, 1), 4), -1)
    assert max(abs(v - mp.mpc(2, 1)) for v in tracks[0].values) < mp.mpf(10) ** -40


def test_inner_problems(worked):
    spec, series, branch, _ = worked
    exps = local_exponents(series, branch)
    G = GaussianRational
    p0 = build_inner_problem(spec, branch, 0, exps, 0, series)
    assert p0.exact_coefficients() == [[G(3)], [G(Fraction(-15, 2)), G(Fraction(9, 2))], [G(2), G(-3), G(1)]]
    assert p0.exact_initial()[0] == G(Fraction(-3, 4))
    # phi_0'(0) carries the opposite sign in the chi = -z^2/2 convention
    assert p0.exact_initial()[1] == G(Fraction(-23, 16))
    p2 = build_inner_problem(spec, branch, 0, exps, 2, series)
    assert p2.exact_coefficients() == [[G(Fraction(1, 2))], [G(Fraction(-9, 2)), G(Fraction(5, 2))], [G(2), G(-3), G(1)]]
    assert p2.exact_initial() == [G(0), G(0)]


def test_first_order_inner_problem(z):
    spec = ODESpec([1, 1], [0, 1 / z])
    series = expand_perturbative(spec, 6)
    branch = _branch_to(spec, 0, 1, 1, n=4)
    exps = local_exponents(series, branch)
    p = build_inner_problem(spec, branch, 0, exps, 0, series)
    q = p.exact_coefficients()
    # (1 - s) phi' - phi = 0 up to normalisation
    assert q[1][0] != 0
    assert [c / q[1][0] for c in q[1]] == [1, -1]
    assert [c / q[1][0] for c in q[0]] == [-1]


def test_inner_series_late_terms(worked):
    spec, series, branch, _ = worked
    exps = local_exponents(series, branch)
    phi = solve_inner_series(build_inner_problem(spec, branch, 0, exps, 0, series), 300)
    assert abs(phi[300] / 300 + mp.sqrt(2) / 2) < 0.01
    C = connection_constants(phi, 2)
    assert abs(C[0] + mp.sqrt(2) / 2) < 1e-10
    assert abs(C[1]) < 1e-10


def test_inner_series_closed_form():
    prob = InnerProblem(0, 0, ((mp.mpc(-1),), (mp.mpc(1), mp.mpc(-1))), (mp.mpc(1),), 1, 1, 1, True)
    phi = solve_inner_series(prob, 30)
    assert max(abs(c - 1) for c in phi) < mp.mpf(10) ** -60


def test_inner_series_zero_data():
    prob = InnerProblem(0, 0, ((mp.mpc(-1),), (mp.mpc(1), mp.mpc(-1))), (mp.mpc(0),), 1, 1, 1, True)
    assert all(c == 0 for c in solve_inner_series(prob, 10))


def test_connection_geometric():
    C = connection_constants([mp.mpf(1)] * 80, 1, count=3)
    assert abs(C[0] - 1) < 1e-12 and abs(C[1]) < 1e-12 and abs(C[2]) < 1e-12


def test_connection_double_pole():
    # (1-s)^-2 + (1-s)^-1 has coefficients n + 2
    C = connection_constants([mp.mpf(n + 2) for n in range(80)], 2)
    assert abs(C[0] - 1) < 1e-12 and abs(C[1] - 1) < 1e-12


def test_worked_jump_order_zero(worked):
    comp = worked[3]
    eps = mp.mpf(1) / 20
    pred = 2j * mp.pi / eps * (mp.sqrt(2) * I / 8) * mp.exp(-mp.mpf(1) / 2 / eps)
    assert abs(stokes_jump(comp, I, eps, 0) / pred - 1) < 1e-8
    assert abs(stokes_jump(comp, I, eps, 1) / pred - 1) < 1e-8


def test_euler_jump():
    eps = -mp.mpf("0.2")
    val = jump_from_local_expansion(-1, eps, 1, [1])
    assert abs(val / (2j * mp.pi * mp.exp(1 / eps)) - 1) < mp.mpf(10) ** -40


def test_zero_track_jump():
    assert jump_from_local_expansion(mp.mpc(1, 1), mp.mpf("0.1"), 2, [0, 0]) == 0


def test_log_over_s_switch():
    zz = mp.mpc("0.3", "0.4")
    chi, eps = mp.exp(zz), mp.mpf("0.05")
    got = general_switch(lambda n, z: n * mp.log(n) / chi, chi, zz, eps)
    ref = 2j * mp.pi * mp.log(chi / eps) * mp.exp(-chi / eps)
    assert abs(got / ref - 1) < mp.mpf(10) ** -40


def test_switch_reduces_to_jump():
    chi, eps, alpha, a0 = mp.mpc(1, 0.5), mp.mpf("0.1"), mp.mpf(2), mp.mpc(0.7, -0.2)
    c0 = a0 * (-chi) ** (-alpha)
    g = lambda n, z: c0 * n ** alpha / mp.gamma(alpha)
    jump = jump_from_local_expansion(chi, eps, alpha, [a0])
    # the Hankel loop is counterclockwise, the late-term switch is its negative
    assert abs(general_switch(g, chi, 0, eps) / jump + 1) < mp.mpf(10) ** -40


def test_first_order_closed_forms():
    zz = mp.mpc("0.3", "0.4")
    w = mp.mpc("0.2", "-0.1")
    v = first_order_closed_form(RatFunc.const(1), 1 / RatFunc.z(), w, zz)
    assert abs(v - 1 / (zz - w)) < mp.mpf(10) ** -60
    v = first_order_closed_form(mp.exp, lambda x: x, w, zz, chi=mp.exp)
    ez = mp.exp(zz)
    assert abs(v - mp.log(ez - w) / (ez - w)) < mp.mpf(10) ** -60
    assert first_order_closed_form(mp.exp, lambda x: x, 0, zz) == zz / ez


def test_inhomogeneous_integral():
    HB = lambda w, z: mp.sinh(w / z) / z ** 2
    w, zz = mp.mpc(0.4, 0.3), mp.mpc(1.1, -0.2)
    v = inhomogeneous_borel_integral(HB, w, zz, H0=lambda x: 1 / x)
    assert abs(v + mp.cosh(w / zz) / (w - zz)) < mp.mpf(10) ** -60
    H0 = lambda x: mp.exp(x) / (x + 3)
    assert inhomogeneous_borel_integral(lambda a, b: 0, w, zz, H0=H0) == H0(zz - w)
