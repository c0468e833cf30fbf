import pytest
from mpmath import mp

from resurgo.borel import (RayError, coefficients_via_hankel, detect_singularities, germ_from_function,
                           hankel_quadrature, laplace_sum, pade, pade_about_singularity)
from resurgo.jumps import loop_power_integral
from resurgo.perturbative import BorelGerm


def geometric(n, r=-1):
    return [mp.mpc(r) ** k for k in range(n)]


@pytest.mark.parametrize("M", [1, 3, 8])
def test_pade_reproduces_rational(M):
    p = pade(geometric(2 * M + 4), M - 1, M)
    assert len(p.poles) == 1
    loc, res, mult = p.poles[0]
    assert abs(loc + 1) < mp.mpf(10) ** -60 and abs(res - 1) < mp.mpf(10) ** -60 and mult == 1


def test_detect_single_pole():
    sings = detect_singularities(pade(geometric(60), 20, 21))
    assert [s.kind for s in sings] == ["isolated-pole"]
    assert abs(sings[0].chi + 1) < mp.mpf(10) ** -40


def test_entire_germ_has_no_stable_poles():
    cs = [1 / mp.factorial(k) for k in range(80)]
    sings = detect_singularities(pade(cs, 20, 21))
    assert not [s for s in sings if s.kind == "isolated-pole" and abs(s.chi) < 10]


def test_log_branch_cut():
    cs = [mp.mpc(0)] + [-mp.mpf(1) / k for k in range(1, 120)]
    sings = detect_singularities(pade(cs, 40, 41))
    heads = [s for s in sings if s.kind == "branch-cut-head"]
    assert len(heads) == 1
    assert abs(heads[0].chi - 1) < 1e-3


def test_laplace_of_constant_is_epsilon():
    eps = mp.mpf("0.3")
    assert abs(laplace_sum(lambda w: 1, eps, 0).value - eps) < mp.mpf(10) ** -60


def test_laplace_ray_through_singularity():
    germ = BorelGerm.from_coefficients(geometric(60))
    with pytest.raises(RayError):
        laplace_sum(germ, mp.mpf("0.1"), mp.pi)


def test_laplace_euler_value():
    germ = BorelGerm.from_coefficients(geometric(80))
    eps = mp.mpf(1) / 10
    exact = mp.exp(1 / eps) * mp.e1(1 / eps)
    assert abs(laplace_sum(germ, eps, 0).value - exact) < mp.mpf(10) ** -40


def test_hankel_pole():
    eps = -mp.mpf("0.25")
    val = hankel_quadrature(lambda w: 1 / (w + 1), -1, eps)
    assert abs(val / (2j * mp.pi * mp.exp(1 / eps)) - 1) < mp.mpf(10) ** -40


def test_hankel_analytic_is_zero():
    val = hankel_quadrature(lambda w: mp.exp(w) / (w + 5), 1, mp.mpf("0.5"))
    assert abs(val) < mp.mpf(10) ** -40


def test_hankel_branch_point():
    chi, eps = mp.mpc(1), mp.mpf(1) / 10
    # canonical form (1 - w/chi)^(-1/2), cut along the decay ray
    val = hankel_quadrature(lambda w: (1 - w / chi) ** (-mp.mpf(1) / 2), chi, eps)
    ref = loop_power_integral(chi, eps, mp.mpf(1) / 2)
    assert abs(val / ref - 1) < mp.mpf(10) ** -30


def test_coefficients_via_hankel_simple():
    for n in (0, 5, 30):
        assert abs(coefficients_via_hankel(lambda x: 1 / (1 - x), [1], n) - 1) < mp.mpf(10) ** -30


def test_coefficients_via_hankel_two_poles():
    f = lambda x: 1 / ((1 - x) * (2 - x))
    ref = mp.taylor(f, 0, 10)[10]
    assert abs(coefficients_via_hankel(f, [1, 2], 10) / ref - 1) < mp.mpf(10) ** -10


def test_germ_from_function():
    cs = germ_from_function(lambda w: 1 / (1 - w / 3), 30, 1)
    assert max(abs(c - mp.mpf(3) ** -k) for k, c in enumerate(cs)) < mp.mpf(10) ** -60


def test_pade_about_singularity_shifted():
    chi = mp.mpc(2, 1)
    p = pade_about_singularity([mp.mpc(1)] * 20, chi)
    assert len(p.poles) == 1
    assert abs(p.poles[0][0] - (chi + 1)) < mp.mpf(10) ** -40


def test_pade_about_singularity_terminating():
    p = pade_about_singularity([mp.mpc(-0.25)] + [mp.mpc(0)] * 15, mp.mpc("0.5"))
    assert p.poles == ()


def test_simple_pole_residue_jump():
    # y_B = 1/((w - z)(w - z^2 + 1)): the loop around chi = z is a plain residue
    z, eps = mp.mpc("0.6", "0.2"), mp.mpc("0.1", "0.03")
    val = hankel_quadrature(lambda w: 1 / ((w - z) * (w - z ** 2 + 1)), z, eps)
    ref = 2j * mp.pi * mp.exp(-z / eps) / (z - z ** 2 + 1)
    assert abs(val / ref - 1) < mp.mpf(10) ** -40
