"""Property suites run on every build: Laplace closure of the Borel rules,
Taylor coefficients from Hankel loops, gamma identities, and singulant tracking."""

import random

import pytest
from mpmath import mp

from resurgo.borel import coefficients_via_hankel, laplace_sum
from resurgo.gammafn import gamma_ratio_expansion, reciprocal_gamma_hankel
from resurgo.perturbative import ODESpec
from resurgo.series import TruncatedSeries, star_convolve
from resurgo.singulant import ComplexPath, build_branch, continue_roots, integrate_singulant, singulant_equation

EPS = [mp.mpf("0.3"), mp.mpc("0.2", "0.15")]


def _laplace(f, eps):
    return laplace_sum(f, eps, mp.arg(eps)).value


def _poly(rng, n):
    return [mp.mpc(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n)]


def _eval(cs, w):
    acc = mp.mpc(0)
    for c in reversed(cs):
        acc = acc * w + c
    return acc


@pytest.mark.parametrize("eps", EPS)
def test_star_product_is_laplace_product(eps):
    rng = random.Random(7)
    for _ in range(3):
        a, b = _poly(rng, 4), _poly(rng, 5)
        # pad so the truncation keeps the whole convolution
        fa = TruncatedSeries.from_list(a + [0] * 8)
        fb = TruncatedSeries.from_list(b + [0] * 7)
        conv = star_convolve(fa, fb)
        lhs = _laplace(conv, eps)
        rhs = _laplace(lambda w: _eval(a, w), eps) * _laplace(lambda w: _eval(b, w), eps)
        assert abs(lhs - rhs) < mp.mpf(10) ** -40 * max(1, abs(rhs))


@pytest.mark.parametrize("eps", EPS)
def test_multiplication_by_w(eps):
    # eps^2 d/deps of the Laplace integral is the integral of w yhat
    f = lambda w: mp.exp(-w) / (w + 2)
    h = mp.mpf(10) ** -25
    lhs = eps ** 2 * (_laplace(f, eps + h) - _laplace(f, eps - h)) / (2 * h)
    rhs = _laplace(lambda w: w * f(w), eps)
    assert abs(lhs - rhs) < mp.mpf(10) ** -30


@pytest.mark.parametrize("eps", EPS)
def test_division_by_eps(eps):
    # y / eps corresponds to yhat' up to the boundary value yhat(0)
    f = lambda w: mp.cos(w) / (w + 3)
    df = lambda w: mp.diff(f, w)
    lhs = _laplace(f, eps) / eps
    rhs = _laplace(df, eps) + f(0)
    assert abs(lhs - rhs) < mp.mpf(10) ** -30


def test_constant_maps_to_eps():
    for eps in EPS:
        assert abs(_laplace(lambda w: 1, eps) - eps) < mp.mpf(10) ** -60


HANKEL_CASES = [
    (lambda x: 1 / (1 - x), [1]),
    (lambda x: 1 / ((1 - x) * (2 - x)), [1, 2]),
    (lambda x: mp.sqrt(1 - x), [1]),
    (lambda x: mp.log(1 - x / mp.mpc(1, 1)), [mp.mpc(1, 1)]),
    (lambda x: (1 - x / mp.mpc(-1, 0.5)) ** (-mp.mpf(1) / 3) / (2 - x), [mp.mpc(-1, 0.5), 2]),
]


@pytest.mark.parametrize("case", range(len(HANKEL_CASES)))
def test_hankel_matches_taylor(case):
    f, sings = HANKEL_CASES[case]
    ref = mp.taylor(f, 0, 40)
    for n in (1, 7, 20, 40):
        got = coefficients_via_hankel(f, sings, n)
        assert abs(got - ref[n]) < mp.mpf(10) ** -10 * abs(ref[n])


@pytest.mark.parametrize("alpha", [1, 2, mp.mpf(1) / 2, mp.mpf(7) / 3, mp.mpc(1.5, -0.5), mp.mpf(-2.5)])
def test_reciprocal_gamma(alpha):
    assert abs(reciprocal_gamma_hankel(alpha) - mp.rgamma(alpha)) < mp.mpf(10) ** -10


@pytest.mark.parametrize("alpha", [1, 2, mp.mpf(1) / 2])
def test_gamma_ratio(alpha):
    for n in (20, 60, 200):
        exact = mp.gamma(n + alpha) / mp.gamma(n + 1)
        got = gamma_ratio_expansion(n, alpha, 8)
        assert abs(got / exact - 1) < mp.mpf(n) ** -9


def test_gamma_ratio_integer_is_exact():
    for n in (1, 5, 40):
        assert gamma_ratio_expansion(n, 2, 1) == n + 1
        assert abs(gamma_ratio_expansion(n, 3, 2) / ((n + 1) * (n + 2)) - 1) < mp.mpf(10) ** -70


@pytest.fixture
def airy_like(z):
    return singulant_equation(ODESpec([1 - z, 2, 1]))


@pytest.mark.parametrize("seed", range(3))
def test_monodromy_swap(airy_like, seed):
    rng = random.Random(seed)
    c = mp.mpc(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2))
    r = mp.mpf(rng.uniform(0.4, 1.5))
    if abs(c) >= r:
        c = 0
    tr = continue_roots(airy_like, ComplexPath.circle(c, r, 32))
    a, b = tr.branch(0), tr.branch(1)
    assert abs(a[-1] - b[0]) < mp.mpf(10) ** -40
    assert abs(b[-1] - a[0]) < mp.mpf(10) ** -40
    tr2 = continue_roots(airy_like, ComplexPath.circle(c, r, 64))
    assert abs(tr2.branch(0)[-1] - b[0]) < mp.mpf(10) ** -40


@pytest.mark.parametrize("seed", range(3))
def test_path_independence(airy_like, seed):
    # chi_+ from z = 1 along a straight line and along a random detour
    rng = random.Random(seed)
    target = mp.mpc(rng.uniform(1.5, 3), rng.uniform(-1, 1))
    a = build_branch(airy_like, ComplexPath.segment(1, target, 10), 0, 1)
    mid = mp.mpc(rng.uniform(1.2, 3), rng.uniform(0.5, 2) * (1 if rng.random() < 0.5 else -1))
    tr = continue_roots(airy_like, ComplexPath.polyline([1, mid, target], mp.mpf(1) / 8))
    k = min(range(2), key=lambda j: abs(tr.branch(j)[-1] - a.chiprime[-1]))
    b = integrate_singulant(airy_like, tr, k, 1)
    assert abs(a.chi[-1] - b.chi[-1]) < mp.mpf(10) ** -40
    x = target
    ref = {x + mp.mpf(2) / 3 * x ** mp.mpf(1.5) - mp.mpf(5) / 3, x - mp.mpf(2) / 3 * x ** mp.mpf(1.5) - mp.mpf(1) / 3}
    assert min(abs(a.chi[-1] - v) for v in ref) < mp.mpf(10) ** -40
