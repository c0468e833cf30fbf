from fractions import Fraction

import pytest
from mpmath import mp

from resurgo.exact import GaussianRational, RatFunc
from resurgo.perturbative import (BorelGerm, ODESpec, PerturbativeSeries, SpecError, borel_germ,
                                  borel_transform_ode, expand_perturbative, recurrence_residuals,
                                  singular_set)


def test_euler_terms_are_factorials(euler_spec):
    ser = expand_perturbative(euler_spec, 12)
    for n in range(1, 12):
        assert ser[n] == RatFunc.const((-1) ** (n - 1) * mp.factorial(n - 1).__int__())


def test_euler_germ(euler_spec):
    g = borel_germ(expand_perturbative(euler_spec, 30), 0)
    assert [complex(c) for c in g.coeffs[:6]] == [1, -1, 1, -1, 1, -1]


def test_worked_example_terms(worked_series, z):
    assert worked_series[0] == 1 / (2 * z)
    assert worked_series[1] == -3 / (4 * z ** 3)
    assert worked_series[2] == 23 / (8 * z ** 5)


def test_recurrence_holds(worked_spec):
    ser = expand_perturbative(worked_spec, 15)
    assert all(r.is_zero() for r in recurrence_residuals(ser, worked_spec))


def test_zero_forcing(z):
    ser = expand_perturbative(ODESpec([1, z]), 10)
    assert all(t.is_zero() for t in ser.terms)


def test_bad_spec():
    with pytest.raises(SpecError):
        ODESpec([1, 0])
    with pytest.raises(SpecError):
        ODESpec([1])


def test_singular_set_worked(worked_spec):
    gamma = singular_set(expand_perturbative(worked_spec, 10), worked_spec)
    assert len(gamma) == 1
    assert abs(gamma.points[0].z) < 1e-30


def test_singular_set_from_terms(z):
    y0 = 1 / (z * (z ** 2 - 1))
    y1 = (z ** 2 + z - 1) / (z ** 2 * (z ** 2 - 1) ** 2)
    gamma = singular_set(PerturbativeSeries((y0, y1)))
    assert sorted(float(p.z.real) for p in gamma) == [-1.0, 0.0, 1.0]


def test_singular_set_empty(z):
    spec = ODESpec([1, 1], [z ** 2 + 1])
    assert len(singular_set(expand_perturbative(spec, 8), spec)) == 0


def test_germ_matches_exact_terms(worked_series):
    z0 = GaussianRational(Fraction(-1, 2), 1)
    g = borel_germ(worked_series, z0)
    zz = mp.mpc(-0.5, 1)
    assert abs(g.constant - worked_series[0].eval_mpc(zz)) < mp.mpf(10) ** -60
    assert abs(g.coeffs[0] - worked_series[1].eval_mpc(zz)) < mp.mpf(10) ** -60
    assert abs(g.coeffs[1] - worked_series[2].eval_mpc(zz)) < mp.mpf(10) ** -60


def test_germ_of_short_series(euler_spec):
    g = borel_germ(expand_perturbative(euler_spec, 0), 0)
    assert isinstance(g, BorelGerm) and len(g) == 0


def test_borel_operator_first_order(z):
    G, H = z + 1, z ** 2
    op = borel_transform_ode(ODESpec([G, 1], [0, H]))
    ref = {(1, 0, 0): RatFunc.const(1), (0, 1, 0): G}
    assert {(dz, dw, wp): c for c, dz, dw, wp in op.terms} == ref
    assert op.leading_data == H / G


def test_borel_operator_worked(worked_spec, z):
    op = borel_transform_ode(worked_spec)
    got = {(dz, dw): c for c, dz, dw, _ in op.terms}
    assert got == {(2, 0): RatFunc.const(1), (1, 1): -3 * z, (0, 2): 2 * z * z}


def test_borel_operator_wave(z):
    F = 1 / (z - 3)
    op = borel_transform_ode(ODESpec([-1, 0, 1], [0, 0, F]))
    got = {(dz, dw): c for c, dz, dw, _ in op.terms}
    assert got == {(2, 0): RatFunc.const(1), (0, 2): RatFunc.const(-1)}
    assert op.leading_data == -F
