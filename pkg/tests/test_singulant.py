import pytest
from mpmath import mp

from resurgo.exact import RatFunc
from resurgo.perturbative import ODESpec
from resurgo.singulant import (ComplexPath, TurningPointError, build_branch, closed_form_branch,
                               continue_roots, integrate_singulant, singulant_equation, trace_stokes_line)


@pytest.fixture
def airy_like(z):
    # P = 2, Q = 1 - z: chi' = 1 +- sqrt(z)
    return singulant_equation(ODESpec([1 - z, 2, 1]))


def test_equation_coefficients(airy_like, z):
    assert airy_like.coeffs == (1 - z, RatFunc.const(-2), RatFunc.const(1))


def test_roots_one_plus_minus_sqrt(airy_like):
    x = mp.mpc("0.7", "0.4")
    got = sorted(airy_like.roots_at(x), key=lambda v: float(v.real))
    ref = sorted([1 + mp.sqrt(x), 1 - mp.sqrt(x)], key=lambda v: float(v.real))
    assert max(abs(a - b) for a, b in zip(got, ref)) < mp.mpf(10) ** -60


def test_worked_roots(worked_spec):
    x = mp.mpc(0.3, -1.1)
    got = sorted(singulant_equation(worked_spec).roots_at(x), key=abs)
    assert abs(got[0] + x) < mp.mpf(10) ** -60 and abs(got[1] + 2 * x) < mp.mpf(10) ** -60


def test_first_order_root(z):
    G = z ** 2 + 3
    eq = singulant_equation(ODESpec([G, 1]))
    assert abs(eq.roots_at(2)[0] - 7) < mp.mpf(10) ** -60


def test_monodromy_swaps_tracks(airy_like):
    loop = ComplexPath.circle(0, mp.mpf(1) / 2, 32)
    tr = continue_roots(airy_like, loop)
    a, b = tr.branch(0), tr.branch(1)
    assert abs(a[-1] - b[0]) < mp.mpf(10) ** -40
    assert abs(b[-1] - a[0]) < mp.mpf(10) ** -40


def test_loop_not_enclosing_branch_point(airy_like):
    tr = continue_roots(airy_like, ComplexPath.circle(2, mp.mpf(1) / 2, 32))
    for k in range(2):
        assert abs(tr.branch(k)[-1] - tr.branch(k)[0]) < mp.mpf(10) ** -40


def test_interior_turning_point_is_reported(airy_like):
    with pytest.raises(TurningPointError) as info:
        continue_roots(airy_like, ComplexPath.segment(-1, 1, 5), allow_endpoint_collision=False)
    assert abs(info.value.location) < 1e-6


def test_worked_tracks_never_collide(worked_spec):
    eq = singulant_equation(worked_spec)
    path = ComplexPath.polyline([1, 1j, -1, -1j, 1], mp.mpf(1) / 4)
    tr = continue_roots(eq, path)
    for z, u, v in zip(tr.path.samples, tr.branch(0), tr.branch(1)):
        assert {round(float(abs(u / z)), 20), round(float(abs(v / z)), 20)} == {1.0, 2.0}


def test_constant_tracks():
    tr = continue_roots(singulant_equation(ODESpec([1, 1])), ComplexPath.segment(0, 3, 6))
    assert all(v == tr.branch(0)[0] for v in tr.branch(0))


def _worked_branches(spec, target):
    eq = singulant_equation(spec)
    tracks = continue_roots(eq, ComplexPath.segment(0, target, 8))
    return [integrate_singulant(eq, tracks, b, 0) for b in range(2)]


def test_worked_singulant_values(worked_spec):
    pts = [mp.mpc(mp.cos(t), mp.sin(t)) * (1 + k / 10) for k, t in enumerate(mp.linspace(0.2, 2.9, 4))]
    for x in pts:
        brs = _worked_branches(worked_spec, x)
        mags = sorted(abs(b.chi[-1]) for b in brs)
        assert abs(mags[0] - abs(x * x / 2)) < mp.mpf(10) ** -20
        assert abs(mags[1] - abs(x * x)) < mp.mpf(10) ** -20
        assert all(b.gamma == 2 for b in brs)


def test_first_order_chi_is_z():
    eq = singulant_equation(ODESpec([1, 1]))
    br = build_branch(eq, ComplexPath.segment(0, mp.mpc(2, 1), 4), 0, 0)
    assert abs(br.chi[-1] - mp.mpc(2, 1)) < mp.mpf(10) ** -60
    assert br.gamma == 1


def test_example_zero_of_chi_plus(airy_like):
    path = ComplexPath.segment(1, 2, 8)
    tr = continue_roots(airy_like, path)
    k = min(range(2), key=lambda j: abs(tr.branch(j)[0] - 2))
    br = integrate_singulant(airy_like, tr, k, 1)
    assert br.gamma == 1
    assert br.chi[0] == 0
    # chi_+ = z + (2/3) z^(3/2) - 5/3
    assert abs(br.chi[-1] - (2 + mp.mpf(2) / 3 * 2 ** mp.mpf(1.5) - mp.mpf(5) / 3)) < mp.mpf(10) ** -40


def test_path_independence(worked_spec):
    eq = singulant_equation(worked_spec)
    target = mp.mpc("0.8", "1.3")
    a = build_branch(eq, ComplexPath.segment(0, target, 10), 0, 0)
    path = ComplexPath.polyline([0, mp.mpc(1.5, 0), mp.mpc(1.5, 2), target], mp.mpf(1) / 8)
    tr = continue_roots(eq, path)
    k = min(range(2), key=lambda j: abs(tr.branch(j)[-1] - a.chiprime[-1]))
    b = integrate_singulant(eq, tr, k, 0)
    assert abs(a.chi[-1] - b.chi[-1]) < mp.mpf(10) ** -40


def test_worked_stokes_lines_on_imaginary_axis(worked_spec):
    for br in _worked_branches(worked_spec, mp.mpc(0, 0.1)):
        lines = trace_stokes_line(br, (-2, -2, 2, 2))
        assert len(lines) == 2
        for line in lines:
            assert max(abs(p.real) for p in line.points) < 1e-12
            assert max(abs(p.imag) for p in line.points) > 1.9


def test_real_axis_stokes_lines():
    path = ComplexPath.segment(0, mp.mpf(1) / 10, 4)
    br = closed_form_branch(lambda x: x * x, lambda x: 2 * x, 0, path, gamma=2)
    lines = trace_stokes_line(br, (-2, -2, 2, 2))
    assert len(lines) == 2
    for line in lines:
        assert max(abs(p.imag) for p in line.points) < 1e-12
    assert sorted(float(mp.sign(line.points[-1].real)) for line in lines) == [-1.0, 1.0]


def test_negative_constant_singulant_has_no_lines():
    path = ComplexPath.segment(0, mp.mpf(1) / 10, 4)
    br = closed_form_branch(lambda x: mp.mpc(-1), lambda x: mp.mpc(0), 0, path, gamma=0)
    assert trace_stokes_line(br, (-1, -1, 1, 1)) == []


def test_linear_singulant_stokes_line():
    path = ComplexPath.segment(0, mp.mpf(1) / 10, 4)
    br = closed_form_branch(lambda x: x, lambda x: mp.mpc(1), 0, path, gamma=1)
    lines = trace_stokes_line(br, (-2, -2, 2, 2))
    assert len(lines) == 1
    pts = lines[0].points
    assert max(abs(p.imag) for p in pts) < 1e-12
    assert min(p.real for p in pts) > -1e-12 and max(p.real for p in pts) > 1.9
