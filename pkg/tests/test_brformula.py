import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st
from polyclip import chord_len, clip_below, offset_for_area, shoelace
from scipy.integrate import quad

from polymono.bodies import parse_body, square
from polymono.brformula import (
    Form,
    QuadratureSpec,
    QuadratureToleranceError,
    f0_expectation_quadrature,
    f0_expectation_quadrature_with_error,
    integrand_In,
    lemma2_check,
    monotonicity_table,
)

PLANAR = ["square", "triangle", "disk", "ellipse:2,1", "polygon:0,0;3,0;2,2;0,1"]


def harmonic(m):
    return float(sum(Fraction(1, k) for k in range(1, m + 1)))


def disk_f0(n):
    """Disk of unit area, integrating over the central angle of the cap."""
    r2 = 1 / math.pi

    def f(a):
        s = r2 * (a - math.sin(a)) / 2
        return s ** (n - 2) * 4 * r2 * math.sin(a / 2) ** 2 * r2 * (1 - math.cos(a)) / 2

    val, _ = quad(f, 0, 2 * math.pi, epsabs=1e-14, epsrel=1e-13, limit=400)
    return 2 * math.pi * n * (n - 1) * val / 6


def oracle_In(body, theta, n):
    poly = [tuple(map(float, v)) for v in body.vertices]
    u = (math.cos(theta), math.sin(theta))

    def f(s):
        p = offset_for_area(poly, u, s)
        return s ** (n - 2) * chord_len(poly, u, p) ** 2

    # kinks sit where the line passes a vertex; pieces can be very thin
    kinks = sorted(shoelace(clip_below(poly, u, x * u[0] + y * u[1])) for x, y in poly)
    val, _ = quad(f, 0, 1, epsabs=1e-12, limit=200, points=[k for k in kinks if 0 < k < 1])
    return n * (n - 1) * val


@pytest.mark.parametrize("name", PLANAR)
def test_three_points_always_give_three_vertices(name):
    assert f0_expectation_quadrature(parse_body(name), 3) == pytest.approx(3.0, abs=1e-10)


def test_square_four_points():
    assert f0_expectation_quadrature(square(), 4) == pytest.approx(133 / 36, abs=1e-10)


def test_disk_four_points_closed_form():
    exact = 4 - 35 / (12 * math.pi**2)
    assert f0_expectation_quadrature(parse_body("disk"), 4) == pytest.approx(exact, abs=1e-10)


@pytest.mark.parametrize("n", [3, 4, 7, 20, 100, 1000])
def test_triangle_is_twice_a_harmonic_number(n):
    assert f0_expectation_quadrature(parse_body("triangle"), n) == pytest.approx(2 * harmonic(n - 1), rel=1e-10)


@pytest.mark.parametrize("n", [5, 12, 50, 300])
def test_disk_matches_cap_angle_integral(n):
    assert f0_expectation_quadrature(parse_body("disk"), n) == pytest.approx(disk_f0(n), rel=1e-10)


@pytest.mark.parametrize("ratio", [1.0, 2.0, 5.0])
def test_ellipse_is_affine_image_of_disk(ratio):
    e = parse_body(f"ellipse:{ratio},1")
    for n in (4, 30):
        assert f0_expectation_quadrature(e, n) == pytest.approx(f0_expectation_quadrature(parse_body("disk"), n), abs=1e-10)


def test_affine_invariance_for_polygons():
    a = parse_body("polygon:0,0;3,0;2,2;0,1")
    b = parse_body("polygon:0,0;6,0;4,4;0,2")
    sheared = parse_body("polygon:0,0;3,0;3,2;0.5,1")
    for n in (5, 40):
        va = f0_expectation_quadrature(a, n)
        assert f0_expectation_quadrature(b, n) == pytest.approx(va, abs=1e-10)
        assert f0_expectation_quadrature(sheared, n) == pytest.approx(va, abs=1e-10)


@given(st.floats(0, 2 * math.pi), st.sampled_from([3, 6, 15]))
@example(3.140625, 3)  # a 1e-4 wide last piece near an edge normal
def test_inner_integral_matches_clipping_oracle(theta, n):
    body = parse_body("polygon:0,0;3,0;2,2;0,1")
    assert integrand_In(body, theta, n).value == pytest.approx(oracle_In(body, theta, n), rel=1e-7)


@given(st.floats(0, 2 * math.pi), st.sampled_from([2, 5, 10, 100]))
def test_three_forms_agree(theta, n):
    for name in ("square", "triangle", "disk", "ellipse:2,1"):
        body = parse_body(name)
        vals = [integrand_In(body, theta, n, QuadratureSpec(form=f)) for f in Form]
        for a in vals:
            for b in vals:
                assert abs(a.value - b.value) <= 10 * max(a.error, b.error, 1e-15)


def test_edge_normal_direction_uses_boundary_term():
    # at theta = 0 the square's top chord has full length, so L(1-) = 1
    body = square()
    s = integrand_In(body, 0.0, 10).value
    lp = integrand_In(body, 0.0, 10, QuadratureSpec(form=Form.LPRIME)).value
    assert lp == pytest.approx(s, rel=1e-12)
    assert s == pytest.approx(10.0, rel=1e-12)


def test_direction_may_be_a_vector():
    body = parse_body("triangle")
    a = integrand_In(body, (1.0, 1.0), 8)
    assert a.theta == pytest.approx(math.pi / 4)
    assert a.value == pytest.approx(integrand_In(body, math.pi / 4, 8).value)
    assert np.allclose(a.u, [math.sqrt(0.5)] * 2)


@pytest.mark.parametrize("name", ["square", "disk"])
def test_monotone_table_small_range(name):
    tab = monotonicity_table(parse_body(name), range(3, 41))
    assert tab.ns[0] == 3 and tab.ns[-1] == 40
    assert tab.strictly_increasing()
    assert np.all(tab.increments() > 10 * (tab.errors[1:] + tab.errors[:-1]))


def test_lemma2_on_all_bodies():
    for name in PLANAR:
        rep = lemma2_check(parse_body(name), grid=(32, 400))
        assert rep.passed, (name, rep)


def test_tolerance_failure_reports_estimate():
    with pytest.raises(QuadratureToleranceError) as info:
        f0_expectation_quadrature(square(), 50, QuadratureSpec(tol=1e-20))
    assert info.value.estimate > 1e-20


def test_bad_arguments():
    with pytest.raises((TypeError, ValueError)):
        f0_expectation_quadrature(parse_body("ball"), 4)
    with pytest.raises(ValueError):
        integrand_In(square(), 0.0, 1)
    with pytest.raises(ValueError):
        integrand_In(square(), (0.0, 0.0), 5)
    with pytest.raises(ValueError):
        monotonicity_table(square(), [2, 3])


def test_error_estimate_is_reported():
    res = f0_expectation_quadrature_with_error(parse_body("ellipse:2,1"), 200)
    assert 0 <= res.error < 1e-9
