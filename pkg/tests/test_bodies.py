import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from polyclip import chord_len, clip_below, offset_for_area, shoelace
from scipy.integrate import quad

from polymono.bodies import (
    Ball,
    Disk,
    Ellipse,
    Polygon,
    area,
    body_name,
    chord_length,
    chord_sq,
    chord_sq_deriv,
    cut_area,
    invert_cut_area,
    normalize,
    parse_body,
    square,
)

QUAD = parse_body("polygon:0,0;3,0;2,2;0,1")
angles = st.floats(0, 2 * math.pi, allow_nan=False)
fractions = st.floats(1e-6, 1 - 1e-6)


def verts(body):
    return [tuple(map(float, v)) for v in body.vertices]


def test_named_bodies_have_unit_area():
    for name in ("square", "triangle", "disk", "ellipse:2,1", "ball", "ball:4", "polygon:0,0;3,0;2,2;0,1"):
        assert area(parse_body(name)) == pytest.approx(1.0, rel=1e-14), name


def test_normalize_keeps_shape():
    e = Ellipse((1.0, 2.0), 3.0, 1.5)
    n = normalize(e)
    assert n.a / n.b == pytest.approx(2.0)
    assert area(n) == pytest.approx(1.0)
    assert area(Ball((0, 0, 0), 2.0, 3)) == pytest.approx(4 / 3 * math.pi * 8)


def test_polygon_validation():
    with pytest.raises(ValueError):
        Polygon(((0, 0), (1, 0)))
    with pytest.raises(ValueError):
        Polygon(((0, 0), (1, 1), (1, 0), (0, 1)))  # self-crossing


def test_parse_errors_and_names():
    for bad in ("blob", "ellipse:1", "polygon:0,0;1", "ellipse:a,b"):
        with pytest.raises(ValueError):
            parse_body(bad)
    for name in ("square", "triangle", "disk", "ball"):
        assert body_name(parse_body(name)) == name
    assert parse_body(body_name(QUAD)) == QUAD


def test_contains():
    sq = square()
    assert sq.contains(np.array([[0.5, 0.5], [1.5, 0.5]])).tolist() == [True, False]
    d = Disk()
    assert d.contains(np.array([[0.0, 0.99], [0.0, 1.01]])).tolist() == [True, False]


@given(angles, st.floats(-0.99, 0.99))
def test_disk_chord_is_pythagorean(theta, p):
    d = Disk()
    assert chord_length(d, theta, p) == pytest.approx(2 * math.sqrt(1 - p * p), rel=1e-12)


@given(angles, fractions)
def test_polygon_chords_match_clipping(theta, s):
    u = (math.cos(theta), math.sin(theta))
    poly = verts(QUAD)
    p = offset_for_area(poly, u, s)
    assert float(cut_area(QUAD, theta, p)) == pytest.approx(s, abs=1e-12)
    assert float(invert_cut_area(QUAD, theta, s)) == pytest.approx(p, abs=1e-9)
    assert chord_sq(QUAD, theta, s) == pytest.approx(chord_len(poly, u, p) ** 2, abs=1e-9)


@given(angles, fractions)
def test_cut_area_inverse_roundtrip(theta, s):
    for body in (parse_body("triangle"), parse_body("ellipse:2,1"), parse_body("disk")):
        p = invert_cut_area(body, theta, s)
        assert float(cut_area(body, theta, p)) == pytest.approx(s, abs=1e-12)


@pytest.mark.parametrize("name", ["disk", "ellipse:2,1", "square", "triangle"])
def test_cut_area_is_integral_of_chord(name):
    body = parse_body(name)
    theta = 0.37
    lo, hi = body.bounding_box()
    r = float(np.hypot(*(hi - lo)))
    p = float(invert_cut_area(body, theta, 0.3))
    val, _ = quad(lambda q: chord_length(body, theta, q), -r, p, limit=200, points=[p - 1e-9])
    assert val == pytest.approx(0.3, abs=1e-7)


@given(angles, st.floats(0.01, 0.99))
def test_chord_sq_derivative_matches_difference(theta, s):
    h = 1e-6
    for body in (QUAD, parse_body("ellipse:2,1")):
        num = (chord_sq(body, theta, s + h) - chord_sq(body, theta, s - h)) / (2 * h)
        ana = chord_sq_deriv(body, theta, s)
        if isinstance(body, Polygon):
            # kinks: the one-sided slopes bracket the central difference
            lo = chord_sq_deriv(body, theta, s - h)
            hi = chord_sq_deriv(body, theta, s + h)
            assert min(lo, hi) - 1e-5 <= num <= max(lo, hi) + 1e-5
        else:
            assert num == pytest.approx(ana, rel=1e-5, abs=1e-5)


def test_ellipse_chords_against_clipped_polygonal_approximation():
    e = parse_body("ellipse:2,1")
    t = np.linspace(0, 2 * np.pi, 20001)[:-1]
    poly = [(e.center[0] + e.a * math.cos(x), e.center[1] + e.b * math.sin(x)) for x in t]
    scale = 1 / shoelace(poly)
    theta = 1.1
    u = (math.cos(theta), math.sin(theta))
    p = float(invert_cut_area(e, theta, 0.25))
    assert shoelace(clip_below(poly, u, p)) * scale == pytest.approx(0.25, abs=1e-6)


def test_chord_functionals_reject_balls_and_bad_fractions():
    with pytest.raises(TypeError):
        chord_length(parse_body("ball"), 0.0, 0.0)
    with pytest.raises(ValueError):
        invert_cut_area(square(), 0.0, 1.0)
