import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from polymono.geometry import (
    AffinelyDependentError,
    DegenerateError,
    f_vector,
    hull,
    hull_exhaustive,
    hull_volume,
    is_simplicial,
    orient,
    orient2d,
    orient_batch,
    snap,
)

coords = st.integers(-1000, 1000)


def frac_orient(pts):
    d = len(pts[0])
    m = [[Fraction(pts[i + 1][k]) - Fraction(pts[0][k]) for k in range(d)] for i in range(d)]
    det = Fraction(0)
    for perm in itertools.permutations(range(d)):
        sgn = 1
        for i, j in itertools.combinations(range(d), 2):
            if perm[i] > perm[j]:
                sgn = -sgn
        term = Fraction(sgn)
        for i in range(d):
            term *= m[i][perm[i]]
        det += term
    return (det > 0) - (det < 0)


def test_orient_ccw_triangle():
    assert orient([(0, 0), (1, 0), (0, 1)]) == 1
    assert orient([(0, 0), (0, 1), (1, 0)]) == -1
    assert orient([(0, 0), (1, 1), (2, 2)]) == 0


def test_orient_near_collinear_is_exact():
    # The third point sits one ulp off the line y = x; a naive determinant loses it.
    x = 0.5
    y = np.nextafter(0.5, 1.0)
    assert orient([(0.1, 0.1), (x, y), (1e8, 1e8)]) == frac_orient([(0.1, 0.1), (x, y), (1e8, 1e8)])
    assert orient2d(0.1, 0.1, x, y, 1e8, 1e8) == frac_orient([(0.1, 0.1), (x, y), (1e8, 1e8)])


@given(st.lists(st.tuples(coords, coords), min_size=3, max_size=3))
def test_orient2d_matches_rationals(tri):
    scaled = [(a * 1e-3, b * 1e-3) for a, b in tri]
    assert orient(scaled) == frac_orient(scaled)


@given(st.lists(st.tuples(coords, coords, coords), min_size=4, max_size=4))
def test_orient3d_matches_rationals_and_swaps_sign(tet):
    assert orient(tet) == frac_orient(tet)
    swapped = [tet[1], tet[0]] + tet[2:]
    assert orient(swapped) == -orient(tet)


def test_orient_batch_shape_check():
    with pytest.raises(ValueError):
        orient_batch(np.zeros((2, 3, 3)))
    with pytest.raises(ValueError):
        orient([(0, 0), (1, 0)])


def test_snap_lands_on_grid():
    x = snap(np.random.default_rng(0).random((10, 2)))
    assert np.all(x * 2.0**53 == np.round(x * 2.0**53))


@given(st.integers(0, 2**32 - 1), st.integers(4, 60))
def test_planar_hull_matches_qhull(seed, n):
    pts = np.random.default_rng(seed).random((n, 2))
    h = hull(pts)
    ref = ConvexHull(pts)
    assert set(h.vertex_indices) == set(ref.vertices.tolist())
    fv = f_vector(h)
    assert fv[0] == fv[1] == len(ref.vertices)
    assert hull_volume(h, pts) == pytest.approx(ref.volume, rel=1e-12)
    # counterclockwise edge cycle
    ring = [f[0] for f in h.facets]
    for i in range(len(ring)):
        a, b, c = ring[i], ring[(i + 1) % len(ring)], ring[(i + 2) % len(ring)]
        assert orient([pts[a], pts[b], pts[c]]) == 1


@given(st.integers(0, 2**32 - 1), st.sampled_from([5, 9, 20, 80]))
def test_spatial_hull_matches_qhull(seed, n):
    pts = np.random.default_rng(seed).standard_normal((n, 3))
    h = hull(pts)
    ref = ConvexHull(pts)
    assert set(h.vertex_indices) == set(ref.vertices.tolist())
    assert is_simplicial(h)
    f0, f1, f2 = f_vector(h)
    assert f0 - f1 + f2 == 2
    assert 2 * f1 == 3 * f2
    assert hull_volume(h, pts) == pytest.approx(ref.volume, rel=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_exhaustive_agrees_with_fast_path(seed):
    pts = np.random.default_rng(seed).random((12, 3))
    assert sorted(hull(pts).facets) == sorted(hull_exhaustive(pts).facets)


def test_four_dimensional_simplex_hull():
    pts = np.vstack([np.zeros(4), np.eye(4), np.full(4, 0.1)])
    h = hull(pts)
    assert set(h.vertex_indices) == {0, 1, 2, 3, 4}
    assert f_vector(h).counts == (5, 10, 10, 5)


def test_cube_corners_are_degenerate():
    cube = np.array(list(itertools.product((0.0, 1.0), repeat=3)))
    h = hull(cube)
    assert h.degenerate
    assert f_vector(h).counts == (8, 12, 6)
    assert hull_volume(h, cube) == pytest.approx(1.0)
    with pytest.raises(DegenerateError):
        hull(cube, strict=True)


def test_collinear_boundary_points_dropped_or_rejected():
    pts = [(0, 0), (1, 0), (2, 0), (1, 1)]
    assert set(hull(pts).vertex_indices) == {0, 2, 3}
    with pytest.raises(DegenerateError):
        hull(pts, strict=True)


def test_affinely_dependent_input():
    with pytest.raises((AffinelyDependentError, DegenerateError)):
        hull([(0, 0), (1, 1), (2, 2), (3, 3)])
    with pytest.raises(ValueError):
        hull([(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        hull([(0.0, np.nan), (1, 0), (0, 1)])
