"""Point arithmetic, exact orientation, convex hulls and f-vectors.

Orientation signs are computed with a floating-point filter and an exact
rational fallback, so a sign is never a rounding artifact.  Sampled data lives
on a ``2**-53`` grid (see :func:`snap`), which keeps the fallback rare.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

GRID = 2.0**-53
_EPS = 2.0**-53


class DegenerateError(ValueError):
    """An orientation tie made the input non-generic."""


class AffinelyDependentError(ValueError):
    """The point set does not span its ambient space."""


def snap(points: np.ndarray) -> np.ndarray:
    """Round coordinates to the nearest multiple of ``GRID``."""
    return np.round(np.asarray(points, dtype=float) / GRID) * GRID


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"expected an (n, d) array of points, got shape {pts.shape}")
    if pts.shape[1] < 2:
        raise ValueError("dimension must be at least 2")
    if not np.all(np.isfinite(pts)):
        raise ValueError("coordinates must be finite")
    return pts


# --- determinants -------------------------------------------------------------


def _laplace(m):
    # m: (..., d, d); expansion along the first row keeps one formula for the
    # value and for the permanent of |m| used in the error bound.
    d = m.shape[-1]
    if d == 1:
        return m[..., 0, 0]
    if d == 2:
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    total = 0.0
    for j in range(d):
        minor = np.delete(np.delete(m, 0, axis=-2), j, axis=-1)
        term = m[..., 0, j] * _laplace(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _permanent(m):
    d = m.shape[-1]
    if d == 1:
        return m[..., 0, 0]
    total = 0.0
    for j in range(d):
        minor = np.delete(np.delete(m, 0, axis=-2), j, axis=-1)
        total = total + m[..., 0, j] * _permanent(minor)
    return total


def _exact_orient(simplex) -> int:
    rows = [[Fraction(float(x)) for x in p] for p in simplex]
    base = rows[0]
    mat = [[x - y for x, y in zip(r, base)] for r in rows[1:]]
    return _sign(_frac_det(mat))


def _frac_det(mat) -> Fraction:
    # Gaussian elimination over the rationals.
    mat = [row[:] for row in mat]
    d = len(mat)
    det = Fraction(1)
    for c in range(d):
        piv = next((r for r in range(c, d) if mat[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            mat[c], mat[piv] = mat[piv], mat[c]
            det = -det
        det *= mat[c][c]
        for r in range(c + 1, d):
            f = mat[r][c] / mat[c][c]
            if f:
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[c])]
    return det


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def orient_batch(simplices: np.ndarray) -> np.ndarray:
    """Exact orientation signs for a batch of simplices of shape (B, d+1, d).

    The sign is that of ``det[p1 - p0, ..., pd - p0]``: +1 for a
    counterclockwise triangle, 0 iff the points are affinely dependent.
    """
    s = np.asarray(simplices, dtype=float)
    if s.ndim != 3 or s.shape[1] != s.shape[2] + 1:
        raise ValueError(f"expected shape (B, d+1, d), got {s.shape}")
    d = s.shape[2]
    diff = s[:, 1:, :] - s[:, :1, :]
    det = _laplace(diff)
    perm = _permanent(np.abs(diff))
    # Generous bound covering the differences, d-1 products and d! - 1 sums.
    bound = 2.0 * (2 * d + math.factorial(d)) * _EPS * perm
    out = np.sign(det).astype(np.int8)
    unsure = ~(np.abs(det) > bound)
    if np.any(unsure):
        for i in np.flatnonzero(unsure):
            out[i] = _exact_orient(s[i])
    return out


def orient(simplex: Sequence[Sequence[float]]) -> int:
    """Sign of the orientation determinant of ``d + 1`` points in R^d."""
    pts = [tuple(map(float, p)) for p in simplex]
    if not pts:
        raise ValueError("empty simplex")
    d = len(pts[0])
    if any(len(p) != d for p in pts):
        raise ValueError("dimension mismatch between points")
    if len(pts) != d + 1:
        raise ValueError(f"orient needs {d + 1} points in dimension {d}, got {len(pts)}")
    return int(orient_batch(np.array(pts)[None])[0])


def orient2d(ax, ay, bx, by, cx, cy) -> int:
    """Scalar fast path for the planar predicate (Shewchuk's stage-A filter)."""
    detleft = (bx - ax) * (cy - ay)
    detright = (by - ay) * (cx - ax)
    det = detleft - detright
    bound = 3.3306690738754716e-16 * (abs(detleft) + abs(detright))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return _exact_orient(((ax, ay), (bx, by), (cx, cy)))


def _normals(base: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normals of the hyperplanes through each row of ``base`` (F, d, d).

    ``N . (x - p1)`` equals ``det[p2 - p1, ..., pd - p1, x - p1]``.  The second
    array bounds ``|N|`` componentwise (the same products without signs).
    """
    d = base.shape[-1]
    e = base[:, 1:, :] - base[:, :1, :]
    if d == 2:
        n = np.stack([-e[:, 0, 1], e[:, 0, 0]], axis=-1)
        return n, np.abs(n)
    u, v = e[:, 0], e[:, 1]
    n = np.cross(u, v)
    au, av = np.abs(u), np.abs(v)
    absn = np.stack(
        [
            au[:, 1] * av[:, 2] + au[:, 2] * av[:, 1],
            au[:, 2] * av[:, 0] + au[:, 0] * av[:, 2],
            au[:, 0] * av[:, 1] + au[:, 1] * av[:, 0],
        ],
        axis=-1,
    )
    return n, absn


def hyperplane_signs(base: np.ndarray, points: np.ndarray, skip: np.ndarray | None = None) -> np.ndarray:
    """Exact signs of ``orient(base[f] + (points[j],))`` as an (F, n) matrix.

    ``skip`` (F, k) lists point indices per row, usually the hyperplane's own
    points, that are reported as 0 without evaluation.
    """
    base = np.asarray(base, dtype=float)
    points = np.asarray(points, dtype=float)
    f, d, _ = base.shape
    n = len(points)
    if d > 3:
        simp = np.empty((f, n, d + 1, d))
        simp[:, :, :d, :] = base[:, None, :, :]
        simp[:, :, d, :] = points[None, :, :]
        return orient_batch(simp.reshape(-1, d + 1, d)).reshape(f, n)
    normal, absn = _normals(base)
    a = base[:, 0, :]
    det = normal @ points.T - np.einsum("fd,fd->f", a, normal)[:, None]
    # Rounding in the differences, the normal, both dot products and the
    # final subtraction stays below 16 eps (|x| + |a|) . |N|.
    bound = 16.0 * _EPS * (absn @ np.abs(points).T + np.einsum("fd,fd->f", np.abs(a), absn)[:, None])
    out = np.sign(det).astype(np.int8)
    unsure = ~(np.abs(det) > bound)
    if skip is not None:
        np.put_along_axis(out, skip, 0, axis=1)
        np.put_along_axis(unsure, skip, False, axis=1)
    if np.any(unsure):
        for fi, j in zip(*np.nonzero(unsure)):
            out[fi, j] = _exact_orient(np.vstack([base[fi], points[j]]))
    return out


def side_counts(points: np.ndarray, subsets: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For each d-subset, count points strictly on each side of its hyperplane.

    Returns ``(positive, negative, ties)`` where ties excludes the subset's own
    members.
    """
    n, d = points.shape
    subsets = np.asarray(subsets, dtype=np.intp)
    m = len(subsets)
    pos = np.zeros(m, dtype=np.int64)
    neg = np.zeros(m, dtype=np.int64)
    ties = np.zeros(m, dtype=np.int64)
    chunk = max(1, 400_000 // max(n, 1))
    for lo in range(0, m, chunk):
        sub = subsets[lo : lo + chunk]
        b = len(sub)
        signs = hyperplane_signs(points[sub], points, skip=sub)
        member = np.zeros((b, n), dtype=bool)
        np.put_along_axis(member, sub, True, axis=1)
        pos[lo : lo + b] = np.sum((signs > 0) & ~member, axis=1)
        neg[lo : lo + b] = np.sum((signs < 0) & ~member, axis=1)
        ties[lo : lo + b] = np.sum((signs == 0) & ~member, axis=1)
    return pos, neg, ties


# --- hulls --------------------------------------------------------------------


@dataclass(frozen=True)
class Hull:
    """Convex hull of an indexed point set.

    ``facets`` holds index tuples; in the plane they are the boundary edges in
    counterclockwise order, otherwise sorted tuples in sorted order.
    ``degenerate`` flags hulls built from non-generic input, where a facet may
    carry more than ``dim`` points.
    """

    vertex_indices: tuple[int, ...]
    facets: tuple[tuple[int, ...], ...]
    dim: int
    degenerate: bool = False


@dataclass(frozen=True)
class FVector:
    counts: tuple[int, ...]

    def __getitem__(self, i):
        return self.counts[i]

    def __len__(self):
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)


def _check_full_dimensional(pts: np.ndarray) -> None:
    n, d = pts.shape
    if n < d + 1:
        raise ValueError(f"need at least {d + 1} points in dimension {d}, got {n}")
    centered = pts - pts[0]
    if np.linalg.matrix_rank(centered) < d:
        # Confirm exactly on a spanning candidate before giving up.
        raise AffinelyDependentError("points are affinely dependent")


def _hull2d(pts: np.ndarray, strict: bool) -> Hull:
    n = len(pts)
    idx = _akl_toussaint(pts)
    order = idx[np.lexsort((pts[idx, 1], pts[idx, 0]))]
    xs = pts[:, 0].tolist()
    ys = pts[:, 1].tolist()
    degenerate = False

    def chain(seq):
        nonlocal degenerate
        out: list[int] = []
        for i in seq:
            while len(out) >= 2:
                a, b = out[-2], out[-1]
                o = orient2d(xs[a], ys[a], xs[b], ys[b], xs[i], ys[i])
                if o > 0:
                    break
                if o == 0:
                    if strict:
                        raise DegenerateError("collinear points on the hull boundary")
                    degenerate = True
                out.pop()
            out.append(i)
        return out

    seq = order.tolist()
    lower = chain(seq)
    upper = chain(seq[::-1])
    ring = lower[:-1] + upper[:-1]
    if len(ring) < 3:
        raise AffinelyDependentError("points are collinear")
    facets = tuple((ring[k], ring[(k + 1) % len(ring)]) for k in range(len(ring)))
    if n and len(set(ring)) != len(ring):
        raise AffinelyDependentError("points are collinear")
    return Hull(tuple(sorted(ring)), facets, 2, degenerate)


def _akl_toussaint(pts: np.ndarray) -> np.ndarray:
    """Indices of points not certified strictly inside the octagon of extremes."""
    n = len(pts)
    if n < 32:
        return np.arange(n)
    x, y = pts[:, 0], pts[:, 1]
    # counterclockwise by angle: left, lower-left, bottom, lower-right, right,
    # upper-right, top, upper-left
    cand = [int(np.argmin(x)), int(np.argmin(x + y)), int(np.argmin(y)), int(np.argmax(x - y)),
            int(np.argmax(x)), int(np.argmax(x + y)), int(np.argmax(y)), int(np.argmax(y - x))]
    poly = []
    for c in cand:
        if not poly or poly[-1] != c:
            poly.append(c)
    while len(poly) > 1 and poly[0] == poly[-1]:
        poly.pop()
    if len(poly) < 3:
        return np.arange(n)
    q = pts[poly]
    a = q
    b = np.roll(q, -1, axis=0)
    # Float test with a wide margin; anything near an edge is kept.
    cross = (b[None, :, 0] - a[None, :, 0]) * (y[:, None] - a[None, :, 1]) - (
        b[None, :, 1] - a[None, :, 1]
    ) * (x[:, None] - a[None, :, 0])
    scale = np.abs(b - a).sum(axis=1)[None, :] * (np.abs(pts).sum(axis=1)[:, None] + np.abs(a).sum(axis=1)[None, :])
    inside = np.all(cross > 1e-12 * scale, axis=1)
    return np.flatnonzero(~inside)


def hull_exhaustive(points, strict: bool = False) -> Hull:
    """Facet enumeration by testing every d-subset against all other points.

    A d-subset spans a facet hyperplane when all remaining points lie weakly on
    one side.  Subsets sharing a hyperplane are merged into one facet.
    """
    pts = as_points(points)
    n, d = pts.shape
    _check_full_dimensional(pts)
    subsets = np.array(list(itertools.combinations(range(n), d)), dtype=np.intp)
    pos, neg, ties = side_counts(pts, subsets)
    support = (pos == 0) | (neg == 0)
    spanning = np.array([_spans(pts[s]) for s in subsets]) if np.any(support & (ties > 0)) else None
    facets: dict[tuple[int, ...], None] = {}
    degenerate = False
    for k in np.flatnonzero(support):
        sub = tuple(int(i) for i in subsets[k])
        if ties[k] == 0:
            if pos[k] == 0 and neg[k] == 0:
                continue
            facets[sub] = None
            continue
        if spanning is not None and not spanning[k]:
            continue
        degenerate = True
        if strict:
            raise DegenerateError("coplanar points on a supporting hyperplane")
        # Gather every point on the hyperplane; keep those extreme within it.
        on = np.flatnonzero(hyperplane_signs(pts[list(sub)][None], pts)[0] == 0)
        facet = tuple(sorted(int(i) for i in _extreme_in_plane(pts, on)))
        facets[facet] = None
    if not facets:
        raise AffinelyDependentError("no facets found")
    facet_list = tuple(sorted(facets))
    verts = tuple(sorted({i for f in facet_list for i in f}))
    return Hull(verts, facet_list, d, degenerate)


def _spans(simplex_pts: np.ndarray) -> bool:
    # d points span a hyperplane iff they are affinely independent.
    diff = simplex_pts[1:] - simplex_pts[0]
    return np.linalg.matrix_rank(diff) == len(diff)


def _extreme_in_plane(pts: np.ndarray, on: np.ndarray) -> list[int]:
    sub = pts[on]
    d = pts.shape[1]
    if len(sub) <= d:
        return list(on)
    coords = _plane_coords(sub)
    inner = hull(coords)
    return [int(on[i]) for i in inner.vertex_indices]


def _plane_coords(sub: np.ndarray) -> np.ndarray:
    centered = sub - sub.mean(axis=0)
    _, _, vt = np.linalg.svd(centered)
    return centered @ vt[: sub.shape[1] - 1].T


def _hull_qhull(pts: np.ndarray) -> Hull:
    from scipy.spatial import ConvexHull, QhullError

    n, d = pts.shape
    try:
        qh = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateError(str(exc)) from exc
    facets = np.sort(qh.simplices, axis=1)
    # Certify: each proposed facet must have every other point strictly on one
    # side, and the facets must close up into a pseudomanifold.
    f = len(facets)
    signs = hyperplane_signs(pts[facets], pts, skip=facets)
    member = np.zeros((f, n), dtype=bool)
    np.put_along_axis(member, facets, True, axis=1)
    if np.any((signs == 0) & ~member):
        raise DegenerateError("point on a facet hyperplane")
    onesided = np.all((signs >= 0) | member, axis=1) | np.all((signs <= 0) | member, axis=1)
    if not np.all(onesided):
        raise DegenerateError("hull certification failed")
    ridges: dict[tuple[int, ...], int] = {}
    for fac in facets.tolist():
        for r in itertools.combinations(fac, d - 1):
            ridges[r] = ridges.get(r, 0) + 1
    if any(c != 2 for c in ridges.values()):
        raise DegenerateError("hull certification failed: open facet complex")
    facet_list = tuple(sorted(tuple(int(i) for i in fac) for fac in facets))
    verts = tuple(sorted({i for fac in facet_list for i in fac}))
    return Hull(verts, facet_list, d, False)


def hull(points, strict: bool = False) -> Hull:
    """Convex hull of ``points`` (shape ``(n, d)``).

    Planar hulls use a monotone-chain walk with exact turns.  In higher
    dimension facets proposed by Qhull are certified with the exact predicate;
    small or non-generic inputs use :func:`hull_exhaustive`.  With ``strict``
    any orientation tie raises :class:`DegenerateError`.
    """
    pts = as_points(points)
    n, d = pts.shape
    if n < d + 1:
        raise ValueError(f"need at least {d + 1} points in dimension {d}, got {n}")
    if d == 2:
        return _hull2d(pts, strict)
    if n <= 2 * d + 2:
        return hull_exhaustive(pts, strict)
    try:
        return _hull_qhull(pts)
    except DegenerateError:
        if strict:
            raise
    return hull_exhaustive(pts, strict=False)


def f_vector(h: Hull) -> FVector:
    """Face counts (f_0, ..., f_{d-1}) of a hull."""
    d = h.dim
    if d == 2:
        return FVector((len(h.vertex_indices), len(h.facets)))
    if h.degenerate and not is_simplicial(h):
        if d != 3:
            raise NotImplementedError("face lattice of non-simplicial hulls only for d <= 3")
        # Edges of a 3-polytope: pairs of vertices shared by exactly two facets
        # that are adjacent along a segment.
        edges = set()
        facet_sets = [set(f) for f in h.facets]
        for a, b in itertools.combinations(range(len(facet_sets)), 2):
            common = facet_sets[a] & facet_sets[b]
            if len(common) >= 2:
                edges.add(frozenset(common))
        f0 = len(h.vertex_indices)
        return FVector((f0, len(edges), len(h.facets)))
    counts = []
    for i in range(d - 1):
        faces = {c for f in h.facets for c in itertools.combinations(f, i + 1)}
        counts.append(len(faces))
    counts.append(len(h.facets))
    return FVector(tuple(counts))


def is_simplicial(h: Hull) -> bool:
    """True iff every facet has ``dim`` vertices and every ridge lies in two facets."""
    d = h.dim
    if any(len(f) != d for f in h.facets):
        return False
    if d == 2:
        return True
    ridges: dict[tuple[int, ...], int] = {}
    for f in h.facets:
        for r in itertools.combinations(sorted(f), d - 1):
            ridges[r] = ridges.get(r, 0) + 1
    return all(c == 2 for c in ridges.values())


def hull_volume(h: Hull, points) -> float:
    """d-volume of the hull, summed over cones from the vertex centroid.

    The sum is exactly rounded, so hulls with the same facet set give
    bitwise-identical volumes whatever order the facets come in.
    """
    pts = np.asarray(points, dtype=float)
    d = h.dim
    ref = pts[list(h.vertex_indices)].mean(axis=0)
    simplicial = [f for f in h.facets if len(f) == d]
    other = [f for f in h.facets if len(f) != d]
    parts: list[float] = []
    if simplicial:
        cones = pts[np.array(simplicial)] - ref
        parts.extend((np.abs(np.linalg.det(cones)) / math.factorial(d)).tolist())
    for f in other:
        fp = pts[list(f)]
        normal = _facet_normal(fp)
        height = abs(float(np.dot(fp[0] - ref, normal)))
        coords = _plane_coords(fp)
        inner = hull(coords)
        parts.append(height * hull_volume(inner, coords) / d)
    return math.fsum(parts)


def _facet_normal(fp: np.ndarray) -> np.ndarray:
    centered = fp - fp.mean(axis=0)
    _, _, vt = np.linalg.svd(centered)
    return vt[-1]
