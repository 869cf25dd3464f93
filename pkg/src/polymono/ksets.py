"""Exact k-set counts of finite point sets.

A d-subset is a k-set when the open halfspace on one side of its hyperplane
holds exactly k points.  Each subset contributes once to ``s_min(left, right)``,
and twice when it splits the set evenly (``2k + d = n``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import DegenerateError, as_points, hull, hyperplane_signs, side_counts


@dataclass(frozen=True)
class KSetCounts:
    n: int
    d: int
    counts: tuple[int, ...]
    split_counts_doubled: bool = True

    def __getitem__(self, k: int) -> int:
        return self.counts[k]

    def s_leq(self, k: int) -> int:
        return sum(self.counts[: k + 1])

    @property
    def kmax(self) -> int:
        return len(self.counts) - 1


def _tally(n: int, d: int, left: np.ndarray, right: np.ndarray) -> tuple[int, ...]:
    kmax = (n - d) // 2
    k = np.minimum(left, right)
    weight = np.where(left == right, 2, 1)
    counts = np.bincount(k, weights=weight, minlength=kmax + 1).astype(np.int64)
    return tuple(int(c) for c in counts[: kmax + 1])


def kset_counts(points) -> KSetCounts:
    """All k-set counts by testing every d-subset against every point.

    Raises :class:`DegenerateError` if any d + 1 points are affinely dependent.
    """
    pts = as_points(points)
    n, d = pts.shape
    if n < d:
        raise ValueError(f"need at least {d} points in dimension {d}")
    subsets = np.array(list(itertools.combinations(range(n), d)), dtype=np.intp)
    pos, neg, ties = side_counts(pts, subsets)
    if np.any(ties):
        raise DegenerateError("d + 1 affinely dependent points")
    return KSetCounts(n, d, _tally(n, d, pos, neg))


def kset_counts_sweep(points) -> KSetCounts:
    """Planar k-set counts by an angular sweep around each point.

    Angles only locate candidates; every comparison within 1e-9 rad of a
    boundary is redone with the exact predicate.
    """
    pts = as_points(points)
    n, d = pts.shape
    if d != 2:
        raise ValueError("the angular sweep is planar only")
    if n < 2:
        raise ValueError("need at least 2 points")
    tol = 1e-9
    left_all = []
    right_all = []
    for i in range(n - 1):
        others = np.delete(np.arange(n), i)
        vec = pts[others] - pts[i]
        ang = np.arctan2(vec[:, 1], vec[:, 0])
        order = np.argsort(ang, kind="stable")
        a = ang[order]
        ext = np.concatenate([a, a + 2 * np.pi])
        js = np.flatnonzero(others > i)
        aj = ang[js]
        lo = np.searchsorted(ext, aj, side="right")
        hi = np.searchsorted(ext, aj + np.pi, side="left")
        left = hi - lo
        # Suspicious pairs: another angle sits close to either boundary ray.
        near_lo = np.searchsorted(ext, aj + tol, side="right") - np.searchsorted(ext, aj - tol, side="left")
        near_hi = np.searchsorted(ext, aj + np.pi + tol, side="right") - np.searchsorted(
            ext, aj + np.pi - tol, side="left"
        )
        redo = np.flatnonzero((near_lo > 1) | (near_hi > 0) | (aj + np.pi + tol > ext[-1]))
        for r in redo:
            j = others[js[r]]
            sign = hyperplane_signs(pts[[i, j]][None], pts, skip=np.array([[i, j]]))[0]
            if np.count_nonzero(sign == 0) > 2:
                raise DegenerateError("three collinear points")
            left[r] = int(np.count_nonzero(sign > 0))
        left_all.append(left)
        right_all.append(n - 2 - left)
    left = np.concatenate(left_all)
    right = np.concatenate(right_all)
    return KSetCounts(n, d, _tally(n, d, left, right))


def s_leq(points, k: int) -> int:
    """Number of j-sets with j <= k."""
    return kset_counts(points).s_leq(k)


# --- low-order counts through hull deletions ------------------------------------


def _deletion_gain_2d(pts: np.ndarray, ring: list[int], pos: int) -> int:
    """Edges of hull(S - q) cutting off q, for the ring vertex at ``pos``."""
    m = len(ring)
    q = ring[pos]
    a, b = ring[pos - 1], ring[(pos + 1) % m]
    signs = hyperplane_signs(pts[[a, b]][None], pts, skip=np.array([[a, b, q]]))[0]
    beyond = np.flatnonzero(signs < 0)
    if np.count_nonzero(signs == 0) > 3:
        raise DegenerateError("collinear points near a hull vertex")
    if len(beyond) == 0:
        return 1
    if len(beyond) == 1:
        return 2
    cand = np.concatenate([[a, b], beyond])
    sub = hull(pts[cand], strict=True)
    return len(sub.vertex_indices) - 1


def _deletion_gain(pts: np.ndarray, verts: np.ndarray, q: int) -> int:
    """Facets of hull(S - q) having q strictly outside."""
    n, d = pts.shape
    rest_v = verts[verts != q]
    if len(rest_v) <= d:
        cand = np.delete(np.arange(n), q)
        return _visible_count(pts, cand, q)
    h1 = hull(pts[rest_v], strict=True)
    facets = rest_v[np.array(h1.facets)]
    inner = _inner_signs(pts, facets, rest_v)
    qside = hyperplane_signs(pts[facets], pts[[q]])[:, 0]
    if np.any(qside == 0):
        raise DegenerateError("vertex on a facet hyperplane")
    visible = qside != inner
    others = np.setdiff1d(np.arange(n), np.append(verts, q))
    if len(others):
        vis = facets[visible]
        s = hyperplane_signs(pts[vis], pts[others])
        if np.any(s == 0):
            raise DegenerateError("point on a facet hyperplane")
        outside = np.any(s != inner[visible][:, None], axis=0)
        extra = others[outside]
    else:
        extra = others
    if len(extra) == 0:
        return int(np.count_nonzero(visible))
    return _visible_count(pts, np.concatenate([rest_v, extra]), q)


def _visible_count(pts: np.ndarray, cand: np.ndarray, q: int) -> int:
    h = hull(pts[cand], strict=True)
    facets = cand[np.array(h.facets)]
    inner = _inner_signs(pts, facets, cand[list(h.vertex_indices)])
    qside = hyperplane_signs(pts[facets], pts[[q]])[:, 0]
    if np.any(qside == 0):
        raise DegenerateError("vertex on a facet hyperplane")
    return int(np.count_nonzero(qside != inner))


def _inner_signs(pts: np.ndarray, facets: np.ndarray, members: np.ndarray) -> np.ndarray:
    # The side of each facet hyperplane holding the rest of the hull.
    centroid = pts[members].mean(axis=0)
    s = hyperplane_signs(pts[facets], centroid[None])[:, 0]
    if np.any(s == 0):
        raise DegenerateError("centroid on a facet hyperplane")
    return s


def deletion_profile(points) -> tuple[int, int, np.ndarray]:
    """``(s0, s1, s0_minus)`` from hull deletions.

    ``s0_minus[q]`` is the facet count of the set without point ``q``.  Uses
    that the 1-sets cutting off a hull vertex ``q`` are exactly the facets of
    the hull of the other points that see ``q``; for a generic set this gives
    ``s1`` in far fewer operations than the full subset enumeration.
    """
    pts = as_points(points)
    n, d = pts.shape
    if n < d + 2:
        raise ValueError(f"need at least {d + 2} points")
    h = hull(pts, strict=True)
    s0 = len(h.facets)
    s0_minus = np.full(n, s0, dtype=np.int64)
    s1 = 0
    if d == 2:
        ring = [f[0] for f in h.facets]
        for pos, q in enumerate(ring):
            gain = _deletion_gain_2d(pts, ring, pos)
            s1 += gain
            s0_minus[q] = s0 - 2 + gain
        return s0, s1, s0_minus
    verts = np.array(h.vertex_indices)
    degree = np.zeros(n, dtype=np.int64)
    for f in h.facets:
        degree[list(f)] += 1
    for q in verts:
        gain = _deletion_gain(pts, verts, int(q))
        s1 += gain
        s0_minus[q] = s0 - degree[q] + gain
    return s0, s1, s0_minus


def low_kset_counts(points) -> tuple[int, int]:
    """``(s0, s1)`` of a generic point set."""
    s0, s1, _ = deletion_profile(points)
    return s0, s1


def binom(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0
