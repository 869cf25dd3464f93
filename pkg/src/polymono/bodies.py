"""Convex bodies and their chord functionals.

For a planar body and a direction ``u = (cos t, sin t)`` the functionals are

* ``chord_length(p)``: length of the chord ``{x . u = p}``,
* ``cut_area(p)``: area of the part ``{x . u <= p}``,
* ``invert_cut_area(s)``: the offset ``p`` cutting off area ``s``,
* ``chord_sq(s)``: squared chord length at cut-off fraction ``s``,
* ``chord_sq_deriv(s)``: its derivative in ``s``, which equals twice the slope
  of ``chord_length`` at ``p(s)``.

Polygons are handled by exact piecewise algebra: between vertex events the
chord length is linear in ``p``, so the squared chord is linear in ``s``.
Disks and ellipses reduce to the unit-disk segment equation
``a - sin(a) = 2 pi s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import orient2d

_ROOT_TOL = 1e-12
_MAX_ITER = 200
SLIVER = 1e-12


# --- body types ---------------------------------------------------------------


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        vs = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", vs)
        if len(vs) < 3:
            raise ValueError("a polygon needs at least 3 vertices")
        m = len(vs)
        for i in range(m):
            a, b, c = vs[i], vs[(i + 1) % m], vs[(i + 2) % m]
            if orient2d(*a, *b, *c) <= 0:
                raise ValueError("polygon must be strictly convex and counterclockwise")

    dim = 2

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.vertices)

    @cached_property
    def _edges(self):
        v = self.array
        w = np.roll(v, -1, axis=0)
        return v, w, w - v, np.abs(w - v).sum(axis=1), np.abs(v).sum(axis=1)

    @cached_property
    def fan(self):
        """Triangle fan from vertex 0: apex, second and third corners, cumulative weights."""
        v = self.array
        a = v[0]
        b, c = v[1:-1], v[2:]
        w = np.abs((b[:, 0] - a[0]) * (c[:, 1] - a[1]) - (b[:, 1] - a[1]) * (c[:, 0] - a[0]))
        return a, b, c, np.cumsum(w) / w.sum()

    def area(self) -> float:
        v = self.array
        w = np.roll(v, -1, axis=0)
        return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]))

    def centroid(self) -> np.ndarray:
        v = self.array
        w = np.roll(v, -1, axis=0)
        cr = v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
        return ((v + w) * cr[:, None]).sum(axis=0) / (3.0 * cr.sum())

    def normalize(self) -> "Polygon":
        a = self.area()
        if a == 1.0:
            return self
        c = self.centroid()
        k = 1.0 / math.sqrt(a)
        return Polygon(tuple(map(tuple, c + (self.array - c) * k)))

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        v, w, e, esize, vsize = self._edges
        cross = e[:, 0] * (pts[:, 1:] - v[:, 1]) - e[:, 1] * (pts[:, :1] - v[:, 0])
        bound = 1e-15 * esize * (np.abs(pts).sum(axis=1)[:, None] + vsize)
        ok = (cross > bound).all(axis=1)
        near = ~ok & (cross > -bound).all(axis=1)
        for i in np.flatnonzero(near):
            p = pts[i]
            ok[i] = all(
                orient2d(*v[j], *w[j], *p) >= 0 for j in range(len(v))
            )
        return ok

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.array
        return v.min(axis=0), v.max(axis=0)

    def chords(self, theta) -> "_PolygonChords":
        return _PolygonChords(self, np.atleast_1d(np.asarray(theta, dtype=float)))

    def critical_angles(self) -> np.ndarray:
        """Directions where the vertex order along ``u`` changes, in [0, 2 pi)."""
        v = self.array
        angles = []
        for i in range(len(v)):
            for j in range(i + 1, len(v)):
                dx, dy = v[j] - v[i]
                a = math.atan2(dy, dx) + math.pi / 2
                angles.extend([a % (2 * math.pi), (a + math.pi) % (2 * math.pi)])
        return np.unique(np.round(np.array(angles), 15))


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    a: float
    b: float
    rotation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not (self.a > 0 and self.b > 0):
            raise ValueError("semi-axes must be positive")

    dim = 2

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return np.array([[c, -s], [s, c]]) @ np.diag([self.a, self.b])

    def area(self) -> float:
        return math.pi * self.a * self.b

    def normalize(self) -> "Ellipse":
        k = 1.0 / math.sqrt(self.area())
        if k == 1.0:
            return self
        return Ellipse(self.center, self.a * k, self.b * k, self.rotation)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float)) - np.array(self.center)
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        x = (c * pts[:, 0] + s * pts[:, 1]) / self.a
        y = (-s * pts[:, 0] + c * pts[:, 1]) / self.b
        return x * x + y * y <= 1.0

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        hx = math.hypot(self.a * c, self.b * s)
        hy = math.hypot(self.a * s, self.b * c)
        ctr = np.array(self.center)
        return ctr - [hx, hy], ctr + [hx, hy]

    def chords(self, theta) -> "_EllipseChords":
        return _EllipseChords(self, np.atleast_1d(np.asarray(theta, dtype=float)))


class Disk(Ellipse):
    def __init__(self, center=(0.0, 0.0), radius: float = 1.0):
        super().__init__(center, radius, radius, 0.0)

    @property
    def radius(self) -> float:
        return self.a

    def normalize(self) -> "Disk":
        r = 1.0 / math.sqrt(math.pi)
        if self.a == r:
            return self
        return Disk(self.center, r)

    def __repr__(self):
        return f"Disk(center={self.center}, radius={self.a!r})"


@dataclass(frozen=True)
class Ball:
    """Euclidean ball in R^d; used for sampling only."""

    center: tuple[float, ...]
    radius: float
    dim: int = 3

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if len(self.center) != self.dim:
            raise ValueError("center dimension mismatch")

    def area(self) -> float:
        d = self.dim
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.radius**d

    volume = area

    def normalize(self) -> "Ball":
        d = self.dim
        unit = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        r = unit ** (-1.0 / d)
        return Ball(self.center, r, d)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float)) - np.array(self.center)
        return np.einsum("ij,ij->i", pts, pts) <= self.radius**2

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.array(self.center, dtype=float)
        return c - self.radius, c + self.radius


ConvexBody = Polygon | Ellipse | Ball


def square() -> Polygon:
    return Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))


def area(body) -> float:
    return body.area()


def normalize(body):
    return body.normalize()


# --- unit-disk segment ----------------------------------------------------------


def _seg(alpha):
    """alpha - sin(alpha), accurate for small alpha."""
    alpha = np.asarray(alpha, dtype=float)
    out = alpha - np.sin(alpha)
    small = alpha < 0.5
    if np.any(small):
        a = alpha[small]
        a2 = a * a
        term = a * a2 / 6.0
        acc = term.copy()
        for k in range(2, 9):
            term = -term * a2 / ((2 * k) * (2 * k + 1))
            acc = acc + term
        out = np.where(small, 0.0, out)
        out[small] = acc
    return out


def _solve_segment(target):
    """Central angle alpha in [0, pi] with alpha - sin(alpha) = target.

    Safeguarded Newton on a shrinking bracket.
    """
    target = np.asarray(target, dtype=float)
    lo = np.zeros_like(target)
    hi = np.full_like(target, math.pi)
    x = np.minimum(np.cbrt(6.0 * target), math.pi)
    for _ in range(_MAX_ITER):
        f = _seg(x) - target
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        dfdx = 2.0 * np.sin(0.5 * x) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dfdx > 0, f / dfdx, np.inf)
        nxt = x - step
        bad = ~((nxt > lo) & (nxt < hi))
        nxt = np.where(bad, 0.5 * (lo + hi), nxt)
        done = np.abs(nxt - x) <= np.maximum(_ROOT_TOL * 1e-3, 4e-16 * x)
        x = nxt
        if np.all(done | (f == 0)):
            break
    return x


class _EllipseChords:
    """Chord functionals of an ellipse for an array of directions."""

    def __init__(self, body: Ellipse, theta: np.ndarray):
        self.theta = theta
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        A = body.matrix
        at_u = u @ A  # rows are A^T u
        self.sigma = np.linalg.norm(at_u, axis=-1)
        v = at_u / self.sigma[:, None]
        w = np.stack([-v[:, 1], v[:, 0]], axis=-1)
        self.width = np.linalg.norm(w @ A.T, axis=-1)
        self.offset = u @ np.array(body.center)
        self.area = body.area()

    def _col(self, arr, ndim):
        return arr.reshape(arr.shape + (1,) * (ndim - 1))

    def _frac(self, s, comp=None):
        """Half central angle of the smaller cap and which side it is on.

        ``comp``, if given, is ``area - s`` computed without cancellation.
        """
        s = np.asarray(s, dtype=float)
        s = s / self.area
        upper = s > 0.5
        rest = 1.0 - s if comp is None else np.asarray(comp, dtype=float) / self.area
        small = np.where(upper, rest, s)
        alpha = _solve_segment(2.0 * math.pi * np.clip(small, 0.0, 0.5))
        return 0.5 * alpha, upper

    def chord_length(self, p):
        p = np.asarray(p, dtype=float)
        sig = self._col(self.sigma, p.ndim)
        q = (p - self._col(self.offset, p.ndim)) / sig
        inside = np.abs(q) < 1
        half = np.sqrt(np.clip(1 - q * q, 0.0, None))
        return np.where(inside, 2.0 * self._col(self.width, p.ndim) * half, 0.0)

    def cut_area(self, p):
        p = np.asarray(p, dtype=float)
        q = (p - self._col(self.offset, p.ndim)) / self._col(self.sigma, p.ndim)
        qc = np.clip(q, -1.0, 1.0)
        # lower cap of the unit disk below q has central angle 2*acos(-q)
        low = q <= 0
        alpha = 2.0 * np.arccos(np.abs(qc))
        cap = _seg(alpha) / (2.0 * math.pi)
        return self.area * np.where(low, cap, 1.0 - cap)

    def invert_cut_area(self, s):
        s = np.asarray(s, dtype=float)
        half, upper = self._frac(s)
        q = np.cos(half)
        q = np.where(upper, q, -q)
        return self._col(self.offset, s.ndim) + q * self._col(self.sigma, s.ndim)

    def chord_sq(self, s, comp=None):
        s = np.asarray(s, dtype=float)
        half, _ = self._frac(s, comp)
        l = 2.0 * self._col(self.width, s.ndim) * np.sin(half)
        return l * l

    def chord_sq_deriv(self, s, comp=None):
        s = np.asarray(s, dtype=float)
        half, upper = self._frac(s, comp)
        # dl/dp = -2 |A w| q / (sigma sqrt(1 - q^2)); q = -cos(half) below centre
        with np.errstate(divide="ignore"):
            slope = 2.0 * self._col(self.width, s.ndim) / self._col(self.sigma, s.ndim) / np.tan(half)
        slope = np.where(upper, -slope, slope)
        return 2.0 * slope

    def chord_sq_top(self):
        return np.zeros_like(self.theta)

    def breakpoints(self):
        return np.zeros(self.theta.shape + (0,))

    def breakpoint_complements(self):
        return np.zeros(self.theta.shape + (0,))


class _PolygonChords:
    """Piecewise tables of a polygon's chord functionals, one row per direction.

    Events are the sorted vertex heights ``x . u``; piece ``j`` spans events
    ``j`` and ``j + 1``.  ``lo``/``hi`` hold the chord lengths at the ends of
    each piece (one-sided at the extreme events) and ``s`` the cumulative
    cut-off area at each event.
    """

    def __init__(self, body: Polygon, theta: np.ndarray):
        self.theta = theta
        v = body.array
        m = len(v)
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        perp = np.stack([-u[:, 1], u[:, 0]], axis=-1)
        h = u @ v.T  # (N, m)
        w = perp @ v.T
        order = np.argsort(h, axis=1, kind="stable")
        p = np.take_along_axis(h, order, axis=1)
        # chord length at each event height
        ha, hb = h, np.roll(h, -1, axis=1)
        wa, wb = w, np.roll(w, -1, axis=1)
        P = p[:, :, None]
        lo_e = np.minimum(ha, hb)[:, None, :]
        hi_e = np.maximum(ha, hb)[:, None, :]
        hit = (P >= lo_e) & (P <= hi_e)
        flat = (ha == hb)[:, None, :]
        dh = np.where(ha == hb, 1.0, hb - ha)[:, None, :]
        with np.errstate(over="ignore"):  # near-flat edges; clipped right away
            t = np.clip((P - ha[:, None, :]) / dh, 0.0, 1.0)
        x1 = wa[:, None, :] + t * (wb - wa)[:, None, :]
        x2 = np.where(flat, wb[:, None, :], x1)
        big = np.inf
        mx = np.max(np.where(hit, np.maximum(x1, x2), -big), axis=2)
        mn = np.min(np.where(hit, np.minimum(x1, x2), big), axis=2)
        ell = np.maximum(mx - mn, 0.0)  # (N, m)

        self.p = p
        self.lo = ell[:, :-1]
        self.hi = ell[:, 1:]
        dp = np.diff(p, axis=1)
        ds = 0.5 * (self.lo + self.hi) * dp
        self.s = np.concatenate([np.zeros((len(theta), 1)), np.cumsum(ds, axis=1)], axis=1)
        self.total = body.area()
        # Slivers left by rounding in nearly edge-normal directions carry no
        # area but would give L' of order 1/rounding; treat them as flat.
        self.live = ds > SLIVER * self.total
        # area above each event, summed from the top so it stays accurate near 1
        self.rest = np.concatenate([np.cumsum(ds[:, ::-1], axis=1)[:, ::-1], np.zeros((len(theta), 1))], axis=1)
        self.dp = dp
        self.ds = ds
        self.m = m

    def _piece_from_s(self, s):
        # s: (N, K) -> piece index (N, K), pieces with zero width never chosen
        s = np.asarray(s, dtype=float)
        inner = self.s[:, 1:-1]
        idx = np.sum(s[..., None] >= inner[:, None, :], axis=-1) if s.ndim == 2 else np.sum(
            s[:, None] >= inner, axis=-1
        )
        return idx

    def _as2d(self, x):
        x = np.asarray(x, dtype=float)
        return x.reshape(len(self.theta), -1), x.shape

    def chord_length(self, p):
        p2, shape = self._as2d(p)
        idx = np.sum(p2[..., None] >= self.p[:, None, 1:-1], axis=-1)
        take = lambda a: np.take_along_axis(a, idx, axis=1)
        p0, dpj, lo, hi = take(self.p[:, :-1]), take(self.dp), take(self.lo), take(self.hi)
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(dpj > 0, (p2 - p0) / dpj, 0.0)
        val = lo + (hi - lo) * frac
        inside = (p2 > self.p[:, :1]) & (p2 < self.p[:, -1:])
        return np.where(inside, val, 0.0).reshape(shape)

    def cut_area(self, p):
        p2, shape = self._as2d(p)
        pc = np.clip(p2, self.p[:, :1], self.p[:, -1:])
        idx = np.sum(pc[..., None] >= self.p[:, None, 1:-1], axis=-1)
        take = lambda a: np.take_along_axis(a, idx, axis=1)
        p0, dpj, lo, hi, s0 = take(self.p[:, :-1]), take(self.dp), take(self.lo), take(self.hi), take(self.s[:, :-1])
        x = pc - p0
        with np.errstate(invalid="ignore", divide="ignore"):
            slope = np.where(dpj > 0, (hi - lo) / dpj, 0.0)
        return (s0 + lo * x + 0.5 * slope * x * x).reshape(shape)

    def _L_pieces(self, s2):
        idx = self._piece_from_s(s2)
        take = lambda a: np.take_along_axis(a, idx, axis=1)
        s0, dsj, lo, hi = take(self.s[:, :-1]), take(self.ds), take(self.lo), take(self.hi)
        L0, L1 = lo * lo, hi * hi
        live = np.take_along_axis(self.live, idx, axis=1)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            dL = np.where(live, (L1 - L0) / dsj, 0.0)
        return idx, s0, lo, L0, dL

    def invert_cut_area(self, s):
        s2, shape = self._as2d(s)
        idx, s0, lo, L0, dL = self._L_pieces(s2)
        p0 = np.take_along_axis(self.p[:, :-1], idx, axis=1)
        ell = np.sqrt(np.maximum(L0 + dL * (s2 - s0), 0.0))
        denom = lo + ell
        with np.errstate(invalid="ignore", divide="ignore"):
            step = np.where(denom > 0, 2.0 * (s2 - s0) / denom, 0.0)
        return (p0 + step).reshape(shape)

    def chord_sq(self, s, comp=None):
        s2, shape = self._as2d(s)
        _, s0, _, L0, dL = self._L_pieces(s2)
        return np.maximum(L0 + dL * (s2 - s0), 0.0).reshape(shape)

    def chord_sq_deriv(self, s, comp=None):
        s2, shape = self._as2d(s)
        return self._L_pieces(s2)[4].reshape(shape)

    def chord_sq_top(self):
        """One-sided limit of the squared chord as s -> 1, ignoring slivers."""
        m = self.live.shape[1]
        last = m - 1 - np.argmax(self.live[:, ::-1], axis=1)
        return np.take_along_axis(self.hi, last[:, None], axis=1)[:, 0] ** 2

    def breakpoints(self):
        """Cut-off fractions of the interior vertex events, shape (N, m - 2)."""
        return self.s[:, 1:-1]

    def breakpoint_complements(self):
        """``1 - breakpoints()`` without cancellation."""
        return self.rest[:, 1:-1]


# --- public functional API --------------------------------------------------------


def _dispatch(body, theta, x, method):
    if not hasattr(body, "chords"):
        raise TypeError(f"chord functionals need a planar body, got {type(body).__name__}")
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if theta.ndim == 0:
        tab = body.chords(theta)
        out = getattr(tab, method)(x.reshape(1, -1))
        return out.reshape(x.shape) if x.ndim else float(out.ravel()[0])
    th, xx = np.broadcast_arrays(theta, x)
    tab = body.chords(th.ravel())
    out = getattr(tab, method)(xx.reshape(-1, 1))
    return out.reshape(th.shape)


def chord_length(body, theta, p):
    """Length of ``body`` cut by the line ``{x . u = p}``, ``u`` at angle ``theta``."""
    return _dispatch(body, theta, p, "chord_length")


def cut_area(body, theta, p):
    return _dispatch(body, theta, p, "cut_area")


def invert_cut_area(body, theta, s):
    s_arr = np.asarray(s, dtype=float)
    if np.any((s_arr <= 0) | (s_arr >= 1)):
        raise ValueError("cut-off fraction must lie in (0, 1)")
    return _dispatch(body, theta, s, "invert_cut_area")


def chord_sq(body, theta, s):
    """Squared length of the chord perpendicular to ``u`` cutting off area ``s``."""
    return _dispatch(body, theta, s, "chord_sq")


def chord_sq_deriv(body, theta, s):
    """Derivative in ``s`` of :func:`chord_sq`, from the analytic chord slope."""
    return _dispatch(body, theta, s, "chord_sq_deriv")


# --- parsing ----------------------------------------------------------------------


def parse_body(text: str):
    """Parse ``square | triangle | disk | ellipse:a,b | polygon:x,y;... | ball[:d]``.

    Planar bodies come back normalized to unit area.
    """
    text = text.strip()
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name == "square":
        return square()
    if name == "triangle":
        return Polygon(((0, 0), (2, 0), (0, 1)))
    if name == "disk":
        return Disk().normalize()
    if name == "ellipse":
        try:
            a, b = (float(t) for t in arg.split(","))
        except ValueError:
            raise ValueError(f"malformed ellipse spec: {text!r}") from None
        return Ellipse((0.0, 0.0), a, b).normalize()
    if name == "polygon":
        try:
            verts = [tuple(float(c) for c in pair.split(",")) for pair in arg.split(";") if pair.strip()]
        except ValueError:
            raise ValueError(f"malformed polygon spec: {text!r}") from None
        if any(len(v) != 2 for v in verts):
            raise ValueError(f"malformed polygon spec: {text!r}")
        return Polygon(tuple(verts)).normalize()
    if name == "ball":
        d = int(arg) if arg else 3
        return Ball((0.0,) * d, 1.0, d).normalize()
    raise ValueError(f"unknown body {text!r}")


def body_name(body) -> str:
    if isinstance(body, Ball):
        return f"ball:{body.dim}" if body.dim != 3 else "ball"
    if isinstance(body, Disk):
        return "disk"
    if isinstance(body, Ellipse):
        return f"ellipse:{body.a:.17g},{body.b:.17g}"
    if body == square():
        return "square"
    if body == Polygon(((0, 0), (2, 0), (0, 1))):
        return "triangle"
    return "polygon:" + ";".join(f"{x:.17g},{y:.17g}" for x, y in body.vertices)
