"""Deterministic quadrature for the expected vertex count of a planar random polygon.

For a planar convex body ``K`` of unit area, ``L(s, u)`` is the squared length
of the chord perpendicular to ``u`` that cuts off area ``s`` on the side
opposite to ``u``.  The expected number of vertices of the convex hull of
``n`` uniform points is

    E f0(K_n) = 1/6 * int_0^{2 pi} I_n(theta) dtheta,
    I_n(u) = n (n - 1) int_0^1 s^(n-2) L(s, u) ds.

Two substitutions give equivalent forms of ``I_n``:

    T form:  (n - 1) int_0^1 t^(-1/n) L(t^(1/n), u) dt
    L' form: n L(1-, u) - int_0^1 L'(t^(1/n), u) dt

The boundary term of the L' form vanishes except in the finitely many
directions normal to a polygon edge.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bodies import Ball, Disk, Ellipse, Polygon


class Form(str, enum.Enum):
    S = "S_FORM"
    T = "T_FORM"
    LPRIME = "LPRIME_FORM"


S_FORM, T_FORM, LPRIME_FORM = Form.S, Form.T, Form.LPRIME


class QuadratureToleranceError(RuntimeError):
    """The error estimate exceeded the requested tolerance."""

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature resolution.

    ``n_angles`` is the starting number of trapezoid directions for ellipses
    and the number of Gauss-Legendre nodes per angular panel for polygons.
    ``n_nodes`` is the Gauss-Legendre order per panel in ``s`` (or ``t``) and
    ``n_panels`` the number of dyadic panels toward each end of ``[0, 1]``.
    The error estimate comes from rerunning with doubled node counts.
    """

    n_angles: int = 8
    n_nodes: int = 12
    n_panels: int = 48
    form: Form = Form.S
    tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "form", Form(self.form))
        for name in ("n_angles", "n_nodes", "n_panels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.n_angles, 2 * self.n_nodes, self.n_panels, self.form, self.tol)


@dataclass(frozen=True)
class In_Value:
    theta: float
    n: int
    value: float
    error: float = 0.0

    @property
    def u(self) -> tuple[float, float]:
        return (math.cos(self.theta), math.sin(self.theta))


@dataclass(frozen=True)
class QuadratureResult:
    n: int
    value: float
    error: float


@dataclass(frozen=True)
class Lemma2Report:
    max_violation: float
    worst_theta: float
    n_directions: int
    n_points: int
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


@dataclass(frozen=True)
class MonotonicityTable:
    rows: tuple[QuadratureResult, ...] = field(default_factory=tuple)

    @property
    def ns(self) -> np.ndarray:
        return np.array([r.n for r in self.rows])

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def strictly_increasing(self, factor: float = 10.0) -> bool:
        """Every step up exceeds ``factor`` times the combined error estimates."""
        e = self.errors
        return bool(np.all(self.increments() > factor * (e[1:] + e[:-1])))

    def __iter__(self):
        return ((r.n, r.value) for r in self.rows)

    def __len__(self):
        return len(self.rows)


# --- panels ---------------------------------------------------------------------


@lru_cache(maxsize=None)
def _gl(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def _dyadic_edges(levels_lo: int, levels_hi: int) -> np.ndarray:
    lo = [2.0**-j for j in range(levels_lo, 0, -1)]
    hi = [1.0 - 2.0**-j for j in range(2, levels_hi + 1)]
    return np.array([0.0] + lo + hi + [1.0])


def _panel_nodes(edges: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on consecutive panels; ``edges`` is (N, P + 1)."""
    x, w = _gl(m)
    a, b = edges[:, :-1, None], edges[:, 1:, None]
    h = b - a
    nodes = (a + h * x).reshape(len(edges), -1)
    weights = (h * w).reshape(len(edges), -1)
    return nodes, weights


def _t_panels(edges: np.ndarray, comps: np.ndarray, m: int):
    """Panels in ``t`` carrying accurate complements ``1 - t``.

    Below 1/2 widths come from ``edges``, above from ``comps``, so panels
    squeezed against ``t = 1`` keep their relative accuracy.
    """
    x, w = _gl(m)
    a, b = edges[:, :-1, None], edges[:, 1:, None]
    ca, cb = comps[:, :-1, None], comps[:, 1:, None]
    low = a < 0.5
    h = np.maximum(np.where(low, b - a, ca - cb), 0.0)
    t = np.where(low, a + h * x, 1.0 - (cb + h * (1.0 - x)))
    c = np.where(low, 1.0 - t, cb + h * (1.0 - x))
    shape = (len(edges), -1)
    return t.reshape(shape), c.reshape(shape), (h * w).reshape(shape)


@lru_cache(maxsize=None)
def _dyadic_pairs(levels_lo: int, levels_hi: int) -> tuple[np.ndarray, np.ndarray]:
    t = _dyadic_edges(levels_lo, levels_hi)
    c = np.concatenate([1.0 - t[: levels_lo + 1], [2.0**-j for j in range(2, levels_hi + 1)], [0.0]])
    return t, c


def _edges_with(base: np.ndarray, extra: np.ndarray) -> np.ndarray:
    """Per-row sorted union of the base edges and the row's breakpoints."""
    rows = np.broadcast_to(base, (len(extra), len(base)))
    inner = np.clip(extra, 0.0, 1.0)
    return np.sort(np.concatenate([rows, inner], axis=1), axis=1)


def _check_planar(body):
    if isinstance(body, Ball) or not hasattr(body, "chords"):
        raise TypeError("quadrature is defined for planar bodies only")
    if abs(body.area() - 1.0) > 1e-9:
        raise ValueError("body must be normalized to unit area")


# --- inner integral ---------------------------------------------------------------


def _inner(tab, ns, form: Form, m: int, levels: int) -> np.ndarray:
    """``I_n`` for every direction in ``tab`` and every ``n``; shape (N, len(ns))."""
    ns = np.asarray(ns, dtype=np.int64)
    N = len(tab.theta)
    bp = tab.breakpoints()
    out = np.empty((N, len(ns)))
    if form is Form.S:
        edges = _edges_with(_dyadic_edges(levels // 2, levels), bp)
        s, w = _panel_nodes(edges, m)
        wl = w * tab.chord_sq(s)
        # walk the powers s^(n-2) upward so every n reuses the same nodes
        order = np.argsort(ns)
        power = np.ones_like(s)
        cur = 2
        for k in order:
            n = int(ns[k])
            if n < cur:
                raise ValueError("n must be at least 2")
            power *= s ** (n - cur)
            cur = n
            out[:, k] = n * (n - 1) * np.einsum("ij,ij->i", wl, power)
        return out
    top = tab.chord_sq_top()
    bpc = tab.breakpoint_complements()
    for k, n in enumerate(ns):
        n = int(n)
        if n < 2:
            raise ValueError("n must be at least 2")
        # t = s^n; a finite cap keeps the geometric panels inside double range
        base_t, base_c = _dyadic_pairs(levels + 16, levels)
        with np.errstate(divide="ignore"):
            bp_c = -np.expm1(n * np.log1p(-bpc))
        et = np.concatenate([np.broadcast_to(base_t, (N, len(base_t))), bp**n], axis=1)
        ec = np.concatenate([np.broadcast_to(base_c, (N, len(base_c))), bp_c], axis=1)
        order = np.argsort(et, axis=1, kind="stable")
        et, ec = np.take_along_axis(et, order, axis=1), np.take_along_axis(ec, order, axis=1)
        t, tc, w = _t_panels(et, ec, m)
        s = t ** (1.0 / n)
        # 1 - t^(1/n) without cancellation, since L' blows up at s = 1
        with np.errstate(divide="ignore"):
            comp = -np.expm1(np.log1p(-tc) / n)
        if form is Form.T:
            with np.errstate(invalid="ignore", divide="ignore"):
                f = np.where(w > 0, tab.chord_sq(s, comp) / s, 0.0)
            out[:, k] = (n - 1) * np.einsum("ij,ij->i", w, f)
        else:
            out[:, k] = n * top - np.einsum("ij,ij->i", w, tab.chord_sq_deriv(s, comp))
    return out


def _inner_with_error(tab, ns, spec: QuadratureSpec) -> tuple[np.ndarray, np.ndarray]:
    coarse = _inner(tab, ns, spec.form, spec.n_nodes, spec.n_panels)
    fine = _inner(tab, ns, spec.form, 2 * spec.n_nodes, spec.n_panels)
    return fine, np.abs(fine - coarse) + _roundoff(fine, ns)


def _roundoff(values, ns) -> np.ndarray:
    # Rounding a node moves s^n (or t^(1/n)) by about n ulps.
    ns = np.asarray(ns, dtype=float)
    return (4.0 * ns + 64.0) * np.finfo(float).eps * np.abs(values)


def integrand_In(body, u, n: int, spec: QuadratureSpec | None = None) -> In_Value:
    """``I_n(u)`` in the form chosen by ``spec``.

    ``u`` is an angle or a 2-vector.
    """
    spec = spec or QuadratureSpec()
    _check_planar(body)
    if n < 2:
        raise ValueError("n must be at least 2")
    theta = _angle(u)
    tab = body.chords(np.array([theta]))
    val, err = _inner_with_error(tab, [n], spec)
    return In_Value(theta, int(n), max(float(val[0, 0]), 0.0), float(err[0, 0]))


def _angle(u) -> float:
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    if arr.shape != (2,) or not np.hypot(*arr) > 0:
        raise ValueError("direction must be an angle or a nonzero 2-vector")
    return math.atan2(arr[1], arr[0])


# --- direction integral -----------------------------------------------------------


def _polygon_directions(body: Polygon, m: int, grading: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre directions between consecutive critical angles.

    ``I_n`` is analytic between critical angles but changes on a scale of
    order 1/n near them, so each interval is split geometrically toward
    both ends.
    """
    crit = np.sort(body.critical_angles())
    crit = np.append(crit, crit[0] + 2 * math.pi)
    a, b = crit[:-1], crit[1:]
    keep = b - a > 1e-13
    a, b = a[keep], b[keep]
    f = _dyadic_edges(grading, grading + 1)
    edges = a[:, None] + (b - a)[:, None] * f[None, :]
    theta, w = _panel_nodes(edges, m)
    return theta.ravel(), w.ravel()


def _f0_table(body, ns, spec: QuadratureSpec) -> tuple[np.ndarray, np.ndarray]:
    ns = np.asarray(ns, dtype=np.int64)
    if isinstance(body, Disk):
        tab = body.chords(np.array([0.0]))
        val, err = _inner_with_error(tab, ns, spec)
        return 2 * math.pi * val[0] / 6, 2 * math.pi * err[0] / 6
    if isinstance(body, Polygon):
        grading = int(math.ceil(math.log2(max(int(ns.max()), 2)))) + 4
        coarse = _polygon_sum(body, ns, spec.form, spec.n_angles, spec.n_nodes, spec.n_panels, grading)
        fine = _polygon_sum(body, ns, spec.form, 2 * spec.n_angles, 2 * spec.n_nodes, spec.n_panels, grading)
        err = np.abs(fine - coarse) + _roundoff(fine, ns)
        return fine / 6, err / 6
    if isinstance(body, Ellipse):
        return _ellipse_trapezoid(body, ns, spec)
    raise TypeError(f"unsupported body {type(body).__name__}")


def _polygon_sum(body, ns, form, m_theta, m_s, levels, grading, chunk=256) -> np.ndarray:
    theta, w = _polygon_directions(body, m_theta, grading)
    total = np.zeros(len(ns))
    for i in range(0, len(theta), chunk):
        tab = body.chords(theta[i : i + chunk])
        total += w[i : i + chunk] @ _inner(tab, ns, form, m_s, levels)
    return total


def _ellipse_trapezoid(body, ns, spec: QuadratureSpec, max_angles: int = 1 << 14):
    # one half-turn suffices: I_n(-u) pairs s with 1 - s, but both halves
    # are summed to keep the estimate independent of that symmetry
    N = spec.n_angles
    theta = 2 * math.pi * np.arange(N) / N
    fine, ferr = _inner_with_error(body.chords(theta), ns, spec)
    sums, serr = fine.sum(axis=0), ferr.sum(axis=0)
    prev = 2 * math.pi * sums / N
    while True:
        new = 2 * math.pi * (np.arange(N) + 0.5) / N
        v, e = _inner_with_error(body.chords(new), ns, spec)
        sums, serr = sums + v.sum(axis=0), serr + e.sum(axis=0)
        N *= 2
        cur = 2 * math.pi * sums / N
        s_err = 2 * math.pi * serr / N
        t_err = np.abs(cur - prev)
        if np.all(t_err <= 0.01 * spec.tol) or N >= max_angles:
            return cur / 6, (t_err + s_err) / 6
        prev = cur


def _check_result(ns, err, tol):
    bad = np.flatnonzero(err > tol)
    if len(bad):
        k = bad[np.argmax(err[bad])]
        raise QuadratureToleranceError(
            f"error estimate {err[k]:.3g} exceeds {tol:.3g} at n={int(ns[k])}", float(err[k])
        )


def f0_expectation_quadrature_with_error(body, n: int, spec: QuadratureSpec | None = None) -> QuadratureResult:
    spec = spec or QuadratureSpec()
    _check_planar(body)
    if n < 3:
        raise ValueError("n must be at least 3")
    val, err = _f0_table(body, [n], spec)
    _check_result([n], err, spec.tol)
    return QuadratureResult(int(n), float(val[0]), float(err[0]))


def f0_expectation_quadrature(body, n: int, spec: QuadratureSpec | None = None) -> float:
    """Expected vertex count of the hull of ``n`` uniform points in ``body``.

    Raises :class:`QuadratureToleranceError` when the estimated error exceeds
    ``spec.tol``.
    """
    return f0_expectation_quadrature_with_error(body, n, spec).value


def monotonicity_table(body, n_range, spec: QuadratureSpec | None = None) -> MonotonicityTable:
    """``E f0(K_n)`` with error estimates for every ``n`` in ``n_range``."""
    spec = spec or QuadratureSpec()
    _check_planar(body)
    ns = np.array(sorted(set(int(n) for n in n_range)), dtype=np.int64)
    if len(ns) == 0:
        raise ValueError("empty range")
    if ns[0] < 3:
        raise ValueError("n must be at least 3")
    val, err = _f0_table(body, ns, spec)
    _check_result(ns, err, spec.tol)
    return MonotonicityTable(tuple(QuadratureResult(int(n), float(v), float(e)) for n, v, e in zip(ns, val, err)))


# --- concavity of the squared chord ---------------------------------------------------


def lemma2_check(body, grid: tuple[int, int] | int = (64, 1000), tol: float = 1e-9) -> Lemma2Report:
    """Largest increase of ``s -> L'(s, u)`` over a direction-by-area grid.

    ``grid`` is ``(directions, area points)``; a bare int sets the number of
    directions.  Directions are equally spaced from angle 0 and the area
    points are cell midpoints of ``[0, 1]``.
    """
    _check_planar(body)
    n_dir, n_pts = (grid, 1000) if isinstance(grid, (int, np.integer)) else grid
    theta = 2 * math.pi * np.arange(n_dir) / n_dir
    s = (np.arange(n_pts) + 0.5) / n_pts
    tab = body.chords(theta)
    d = tab.chord_sq_deriv(np.broadcast_to(s, (n_dir, n_pts)).copy())
    rise = np.diff(d, axis=1)
    worst = rise.max(axis=1) if n_pts > 1 else np.zeros(n_dir)
    k = int(np.argmax(worst))
    return Lemma2Report(max(float(worst[k]), 0.0), float(theta[k]), n_dir, n_pts, tol)
