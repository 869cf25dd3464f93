"""Monte Carlo experiments on random polytopes.

Replicate ``i`` of an experiment at sample size ``n`` draws its points from
the Philox substream ``(seed, n, i)``.  Estimators that ask for the same
``(seed, n)`` therefore see the same point sets, which is what couples them.
A replicate whose points are not in general position is redrawn from the
continuation of its own stream, so the outcome stays a function of the seed.

Results are gathered per replicate into an array in index order before any
reduction; the worker count changes nothing but the wall time.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .bodies import Ball, Disk, Ellipse
from .geometry import DegenerateError, Hull, f_vector, hull, hull_volume, is_simplicial
from .ksets import binom, deletion_profile, kset_counts, kset_counts_sweep
from .sampling import RngStream, sample_uniform, substream

MAX_REDRAWS = 100
VERDICT_SIGMA = 3.0


@dataclass(frozen=True)
class EstimatorResult:
    quantity: str
    mean: float
    std_error: float
    reps: int
    n: int
    seed: int

    def __post_init__(self):
        if self.reps < 2:
            raise ValueError("an estimate needs at least 2 replicates")
        if not self.std_error >= 0:
            raise ValueError("standard error must be nonnegative")


@dataclass(frozen=True)
class Verdict:
    """Outcome of a statistical check: ``margin`` is lhs - rhs, positive is good."""

    name: str
    passed: bool
    margin: float
    std_error: float
    n: int
    reps: int
    details: dict = field(default_factory=dict)

    @property
    def margin_sigma(self) -> float:
        if self.std_error > 0:
            return self.margin / self.std_error
        return math.inf if self.margin > 0 else (0.0 if self.margin == 0 else -math.inf)


@dataclass(frozen=True)
class C2Diagnostic:
    n: int
    r: int
    d: int
    q: float
    psi: float
    lhs: float
    rhs: float
    std_error: float
    margin_sigma: float
    rhs_pd: float
    margin_sigma_pd: float
    reps: int

    @property
    def passed(self) -> bool:
        return self.margin_sigma >= -VERDICT_SIGMA

    @property
    def passed_pd(self) -> bool:
        return self.margin_sigma_pd >= -VERDICT_SIGMA


@dataclass(frozen=True)
class GrowthFit:
    A: float
    c: float
    r_squared: float
    model: str = "power"


@dataclass(frozen=True)
class RatioRow:
    n: int
    ratio: float
    std_error: float
    threshold: float

    @property
    def margin_sigma(self) -> float:
        gap = self.threshold - self.ratio
        return gap / self.std_error if self.std_error > 0 else math.copysign(math.inf, gap)


# --- invariant bookkeeping --------------------------------------------------------


@dataclass
class InvariantLog:
    """Structural checks made on sampled hulls, summed over replicates."""

    checks: int = 0
    violations: int = 0
    redraws: int = 0

    def reset(self):
        self.checks = self.violations = self.redraws = 0


invariants = InvariantLog()


def _structure(h: Hull) -> tuple[int, int]:
    """(checks, violations) of the face-count identities of a generic hull."""
    f = f_vector(h)
    d = h.dim
    bad = 0
    checks = 2
    if not is_simplicial(h):
        bad += 1
    if d == 2:
        bad += f[0] != f[1]
    elif d == 3:
        checks += 1
        bad += f[0] - f[1] + f[2] != 2
        bad += 2 * f[1] != 3 * f[2]
    else:
        bad += 2 * f[d - 2] != d * f[d - 1]
    return checks, int(bad)


# --- replicate engine ---------------------------------------------------------------


def default_workers() -> int:
    env = os.environ.get("POLYMONO_WORKERS", "").strip()
    if not env:
        return 1
    try:
        w = int(env)
    except ValueError:
        raise ValueError(f"POLYMONO_WORKERS must be an integer, got {env!r}") from None
    if w < 1:
        raise ValueError("POLYMONO_WORKERS must be at least 1")
    return w


def _one(task: Callable, body, m: int, key: int, seed: int, i: int) -> tuple[np.ndarray, int]:
    rng = substream(RngStream(seed, key), i).generator()
    for attempt in range(MAX_REDRAWS):
        pts = sample_uniform(body, m, rng)
        try:
            return np.asarray(task(pts), dtype=float), attempt
        except DegenerateError:
            continue
    raise DegenerateError(f"replicate {i}: {MAX_REDRAWS} degenerate draws in a row")


def _block(task, body, m, key, seed, lo, hi) -> np.ndarray:
    rows = []
    for i in range(lo, hi):
        vals, redraws = _one(task, body, m, key, seed, i)
        rows.append(np.append(vals, redraws))
    return np.array(rows)


def run_replicates(
    task: Callable, body, m: int, reps: int, seed: int, workers: int | None = None, key: int | None = None
) -> np.ndarray:
    """Apply ``task`` to ``reps`` independent samples of ``m`` points.

    ``task`` maps a point array to a vector whose last two entries are the
    structural check and violation counts.  Returns the remaining entries,
    one row per replicate in replicate order.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    key = m if key is None else key
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if workers == 1 or reps < 2 * workers:
        out = _block(task, body, m, key, seed, 0, reps)
    else:
        size = max(1, -(-reps // (4 * workers)))
        starts = list(range(0, reps, size))
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = ex.map(_block, *zip(*[(task, body, m, key, seed, a, min(a + size, reps)) for a in starts]))
            out = np.concatenate(list(parts), axis=0)
    invariants.redraws += int(out[:, -1].sum())
    invariants.checks += int(out[:, -3].sum())
    invariants.violations += int(out[:, -2].sum())
    return out[:, :-3]


def _summarize(name: str, col: np.ndarray, n: int, seed: int) -> EstimatorResult:
    reps = len(col)
    mean = float(np.mean(col))
    se = float(np.std(col, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return EstimatorResult(name, mean, se, reps, n, seed)


def _dim(body) -> int:
    return body.dim if isinstance(body, Ball) else 2


def _check_n(body, n: int, extra: int = 1):
    d = _dim(body)
    if n < d + extra:
        raise ValueError(f"n must be at least {d + extra} in dimension {d}")
    return d


def _check_reps(reps: int):
    if reps < 2:
        raise ValueError("reps must be at least 2")


# --- tasks (module level so worker processes can unpickle them) --------------------------------


def _task_fvector(pts):
    h = hull(pts, strict=True)
    c, v = _structure(h)
    return [*f_vector(h), c, v]


def _task_paired(pts):
    small = hull(pts[:-1], strict=True)
    big = hull(pts, strict=True)
    c1, v1 = _structure(small)
    c2, v2 = _structure(big)
    vs, vb = hull_volume(small, pts[:-1]), hull_volume(big, pts)
    grow = len(big.facets) - len(small.facets)
    return [grow, float(vb > vs), vs, vb, c1 + c2 + 1, v1 + v2 + int(vb < vs)]


def _task_volume(pts):
    n, d = pts.shape
    if n <= d:
        return [0.0, 0, 0]
    h = hull(pts, strict=True)
    c, v = _structure(h)
    return [hull_volume(h, pts), c, v]


def _task_sk(pts, kmax: int):
    n, d = pts.shape
    if kmax <= 1:
        s0, s1, _ = deletion_profile(pts)
        counts = [s0, s1][: kmax + 1]
    else:
        ks = kset_counts_sweep(pts) if d == 2 else kset_counts(pts)
        counts = list(ks.counts[: kmax + 1])
    h = hull(pts, strict=True)
    c, v = _structure(h)
    return [*counts, c, v]


def _task_lemma3(pts, rs: tuple[int, ...]):
    n, d = pts.shape
    s0, s1, s0_minus = deletion_profile(pts)
    h = hull(pts, strict=True)
    c, v = _structure(h)
    identity = n * s0 - (int(s0_minus.sum()) + d * s0 - s1)
    sub = [_s0_subset(pts, r) for r in rs]
    return [s0, s1, s0_minus[-1], identity, *sub, c, v]


def _s0_subset(pts, r: int) -> int:
    d = pts.shape[1]
    if r == d:
        # d points span one hyperplane with nothing on either side: one split
        # 0-set, counted twice
        return 2
    return len(hull(pts[:r], strict=True).facets)


# --- estimators ------------------------------------------------------------------------


def estimate_fvector(body, n: int, reps: int, seed: int, workers: int | None = None) -> list[EstimatorResult]:
    """Mean f-vector of the hull of ``n`` uniform points, one result per dimension."""
    d = _check_n(body, n)
    _check_reps(reps)
    vals = run_replicates(_task_fvector, body, n, reps, seed, workers)
    return [_summarize(f"f{i}", vals[:, i], n, seed) for i in range(d)]


def paired_delta_f(body, n: int, reps: int, seed: int, workers: int | None = None) -> EstimatorResult:
    """``E f_{d-1}(Z_{n+1}) - E f_{d-1}(Z_n)`` from nested samples.

    Each replicate draws ``n + 1`` points and compares the hull of the first
    ``n`` with the hull of all of them.
    """
    _check_n(body, n)
    _check_reps(reps)
    vals = run_replicates(_task_paired, body, n + 1, reps, seed, workers)
    return _summarize("delta_facets", vals[:, 0], n, seed)


def estimate_sk(body, n: int, kmax: int, reps: int, seed: int, workers: int | None = None) -> list[EstimatorResult]:
    """Mean k-set counts ``s_0(n) .. s_kmax(n)``."""
    d = _check_n(body, n)
    _check_reps(reps)
    if not 0 <= kmax <= (n - d) // 2:
        raise ValueError(f"kmax must lie in [0, {(n - d) // 2}]")
    vals = run_replicates(partial(_task_sk, kmax=kmax), body, n, reps, seed, workers)
    return [_summarize(f"s{k}", vals[:, k], n, seed) for k in range(kmax + 1)]


def c2_coefficients(n: int, r: int, d: int) -> tuple[float, float]:
    """Weights of ``s_0(n)`` and ``s_1(n)`` in the lower bound for ``s_0(r)``."""
    total = binom(n, r)
    return binom(n - d, r - d) / total, binom(n - d - 1, r - d) / total


def c2_window(n: int, d: int, eps: Sequence[float] = (0.1, 0.25, 0.5)) -> list[int]:
    """Subsample sizes ``r ~ d + (n - d) / (1 + eps)``, so that ``(n-d)/(r-d) ~ 1 + eps``."""
    rs = []
    for e in eps:
        r = int(round(d + (n - d) / (1 + e)))
        r = min(max(r, d + 1), n)
        if r not in rs:
            rs.append(r)
    return rs


def _verdict(name, diff: np.ndarray, n: int, details=None) -> Verdict:
    reps = len(diff)
    margin = float(np.mean(diff))
    se = float(np.std(diff, ddof=1) / math.sqrt(reps))
    passed = margin >= -VERDICT_SIGMA * se
    return Verdict(name, passed, margin, se, n, reps, details or {})


def _c1_from(vals: np.ndarray, n: int, d: int) -> Verdict:
    s0, s1, s0m = vals[:, 0], vals[:, 1], vals[:, 2]
    diff = s0 - s0m - (d * s0 - s1) / n
    return _verdict(
        "C1",
        diff,
        n,
        {
            "s0_n": float(s0.mean()),
            "s0_n_minus_1": float(s0m.mean()),
            "s1_n": float(s1.mean()),
            "identity_max_abs": float(np.max(np.abs(vals[:, 3]))),
        },
    )


def _c2_from(vals: np.ndarray, n: int, r: int, d: int, col: int) -> C2Diagnostic:
    s0, s1, s0r = vals[:, 0], vals[:, 1], vals[:, col]
    a, b = c2_coefficients(n, r, d)
    p = (r - d) / (n - d)
    pd = p**d
    diff = s0r - (a * s0 + b * s1)
    diff_pd = s0r - (pd * s0 + pd * (1 - p) * s1)
    reps = len(diff)
    se = float(np.std(diff, ddof=1) / math.sqrt(reps))
    se_pd = float(np.std(diff_pd, ddof=1) / math.sqrt(reps))

    def sig(m, s):
        if s > 0:
            return m / s
        return math.inf if m > 0 else (0.0 if m == 0 else -math.inf)

    m, m_pd = float(diff.mean()), float(diff_pd.mean())
    return C2Diagnostic(
        n=n,
        r=r,
        d=d,
        q=(n - d) / (r - d) if r > d else math.inf,
        psi=float(s0r.mean() / s0.mean()),
        lhs=float(s0r.mean()),
        rhs=float(a * s0.mean() + b * s1.mean()),
        std_error=se,
        margin_sigma=sig(m, se),
        rhs_pd=float(pd * s0.mean() + pd * (1 - p) * s1.mean()),
        margin_sigma_pd=sig(m_pd, se_pd),
        reps=reps,
    )


def lemma3_checks(
    body, n: int, rs: Sequence[int], reps: int, seed: int, workers: int | None = None
) -> tuple[Verdict, list[C2Diagnostic]]:
    """C1 and C2 for every ``r`` in ``rs``, all on one set of replicates."""
    d = _check_n(body, n, 2)
    _check_reps(reps)
    rs = tuple(int(r) for r in rs)
    for r in rs:
        if not d <= r <= n:
            raise ValueError(f"r must lie in [{d}, {n}], got {r}")
    vals = run_replicates(partial(_task_lemma3, rs=rs), body, n, reps, seed, workers)
    return _c1_from(vals, n, d), [_c2_from(vals, n, r, d, 4 + j) for j, r in enumerate(rs)]


def check_C1(body, n: int, reps: int, seed: int, workers: int | None = None) -> Verdict:
    """``s0(n) >= s0(n-1) + (d s0(n) - s1(n)) / n`` with ``n - 1`` points from deleting the last.

    ``details["identity_max_abs"]`` is the largest per-sample residual of
    ``n s0(S) = sum_q s0(S - q) + d s0(S) - s1(S)``.
    """
    return lemma3_checks(body, n, (), reps, seed, workers)[0]


def check_C2(body, n: int, r: int, reps: int, seed: int, workers: int | None = None) -> C2Diagnostic:
    """Lower bound on ``s0(r)`` from ``s0(n)`` and ``s1(n)``, with the first ``r`` points as the subsample."""
    d = _dim(body)
    if r < d:
        raise ValueError(f"r must be at least {d}")
    return lemma3_checks(body, n, (r,), reps, seed, workers)[1][0]


def _smoothness_exponent(body) -> tuple[int, float]:
    if isinstance(body, Ball):
        d = body.dim
    elif isinstance(body, (Disk, Ellipse)):
        d = 2
    else:
        raise ValueError("the ratio diagnostic needs a smooth body")
    return d, (d - 1) / (d + 1)


def s1_ratio_diag(body, n_list: Sequence[int], reps: int, seed: int, workers: int | None = None) -> list[RatioRow]:
    """``s1(n) / s0(n)`` against the threshold ``d - c/4``, ``c = (d-1)/(d+1)``."""
    d, c = _smoothness_exponent(body)
    _check_reps(reps)
    rows = []
    for n in n_list:
        _check_n(body, n, 2)
        vals = run_replicates(partial(_task_sk, kmax=1), body, n, reps, seed, workers)
        x, y = vals[:, 0], vals[:, 1]
        ratio = float(y.mean() / x.mean())
        resid = y - ratio * x
        se = float(np.std(resid, ddof=1) / math.sqrt(len(x)) / x.mean())
        rows.append(RatioRow(int(n), ratio, se, d - c / 4))
    return rows


def efron_check(body, n: int, reps: int, seed: int, workers: int | None = None) -> Verdict:
    """``E f0(K_n) = n (1 - E V(K_{n-1}))`` for a unit-volume body.

    The two sides come from independent replicate sets (keys ``n`` and
    ``n - 1``).  ``margin`` is the signed gap; it passes within 3 combined sigma.
    """
    d = _check_n(body, n)
    _check_reps(reps)
    if abs(body.area() - 1.0) > 1e-9:
        raise ValueError("body must be normalized to unit volume")
    f0 = run_replicates(_task_fvector, body, n, reps, seed, workers)[:, 0]
    vol = run_replicates(_task_volume, body, n - 1, reps, seed, workers)[:, 0]
    lhs = _summarize("f0", f0, n, seed)
    v = _summarize("volume", vol, n - 1, seed)
    rhs, rhs_se = n * (1 - v.mean), n * v.std_error
    gap = lhs.mean - rhs
    se = math.hypot(lhs.std_error, rhs_se)
    passed = abs(gap) <= VERDICT_SIGMA * se if se > 0 else gap == 0
    return Verdict("efron", passed, gap, se, n, reps, {"lhs": lhs.mean, "rhs": rhs, "lhs_se": lhs.std_error, "rhs_se": rhs_se})


def volume_monotone_check(body, n: int, reps: int, seed: int, workers: int | None = None) -> Verdict:
    """Pathwise ``V(hull of n points) <= V(hull after adding one more)``.

    ``details`` records how often the volume strictly grew, the failures
    (which must be zero) and the mean volume of the smaller hull.
    """
    _check_n(body, n)
    _check_reps(reps)
    vals = run_replicates(_task_paired, body, n + 1, reps, seed, workers)
    grew, vs, vb = vals[:, 1], vals[:, 2], vals[:, 3]
    failures = int(np.count_nonzero(vb < vs))
    p = float(grew.mean())
    return Verdict(
        "volume_monotone",
        failures == 0,
        float(np.min(vb - vs)),
        0.0,
        n,
        reps,
        {
            "failures": failures,
            "grew_fraction": p,
            "grew_se": math.sqrt(p * (1 - p) / reps),
            "mean_volume": float(vs.mean()),
            "volume_se": float(np.std(vs, ddof=1) / math.sqrt(reps)),
        },
    )


def growth_fit(series: Sequence[tuple[float, float]], model: str = "power", d: int = 2) -> GrowthFit:
    """Least-squares growth law through ``(n, s0)`` pairs.

    ``power``: ``s0 = A n^c`` fitted on logs.  ``polytope``:
    ``s0 = A (ln n)^(d-1) + c``, with ``A`` the slope and ``c`` the intercept.
    """
    data = np.asarray(series, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < 4:
        raise ValueError("need at least 4 (n, value) pairs")
    n, y = data[:, 0], data[:, 1]
    if np.any(n <= 1) or np.any(y <= 0):
        raise ValueError("growth fits need n > 1 and positive estimates")
    if model == "power":
        x, yy = np.log(n), np.log(y)
    elif model == "polytope":
        x, yy = np.log(n) ** (d - 1), y
    else:
        raise ValueError(f"unknown model {model!r}")
    slope, intercept = np.polyfit(x, yy, 1)
    resid = yy - (slope * x + intercept)
    ss_tot = float(np.sum((yy - yy.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    if model == "power":
        return GrowthFit(float(math.exp(intercept)), float(slope), r2, model)
    return GrowthFit(float(slope), float(intercept), r2, model)
