"""The acceptance battery behind ``polymono suite``.

Each criterion returns a :class:`CriterionResult` holding its verdict and the
report rows it produced.  Row values depend only on the seed and the scale,
so two runs with different worker counts emit the same rows apart from
``wall_time_ms``.  Runtime limits are checked separately from the numbers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import brformula as br
from . import experiments as ex
from .bodies import body_name, parse_body
from .ksets import kset_counts_sweep
from .report import ReportRow
from .sampling import RngStream, sample_uniform, substream

# Independent Monte Carlo (10^8 quadruples per body, convex-position counting,
# tests/oracles/sylvester_mc.py): mean and standard error of f0(K_4).
ORACLE_F0_4 = {"square": (3.6944922, 4.61e-05), "disk": (3.7044253, 4.56e-05)}
EXACT_F0_4 = {"square": 133 / 36, "disk": 4 - 35 / (12 * math.pi**2)}

PLANAR = ("square", "triangle", "disk", "ellipse:2,1")


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    rows: list[ReportRow] = field(default_factory=list)
    seconds: float = 0.0
    time_limit: float | None = None

    @property
    def runtime_ok(self) -> bool:
        return self.time_limit is None or self.seconds <= self.time_limit

    @property
    def ok(self) -> bool:
        return self.passed and self.runtime_ok

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        limit = f" (limit {self.time_limit:.0f}s)" if self.time_limit else ""
        return f"[{status}] criterion {self.number:2d} {self.title}: {self.summary}; {self.seconds:.1f}s{limit}"


@dataclass(frozen=True)
class Scale:
    """Replicate counts and ranges; ``quick`` shrinks everything for smoke runs."""

    quick: bool = False

    def pick(self, full, small):
        return small if self.quick else full


class _Rows:
    def __init__(self, experiment: str, seed: int | None):
        self.experiment = experiment
        self.seed = seed
        self.rows: list[ReportRow] = []
        self._t = time.perf_counter()

    def add(self, body: str, n, quantity: str, value, std_error=None, reps=None, seed=True):
        now = time.perf_counter()
        self.rows.append(
            ReportRow(
                self.experiment,
                body,
                n,
                quantity,
                value,
                std_error,
                reps,
                self.seed if seed else None,
                (now - self._t) * 1e3,
            )
        )
        self._t = now

    def verdict(self, passed: bool):
        self.add("", None, "verdict", 1.0 if passed else 0.0, seed=False)


# --- deterministic criteria ------------------------------------------------------


def criterion_1(seed, workers, scale: Scale) -> CriterionResult:
    rows = _Rows("quadrature_oracle", None)
    ok = True
    parts = []
    slowest = 0.0
    for name in ("square", "disk"):
        t0 = time.perf_counter()
        res = br.f0_expectation_quadrature_with_error(parse_body(name), 4)
        slowest = max(slowest, time.perf_counter() - t0)
        mc, se = ORACLE_F0_4[name]
        exact = EXACT_F0_4[name]
        good = abs(res.value - exact) <= 2e-4 and abs(res.value - mc) <= 2e-4
        ok &= good
        rows.add(name, 4, "E_f0", res.value, res.error, seed=False)
        rows.add(name, 4, "oracle_mc", mc, se, 10**8, seed=False)
        parts.append(f"{name} {res.value:.6f} vs {exact:.6f} (MC {mc:.6f})")
    rows.verdict(ok)
    return CriterionResult(1, "quadrature vs oracle", ok, "; ".join(parts), rows.rows, slowest, 120)


def criterion_2(seed, workers, scale: Scale) -> CriterionResult:
    rows = _Rows("monotonicity", None)
    top = scale.pick(200, 40)
    ok = True
    worst = math.inf
    for name in PLANAR:
        table = br.monotonicity_table(parse_body(name), range(3, top + 1))
        for r in table.rows:
            rows.add(name, r.n, "E_f0", r.value, r.error, seed=False)
        e = table.errors
        ratio = float(np.min(table.increments() / (e[1:] + e[:-1])))
        worst = min(worst, ratio)
        ok &= table.strictly_increasing(10.0)
    rows.verdict(ok)
    return CriterionResult(
        2, "monotone quadrature tables", ok, f"n=3..{top}, smallest step / error = {worst:.3g}", rows.rows, time_limit=300
    )


def criterion_3(seed, workers, scale: Scale) -> CriterionResult:
    rows = _Rows("chord_concavity", None)
    ok = True
    worst = 0.0
    for name in PLANAR:
        rep = br.lemma2_check(parse_body(name), (64, 1000))
        rows.add(name, None, "max_violation", rep.max_violation, seed=False)
        worst = max(worst, rep.max_violation)
        ok &= rep.passed
    rows.verdict(ok)
    return CriterionResult(3, "L' nonincreasing", ok, f"max violation {worst:.3g}", rows.rows, time_limit=30)


def criterion_4(seed, workers, scale: Scale) -> CriterionResult:
    rows = _Rows("form_equivalence", None)
    ok = True
    worst = 0.0
    bodies = PLANAR + ("polygon:0,0;3,0;4,2;1,3",)
    thetas = 2 * math.pi * np.arange(8) / 8
    for name in bodies:
        body = parse_body(name)
        for n in (2, 5, 10, 100):
            for th in thetas:
                vals = [br.integrand_In(body, th, n, br.QuadratureSpec(form=f)) for f in br.Form]
                for i in range(3):
                    for j in range(i + 1, 3):
                        gap = abs(vals[i].value - vals[j].value)
                        tol = max(vals[i].error, vals[j].error)
                        worst = max(worst, gap / tol)
                        ok &= gap <= 10 * tol
            rows.add(body_name(body), n, "worst_gap_over_error", worst, seed=False)
    rows.verdict(ok)
    return CriterionResult(4, "integrand forms agree", ok, f"largest gap / error estimate = {worst:.3g}", rows.rows)


# --- Monte Carlo criteria ------------------------------------------------------------


def criterion_5(seed, workers, scale: Scale) -> CriterionResult:
    rows = _Rows("lemma3", seed)
    ns = scale.pick((8, 16, 32, 64), (8, 16))
    ok = True
    fails = []
    for name in ("square", "triangle", "disk", "ball"):
        body = parse_body(name)
        d = ex._dim(body)
        reps = scale.pick(10_000 if d == 2 else 1000, 300 if d == 2 else 60)
        for n in ns:
            rs = ex.c2_window(n, d)
            c1, c2s = ex.lemma3_checks(body, n, rs, reps, seed, workers)
            rows.add(name, n, "C1_margin", c1.margin, c1.std_error, reps)
            ok &= c1.passed
            if not c1.passed:
                fails.append(f"C1 {name} n={n}")
            if d == 2:
                resid = c1.details["identity_max_abs"]
                rows.add(name, n, "identity_max_abs_residual", resid, None, reps)
                if resid != 0:
                    ok = False
                    fails.append(f"identity {name} n={n}")
            for c2 in c2s:
                rows.add(name, n, f"C2_margin_sigma_r{c2.r}", c2.margin_sigma, None, reps)
                rows.add(name, n, f"C2pd_margin_sigma_r{c2.r}", c2.margin_sigma_pd, None, reps)
                good = c2.passed and c2.passed_pd
                ok &= good
                if not good:
                    fails.append(f"C2 {name} n={n} r={c2.r}")
    rows.verdict(ok)
    summary = "no violation beyond 3 sigma" if ok else "violations: " + ", ".join(fails)
    return CriterionResult(5, "C1/C2 and the planar identity", ok, summary, rows.rows, time_limit=600)


def criterion_6(seed, workers, scale: Scale) -> CriterionResult:
    rows = _Rows("kset_envelope", seed)
    instances = scale.pick(100, 5)
    ok = True
    worst = 0.0
    bodies = [parse_body(b) for b in ("square", "disk", "triangle")]
    for n in (50, 100, 200):
        # separate key range from the replicate streams of the estimators
        base = RngStream(seed, 1_000_000 + n)
        for i in range(instances):
            body = bodies[i % 3]
            pts = sample_uniform(body, n, substream(base, i).generator())
            cum = np.cumsum(kset_counts_sweep(pts).counts)
            k = np.arange(len(cum))
            ratio = float(np.max(cum / (3 * n * (k + 1))))
            worst = max(worst, ratio)
            ok &= bool(np.all(cum <= 3 * n * (k + 1)))
        rows.add("mixed", n, "max_s_leq_k_over_3n(k+1)", worst, None, instances)
    rows.verdict(ok)
    return CriterionResult(6, "s_{<=k} <= 3n(k+1)", ok, f"largest s_<=k / 3n(k+1) = {worst:.3f}", rows.rows)


def criterion_7(seed, workers, scale: Scale) -> CriterionResult:
    rows = _Rows("growth", seed)
    ns = [2**j for j in scale.pick(range(7, 14), range(7, 11))]
    reps = scale.pick(10_000, 100)
    series = {}
    for name in ("disk", "square"):
        body = parse_body(name)
        pts = []
        for n in ns:
            f = ex.estimate_fvector(body, n, reps, seed, workers)[-1]
            rows.add(name, n, "f1", f.mean, f.std_error, reps)
            pts.append((n, f.mean))
        series[name] = pts
    power = ex.growth_fit(series["disk"], "power", 2)
    poly = ex.growth_fit(series["square"], "polytope", 2)
    rows.add("disk", None, "power_exponent", power.c)
    rows.add("disk", None, "power_r2", power.r_squared)
    rows.add("square", None, "log_slope", poly.A)
    rows.add("square", None, "log_r2", poly.r_squared)
    ok = 0.28 <= power.c <= 0.38 and poly.r_squared >= 0.995
    rows.verdict(ok)
    return CriterionResult(
        7,
        "growth regimes",
        ok,
        f"disk exponent {power.c:.4f}, square log-fit r2 {poly.r_squared:.5f}",
        rows.rows,
        time_limit=900,
    )


def criterion_8(seed, workers, scale: Scale) -> CriterionResult:
    rows = _Rows("s1_ratio", seed)
    ok = True
    parts = []
    disk_rows = ex.s1_ratio_diag(parse_body("disk"), scale.pick((64, 128, 256, 512), (64, 128)), scale.pick(2000, 100), seed, workers)
    for r in disk_rows:
        rows.add("disk", r.n, "s1_over_s0", r.ratio, r.std_error, scale.pick(2000, 100))
        ok &= r.margin_sigma >= 3
    low = min(r.margin_sigma for r in disk_rows)
    parts.append(f"disk margin >= {low:.1f} sigma")
    ball_reps = scale.pick(200, 5)
    ball_n = scale.pick(512, 64)
    (b,) = ex.s1_ratio_diag(parse_body("ball"), (ball_n,), ball_reps, seed, workers)
    rows.add("ball", b.n, "s1_over_s0", b.ratio, b.std_error, ball_reps)
    ok &= b.ratio < b.threshold
    parts.append(f"ball n={b.n} ratio {b.ratio:.4f} < {b.threshold}")
    rows.verdict(ok)
    return CriterionResult(8, "s1/s0 below d - c/4", ok, ", ".join(parts), rows.rows)


def criterion_9(seed, workers, scale: Scale) -> CriterionResult:
    rows = _Rows("paired_delta", seed)
    reps = scale.pick(10_000, 1000)
    ok = True
    parts = []
    ball = parse_body("ball")
    for n in scale.pick((128, 256, 512), (128,)):
        res = ex.paired_delta_f(ball, n, reps, seed, workers)
        rows.add("ball", n, "delta_f2", res.mean, res.std_error, reps)
        sig = res.mean / res.std_error
        ok &= sig >= 3
        parts.append(f"n={n}: {sig:.1f} sigma")
    rows.verdict(ok)
    return CriterionResult(9, "paired facet increments (d=3)", ok, ", ".join(parts), rows.rows)


def criterion_11(seed, workers, scale: Scale) -> CriterionResult:
    rows = _Rows("efron", seed)
    reps = scale.pick(100_000, 500)
    ok = True
    parts = []
    for name in ("square", "disk"):
        for n in (10, 50):
            v = ex.efron_check(parse_body(name), n, reps, seed, workers)
            rows.add(name, n, "f0", v.details["lhs"], v.details["lhs_se"], reps)
            rows.add(name, n, "n(1-EV)", v.details["rhs"], v.details["rhs_se"], reps)
            ok &= v.passed
            parts.append(f"{name} n={n}: {v.margin_sigma:+.2f} sigma")
    rows.verdict(ok)
    return CriterionResult(11, "Efron identity", ok, ", ".join(parts), rows.rows)


def criterion_10(seed, workers, scale: Scale) -> CriterionResult:
    """Structural invariants over every hull sampled so far, plus explicit volume paths."""
    rows = _Rows("invariants", seed)
    reps = scale.pick(5000, 100)
    ok = True
    for name, n in (("square", 4), ("disk", 50), ("ball", 20)):
        v = ex.volume_monotone_check(parse_body(name), n, reps, seed, workers)
        rows.add(name, n, "volume_failures", v.details["failures"], None, reps)
        rows.add(name, n, "volume_grew_fraction", v.details["grew_fraction"], v.details["grew_se"], reps)
        ok &= v.passed
    log = ex.invariants
    rows.add("all", None, "hull_checks", log.checks)
    rows.add("all", None, "hull_violations", log.violations)
    ok &= log.violations == 0 and log.checks > 0
    rows.verdict(ok)
    return CriterionResult(
        10, "structural invariants", ok, f"{log.violations} violations in {log.checks} checks", rows.rows
    )


def criterion_12(seed, workers, scale: Scale) -> CriterionResult:
    """Replicate values must not depend on the worker count."""
    rows = _Rows("reproducibility", seed)
    body = parse_body("disk")
    reps = scale.pick(400, 40)
    a = ex.run_replicates(ex._task_fvector, body, 64, reps, seed, workers=1)
    b = ex.run_replicates(ex._task_fvector, body, 64, reps, seed, workers=8)
    same = a.tobytes() == b.tobytes()
    rows.add("disk", 64, "identical_1_vs_8_workers", float(same), None, reps)
    rows.verdict(same)
    return CriterionResult(12, "worker-count independence", same, "bitwise identical" if same else "results differ", rows.rows)


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    11: criterion_11,
    12: criterion_12,
    # last, so it sees every hull the others sampled
    10: criterion_10,
}


def run_criterion(number: int, seed: int, workers: int | None = None, quick: bool = False) -> CriterionResult:
    fn = CRITERIA[number]
    t0 = time.perf_counter()
    res = fn(seed, workers, Scale(quick))
    if number != 1:
        res.seconds = time.perf_counter() - t0
    return res


def run_suite(seed: int, workers: int | None = None, quick: bool = False, only=None, echo=None) -> list[CriterionResult]:
    """Run the battery in a fixed order; ``echo`` receives each summary line."""
    ex.invariants.reset()
    results = []
    for number in CRITERIA:
        if only is not None and number not in only and number != 10:
            continue
        res = run_criterion(number, seed, workers, quick)
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
