"""Command-line front end.

    polymono integrate --body square --n 3..50 --seedless
    polymono estimate  --body disk --n 100 --reps 10000 --seed 7
    polymono ksets     --points pentagon.txt
    polymono verify    --check c1 --body disk --n 32 --reps 100000 --seed 42
    polymono fit       --body disk --n 128..8192*2 --reps 10000 --seed 1
    polymono suite     --seed 42 --workers 4

Options can also come from ``--config FILE`` holding ``key = value`` lines
(``#`` starts a comment); flags given on the command line win.  Stochastic
commands refuse to run without a seed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import brformula as br
from . import experiments as ex
from .bodies import parse_body
from .geometry import DegenerateError
from .ksets import deletion_profile, kset_counts, kset_counts_sweep
from .report import ReportRow, render

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_QUADRATURE = 4
EXIT_IO = 5
EXIT_DEGENERATE = 6


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


# --- value parsers ----------------------------------------------------------------


def parse_n_list(text: str) -> list[int]:
    """``7``, ``3..200`` (every integer), ``128..8192*2`` (geometric) or comma lists of these."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, _, hi = part.partition("..")
            factor = None
            if "*" in hi:
                hi, _, f = hi.partition("*")
                factor = int(f)
                if factor < 2:
                    raise ValueError("geometric factor must be at least 2")
            a, b = int(lo), int(hi)
            if b < a:
                raise ValueError(f"empty range {part!r}")
            if factor is None:
                out.extend(range(a, b + 1))
            else:
                if a < 1:
                    raise ValueError("geometric ranges start at 1 or more")
                v = a
                while v <= b:
                    out.append(v)
                    v *= factor
        else:
            out.append(int(part))
    if not out:
        raise ValueError("no values")
    return out


def _seed(text) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return v


def _positive(text) -> int:
    v = int(text)
    if v < 1:
        raise ValueError("must be positive")
    return v


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _criteria(text) -> list[int]:
    return [int(t) for t in str(text).split(",") if t.strip()]


# --- config files -------------------------------------------------------------------


def load_config(path: str | os.PathLike) -> dict[str, str]:
    """``key = value`` lines; blank lines and ``#`` comments are skipped."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    out: dict[str, str] = {}
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise ConfigError(f"{path}:{num}: expected 'key = value'")
        out[key] = value.strip()
    return out


# --- argument parser ----------------------------------------------------------------


@dataclass(frozen=True)
class _Opt:
    flags: tuple[str, ...]
    dest: str
    conv: Callable
    help: str
    default: object = None
    choices: tuple | None = None
    flag: bool = False


_COMMON = [
    _Opt(("--config",), "config", str, "read options from a key = value file"),
    _Opt(("--output", "-o"), "output", str, "write the report here instead of stdout"),
    _Opt(("--format",), "format", str, "report format", "csv", ("csv", "json", "svg")),
    _Opt(("--workers",), "workers", _positive, "worker processes (default: $POLYMONO_WORKERS or 1)"),
    _Opt(("--seed",), "seed", _seed, "64-bit seed; required by stochastic commands"),
    _Opt(("--seedless",), "seedless", _bool, "declare a deterministic run", False, flag=True),
    _Opt(("--no-timing",), "no_timing", _bool, "leave wall_time_ms empty", False, flag=True),
]

_BODY = _Opt(("--body",), "body", str, "square | triangle | disk | ellipse:a,b | polygon:x,y;... | ball[:d]")
_N = _Opt(("--n",), "n", parse_n_list, "sample size(s): 7, 3..200, 128..8192*2 or a comma list")
_REPS = _Opt(("--reps",), "reps", _positive, "replicates per estimate", 1000)

_COMMANDS: dict[str, tuple[str, list[_Opt], bool]] = {
    "integrate": (
        "expected vertex count by quadrature",
        [
            _BODY,
            _N,
            _Opt(("--form",), "form", str, "integrand form", "S_FORM", tuple(f.value for f in br.Form)),
            _Opt(("--n-angles",), "n_angles", _positive, "direction nodes", br.QuadratureSpec.n_angles),
            _Opt(("--n-nodes",), "n_nodes", _positive, "Gauss-Legendre nodes per panel", br.QuadratureSpec.n_nodes),
            _Opt(("--n-panels",), "n_panels", _positive, "dyadic panels toward s = 1", br.QuadratureSpec.n_panels),
            _Opt(("--tol",), "tol", float, "largest acceptable error estimate", br.QuadratureSpec.tol),
        ],
        False,
    ),
    "estimate": (
        "Monte Carlo estimates",
        [
            _BODY,
            _N,
            _REPS,
            _Opt(
                ("--quantity",),
                "quantity",
                str,
                "what to estimate",
                "fvector",
                ("fvector", "sk", "delta", "ratio", "volume"),
            ),
            _Opt(("--kmax",), "kmax", int, "largest k for --quantity sk", 1),
        ],
        True,
    ),
    "ksets": (
        "exact k-set counts of a points file",
        [
            _Opt(("--points",), "points", str, "one point per line, whitespace-separated coordinates"),
            _Opt(("--kmax",), "kmax", int, "largest k to report (default: all)"),
        ],
        False,
    ),
    "verify": (
        "statistical and numerical checks with a pass/fail exit code",
        [
            _Opt(
                ("--check",),
                "check",
                str,
                "which check",
                None,
                ("c1", "c2", "lemma2", "efron", "monotonicity", "volume", "forms"),
            ),
            _BODY,
            _N,
            _REPS,
            _Opt(("--r",), "r", int, "subsample size for c2 (default: the window sweep)"),
        ],
        True,
    ),
    "fit": (
        "growth-law fit of the facet count",
        [
            _BODY,
            _N,
            _REPS,
            _Opt(("--model",), "model", str, "growth model", "auto", ("auto", "power", "polytope")),
        ],
        True,
    ),
    "suite": (
        "the full acceptance battery",
        [
            _Opt(("--quick",), "quick", _bool, "reduced replicate counts and ranges", False, flag=True),
            _Opt(("--only",), "only", _criteria, "comma list of criterion numbers"),
        ],
        True,
    ),
}

_DETERMINISTIC_CHECKS = {"lemma2", "monotonicity", "forms"}


def _add(parser: argparse.ArgumentParser, opt: _Opt):
    kw = {"dest": opt.dest, "help": opt.help, "default": None}
    if opt.flag:
        parser.add_argument(*opt.flags, action="store_const", const=True, **kw)
    else:
        parser.add_argument(*opt.flags, type=opt.conv, choices=opt.choices, metavar=opt.dest.upper(), **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polymono", description="Random polytope experiments.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, (help_text, opts, _) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        for opt in _COMMON + opts:
            _add(p, opt)
    return parser


def _options(command: str) -> dict[str, _Opt]:
    return {o.dest: o for o in _COMMON + _COMMANDS[command][1]}


def resolve(args: argparse.Namespace) -> dict:
    """Merge command line, config file and defaults into one mapping."""
    opts = _options(args.command)
    cfg = load_config(args.config) if args.config else {}
    merged: dict = {"command": args.command}
    for key, raw in cfg.items():
        if key not in opts or key == "config":
            raise ConfigError(f"unknown key {key!r} for {args.command}")
    for dest, opt in opts.items():
        value = getattr(args, dest)
        if value is None and dest in cfg:
            try:
                value = opt.conv(cfg[dest])
            except ValueError as e:
                raise ConfigError(f"bad value for {dest}: {e}") from None
            if opt.choices and value not in opt.choices:
                raise ConfigError(f"{dest} must be one of {', '.join(opt.choices)}")
        if value is None:
            value = opt.default
        merged[dest] = value
    return merged


def _echo(cfg: dict) -> dict:
    skip = {"config", "no_timing"}
    out = {}
    for k in sorted(cfg):
        v = cfg[k]
        if k in skip or v is None or v is False:
            continue
        if isinstance(v, list):
            v = ",".join(str(x) for x in v)
        out[k] = v
    return out


def _require(cfg: dict, *keys: str):
    for k in keys:
        if cfg.get(k) is None:
            raise UsageError(f"{cfg['command']} needs --{k.replace('_', '-')}")


def _stochastic(cfg: dict) -> bool:
    if cfg["command"] == "verify":
        return cfg.get("check") not in _DETERMINISTIC_CHECKS
    return _COMMANDS[cfg["command"]][2]


# --- commands --------------------------------------------------------------------


class _Clock:
    def __init__(self):
        self.t = time.perf_counter()

    def lap(self) -> float:
        now = time.perf_counter()
        ms, self.t = (now - self.t) * 1e3, now
        return ms


def _spec(cfg) -> br.QuadratureSpec:
    return br.QuadratureSpec(cfg["n_angles"], cfg["n_nodes"], cfg["n_panels"], br.Form(cfg["form"]), cfg["tol"])


def cmd_integrate(cfg, say) -> tuple[list[ReportRow], bool]:
    _require(cfg, "body", "n")
    body = parse_body(cfg["body"])
    spec = _spec(cfg)
    clock = _Clock()
    ns = cfg["n"]
    name = cfg["body"].strip()
    if spec.form is br.Form.S:
        table = br.monotonicity_table(body, ns, spec)
        rows = [ReportRow("integrate", name, r.n, "E_f0", r.value, r.error, None, None, None) for r in table.rows]
        ms = clock.lap() / max(len(rows), 1)
        rows = [_with_time(r, ms) for r in rows]
    else:
        rows = []
        for n in sorted(set(ns)):
            res = br.f0_expectation_quadrature_with_error(body, n, spec)
            rows.append(ReportRow("integrate", name, n, "E_f0", res.value, res.error, None, None, clock.lap()))
    for r in rows:
        say(f"n={r.n}: E f0 = {r.value:.12g} (error estimate {r.std_error:.2g})")
    return rows, True


def _with_time(row: ReportRow, ms: float) -> ReportRow:
    d = row.as_dict()
    d["wall_time_ms"] = ms
    return ReportRow(**d)


def _est_rows(experiment, name, results, clock) -> list[ReportRow]:
    ms = clock.lap()
    return [
        ReportRow(experiment, name, r.n, r.quantity, r.mean, r.std_error, r.reps, r.seed, ms) for r in results
    ]


def cmd_estimate(cfg, say) -> tuple[list[ReportRow], bool]:
    _require(cfg, "body", "n")
    body = parse_body(cfg["body"])
    name = cfg["body"].strip()
    seed, reps, workers = cfg["seed"], cfg["reps"], cfg["workers"]
    q = cfg["quantity"]
    rows: list[ReportRow] = []
    clock = _Clock()
    if q == "ratio":
        for r in ex.s1_ratio_diag(body, cfg["n"], reps, seed, workers):
            rows.append(ReportRow("estimate", name, r.n, "s1_over_s0", r.ratio, r.std_error, reps, seed, clock.lap()))
            say(f"n={r.n}: s1/s0 = {r.ratio:.6g} +- {r.std_error:.2g} (threshold {r.threshold:.6g})")
        return rows, True
    for n in cfg["n"]:
        if q == "fvector":
            res = ex.estimate_fvector(body, n, reps, seed, workers)
        elif q == "sk":
            res = ex.estimate_sk(body, n, cfg["kmax"], reps, seed, workers)
        elif q == "delta":
            res = [ex.paired_delta_f(body, n, reps, seed, workers)]
        else:
            v = ex.volume_monotone_check(body, n, reps, seed, workers)
            res = [ex.EstimatorResult("volume", v.details["mean_volume"], v.details["volume_se"], reps, n, seed)]
        rows.extend(_est_rows("estimate", name, res, clock))
        for r in res:
            say(f"n={n}: {r.quantity} = {r.mean:.10g} +- {r.std_error:.2g}")
    return rows, True


def read_points(path: str) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise OSError(f"cannot read points file {path}: {e.strerror}") from None
    pts = []
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            pts.append([float(t) for t in line.replace(",", " ").split()])
        except ValueError:
            raise ConfigError(f"{path}:{num}: not a list of numbers") from None
    if not pts:
        raise ConfigError(f"{path}: no points")
    if len({len(p) for p in pts}) != 1:
        raise ConfigError(f"{path}: points have different dimensions")
    return np.array(pts)


def cmd_ksets(cfg, say) -> tuple[list[ReportRow], bool]:
    _require(cfg, "points")
    pts = read_points(cfg["points"])
    n, d = pts.shape
    clock = _Clock()
    if d == 2 and n > 2:
        counts = kset_counts_sweep(pts).counts
    elif cfg["kmax"] is not None and cfg["kmax"] <= 1 and n >= d + 2 and d > 2:
        counts = deletion_profile(pts)[:2]
    else:
        counts = kset_counts(pts).counts
    kmax = len(counts) - 1 if cfg["kmax"] is None else min(cfg["kmax"], len(counts) - 1)
    ms = clock.lap()
    label = Path(cfg["points"]).name
    rows = [ReportRow("ksets", label, n, f"s{k}", float(counts[k]), None, None, None, ms) for k in range(kmax + 1)]
    say(" ".join(f"s{k}={int(counts[k])}" for k in range(kmax + 1)))
    return rows, True


def cmd_verify(cfg, say) -> tuple[list[ReportRow], bool]:
    check = cfg["check"]
    _require(cfg, "check", "body")
    body = parse_body(cfg["body"])
    name = cfg["body"].strip()
    seed, reps, workers = cfg["seed"], cfg["reps"], cfg["workers"]
    rows: list[ReportRow] = []
    clock = _Clock()
    ok = True

    def row(n, quantity, value, se=None, r=None, s=None):
        rows.append(ReportRow(f"verify_{check}", name, n, quantity, value, se, r, s, clock.lap()))

    if check == "lemma2":
        rep = br.lemma2_check(body)
        row(None, "max_violation", rep.max_violation)
        ok = rep.passed
        say(f"max increase of L' = {rep.max_violation:.3g} (tolerance {rep.tol:g})")
    elif check == "forms":
        ns = cfg["n"] or [2, 5, 10, 100]
        for n in ns:
            worst = 0.0
            for th in 2 * math.pi * np.arange(8) / 8:
                v = [br.integrand_In(body, th, n, br.QuadratureSpec(form=f)) for f in br.Form]
                for i in range(3):
                    for j in range(i + 1, 3):
                        gap = abs(v[i].value - v[j].value) / max(v[i].error, v[j].error)
                        worst = max(worst, gap)
            row(n, "worst_gap_over_error", worst)
            ok &= worst <= 10
            say(f"n={n}: largest gap between forms = {worst:.3g} x error estimate")
    elif check == "monotonicity":
        ns = cfg["n"] or list(range(3, 201))
        table = br.monotonicity_table(body, ns)
        for r in table.rows:
            row(r.n, "E_f0", r.value, r.error)
        ok = table.strictly_increasing(10.0)
        say(f"strictly increasing with 10x error margin: {ok}")
    else:
        _require(cfg, "n")
        for n in cfg["n"]:
            if check == "c1":
                v = ex.check_C1(body, n, reps, seed, workers)
                row(n, "C1_margin", v.margin, v.std_error, reps, seed)
                ok &= v.passed
                say(f"n={n}: C1 margin {v.margin:+.4g} ({v.margin_sigma:+.2f} sigma)")
            elif check == "c2":
                d = ex._dim(body)
                rs = [cfg["r"]] if cfg["r"] is not None else ex.c2_window(n, d)
                _, diags = ex.lemma3_checks(body, n, rs, reps, seed, workers)
                for c in diags:
                    row(n, f"C2_margin_sigma_r{c.r}", c.margin_sigma, None, reps, seed)
                    row(n, f"C2pd_margin_sigma_r{c.r}", c.margin_sigma_pd, None, reps, seed)
                    ok &= c.passed and c.passed_pd
                    say(f"n={n} r={c.r}: binomial form {c.margin_sigma:+.2f} sigma, p^d form {c.margin_sigma_pd:+.2f} sigma")
            elif check == "efron":
                v = ex.efron_check(body, n, reps, seed, workers)
                row(n, "f0", v.details["lhs"], v.details["lhs_se"], reps, seed)
                row(n, "n(1-EV)", v.details["rhs"], v.details["rhs_se"], reps, seed)
                ok &= v.passed
                say(f"n={n}: E f0 = {v.details['lhs']:.6g}, n(1 - E V) = {v.details['rhs']:.6g} ({v.margin_sigma:+.2f} sigma)")
            elif check == "volume":
                v = ex.volume_monotone_check(body, n, reps, seed, workers)
                row(n, "volume_failures", v.details["failures"], None, reps, seed)
                ok &= v.passed
                say(f"n={n}: {v.details['failures']} pathwise decreases")
    rows.append(ReportRow(f"verify_{check}", name, None, "verdict", 1.0 if ok else 0.0, None, None, None, clock.lap()))
    say("PASS" if ok else "FAIL")
    return rows, ok


def cmd_fit(cfg, say) -> tuple[list[ReportRow], bool]:
    _require(cfg, "body", "n")
    body = parse_body(cfg["body"])
    name = cfg["body"].strip()
    seed, reps, workers = cfg["seed"], cfg["reps"], cfg["workers"]
    d = ex._dim(body)
    model = cfg["model"]
    if model == "auto":
        model = "polytope" if hasattr(body, "vertices") else "power"
    rows: list[ReportRow] = []
    clock = _Clock()
    series = []
    for n in cfg["n"]:
        f = ex.estimate_fvector(body, n, reps, seed, workers)[-1]
        series.append((n, f.mean))
        rows.append(ReportRow("fit", name, n, f"f{d - 1}", f.mean, f.std_error, reps, seed, clock.lap()))
    fit = ex.growth_fit(series, model, d)
    for q, v in (("A", fit.A), ("c", fit.c), ("r_squared", fit.r_squared)):
        rows.append(ReportRow("fit", name, None, f"{model}_{q}", v, None, reps, seed, clock.lap()))
    say(f"{model} fit: A = {fit.A:.6g}, c = {fit.c:.6g}, r^2 = {fit.r_squared:.6f}")
    return rows, True


def cmd_suite(cfg, say) -> tuple[list[ReportRow], bool]:
    from .suite import run_suite

    results = run_suite(cfg["seed"], cfg["workers"], bool(cfg["quick"]), cfg["only"], echo=say)
    rows = [r for res in results for r in res.rows]
    return rows, all(res.ok for res in results)


_HANDLERS = {
    "integrate": cmd_integrate,
    "estimate": cmd_estimate,
    "ksets": cmd_ksets,
    "verify": cmd_verify,
    "fit": cmd_fit,
    "suite": cmd_suite,
}


def _write(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror}") from None


def run(argv: list[str] | None = None) -> int:
    """Entry point; returns the exit code instead of raising SystemExit."""
    parser = build_parser()

    def say(msg: str):
        print(msg, file=sys.stderr)

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = resolve(args)
        if _stochastic(cfg):
            if cfg["seedless"]:
                raise UsageError(f"{cfg['command']} is stochastic; --seedless is not allowed")
            if cfg["seed"] is None:
                raise UsageError(f"{cfg['command']} is stochastic and needs --seed")
        if cfg["command"] == "verify":
            _require(cfg, "check")
        if cfg["workers"] is None:
            cfg["workers"] = ex.default_workers()
        rows, ok = _HANDLERS[cfg["command"]](cfg, say)
        text = render(rows, cfg["format"], _echo(cfg), timing=not cfg["no_timing"])
        _write(text, cfg["output"])
    except UsageError as e:
        say(f"polymono: error: {e}")
        return EXIT_USAGE
    except ConfigError as e:
        say(f"polymono: config error: {e}")
        return EXIT_CONFIG
    except br.QuadratureToleranceError as e:
        say(f"polymono: quadrature error: {e}")
        return EXIT_QUADRATURE
    except DegenerateError as e:
        say(f"polymono: degenerate input: {e}")
        return EXIT_DEGENERATE
    except OSError as e:
        say(f"polymono: {e}")
        return EXIT_IO
    except (ValueError, TypeError) as e:
        say(f"polymono: error: {e}")
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
