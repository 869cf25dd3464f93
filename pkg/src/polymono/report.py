"""Report rows and their csv, json and svg renderings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import astuple, dataclass
from typing import Iterable, Sequence

FIELDS = ("experiment", "body", "n", "quantity", "value", "std_error", "reps", "seed", "wall_time_ms")
HEADER = ",".join(FIELDS)
_INT_FIELDS = {"n", "reps", "seed"}
_FLOAT_FIELDS = {"value", "std_error", "wall_time_ms"}


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    body: str
    n: int | None
    quantity: str
    value: float
    std_error: float | None = None
    reps: int | None = None
    seed: int | None = None
    wall_time_ms: float | None = None

    def as_dict(self) -> dict:
        out = {}
        for f, v in zip(FIELDS, astuple(self)):
            if v is not None and f in _FLOAT_FIELDS:
                v = float(v)
            elif v is not None and f in _INT_FIELDS:
                v = int(v)
            out[f] = v
        return out


def _fmt(name: str, v) -> str:
    if v is None:
        return ""
    if name in _FLOAT_FIELDS:
        return "%.17g" % float(v)
    if name in _INT_FIELDS:
        return str(int(v))
    return str(v)


def to_csv(rows: Iterable[ReportRow], config: dict | None = None, timing: bool = True) -> str:
    """CSV text; ``config`` entries become leading ``# key = value`` lines."""
    buf = io.StringIO()
    for k, v in (config or {}).items():
        buf.write(f"# {k} = {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in rows:
        d = r.as_dict()
        if not timing:
            d["wall_time_ms"] = None
        w.writerow([_fmt(f, d[f]) for f in FIELDS])
    return buf.getvalue()


def _parse(name: str, text: str):
    if name not in _INT_FIELDS and name not in _FLOAT_FIELDS:
        return text
    if text == "":
        return None
    if name in _INT_FIELDS:
        return int(text)
    if name in _FLOAT_FIELDS:
        return float(text)
    return text


def from_csv(text: str) -> list[ReportRow]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return []
    if tuple(header) != FIELDS:
        raise ValueError(f"unexpected csv header {header!r}")
    return [ReportRow(*(_parse(f, v) for f, v in zip(FIELDS, rec))) for rec in reader if rec]


def to_json(rows: Iterable[ReportRow]) -> str:
    return json.dumps([r.as_dict() for r in rows], indent=1) + "\n"


def from_json(text: str) -> list[ReportRow]:
    return [ReportRow(**{f: obj.get(f) for f in FIELDS}) for obj in json.loads(text)]


def csv_body(text: str, drop: Sequence[str] = ("wall_time_ms",)) -> str:
    """The data part of a csv report with the named columns removed."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    keep = [i for i, f in enumerate(FIELDS) if f not in drop]
    out = []
    for rec in csv.reader(lines):
        out.append(",".join(rec[i] for i in keep))
    return "\n".join(out) + "\n"


def to_svg(rows: Iterable[ReportRow], title: str = "") -> str:
    """Line plot of value against n, one series per (experiment, body, quantity).

    Each series is a group with id ``experiment:body:quantity``.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[tuple[str, str, str], list[ReportRow]] = {}
    for r in rows:
        if r.n is None or r.value is None or not math.isfinite(r.value):
            continue
        series.setdefault((r.experiment, r.body, r.quantity), []).append(r)
    with matplotlib.rc_context({"svg.hashsalt": "polymono", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for key, pts in series.items():
            pts = sorted(pts, key=lambda r: r.n)
            x = [r.n for r in pts]
            y = [r.value for r in pts]
            err = [r.std_error if r.std_error is not None else 0.0 for r in pts]
            label = " ".join(k for k in key if k)
            if any(e > 0 for e in err):
                cont = ax.errorbar(x, y, yerr=err, marker=".", capsize=2, label=label)
                cont.lines[0].set_gid(":".join(key))
            else:
                (line,) = ax.plot(x, y, marker=".", label=label)
                line.set_gid(":".join(key))
        ax.set_xlabel("n")
        ax.set_ylabel("value")
        if title:
            ax.set_title(title)
        if series:
            ax.legend(fontsize="small")
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def render(rows: Sequence[ReportRow], fmt: str, config: dict | None = None, timing: bool = True) -> str:
    if fmt == "csv":
        return to_csv(rows, config, timing)
    if fmt == "json":
        return to_json(rows)
    if fmt == "svg":
        return to_svg(rows)
    raise ValueError(f"unknown format {fmt!r}")


__all__ = ["FIELDS", "HEADER", "ReportRow", "to_csv", "from_csv", "to_json", "from_json", "to_svg", "csv_body", "render"]
