import math
import xml.etree.ElementTree as ET

from hypothesis import given
from hypothesis import strategies as st

from polymono.report import FIELDS, HEADER, ReportRow, csv_body, from_csv, from_json, render, to_csv, to_json, to_svg

# labels as the commands produce them: no line breaks, no leading comment mark
text = st.text(st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp")), max_size=12).filter(
    lambda t: not t.startswith("#")
)
opt_int = st.none() | st.integers(0, 2**63)
opt_float = st.none() | st.floats(allow_nan=False, allow_infinity=False)
rows = st.lists(
    st.builds(
        ReportRow,
        text,
        text,
        opt_int,
        text,
        st.floats(allow_nan=False, allow_infinity=False),
        opt_float,
        opt_int,
        opt_int,
        opt_float,
    ),
    max_size=8,
)


@given(rows)
def test_csv_round_trip_is_exact(rs):
    assert from_csv(to_csv(rs, {"seed": 1})) == rs


@given(rows)
def test_json_round_trip_is_exact(rs):
    assert from_json(to_json(rs)) == rs


def test_header_and_config_lines():
    out = to_csv([ReportRow("e", "disk", 4, "f0", 0.1, None, 10, 7, 3.5)], {"seed": 7, "body": "disk"})
    lines = out.splitlines()
    assert lines[:2] == ["# seed = 7", "# body = disk"]
    assert lines[2] == HEADER == ",".join(FIELDS)
    assert lines[3] == "e,disk,4,f0,0.10000000000000001,,10,7,3.5"


def test_empty_report_is_header_only():
    assert to_csv([]) == HEADER + "\n"
    assert from_csv(to_csv([])) == []
    assert to_json([]).strip() == "[]"


def test_timing_can_be_dropped():
    r = [ReportRow("e", "b", 1, "q", 1.0, wall_time_ms=12.0)]
    assert to_csv(r, timing=False).splitlines()[-1].endswith(",")
    assert csv_body(to_csv(r)) == csv_body(to_csv(r, timing=False))


def test_svg_groups_carry_series_ids():
    r = [ReportRow("fit", "disk", n, "f1", math.log(n), 0.1) for n in (8, 16, 32)]
    r += [ReportRow("integrate", "square", n, "E_f0", float(n)) for n in (3, 4)]
    svg = to_svg(r)
    ids = {el.get("id") for el in ET.fromstring(svg).iter() if el.get("id")}
    assert {"fit:disk:f1", "integrate:square:E_f0"} <= ids
    assert svg == to_svg(r)  # deterministic


def test_render_dispatch():
    r = [ReportRow("e", "b", 1, "q", 1.0)]
    assert render(r, "csv").startswith(HEADER)
    assert render(r, "json").startswith("[")
    assert "<svg" in render(r, "svg")
