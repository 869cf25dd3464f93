import json
import subprocess
import sys

import pytest

from polymono.cli import (
    EXIT_CONFIG,
    EXIT_DEGENERATE,
    EXIT_FAIL,
    EXIT_IO,
    EXIT_OK,
    EXIT_QUADRATURE,
    EXIT_USAGE,
    load_config,
    parse_n_list,
    run,
)
from polymono.report import HEADER, csv_body, from_csv, from_json, render


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_n_lists():
    assert parse_n_list("7") == [7]
    assert parse_n_list("3..6") == [3, 4, 5, 6]
    assert parse_n_list("128..1024*2") == [128, 256, 512, 1024]
    assert parse_n_list("4, 8..9") == [4, 8, 9]
    for bad in ("", "9..3", "1..8*1", "x"):
        with pytest.raises(ValueError):
            parse_n_list(bad)


def test_integrate_square(capsys):
    code, out, err = call(capsys, "integrate", "--body", "square", "--n", "3..4", "--seedless")
    assert code == EXIT_OK
    rows = from_csv(out)
    assert [r.n for r in rows] == [3, 4]
    assert rows[1].value == pytest.approx(133 / 36, abs=1e-10)
    assert rows[0].body == "square" and rows[0].seed is None
    assert "n=4" in err
    assert "# body = square" in out


@pytest.mark.parametrize("form", ["T_FORM", "LPRIME_FORM"])
def test_integrate_other_forms(capsys, form):
    code, out, _ = call(capsys, "integrate", "--body", "disk", "--n", "4", "--form", form, "--format", "json")
    assert code == EXIT_OK
    (row,) = from_json(out)
    assert row.value == pytest.approx(3.7044798810431767, abs=1e-9)


def test_estimate_json_round_trip(capsys, tmp_path):
    target = tmp_path / "est.json"
    code, out, _ = call(
        capsys, "estimate", "--body", "ball", "--n", "10", "--reps", "20", "--seed", "3", "-o", str(target), "--format", "json"
    )
    assert code == EXIT_OK and out == ""
    rows = from_json(target.read_text())
    assert [r.quantity for r in rows] == ["f0", "f1", "f2"]
    assert all(r.reps == 20 and r.seed == 3 for r in rows)
    assert json.loads(target.read_text())[0]["experiment"] == "estimate"


@pytest.mark.parametrize("quantity", ["sk", "delta", "ratio", "volume"])
def test_estimate_quantities(capsys, quantity):
    code, out, _ = call(capsys, "estimate", "--body", "disk", "--n", "12", "--reps", "10", "--seed", "1", "--quantity", quantity)
    assert code == EXIT_OK
    assert len(from_csv(out)) >= 1


def test_same_seed_same_body_of_report(capsys):
    argv = ["estimate", "--body", "disk", "--n", "20,30", "--reps", "30", "--seed", "9"]
    a = call(capsys, *argv)[1]
    b = call(capsys, *argv, "--workers", "2")[1]
    assert csv_body(a) == csv_body(b)
    assert a != call(capsys, *argv[:-1], "10")[1]


def test_ksets_from_file(capsys, tmp_path):
    f = tmp_path / "pentagon.txt"
    f.write_text("# regular pentagon\n1 0\n0.309017 0.951057\n-0.809017 0.587785\n-0.809017 -0.587785\n0.309017 -0.951057\n")
    code, out, err = call(capsys, "ksets", "--points", str(f))
    assert code == EXIT_OK
    assert [(r.quantity, r.value) for r in from_csv(out)] == [("s0", 5.0), ("s1", 5.0)]
    assert "s0=5" in err


def test_verify_passes_and_fails(capsys):
    assert call(capsys, "verify", "--check", "c1", "--body", "disk", "--n", "16", "--reps", "50", "--seed", "1")[0] == EXIT_OK
    assert call(capsys, "verify", "--check", "lemma2", "--body", "triangle")[0] == EXIT_OK
    code, out, _ = call(capsys, "verify", "--check", "forms", "--body", "square", "--n", "5")
    assert code == EXIT_OK
    assert from_csv(out)[-1].quantity == "verdict"
    # a ratio-style check on a non-smooth body is a usage error, not a failure
    assert call(capsys, "estimate", "--body", "square", "--n", "8", "--reps", "5", "--seed", "1", "--quantity", "ratio")[0] == EXIT_USAGE


def test_verify_failure_exit_code(capsys, monkeypatch):
    from polymono import brformula

    real = brformula.lemma2_check

    def strict(body, *a, **k):
        return real(body, tol=-1.0)

    monkeypatch.setattr(brformula, "lemma2_check", strict)
    assert call(capsys, "verify", "--check", "lemma2", "--body", "disk")[0] == EXIT_FAIL


def test_fit(capsys):
    code, out, err = call(capsys, "fit", "--body", "disk", "--n", "16..256*2", "--reps", "20", "--seed", "2")
    assert code == EXIT_OK
    names = [r.quantity for r in from_csv(out)]
    assert "power_c" in names and "power_r_squared" in names


def test_seed_rules(capsys):
    assert call(capsys, "estimate", "--body", "disk", "--n", "8")[0] == EXIT_USAGE
    assert call(capsys, "estimate", "--body", "disk", "--n", "8", "--seed", "1", "--seedless")[0] == EXIT_USAGE
    assert call(capsys, "estimate", "--body", "disk", "--n", "8", "--seed", "-1")[0] == EXIT_USAGE
    assert call(capsys, "integrate", "--body", "disk")[0] == EXIT_USAGE
    assert call(capsys, "integrate", "--body", "blob", "--n", "4")[0] == EXIT_USAGE
    assert call(capsys, "frobnicate")[0] == EXIT_USAGE


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# a run\nbody = disk\nn = 4\nn-panels = 40  # fewer panels\n")
    assert load_config(cfg) == {"body": "disk", "n": "4", "n_panels": "40"}
    code, out, _ = call(capsys, "integrate", "--config", str(cfg))
    assert code == EXIT_OK
    assert from_csv(out)[0].body == "disk"
    code, out, _ = call(capsys, "integrate", "--config", str(cfg), "--body", "square")
    assert from_csv(out)[0].value == pytest.approx(133 / 36, abs=1e-10)


def test_config_errors(capsys, tmp_path):
    bad_key = tmp_path / "a.cfg"
    bad_key.write_text("colour = blue\n")
    assert call(capsys, "integrate", "--config", str(bad_key), "--body", "disk", "--n", "4")[0] == EXIT_CONFIG
    bad_line = tmp_path / "b.cfg"
    bad_line.write_text("just words\n")
    assert call(capsys, "integrate", "--config", str(bad_line))[0] == EXIT_CONFIG
    bad_value = tmp_path / "c.cfg"
    bad_value.write_text("form = SIDEWAYS\n")
    assert call(capsys, "integrate", "--config", str(bad_value), "--body", "disk", "--n", "4")[0] == EXIT_CONFIG
    assert call(capsys, "integrate", "--config", str(tmp_path / "missing.cfg"))[0] == EXIT_CONFIG


def test_quadrature_and_io_and_degenerate_codes(capsys, tmp_path):
    assert call(capsys, "integrate", "--body", "square", "--n", "50", "--tol", "1e-20")[0] == EXIT_QUADRATURE
    out = tmp_path / "no" / "such" / "dir.csv"
    assert call(capsys, "integrate", "--body", "square", "--n", "4", "-o", str(out))[0] == EXIT_IO
    f = tmp_path / "line.txt"
    f.write_text("0 0\n1 1\n2 2\n3 3\n")
    assert call(capsys, "ksets", "--points", str(f))[0] == EXIT_DEGENERATE
    assert call(capsys, "ksets", "--points", str(tmp_path / "none.txt"))[0] == EXIT_IO


def test_svg_output(capsys):
    code, out, _ = call(capsys, "integrate", "--body", "triangle", "--n", "3..6", "--format", "svg")
    assert code == EXIT_OK
    assert 'id="integrate:triangle:E_f0"' in out


def test_no_timing_blanks_the_column(capsys):
    _, out, _ = call(capsys, "integrate", "--body", "square", "--n", "3", "--no-timing")
    assert out.splitlines()[-1].endswith(",")


def test_empty_points_file_and_empty_report(capsys):
    assert call(capsys, "ksets", "--points", "/dev/null")[0] == EXIT_CONFIG
    assert render([], "csv") == HEADER + "\n"


def test_quick_suite_subset(capsys):
    code, out, err = call(capsys, "suite", "--seed", "42", "--quick", "--only", "1,3")
    assert "criterion  1" in err and "criterion  3" in err and "criterion 10" in err
    assert code == EXIT_OK
    assert {r.experiment for r in from_csv(out)} >= {"quadrature_oracle"}


def test_console_script_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "polymono.cli", "integrate", "--body", "square", "--n", "3", "--seedless"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0
    (row,) = from_csv(res.stdout)
    assert row.value == pytest.approx(3.0, abs=1e-12)
