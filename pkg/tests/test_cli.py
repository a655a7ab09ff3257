from __future__ import annotations

import json
import re
import subprocess
import sys

import pytest
from conftest import GERMAN_FORMULA, NEW_CREDIT_CASE

from predterms.cli import main, parse_case_json
from predterms.datasets import dataset_path
from predterms.errors import CaseError

TOPGEAR = dataset_path("topgear")
GERMAN = dataset_path("germancredit")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.fixture(scope="module")
def credit_model(tmp_path_factory):
    path = tmp_path_factory.mktemp("m") / "credit.json"
    assert main(["fit", "--data", GERMAN, "--id-col", "id", "--formula", GERMAN_FORMULA,
                 "--family", "binomial", "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def gpm_model(tmp_path_factory):
    path = tmp_path_factory.mktemp("m") / "gpm.json"
    assert main(["fit", "--data", TOPGEAR, "--id-col", "car",
                 "--formula", "1/MPG ~ accel + weight + fuel + drive", "--out", str(path)]) == 0
    return path


def test_fit_prints_json_coefficients(capsys, tmp_path):
    out_json = tmp_path / "hp.json"
    code, out, err = run(capsys, "fit", "--data", TOPGEAR, "--formula", "hp ~ topspeed + length + displ",
                         "--out", out_json)
    assert code == 0
    doc = json.loads(out_json.read_text())
    printed = dict(re.findall(r"^  (\S+)\s+(\S+)$", out, flags=re.M))
    assert float(printed["(Intercept)"]) == doc["intercept"]
    for t in doc["terms"]:
        for c in t["coef"]:
            assert float(printed[c["column"]]) == c["value"]
    assert "incomplete row(s) dropped" in err


def test_terms_order(capsys, gpm_model):
    code, out, err = run(capsys, "terms", "--model", gpm_model, "--data", TOPGEAR, "--id-col", "car")
    assert code == 0
    assert out.splitlines()[-1] == "display order: weight, accel, fuel, drive"
    assert "incomplete row(s) left out" in err


def test_plot_writes_same_svg_twice(capsys, tmp_path, gpm_model):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for p in (a, b):
        code, _, _ = run(capsys, "plot", "--model", gpm_model, "--data", TOPGEAR, "--id-col", "car", "--out", p)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    names = re.findall(r'class="axis-name"[^>]*>([^<]+)<', a.read_text())
    assert names[:4] == ["weight", "accel", "fuel", "drive"]


def test_plot_to_stdout(capsys, gpm_model):
    code, out, _ = run(capsys, "plot", "--model", gpm_model, "--data", TOPGEAR, "--out", "-",
                       "--display", "density", "--max-terms", "2")
    assert code == 0 and "<svg" in out[:200] and out.count('class="term-axis"') == 2


def test_explain_row_number(capsys, credit_model, tmp_path):
    svg = tmp_path / "case.svg"
    code, out, _ = run(capsys, "explain", "--model", credit_model, "--data", GERMAN, "--id-col", "id",
                       "--case", "2", "--staircase", "--out", svg)
    assert code == 0
    assert out.splitlines()[0] == "case 2 (2)"
    assert svg.read_text().rstrip().endswith("</svg>")


def test_explain_json_case(capsys, credit_model):
    code, out, _ = run(capsys, "explain", "--model", credit_model, "--data", GERMAN,
                       "--case", json.dumps(NEW_CREDIT_CASE))
    assert code == 0
    assert out.splitlines()[0] == "case: supplied record"
    assert "0.88963" in out and "+1.12701" in out


def test_cor(capsys, credit_model, tmp_path):
    svg = tmp_path / "cor.svg"
    code, _, _ = run(capsys, "cor", "--model", credit_model, "--data", GERMAN, "--out", svg,
                     "--sort-by-stdev", "false", "--abs", "--cell-area", "stdev")
    assert code == 0
    assert svg.read_text().count('class="row-label"') == 7


@pytest.mark.parametrize("argv, fragment", [
    (["fit", "--data", TOPGEAR, "--formula", "hp ~ topspeed", "--bogus"], "unrecognized"),
    (["fit", "--data", TOPGEAR], "--formula"),
    (["fit", "--data", TOPGEAR, "--formula", "hp ~ (topspeed"], "--formula"),
    (["fit", "--data", TOPGEAR, "--formula", "hp ~ nosuch"], "nosuch"),
    (["fit", "--data", "/no/such.csv", "--formula", "hp ~ topspeed"], "--data"),
    (["plot", "--model", "/no/such.json", "--data", TOPGEAR, "--out", "-"], "--model"),
])
def test_usage_errors_exit_1(capsys, argv, fragment):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert fragment in err


def test_flag_value_errors(capsys, credit_model):
    base = ["--model", credit_model, "--data", GERMAN]
    code, _, err = run(capsys, "cor", *base, "--out", "-", "--sort-by-stdev", "maybe")
    assert code == 1 and "--sort-by-stdev" in err
    code, _, err = run(capsys, "explain", *base, "--case", "{}")
    assert code == 1 and "--case" in err and "missing column(s): months" in err
    code, _, err = run(capsys, "plot", *base, "--out", "-", "--staircase")
    assert code == 1 and "needs --case" in err
    code, _, err = run(capsys, "explain", *base, "--case", "5000")
    assert code == 1 and "out of range" in err


def test_data_and_model_errors_exit_2(capsys, tmp_path, credit_model):
    code, _, err = run(capsys, "fit", "--data", TOPGEAR, "--formula", "hp ~ topspeed", "--family", "binomial")
    assert code == 2 and "0/1" in err
    code, _, _ = run(capsys, "terms", "--model", credit_model, "--data", TOPGEAR)
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    code, _, _ = run(capsys, "terms", "--model", bad, "--data", GERMAN)
    assert code == 2


def test_style_environment(capsys, monkeypatch, tmp_path, gpm_model):
    style = tmp_path / "style.json"
    style.write_text(json.dumps({"up": "#123456"}))
    monkeypatch.setenv("PREDTERMS_STYLE", str(style))
    code, out, _ = run(capsys, "plot", "--model", gpm_model, "--data", TOPGEAR, "--out", "-")
    assert code == 0 and "#123456" in out
    style.write_text(json.dumps({"nope": 1}))
    code, _, err = run(capsys, "plot", "--model", gpm_model, "--data", TOPGEAR, "--out", "-")
    assert code == 1 and "PREDTERMS_STYLE" in err


def test_parse_case_json(credit):
    m = credit[0]
    rec = parse_case_json(json.dumps({**NEW_CREDIT_CASE, "months": "36", "credit": 1}), m)
    assert rec["months"] == 36.0 and rec["purpose"] == "u.car"
    with pytest.raises(CaseError, match="missing column") as info:
        parse_case_json("{}", m)
    assert all(c in str(info.value) for c in NEW_CREDIT_CASE)
    with pytest.raises(CaseError, match="unknown column"):
        parse_case_json(json.dumps({**NEW_CREDIT_CASE, "color": "red"}), m)
    with pytest.raises(CaseError, match="needs a number"):
        parse_case_json(json.dumps({**NEW_CREDIT_CASE, "age": True}), m)
    with pytest.raises(CaseError, match="unseen level"):
        parse_case_json(json.dumps({**NEW_CREDIT_CASE, "purpose": "boat"}), m)
    with pytest.raises(CaseError, match="JSON"):
        parse_case_json("{oops", m)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "predterms", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "fit" in r.stdout
