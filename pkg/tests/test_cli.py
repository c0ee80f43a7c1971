from __future__ import annotations

import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from filtered_weights.cli import git_describe, read_csv_report, run_command

FIXTURES = Path(__file__).resolve().parent.parent / "instances"


def _run(capsys, *argv):
    code = run_command(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constants_on_unit_weight(capsys, tmp_path):
    code, out, _ = _run(capsys, "constants", "--instance", str(FIXTURES / "s4.json"), "--rational")
    assert code == 0
    consts = json.loads(out)["results"][0]["constants"]
    assert len(consts) >= 12
    for key, c in consts.items():
        val = c["value"] if isinstance(c, dict) else c
        assert math.isclose(val, 1.0, rel_tol=1e-12), key


def test_verify_weak_prints_constant(capsys):
    code, out, err = _run(capsys, "verify", "weak", "--instance", str(FIXTURES / "s2.json"), "--samples", "20")
    assert "20.78" in err
    doc = json.loads(out)
    assert math.isclose(doc["weak_constant"]["value"], 12 * math.sqrt(3), rel_tol=1e-12)
    assert code == (0 if doc["passed"] else 1)


def test_exit_one_on_violation(capsys):
    code, out, _ = _run(capsys, "verify", "strong", "--instance", str(FIXTURES / "s2.json"), "--c-budget", "0.001")
    assert code == 1 and json.loads(out)["passed"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "nonsense"],
        ["frobnicate"],
        ["verify", "strong", "--trials", "0"],
        ["verify", "strong", "--instance", "/nonexistent/x.json"],
        ["constants", "--p", "0.5", "--instance", "instances/s2.json"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 2 and err


def test_malformed_instance_exit_two(capsys, tmp_path):
    doc = json.loads((FIXTURES / "s2.json").read_text())
    doc["space"]["mu"][0] = 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, _, err = _run(capsys, "constants", "--instance", str(bad))
    assert code == 2 and "space.mu[0]" in err


def test_csv_and_json_agree(capsys, tmp_path):
    base = ["verify", "maximal", "--trials", "2", "--depth", "3", "--seed", "5", "--samples", "30"]
    assert run_command(base + ["--out", str(tmp_path / "r.json")]) in (0, 1)
    assert run_command(base + ["--format", "csv", "--out", str(tmp_path / "r.csv")]) in (0, 1)
    from filtered_weights.cli import flatten

    flat_json = dict(flatten(json.loads((tmp_path / "r.json").read_text())))
    flat_csv = read_csv_report((tmp_path / "r.csv").read_text())
    for flat in (flat_json, flat_csv):
        for k in [k for k in flat if k.startswith("provenance.argv")]:
            del flat[k]
    assert flat_json == flat_csv


def test_provenance(capsys):
    code, out, _ = _run(capsys, "verify", "sparsity", "--instance", str(FIXTURES / "s4.json"), "--seed", "3")
    prov = json.loads(out)["provenance"]
    assert code == 0
    assert prov["seed"] == 3 and prov["git_describe"] == git_describe() and prov["argv"][0] == "verify"
    assert {"mode", "tol", "c_budget", "threads"} <= set(prov)


def test_fixture_numbers_in_rational_mode(capsys):
    code, out, _ = _run(capsys, "verify", "carleson", "--instance", str(FIXTURES / "s4.json"), "--rational", "--scale", "2")
    rep = json.loads(out)["reports"][0]
    assert code == 0 and rep["constants"]["max_ratio"] == 20 / 43
    code, out, _ = _run(capsys, "verify", "remark28", "--instance", str(FIXTURES / "s2.json"), "--rational")
    rep = json.loads(out)["reports"][0]
    assert code == 0 and rep["constants"]["ap_w[2]"] == 4 / 3


def test_search_reports_witness(capsys):
    code, out, _ = _run(capsys, "search", "doob", "--trials", "3", "--samples", "20")
    doc = json.loads(out)
    assert code == 0 and 0 < doc["max_ratio"] <= 1 and "witness" in doc


def test_probe_a1_runs(capsys):
    code, out, _ = _run(capsys, "verify", "strong", "--probe-a1", "--spreads", "0.5", "2", "--trials", "2", "--depth", "3")
    rows = json.loads(out)["trend"]
    assert code == 0 and [r["spread"] for r in rows] == [0.5, 2.0]
    assert rows[1]["max_a1"] >= rows[0]["max_a1"]


def test_console_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "filtered_weights", "verify", "sparsity", "--instance", str(FIXTURES / "s4.json")],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["passed"] is True
