import json
import math
import shutil

import pytest

from revflow.cli import fmt, run, to_json
from revflow.experiments import packaged_surface_path

BUMP = packaged_surface_path("bump")
ODD = packaged_surface_path("odd_bump")
SPHERE = packaged_surface_path("sphere")


def _csv_rows(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_float_format_17_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(math.pi)) == math.pi
    assert to_json({"x": [1.0 / 3, None, True]}).count("0.33333333333333331") == 1


def test_surface_validate(capsys):
    assert run(["surface", "validate", BUMP]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["validation"]["ok"] and doc["validation"]["grid_n"] == 10000


def test_surface_validate_failure(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "bump", "parameters": {"a": 0.5, "b": 1.0,
                                                              "amplitude": -2.0}}))
    assert run(["surface", "validate", str(bad)]) == 1
    captured = capsys.readouterr()
    assert "theta" in captured.err
    assert json.loads(captured.out)["validation"]["ok"] is False


def test_malformed_config_names_field(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "bump", "parameters": {"a": 0.5, "b": 1.0}}))
    assert run(["trace", str(bad), "--alpha", "0.3", "--t-end", "1"]) == 2
    assert "amplitude" in capsys.readouterr().err


def test_unknown_subcommand(capsys):
    assert run(["frobnicate"]) == 2
    assert "invalid choice" in capsys.readouterr().err


def test_trace_zero_time_echoes_start(tmp_path):
    out = tmp_path / "t.csv"
    assert run(["trace", BUMP, "--alpha", "0.6", "--t-end", "0", "--out", str(out)]) == 0
    rows = _csv_rows(out.read_text())
    assert rows[0] == "t,theta,phi,p_theta,p_phi"
    assert len(rows) == 2 and rows[1].startswith("0,0,0,")
    events = json.loads((tmp_path / "t.events.json").read_text())
    assert events["events"] == []


def test_trace_header_and_determinism(tmp_path):
    args = ["trace", BUMP, "--alpha", "0.9", "--t-end", "12", "--samples", "25"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.events.json").read_bytes() == (tmp_path / "b.events.json").read_bytes()
    text = a.read_text()
    assert "# tol=1e-10" in text
    ev = json.loads((tmp_path / "a.events.json").read_text())
    assert {e["kind"] for e in ev["events"]} == {"turning", "equator"}


def test_billiard_arc_column_and_reflections(tmp_path):
    out = tmp_path / "b.csv"
    assert run(["billiard", BUMP, "--alpha", "0.3", "--phi0", "1.0", "--t-end", "6.283185307179586",
                "--out", str(out)]) == 0
    rows = _csv_rows(out.read_text())
    assert rows[0] == "t,arc,theta,phi,p_theta,p_phi"
    log = json.loads((tmp_path / "b.events.json").read_text())
    assert log["reflections"] == 2
    assert [e["kind"] for e in log["events"]].count("reflection") == 2


def test_period_scan_columns(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["period-scan", BUMP, "--alpha-min", "0.3", "--alpha-max", "1.0", "--n", "5",
                "--out", str(out), "--jobs", "2"]) == 0
    rows = _csv_rows(out.read_text())
    assert rows[0] == "alpha,T_star,R,rot_frac_p,rot_frac_q,classification"
    assert len(rows) == 6
    assert rows[1].endswith("EquatorBand(1)")


def test_classify_single(capsys):
    assert run(["classify", ODD, "--alpha", "0.7"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["classification"] == "PeriodicResonant" and doc["k"] == 1
    assert doc["R"] == 0


def test_jet_and_return_time(capsys):
    assert run(["jet", SPHERE, "--alpha", "0.6", "--K", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "AbsolutelyPeriodicToOrder"
    assert run(["return-time", SPHERE, "--alpha", "0.6"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["t_star"] - 2 * math.pi) <= 1e-8


def test_measure_seed_env(monkeypatch, tmp_path):
    a, b, c = (tmp_path / n for n in ("a.json", "b.json", "c.json"))
    monkeypatch.setenv("REVFLOW_SEED", "5")
    assert run(["measure", BUMP, "--n", "200", "--out", str(a)]) == 0
    assert run(["measure", BUMP, "--n", "200", "--seed", "5", "--out", str(b)]) == 0
    assert run(["measure", BUMP, "--n", "200", "--seed", "6", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["seed"] == 5 and doc["tol"] == 1e-12


def test_bad_seed_env(monkeypatch, capsys):
    monkeypatch.setenv("REVFLOW_SEED", "abc")
    assert run(["measure", BUMP, "--n", "10"]) == 2
    assert "REVFLOW_SEED" in capsys.readouterr().err


def test_curvature_csv(tmp_path):
    out = tmp_path / "k.csv"
    assert run(["curvature", BUMP, "--theta", "0.2", "0.8", "--xi", "1.0", "-0.5",
                "--out", str(out)]) == 0
    rows = _csv_rows(out.read_text())
    assert rows[0] == "theta,xi_tan,k"
    assert all(abs(float(r.split(",")[2])) <= 1e-5 for r in rows[1:])
    assert run(["curvature", BUMP, "--theta", "0.2", "--xi", "0"]) == 2


def test_carleman_report(capsys):
    assert run(["carleman", "--kind", "gevrey", "--s", "2", "--N", "20", "--sums-N", "64"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["classification"] == "NotQuasianalytic"
    assert set(doc["partial_sums"]) == {"8", "16", "32", "64"}
    assert run(["carleman", "--kind", "gevrey"]) == 2


def test_carleman_explicit_file(tmp_path, capsys):
    vals = tmp_path / "m.txt"
    vals.write_text(" ".join(str(float(n) ** n) for n in range(1, 41)))
    assert run(["carleman", "--kind", "explicit", "--values-file", str(vals), "--N", "20",
                "--sums-N", "32"]) == 0
    assert json.loads(capsys.readouterr().out)["regular"] is True
    assert run(["carleman", "--kind", "explicit", "--values", "1", "0.5", "0.3", "--N", "4"]) == 2


def test_repro_thm48(tmp_path):
    out = tmp_path / "r.json"
    assert run(["repro", "thm48", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] and len(doc["checks"]) == 7


def test_repro_uses_surface_override(tmp_path):
    local = tmp_path / "bump.json"
    shutil.copy(BUMP, local)
    out = tmp_path / "r.json"
    assert run(["repro", "thm48", "--surface", str(local), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["config"]["surface"] == str(local)


def test_jobs_must_be_positive(capsys):
    assert run(["measure", BUMP, "--jobs", "0"]) == 2
