import csv
import io
import json
import subprocess
import sys

import pytest

from ruin_lab import cli

GAMBLER = {"type": "discrete", "c": 1, "pmfs": [{"probs": {"0": 0.55, "2": 0.45}}]}
NEUTRAL = {"type": "discrete", "c": 1, "pmfs": [{"probs": {"0": 0.5, "2": 0.5}}]}
EXP1 = {"family": "exponential", "params": {"mean": 1}}


def run_cli(tmp_path, cfg, *extra, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return cli.main([str(path), *extra])


def last_error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_compute_discrete_exact_row(tmp_path, capsys):
    assert run_cli(tmp_path, {"command": "compute-discrete", "model": GAMBLER, "u_max": 3}) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["u", "phi", "psi"]
    assert float(rows[1][1]) == pytest.approx(2 / 11, abs=1e-12)
    assert float(rows[2][1]) == pytest.approx(40 / 121, abs=1e-12)


def test_compute_discrete_json_residuals(tmp_path):
    out = tmp_path / "o.json"
    cfg = {"command": "compute-discrete", "model": GAMBLER, "u_max": 20, "output": {"format": "json", "path": str(out)}}
    assert run_cli(tmp_path, cfg) == 0
    doc = json.loads(out.read_text())
    assert doc["residuals"]["functional_equation"] < 1e-12
    assert len(doc["phi"]) == 21


def test_strict_convention_shifts(tmp_path, capsys):
    run_cli(tmp_path, {"command": "compute-discrete", "model": GAMBLER, "u_max": 3, "convention": "strict"})
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))[1:]
    assert float(rows[1][1]) == pytest.approx(2 / 11, abs=1e-12)


def test_sweep_classical_neutral(tmp_path, capsys):
    model = {"type": "classical", "lambda": 1, "c": 1, "claim": EXP1}
    cfg = {"command": "sweep-epsilon", "model": model, "epsilons": [0.2, 0.1, 0.05], "a": 0.6931471805599453, "u": [0]}
    assert run_cli(tmp_path, cfg) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [float(r["psi0"]) for r in rows] == pytest.approx([0.9, 0.95, 0.975], abs=1e-12)


def test_sweep_discrete(tmp_path, capsys):
    cfg = {"command": "sweep-epsilon", "model": NEUTRAL, "epsilons": [0.1, 0.01], "u_max": 0}
    assert run_cli(tmp_path, cfg) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert float(rows[0]["phi"]) == pytest.approx(0.1 / 0.55, abs=1e-12)


def test_schema_error_pointer(tmp_path, capsys):
    bad = {"command": "compute-discrete", "model": {"type": "discrete", "c": 1, "pmfs": [{"probs": {"0": 0.5, "2": 1.5}}]}}
    assert run_cli(tmp_path, bad) == 2
    err = last_error(capsys)
    assert err["pointer"] == "/model/pmfs/0/probs/2" and err["exit_code"] == 2


def test_unknown_command_lists_valid(tmp_path, capsys):
    assert run_cli(tmp_path, {"command": "frobnicate", "model": NEUTRAL}) == 2
    err = last_error(capsys)
    assert err["pointer"] == "/command"
    for name in cli.COMMANDS:
        assert name in err["message"]


def test_invalid_json(tmp_path, capsys):
    assert run_cli(tmp_path, "{not json") == 2
    assert last_error(capsys)["error"] == "ConfigError"


def test_missing_config_file(tmp_path, capsys):
    assert cli.main([str(tmp_path / "nope.json")]) == 2


def test_model_from_file(tmp_path, capsys):
    (tmp_path / "model.json").write_text(json.dumps(GAMBLER))
    assert run_cli(tmp_path, {"command": "compute-discrete", "model": "model.json", "u_max": 0}) == 0
    assert "0.1818181818" in capsys.readouterr().out
    assert run_cli(tmp_path, {"command": "compute-discrete", "model": "absent.json"}) == 2


def test_npc_violation_exit_code(tmp_path, capsys):
    hot = {"type": "classical", "lambda": 2, "c": 1, "claim": EXP1}
    assert run_cli(tmp_path, {"command": "compute-classical", "model": hot, "u_max": 1}) == 2
    assert last_error(capsys)["error"] == "NPCViolation"


def test_degenerate_andersen_exit_code(tmp_path, capsys):
    point = {"family": "shifted-discrete", "params": {"values": [1], "probs": [1]}}
    model = {"type": "andersen", "c": 1, "claim": point, "interarrival": point}
    assert run_cli(tmp_path, {"command": "simulate", "model": model, "u": [0]}) == 2
    assert last_error(capsys)["error"] == "DegenerateModel"


def test_emit_config_round_trip(tmp_path, capsys):
    cfg = {"command": "simulate", "model": GAMBLER, "u": [0, 1], "mc": {"paths": 100, "horizon": 10, "seed": 4}}
    assert run_cli(tmp_path, cfg, "--emit-config", "--chunks", "3") == 0
    first = capsys.readouterr().out
    assert json.loads(first)["mc"]["chunks"] == 3
    assert run_cli(tmp_path, first, "--emit-config", name="again.json") == 0
    assert capsys.readouterr().out == first


def test_simulate_json_and_csv(tmp_path):
    cfg = {"command": "simulate", "model": GAMBLER, "u": [0, 1], "mc": {"paths": 2000, "horizon": 50, "seed": 1}}
    out_csv, out_json = tmp_path / "s.csv", tmp_path / "s.json"
    assert run_cli(tmp_path, cfg, "--out", str(out_csv)) == 0
    assert run_cli(tmp_path, cfg, "--out", str(out_json), "--format", "json") == 0
    raw = out_csv.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    rows = list(csv.DictReader(io.StringIO(raw.decode())))
    doc = json.loads(out_json.read_text())
    assert [float(r["p_hat"]) for r in rows] == [e["p_hat"] for e in doc["estimates"]]
    assert set(doc["estimates"][0]) >= {"p_hat", "stderr", "ci95", "paths", "horizon", "seed", "u"}


def test_seed_override_changes_output(tmp_path):
    cfg = {"command": "simulate", "model": GAMBLER, "u": [0], "mc": {"paths": 2000, "horizon": 50, "seed": 1}}
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    run_cli(tmp_path, cfg, "--out", str(a))
    run_cli(tmp_path, cfg, "--out", str(b))
    run_cli(tmp_path, cfg, "--out", str(c), "--seed", "2")
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()


def test_compute_andersen_side_files(tmp_path):
    model = {"type": "andersen", "c": 1.25, "claim": EXP1, "interarrival": EXP1}
    cfg = {"command": "compute-andersen", "model": model, "u_max": 2, "spitzer_n": [1, 10, 100],
           "mc": {"paths": 4000, "horizon": 300, "seed": 3}}
    out = tmp_path / "a.csv"
    assert run_cli(tmp_path, cfg, "--out", str(out)) == 0
    assert sorted(p.name for p in tmp_path.glob("a.*")) == ["a.csv", "a.ladder.csv", "a.spitzer.csv"]


def test_verify_prints_pass_lines(tmp_path, capsys):
    cfg = {"command": "verify", "model": NEUTRAL, "mc": {"paths": 5000, "horizon": 200, "seed": 2}}
    assert run_cli(tmp_path, cfg) == 0
    err = capsys.readouterr().err.splitlines()
    assert err == ["PASS ruin_trend", "PASS coupling", "PASS epsilon_sweep"]


def test_verify_classical(tmp_path, capsys):
    model = {"type": "classical", "lambda": 1, "c": 1, "claim": EXP1}
    cfg = {"command": "verify", "model": model, "mc": {"paths": 4000, "horizon": 100, "seed": 2}}
    assert run_cli(tmp_path, cfg) == 0
    assert all(line.startswith("PASS") for line in capsys.readouterr().err.splitlines())


def test_stdin_config():
    cfg = json.dumps({"command": "compute-discrete", "model": GAMBLER, "u_max": 1})
    res = subprocess.run([sys.executable, "-m", "ruin_lab", "-"], input=cfg, capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0] == "u,phi,psi"
