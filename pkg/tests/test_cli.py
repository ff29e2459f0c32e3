import json
import subprocess
import sys

import pytest

from loopeq.cli import main, parse_config, run_command


def run(argv):
    code, text, _ = run_command(argv)
    return code, text


def test_eqm_gaussian():
    code, text = run(["eqm", "--t4", "0"])
    rep = json.loads(text)
    assert code == 0
    assert rep["equilibrium"]["alpha"] == "-2"
    assert rep["equilibrium"]["beta"] == "2"
    assert rep["equilibrium"]["h"] == ["1"]
    assert set(rep) >= {"config", "equilibrium", "levels", "eg_table", "oracle", "timings"}


def test_negative_coupling_is_usage_error():
    code, text = run(["loop", "--t4", "-0.1"])
    assert code == 2
    assert json.loads(text)["reason"] == "t_upsilon must be positive"


def test_unknown_flag_is_usage_error():
    code, text = run(["eqm", "--bogus"])
    assert code == 2 and json.loads(text)["reason"]


def test_loop_csv_rows():
    code, text = run(["loop", "--t4", "0", "--gmax", "1", "--depth", "9", "--format", "csv"])
    assert code == 0
    assert "g=1,power=-5,re=1.0,im=0.0" in text.splitlines()
    assert "g=1,power=-7,re=10.0,im=0.0" in text.splitlines()


def test_resolvent_table():
    code, text = run(["resolvent", "--depth", "7"])
    rep = json.loads(text)
    vals = {r["power"]: r["value"] for r in rep["levels"][0]["laurent"]}
    assert vals[-1] == "1" and vals[-5] == "2" and vals[-7] == "5"


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"upsilon": 4, "t": [0, 0, 0, 0.2], "g_max": 1, "laurent_depth": 6}))
    code, text = run(["eqm", "--config", str(cfg), "--t4", "0.1"])
    rep = json.loads(text)
    assert code == 0
    assert rep["config"]["t"][3] == "0.1"
    assert float(rep["equilibrium"]["beta"]) == pytest.approx(1.53206, abs=1e-5)


def test_config_roundtrip_and_determinism(tmp_path):
    out = tmp_path / "r.json"
    assert main(["loop", "--t4", "0.05", "--gmax", "1", "--depth", "6", "--out", str(out)]) == 0
    first = json.loads(out.read_text())
    again = tmp_path / "cfg.json"
    again.write_text(json.dumps(first["config"]))
    out2 = tmp_path / "r2.json"
    assert main(["loop", "--config", str(again), "--out", str(out2)]) == 0
    second = json.loads(out2.read_text())
    first.pop("timings"), second.pop("timings")
    assert first == second


def test_bad_config_values(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert run(["eqm", "--config", str(cfg)])[0] == 2
    assert run(["eqm", "--config", str(tmp_path / "missing.json")])[0] == 2
    assert run(["verify", "--suite", "nope"])[0] == 2
    assert parse_config({"t": ["0", "0.5"], "upsilon": "2"}).t == [0.0, 0.5]


def test_not_admissible_is_usage_error():
    code, text = run(["eqm", "--t4", "3"])
    assert code == 2 and "admissible" in json.loads(text)["reason"]


def test_numerical_failure_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"upsilon": 6, "t": [0, 0, 0, -1.5, 0, 0.2], "gamma": 0.1, "T_bound": 2}))
    code, text = run(["eqm", "--config", str(cfg)])
    assert code == 3 and json.loads(text)["reason"]


def test_empty_suite():
    code, text = run(["verify", "--suite", "none"])
    rep = json.loads(text)
    assert code == 0 and rep["oracle"] == {}


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "loopeq.cli", "eqm", "--t4", "0"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "ok"
