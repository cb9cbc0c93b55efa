import json
import subprocess
import sys

import numpy as np
import pytest

from foodchain import cli
from foodchain import integrator as integ
from foodchain.integrator import read_trajectory_csv

M2_ARGS = ["--a1", "0.3", "--a2", "0.9", "--d1", "0.4", "--d2", "0.01", "--m1", "1.6666666666666667"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_text(capsys):
    code, out, err = run(capsys, "classify", *M2_ARGS, "--m2", "0.065")
    assert code == 0
    assert "II.2.b.iv" in out and "lambda2" in out
    assert err == ""


def test_classify_json_stdout(capsys):
    code, out, _ = run(capsys, "classify", *M2_ARGS, "--m2", "0.033", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["kind"] == "classify" and doc["tool"] == "foodchain"
    assert doc["result"]["label"] == "II.2.b.iii"
    assert doc["config"]["params"]["m2"] == 0.033


def test_boundary_warning(capsys):
    # lambda1 = 0.2 * 1 / 0.5 sits exactly on (1 - a1) / 2
    code, _, err = run(capsys, "classify", "--a1", "0.2", "--a2", "1", "--d1", "1", "--d2", "0.01",
                       "--m1", "1.5", "--m2", "0.05")
    assert code == 0 and "warning" in err


def test_usage_errors(capsys):
    assert run(capsys, "classify", *M2_ARGS, "--m2", "-1")[0] == 2
    code, _, err = run(capsys, "simulate", *M2_ARGS, "--m2", "0.033", "--initial=-0.5,0,0")
    assert code == 2 and "nonnegative" in err
    assert run(capsys, "simulate", *M2_ARGS, "--m2", "0.033", "--initial", "1,2")[0] == 2
    assert run(capsys, "cycle", "--a1", "1.5", "--a2", "0.9", "--d1", "0.1", "--d2", "0.01",
               "--m1", "0.5", "--m2", "0.05")[0] == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["classify", "--bogus"])
    assert exc.value.code == 2


def test_missing_params_is_usage_error(capsys):
    code, _, err = run(capsys, "classify", "--a1", "0.3")
    assert code == 2 and "error" in err


def test_numeric_failure_exit_code(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(integ, "_MAX_STEPS", 500)
    code, _, err = run(capsys, "simulate", *M2_ARGS, "--m2", "0.033", "--initial", "0.5,0.5,0.5",
                       "--out", str(tmp_path))
    assert code == 3 and "numerical failure" in err
    assert (tmp_path / "trajectory_partial.csv").exists()


def test_simulate_artifacts(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", *M2_ARGS, "--m2", "0.033", "--initial", "0.5266,0.3913,0.8546",
                       "--t-end", "6000", "--t-transient", "3000", "--out", str(tmp_path))
    assert code == 0 and "equilibrium" in out
    doc = json.loads((tmp_path / "verdict.json").read_text())
    assert doc["result"]["verdict"]["kind"] == "equilibrium"
    assert doc["config"]["integrator"]["t_end"] == 6000.0
    prov, t, states = read_trajectory_csv(tmp_path / "trajectory.csv")
    assert states.shape == (len(t), 3) and np.all(states >= 0)


def test_config_rerun_is_identical(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(capsys, "floquet", *M2_ARGS, "--m2", "0.065", "--out", str(a))
    code, _, _ = run(capsys, "floquet", "--config", str(a / "floquet.json"), "--out", str(b))
    assert code == 0
    assert (a / "floquet.json").read_text() == (b / "floquet.json").read_text()


def test_floquet_unstable_at_m2_065(capsys):
    code, out, _ = run(capsys, "floquet", *M2_ARGS, "--m2", "0.065", "--json")
    fl = json.loads(out)["result"]["floquet"]
    assert code == 0 and fl["transversal_average"] > 0 and not fl["stable_in_R3"]


def test_params_file_and_inline_override(capsys, tmp_path):
    f = tmp_path / "p.json"
    f.write_text(json.dumps({"a1": 0.3, "a2": 0.9, "d1": 0.4, "d2": 0.01, "m1": 5 / 3, "m2": 0.033}))
    code, out, _ = run(capsys, "classify", "--params", str(f), "--m2", "0.065", "--json")
    assert json.loads(out)["result"]["label"] == "II.2.b.iv"


def test_csv_header_carries_config(capsys, tmp_path):
    run(capsys, "sweep", "--param", "m2", "--from", "0.033", "--to", "0.034", "--step", "0.001",
        "--t-end", "4000", "--t-transient", "2000", "--out", str(tmp_path))
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("# ")
    assert json.loads(lines[0][2:])["config"]["options"]["param"] == "m2"
    assert lines[1].startswith("m2,lambda2,case")
    assert len(lines) == 4


def test_reproduce_table3(capsys, tmp_path):
    code, out, _ = run(capsys, "reproduce", "table3", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert [r["name"] for r in doc["result"]["rows"]] == ["Hogeweg", "Scheffer", "Hastings"]


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "foodchain.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "foodchain" in res.stdout


@pytest.mark.slow
def test_sweep_full_grid(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", "--param", "m2", "--from", "0.02", "--to", "0.15", "--step", "0.001",
                       "--out", str(tmp_path))
    assert code == 0 and "records          131" in out
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 2 + 131
