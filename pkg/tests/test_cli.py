import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from modnuc.cli import COMMANDS

GOLDEN = Path(__file__).parent / "golden"


def run_cli(*args, env=None, cwd=None):
    full_env = dict(os.environ)
    full_env.pop("MODNUC_OUT_DIR", None)
    full_env.update(env or {})
    return subprocess.run([sys.executable, "-m", "modnuc", *map(str, args)],
                          capture_output=True, text=True, env=full_env, cwd=cwd)


def load(path):
    return json.loads(Path(path).read_text())


def close(a, b):
    return abs(a - b) <= max(1e-9 * abs(b), 1e-12)


@pytest.mark.parametrize("command", COMMANDS)
def test_golden(command, tmp_path):
    golden = load(GOLDEN / f"{command}.json")
    proc = run_cli(command, "--out", tmp_path, *golden["args"])
    assert proc.returncode == 0, proc.stderr
    report = load(tmp_path / "report.json")
    assert report["command"] == command
    assert report["status"] == golden["status"] == "pass"
    measured = {c["name"]: c["measured"] for c in report["checks"]}
    assert set(measured) == set(golden["checks"])
    for name, value in golden["checks"].items():
        assert close(measured[name], value), (name, measured[name], value)
    for c in report["checks"]:
        assert {"measured", "bound", "slack", "relation", "pass"} <= set(c)
    assert f"{command}: PASS" in proc.stdout


@pytest.mark.parametrize("command", COMMANDS)
def test_rerun_is_byte_identical(command, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(command, "--out", a).returncode == 0
    assert run_cli(command, "--out", b).returncode == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_failed_check_exit_code(tmp_path):
    proc = run_cli("continuation-compare", "--panels", 16, "--out", tmp_path)
    assert proc.returncode == 1
    report = load(tmp_path / "report.json")
    assert report["status"] == "fail"
    assert "FAIL" in proc.stdout


@pytest.mark.parametrize(
    "args, field",
    [
        (["kernel-spectrum", "--x0", "1", "--x1", "-0.5"], "x1"),
        (["smatrix-check", "--smatrix", "sinh:b=9"], "smatrix"),
        (["zf-check", "--mass", "-1"], "mass"),
        (["bounds", "--panels", "0"], "panels"),
        (["modular-toy", "--d", "3", "--p", "0.5,0.5"], "p"),
        (["zf-check", "--n-max", "7"], "n_max"),
        (["zf-check", "--n-max", "1"], "n_max"),
        (["modular-toy", "--p", "1,0"], "p"),
    ],
)
def test_usage_errors(args, field, tmp_path):
    proc = run_cli(*args, "--out", tmp_path)
    assert proc.returncode == 2
    assert f"usage error: {field}" in proc.stderr
    assert not (tmp_path / "report.json").exists()


def test_argparse_rejects_bad_type(tmp_path):
    proc = run_cli("bounds", "--type", "psi", "--out", tmp_path)
    assert proc.returncode == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"smatrix": "free-fermi", "pairs": 3, "seed": 5}))
    assert run_cli("zf-check", "--config", cfg, "--pairs", 2, "--out", tmp_path / "o").returncode == 0
    echo = load(tmp_path / "o" / "report.json")["config"]
    assert (echo["smatrix"], echo["pairs"], echo["seed"]) == ("free-fermi", 2, 5)


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"smatrx": "free-fermi"}))
    proc = run_cli("zf-check", "--config", cfg, "--out", tmp_path)
    assert proc.returncode == 2
    assert "usage error: config" in proc.stderr


def test_output_dir_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"out_dir": str(tmp_path / "from_config")}))
    env = {"MODNUC_OUT_DIR": str(tmp_path / "from_env")}
    assert run_cli("modular-toy", "--config", cfg, env=env).returncode == 0
    assert (tmp_path / "from_env" / "report.json").exists()
    assert run_cli("modular-toy", "--config", cfg).returncode == 0
    assert (tmp_path / "from_config" / "report.json").exists()
    assert run_cli("modular-toy", "--config", cfg, "--out", tmp_path / "flag", env=env).returncode == 0
    assert (tmp_path / "flag" / "report.json").exists()


def test_spectrum_csv_artifact(tmp_path):
    assert run_cli("kernel-spectrum", "--out", tmp_path).returncode == 0
    lines = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "k,sigma"
    sig = [float(line.split(",")[1]) for line in lines[1:]]
    assert len(sig) == 256
    assert all(a >= b for a, b in zip(sig, sig[1:]))


def test_grid_csv_artifact(tmp_path):
    assert run_cli("smatrix-check", "--theta-max", 2, "--panels", 1, "--order", 2, "--out", tmp_path).returncode == 0
    assert (tmp_path / "grid.csv").read_text().splitlines() == [
        "node,weight", "-1.1547005383792515,2", "1.1547005383792515,2"]


def test_report_echoes_seed_and_version(tmp_path):
    assert run_cli("zf-check", "--seed", 9, "--pairs", 1, "--out", tmp_path).returncode == 0
    report = load(tmp_path / "report.json")
    assert report["config"]["seed"] == 9
    assert report["tool"]["name"] == "modnuc"
    assert "out_dir" not in report["config"]


def test_version():
    proc = run_cli("--version")
    assert proc.returncode == 0 and "modnuc" in proc.stdout
