import json
import subprocess
import sys

import numpy as np
import pytest

from msrl.cli import main
from msrl.waveform import read_waveform

from conftest import small_config


def run(*args):
    proc = subprocess.run([sys.executable, "-m", "msrl.cli", *args], capture_output=True,
                          text=True, timeout=300)
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    small_config().save(d / "cfg.yaml")
    code, stdout, _ = run("train", "--config", str(d / "cfg.yaml"), "--out", str(d / "run"),
                          "--seed", "2")
    assert code == 0
    assert json.loads(stdout)["seed"] == 2
    return d


def _error(stderr):
    lines = stderr.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


def test_export_rollout_analyze(workdir):
    cfg, out = str(workdir / "cfg.yaml"), str(workdir / "run")
    assert (workdir / "run" / "policy.npz").exists()
    code, stdout, _ = run("export-waveform", "--config", cfg, "--out", out, "--duration", "0.3")
    assert code == 0
    assert json.loads(stdout)["rows"] == 30
    assert read_waveform(workdir / "run" / "waveform.csv", 4.0).shape == (30, 4)
    code, stdout, _ = run("rollout", "--config", cfg, "--out", out)
    assert code == 0
    assert (workdir / "run" / "trajectory.npz").exists()
    code, stdout, _ = run("analyze", "--config", cfg, "--out", out)
    assert code == 0
    assert len(json.loads(stdout)["tables"]) == 5


def test_validate_static_command(tmp_path):
    assert main(["validate-static", "--out", str(tmp_path)]) == 0
    table = np.loadtxt(tmp_path / "static_shape.txt", skiprows=1)
    assert table.shape == (21, 2)


def test_sweep_command(workdir, tmp_path):
    code, stdout, _ = run("sweep", "--config", str(workdir / "cfg.yaml"), "--out", str(tmp_path),
                          "--seed", "10")
    assert code == 0
    assert json.loads(stdout)["seeds"] == [10, 11]
    assert (tmp_path / "seed_10" / "curve.txt").exists()


@pytest.mark.parametrize("args", [
    ("train", "--config", "/nonexistent/cfg.yaml"),
    ("export-waveform", "--out", "/nonexistent/run"),
    ("analyze", "--out", "/nonexistent/run"),
])
def test_failures_exit_nonzero_with_one_json_line(args):
    code, _, stderr = run(*args)
    assert code != 0
    err = _error(stderr)
    assert set(err) == {"error", "message"}
    assert err["message"]


def test_bad_config_key(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("env:\n  bogus: 1\n")
    code, _, stderr = run("validate-static", "--config", str(path), "--out", str(tmp_path))
    assert code != 0
    assert _error(stderr)["error"] == "ConfigurationError"


def test_checkpoint_hash_mismatch(workdir, tmp_path):
    other = small_config(env={"reward_coefficient": 5.0})
    other.save(tmp_path / "other.yaml")
    ckpt = str(workdir / "run" / "policy.npz")
    args = ("export-waveform", "--config", str(tmp_path / "other.yaml"), "--checkpoint", ckpt,
            "--out", str(tmp_path), "--duration", "0.1")
    code, _, stderr = run(*args)
    assert code != 0 and "different config" in _error(stderr)["message"]
    code, _, _ = run(*args, "--ignore-hash")
    assert code == 0


def test_unknown_command_is_usage_error():
    code, _, _ = run("fly")
    assert code == 2
