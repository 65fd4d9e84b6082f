"""End-to-end CLI behavior: exit codes, CSV format, determinism."""

import json
import subprocess
import sys

import pytest

from dissipative_ising.cli import main

RUN = [sys.executable, "-m", "dissipative_ising.cli"]


def body(path):
    """CSV rows with the '#' metadata header stripped."""
    return [l for l in path.read_text().splitlines() if not l.startswith("#")]


def test_usage_errors_exit_2():
    proc = subprocess.run(RUN + ["frobnicate"], capture_output=True)
    assert proc.returncode == 2
    proc = subprocess.run(RUN + ["spectrum", "--N", "not-a-number"], capture_output=True)
    assert proc.returncode == 2


def test_spectrum_csv_and_manifest(tmp_path):
    out = tmp_path / "run"
    assert main(["spectrum", "--N", "2", "--g", "0.4", "--out", str(out)]) == 0
    csv_path = out / "spectrum.csv"
    rows = body(csv_path)
    assert rows[0] == "index,re_lambda,im_lambda,abs_trace,steady"
    assert len(rows) == 1 + 16
    header = csv_path.read_text()
    assert "# g = 0.4" in header and "# N = 2" in header
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "spectrum"
    assert manifest["exit_code"] == 0
    assert manifest["wall_time_s"] > 0


def test_deterministic_csv_bodies(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["unravel", "--N", "2", "--g", "1", "--n-traj", "50",
                     "--t-final", "0.5", "--dt", "0.01", "--seed", "7",
                     "--out", str(out)]) == 0
    assert body(a / "unravel.csv") == body(b / "unravel.csv")


def test_config_file_defaults_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("N = 2\ng = 0.4  # inline comment\n\n")
    out = tmp_path / "out"
    assert main(["spectrum", "--config", str(cfg), "--g", "0.9", "--out", str(out)]) == 0
    text = (out / "spectrum.csv").read_text()
    assert "# N = 2" in text  # from the file
    assert "# g = 0.9" in text  # flag wins


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no_such_option = 1\n")
    proc = subprocess.run(
        RUN + ["spectrum", "--config", str(cfg)], capture_output=True, text=True
    )
    assert proc.returncode == 2
    assert "no_such_option" in proc.stderr


def test_mcm_checkpoint(tmp_path):
    out = tmp_path / "mcm"
    ckpt = tmp_path / "mode.bin"
    code = main(["mcm", "--N", "4", "--g", "0.3", "--out", str(out),
                 "--checkpoint", str(ckpt), "--tol", "1e-6"])
    assert code == 0
    assert ckpt.stat().st_size > 0
    rows = body(out / "mcm_convergence.csv")
    assert rows[0] == "step,re_lambda,im_lambda,residual"


def test_meanfield_grid(tmp_path):
    out = tmp_path / "mf"
    assert main(["meanfield", "--beta", "inf", "--gamma-range", "0", "1", "2",
                 "--g-range", "0", "1", "3", "--out", str(out)]) == 0
    rows = body(out / "meanfield.csv")
    assert rows[0] == "gamma,g,re_m,im_m,converged,iterations"
    assert len(rows) == 1 + 6


def test_thermal_grid(tmp_path):
    out = tmp_path / "th"
    assert main(["thermal", "--N", "2", "--beta", "0.8", "--gamma-range", "0", "1", "2",
                 "--g-range", "0", "1", "2", "--out", str(out)]) == 0
    assert len(body(out / "thermal.csv")) == 1 + 4


def test_dynamics_outputs(tmp_path):
    out = tmp_path / "dyn"
    assert main(["dynamics", "--N", "2", "--g", "0.5", "--t-max-jn", "4",
                 "--n-times", "21", "--out", str(out)]) == 0
    rows = body(out / "fidelity.csv")
    assert rows[0] == "t,tJN,F"
    assert float(rows[1].split(",")[2]) == pytest.approx(1.0, abs=1e-9)
    assert (out / "fidelity_spectrum.csv").exists()


def test_verify_exits_zero(tmp_path):
    assert main(["verify", "--out", str(tmp_path / "v")]) == 0
