import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from wavewigner.cli import run_cli
from wavewigner.config import load_config, parse_config
from wavewigner.phase_space import PhaseSpaceGrid, coherent_wavefunction, weyl_transform
from wavewigner.serialization import read_diagnostics, read_snapshot, write_wavefunction

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = """[physics]
potential = 0 0 0.5
gamma = 0.05
diffusion = 0.05

[initial]
kind = mixture
members = 0.5 coherent(1.0, 0.0); 0.5 eigenstate(1)

[grid]
nq = 64
np = 64

[evolution]
t_final = 0.2
dt = 0.01
snapshot_stride = 10
diagnostics_stride = 5

[output]
formats = diagnostics, snapshots
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_unknown_subcommand(capsys):
    assert run_cli(["frobnicate"]) == 1
    assert "usage:" in capsys.readouterr().err


def test_missing_subcommand_and_help(capsys):
    assert run_cli([]) == 1
    assert run_cli(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "wavewigner", "bogus"], capture_output=True, text=True)
    assert out.returncode == 1 and "usage:" in out.stderr


def test_simulate_small_run(tmp_path, capsys):
    out = tmp_path / "out"
    assert run_cli(["simulate", "--config", write(tmp_path, SMALL), "--output", str(out)]) == 0
    diag = read_diagnostics(out / "diagnostics.csv")
    np.testing.assert_allclose(diag["t"], [0.0, 0.05, 0.1, 0.15, 0.2], atol=1e-12)
    assert np.max(np.abs(diag["norm"] - 1)) < 1e-6
    assert np.all(np.diff(diag["purity"]) < 0)
    snaps = sorted(p.name for p in out.glob("snapshot_*.txt"))
    assert snaps == ["snapshot_000000.txt", "snapshot_000010.txt", "snapshot_000020.txt"]
    final = read_snapshot(out / "snapshot_000020.txt")
    assert final.time == pytest.approx(0.2)
    assert load_config(out / "config.cfg") == parse_config(SMALL)
    assert "norm=" in capsys.readouterr().out


def test_simulate_is_deterministic(tmp_path):
    cfg = write(tmp_path, SMALL)
    for name in ("a", "b"):
        assert run_cli(["simulate", "--config", cfg, "--output", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "diagnostics.csv").read_bytes() == (tmp_path / "b" / "diagnostics.csv").read_bytes()


def test_simulate_shipped_harmonic(tmp_path):
    out = tmp_path / "harmonic"
    assert run_cli(["simulate", "--config", str(CONFIGS / "harmonic.cfg"), "--output", str(out)]) == 0
    diag = read_diagnostics(out / "diagnostics.csv")
    assert diag["t"][-1] == pytest.approx(2 * np.pi)
    assert np.max(np.abs(diag["norm"] - 1)) < 1e-6


def test_config_error_exit_code(tmp_path, capsys):
    bad = SMALL.replace("nq = 64", "nq = 300").replace("0.5 eigenstate(1)", "0.6 eigenstate(1)")
    assert run_cli(["simulate", "--config", write(tmp_path, bad)]) == 1
    err = capsys.readouterr().err
    assert "line 11: [grid] nq = 300 is not a power of two" in err
    assert err.index("line 8") < err.index("line 11") and "line 8" in err and "Σ_i w_i = 1" in err


def test_missing_config_file(tmp_path):
    assert run_cli(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_coverage_error_exit_code(tmp_path, capsys):
    bad = SMALL.replace("members = 0.5 coherent(1.0, 0.0); 0.5 eigenstate(1)",
                        "members = 1.0 coherent(7.0, 0.0)")
    assert run_cli(["simulate", "--config", write(tmp_path, bad), "--output", str(tmp_path / "o")]) == 2
    assert "boundary mass" in capsys.readouterr().err


def test_stability_error_exit_code(tmp_path):
    bad = SMALL.replace("dt = 0.01", "dt = 0.5").replace("t_final = 0.2", "t_final = 20")
    assert run_cli(["simulate", "--config", write(tmp_path, bad), "--output", str(tmp_path / "o")]) == 2


def test_transform(tmp_path):
    grid = PhaseSpaceGrid(-8, 8, -6, 6, 64, 32)
    psi = coherent_wavefunction(grid, 0.5, 0.5)
    write_wavefunction(psi, tmp_path / "psi.txt")
    args = ["transform", "--input", str(tmp_path / "psi.txt"), "--output", str(tmp_path / "w.txt"),
            "--p-min", "-6", "--p-max", "6", "--np", "32"]
    assert run_cli(args) == 0
    state = read_snapshot(tmp_path / "w.txt")
    np.testing.assert_array_equal(state.values, weyl_transform(psi, grid).values)
    assert run_cli(args[:-1] + ["30"]) == 1
    narrow = args[:5] + ["--p-min", "-1", "--p-max", "1", "--np", "32"]
    assert run_cli(narrow) == 2
    assert run_cli(narrow + ["--no-check"]) == 0


def test_oracle_harmonic(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    out = tmp_path / "oracle"
    assert run_cli(["oracle", "--config", cfg, "--output", str(out), "--moment-points", "11"]) == 0
    dense = read_diagnostics(out / "oracle_diagnostics.csv")
    assert dense["t"][-1] == pytest.approx(0.2)
    rows = (out / "moments.csv").read_text().splitlines()
    assert rows[0] == "t,q,p,qq,qp,pp" and len(rows) == 12
    t, q = map(float, rows[-1].split(",")[:2])
    assert t == pytest.approx(0.2)
    # half coherent at q=1, half eigenstate at q=0, damped rotation
    assert q == pytest.approx(0.5 * np.cos(0.2), rel=0.02)


def test_oracle_quartic_skips_moments(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.replace("potential = 0 0 0.5", "potential = 0 0 0.5 0 0.01"))
    assert run_cli(["oracle", "--config", cfg, "--output", str(tmp_path / "o"), "--moments-only"]) == 0
    assert "moment ODE skipped" in capsys.readouterr().out
    assert not (tmp_path / "o" / "moments.csv").exists()


def test_sweep_levels(capsys):
    assert run_cli(["sweep-levels", "--config", str(CONFIGS / "harmonic_sweep.cfg"), "--epsilon", "1e-4"]) == 0
    out = capsys.readouterr().out
    diffs = [float(m) for m in re.findall(r"^\s*\d+\s+(\S+)$", out, re.M)]
    assert len(diffs) >= 2 and all(a > b for a, b in zip(diffs, diffs[1:]))
    n = int(re.search(r"chosen N = (\d+)", out).group(1))
    assert 5 <= n <= 8


def test_sweep_levels_unreachable(tmp_path, capsys):
    text = (CONFIGS / "harmonic_sweep.cfg").read_text().replace("max_levels = 8", "max_levels = 6")
    assert run_cli(["sweep-levels", "--config", write(tmp_path, text), "--epsilon", "0"]) == 2
    captured = capsys.readouterr()
    assert "no level" in captured.err and "||W^(N+1) - W^N||" in captured.out
