"""Command-line interface: outputs, sidecars, reproducibility, errors."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from ionnoise.cli import main
from ionnoise.modes import chain_modes, two_ion_basis
from ionnoise.noise import IonConfiguration, mode_noise, noise_matrix
from ionnoise.geometry import build_grid, preset_geometry
from ionnoise.kernels import CorrelationKernel, DipoleOrientation


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    return header, data


def _small_sweep_config(tmp_path, **overrides):
    cfg = {
        "geometry": {"preset": "plane_surrogate", "scale": 1.0},
        "motion_axis": "x",
        "orientation": [0.0, 1.0, 0.0],
        "kernel": {"kind": "uncorrelated"},
        "grid": {"resolution": 3.0},
        "sweep": {"variable": "ion_separation", "range": [0.3, 3.0],
                  "points": 5, "height": 1.0},
        "output": {"basename": "case"},
    }
    cfg.update(overrides)
    path = tmp_path / "case.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


def test_presets_subcommand_lists_shipped_configs(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("fig1", "fig3", "fig5", "fig6", "fig7", "fig8", "oracle"):
        assert name in out


def test_sweep_preset_writes_csv_per_axis(tmp_path):
    assert main(["sweep", "--config", "fig1", "--out", str(tmp_path)]) == 0
    for axis in ("x", "y", "z"):
        header, data = _read_csv(tmp_path / f"fig1_{axis}.csv")
        assert header == ["ion_separation", "S_self", "S_cross", "ratio"]
        assert data.shape == (25, 4)
        assert np.all(np.diff(data[:, 0]) > 0)
        assert np.all(np.abs(data[:, 3]) <= 1.0 + 1e-9)
        sidecar = json.loads((tmp_path / f"fig1_{axis}.json").read_text())
        assert sidecar["csv"] == f"fig1_{axis}.csv"
        assert sidecar["mode"] == "sweep"
        assert sidecar["config"]["motion_axis"] == [axis]


def test_sweep_custom_config(tmp_path):
    cfg = _small_sweep_config(tmp_path)
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    header, data = _read_csv(out / "case.csv")
    assert data.shape == (5, 4)


def test_sidecar_config_reproduces_csv_bitwise(tmp_path):
    cfg = _small_sweep_config(tmp_path)
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert main(["sweep", "--config", str(cfg), "--out", str(out1)]) == 0
    sidecar = json.loads((out1 / "case.json").read_text())
    replay = tmp_path / "replay.yaml"
    replay.write_text(yaml.safe_dump(sidecar["config"]))
    assert main(["sweep", "--config", str(replay), "--out", str(out2)]) == 0
    assert (out1 / "case.csv").read_bytes() == (out2 / "case.csv").read_bytes()


def test_resolution_override_recorded(tmp_path):
    cfg = _small_sweep_config(tmp_path)
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out),
                 "--resolution", "4.5"]) == 0
    sidecar = json.loads((out / "case.json").read_text())
    assert sidecar["config"]["grid"]["resolution"] == 4.5


def test_malformed_config_exits_2_without_partial_files(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({
        "geometry": {"preset": "plane_surrogate", "scale": 1.0},
        "motion_axis": "x",
        "orientation": [0.0, 1.0, 0.0],
        "kernel": {"kind": "uncorrelated"},
        "sweep": {"variable": "ion_height", "range": [0.3, 3.0],
                  "points": 5, "height": 1.0},
    }))
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(bad), "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert "error[config]:" in err
    assert not out.exists() or not list(out.iterdir())


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = _small_sweep_config(tmp_path, extra_section={"x": 1})
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "error[config]:" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path, capsys):
    missing = tmp_path / "nope.yaml"
    assert main(["sweep", "--config", str(missing),
                 "--out", str(tmp_path)]) == 2
    assert "error[config]:" in capsys.readouterr().err


def test_scaling_csv_has_slope_columns(tmp_path):
    cfg = tmp_path / "scal.yaml"
    cfg.write_text(yaml.safe_dump({
        "geometry": {"preset": "plane_surrogate", "scale": 1.0},
        "motion_axis": "x",
        "orientation": [0.0, 1.0, 0.0],
        "kernel": {"kind": "uncorrelated"},
        "scaling": {"range": [0.5, 50.0], "points": 11,
                    "nodes_per_height": 4.0, "window": 5},
        "output": {"basename": "scal"},
    }))
    out = tmp_path / "out"
    assert main(["scaling", "--config", str(cfg), "--out", str(out)]) == 0
    header, data = _read_csv(out / "scal.csv")
    assert header == ["ion_height", "S", "slope"]
    assert np.allclose(data[:, 2], -4.0, atol=1e-3)
    sidecar = json.loads((out / "scal.json").read_text())
    fit = sidecar["window_fit"]
    assert fit["window"] == 5
    assert fit["break_point"] is None
    assert len(fit["slopes"]) == len(fit["centers"])


def test_chain_two_ions_matches_two_ion_modes(tmp_path):
    spacing = 1.1
    cfg = tmp_path / "chain.yaml"
    cfg.write_text(yaml.safe_dump({
        "geometry": {"preset": "plane_surrogate", "scale": 1.0},
        "motion_axis": "x",
        "orientation": [0.0, 1.0, 0.0],
        "kernel": {"kind": "uncorrelated"},
        "grid": {"resolution": 3.0},
        "chain": {"n_ions": 2, "range": [spacing, spacing + 0.5],
                  "points": 2, "height": 1.0, "omega0": 1.0},
        "output": {"basename": "chain"},
    }))
    out = tmp_path / "out"
    assert main(["chain", "--config", str(cfg), "--out", str(out)]) == 0
    header, data = _read_csv(out / "chain.csv")
    assert header == ["ion_spacing", "S_mode0_even", "S_mode1_odd"]

    geo = preset_geometry("plane_surrogate", 1.0)
    basis = chain_modes(2, spacing=1.0, omega0=1.0)
    from ionnoise.geometry import RefineSpec

    ions = IonConfiguration.chain(2, spacing=spacing, height=1.0)
    centers = [(float(p[0]), float(p[2])) for p in ions.positions]
    grid = build_grid(geo, 3.0,
                      refine=RefineSpec(tuple(centers), radius=4.0, factor=2))
    nm = noise_matrix(ions, grid, DipoleOrientation.along("y"),
                      CorrelationKernel("uncorrelated"))
    expected = mode_noise(nm, basis)
    assert np.allclose(data[0, 1:], expected, rtol=1e-9)
    # COM and stretch of the two-ion chain are the standard +- combinations
    ref = mode_noise(nm, two_ion_basis())
    assert np.allclose(expected, ref, rtol=1e-9)


def test_oracle_check_passes_and_is_reproducible(tmp_path):
    cfg = tmp_path / "oracle.yaml"
    cfg.write_text(yaml.safe_dump({
        "geometry": {"preset": "plane_surrogate", "scale": 1.0},
        "motion_axis": "x",
        "orientation": [0.0, 1.0, 0.0],
        "kernel": {"kind": "uncorrelated"},
        "grid": {"resolution": 1.5},
        "oracle": {"samples": 4000, "seed": 11, "separation": 1.0,
                   "height": 1.0},
        "output": {"basename": "ver"},
    }))
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    assert main(["oracle-check", "--config", str(cfg),
                 "--out", str(out1)]) == 0
    assert main(["oracle-check", "--config", str(cfg),
                 "--out", str(out2)]) == 0
    v1 = (out1 / "ver.json").read_bytes()
    v2 = (out2 / "ver.json").read_bytes()
    assert v1 == v2
    verdict = json.loads(v1)
    assert verdict["pass"] is True
    assert all(e["pass"] for e in verdict["entries"])


def test_oracle_check_detects_injected_sign_fault(tmp_path, capsys):
    cfg = tmp_path / "oracle.yaml"
    cfg.write_text(yaml.safe_dump({
        "geometry": {"preset": "plane_surrogate", "scale": 1.0},
        "motion_axis": "x",
        "orientation": [0.0, 1.0, 0.0],
        "kernel": {"kind": "uncorrelated"},
        "grid": {"resolution": 1.5},
        # separation well inside the common-bath side, where the cross
        # entry is large and a sign flip is many standard errors out
        "oracle": {"samples": 4000, "seed": 11, "separation": 0.4,
                   "height": 1.0, "corrupt_sign": True},
        "output": {"basename": "ver"},
    }))
    out = tmp_path / "out"
    assert main(["oracle-check", "--config", str(cfg),
                 "--out", str(out)]) == 1
    verdict = json.loads((out / "ver.json").read_text())
    assert verdict["pass"] is False
    bad = [e for e in verdict["entries"] if not e["pass"]]
    assert bad and all(abs(e["z"]) > 3 for e in bad)


def test_console_entry_point_runs():
    out = subprocess.run([sys.executable, "-m", "ionnoise.cli", "presets"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "fig1" in out.stdout


def test_unknown_subcommand_fails():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
