import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from staticgeo.cli import main, run_experiment
from staticgeo.serialize import read_trajectory_csv


def run_cli(args):
    return main(args)


def test_catalog_listing(capsys):
    assert run_cli(["catalog"]) == 0
    out = capsys.readouterr().out
    assert "minkowski" in out and "ads_strip" in out


def test_connect_minkowski(tmp_path):
    out = tmp_path / "run"
    code = run_cli(["connect", "--spacetime", "minkowski", "--p0", "0,0",
                    "--p1", "2,1", "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "geodesic"
    assert report["J"] == pytest.approx(-1.5, abs=1e-9)
    assert report["character"] == "timelike"
    manifest = json.loads((out / "manifest.json").read_text())
    assert "curve.csv" in manifest["artifacts"]
    assert len(manifest["config_sha256"]) == 64


def test_arrival_slit_plane(tmp_path):
    out = tmp_path / "run"
    code = run_cli(["arrival", "--spacetime", "slit_plane", "--p", "0,0,0",
                    "--target", "2,2", "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["infimum_t"] == pytest.approx(math.sqrt(8.0), abs=1e-3)
    assert report["attained"] is False


def test_connect_ads_bad_pair_exit_4(tmp_path):
    out = tmp_path / "run"
    code = run_cli(["connect", "--spacetime", "ads_strip", "--p0", "0,0",
                    "--p1", f"{math.pi},0.5", "--out", str(out)])
    assert code == 4
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "diverged"


def test_integrate_csv_roundtrip(tmp_path):
    out = tmp_path / "run"
    code = run_cli(["integrate", "--spacetime", "quad_beta", "--state",
                    "0,0.5,1.2,0.3", "--s-max", "5", "--out", str(out)])
    assert code == 0
    cols = read_trajectory_csv(out / "trajectory.csv")
    from staticgeo.catalog import get_spacetime
    from staticgeo.spacetime import GeodesicState, integrate_geodesic
    st = get_spacetime("quad_beta")
    traj = integrate_geodesic(st, GeodesicState(0.0, [0.5], 1.2, [0.3]), 5.0,
                              1e-10)
    # 17 significant digits round-trip doubles exactly
    assert np.array_equal(cols["s"], traj.s)
    assert np.array_equal(cols["x"], traj.x)
    assert np.array_equal(cols["lambda"], traj.lam)
    assert np.array_equal(cols["C"], traj.C)


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "connect", "spacetime": "minkowski",
                               "p0": [0, 0], "p1": [1, 0.25]}))
    out = tmp_path / "run"
    code = run_cli(["connect", "--config", str(cfg), "--p1", "2,1",
                    "--out", str(out)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["p1"] == [2.0, 1.0]


def test_unknown_config_key_exit_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "probe", "bogus": 1}))
    code = run_cli(["probe", "--config", str(cfg), "--spacetime", "minkowski",
                    "--out", str(tmp_path / "o")])
    assert code == 2


def test_missing_required_exit_2(tmp_path):
    code = run_cli(["integrate", "--spacetime", "minkowski",
                    "--out", str(tmp_path / "o")])
    assert code == 2


def test_nonpositive_tolerance_exit_2(tmp_path):
    code = run_cli(["integrate", "--spacetime", "minkowski", "--state",
                    "0,0,1,0", "--tol", "0", "--out", str(tmp_path / "o")])
    assert code == 2


def test_bad_point_dimension_exit_2(tmp_path):
    code = run_cli(["connect", "--spacetime", "minkowski", "--p0", "0,0,0",
                    "--p1", "2,1", "--out", str(tmp_path / "o")])
    assert code == 2


def test_probe_and_growth_reports(tmp_path):
    out1 = tmp_path / "p"
    assert run_cli(["probe", "--spacetime", "flat_disk", "--metric", "g",
                    "--n-samples", "10", "--s-max", "20",
                    "--out", str(out1)]) == 0
    rep = json.loads((out1 / "report.json").read_text())
    assert rep["verdict"] == "witness_found"
    assert (out1 / "witness.csv").exists()

    out2 = tmp_path / "g"
    assert run_cli(["growth", "--spacetime", "quad_beta",
                    "--out", str(out2)]) == 0
    rep = json.loads((out2 / "report.json").read_text())
    assert rep["classification"] == "quadratic"
    assert (out2 / "growth.csv").exists()


def test_reduce_then_lift_roundtrip(tmp_path):
    out1 = tmp_path / "r"
    assert run_cli(["reduce", "--spacetime", "quad_beta", "--state",
                    "0,0,1.5,0.4", "--s-max", "6", "--out", str(out1)]) == 0
    rep = json.loads((out1 / "report.json").read_text())
    assert rep["lambda_rescaled"] == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert rep["ode_residual"] < 1e-6

    out2 = tmp_path / "l"
    assert run_cli(["lift", "--spacetime", "quad_beta", "--classical",
                    str(out1 / "classical.csv"), "--out", str(out2)]) == 0
    rep2 = json.loads((out2 / "report.json").read_text())
    assert rep2["residual"] < 1e-6
    assert rep2["lambda0"] == pytest.approx(math.sqrt(2.0), abs=1e-9)


def test_shoot_reached_and_exit_codes(tmp_path):
    out = tmp_path / "s"
    code = run_cli(["shoot", "--spacetime", "minkowski", "--p0", "0,0",
                    "--p1", "2,1", "--angle-res", "5e-3", "--out", str(out)])
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["reached"] is True

    out2 = tmp_path / "s2"
    code = run_cli(["shoot", "--spacetime", "ads_strip", "--p0", "0,0",
                    "--p1", f"{math.pi},0.5", "--angle-res", "5e-3",
                    "--out", str(out2)])
    assert code == 4


def test_determinism_byte_identical(tmp_path):
    """Same command + seed twice: reports and artifacts byte-identical."""
    specs = [
        ["probe", "--spacetime", "inv_beta_superquad", "--metric", "g",
         "--n-samples", "8", "--s-max", "50", "--seed", "11"],
        ["connect", "--spacetime", "quad_beta", "--p0", "0,-1",
         "--p1", "1.5,1", "--seed", "4"],
        ["growth", "--spacetime", "superquad_beta"],
    ]
    for k, spec in enumerate(specs):
        d1 = tmp_path / f"a{k}"
        d2 = tmp_path / f"b{k}"
        assert run_cli(spec + ["--out", str(d1)]) == run_cli(spec + ["--out", str(d2)])
        files = sorted(os.listdir(d1))
        assert files == sorted(os.listdir(d2))
        for name in files:
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "staticgeo.cli", "catalog"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "schwarzschild_exterior" in proc.stdout
