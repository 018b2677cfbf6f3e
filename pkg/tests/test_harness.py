import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from emshape import checks
from emshape.config import RunConfig, parse_config
from emshape.harness import derive_cmd, direction_grid, main, run_suite, solve_cmd, write_reports


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_unknown_suite_is_usage_error(capsys):
    assert main(["verify", "nonsense"]) == 2
    assert "unknown suite" in capsys.readouterr().err


def test_missing_subcommand_is_usage_error():
    assert main([]) == 2


def test_bad_config_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[run]\nseed = 1\nbogus = 2\n")
    assert main(["verify", "geometry", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert ":3:" in capsys.readouterr().err


def test_geometry_suite_passes_and_is_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        assert main(["verify", "geometry", "--out", str(tmp_path / name)]) == 0
        outs.append(((tmp_path / name / "reports.csv").read_bytes(), (tmp_path / name / "summary.json").read_bytes()))
    assert outs[0] == outs[1]
    rows = _rows(tmp_path / "a" / "reports.csv")
    ids = [r["check_id"] for r in rows]
    assert ids == sorted(ids)
    assert set(rows[0]) == {"check_id", "params", "analytic", "oracle", "abs_err", "rel_err", "observed_order", "tol",
                            "pass"}
    assert (tmp_path / "a" / "timings.csv").exists()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["status"] == "PASS" and summary["checks"] == len(rows)


def test_failed_check_gives_exit_one(tmp_path):
    cfg = tmp_path / "strict.ini"
    cfg.write_text("[tolerances]\ngeometry_exact = 0\n")
    assert main(["verify", "geometry", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_report_pass_flag_follows_tolerance():
    env = checks.SuiteEnv(RunConfig(), "geometry")
    assert env.compare("x", 1.0 + 1e-7, 1.0, 1e-6).passed
    assert not env.compare("y", 1.0 + 1e-5, 1.0, 1e-6).passed
    assert env.compare("z", 1e-12, 0.0, 1e-11, mode="abs").passed


def test_run_suite_rejects_unknown():
    with pytest.raises(ValueError):
        run_suite("optics")


def test_direction_grid_is_unit():
    d = direction_grid(10)
    assert d.shape == (10, 3)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)


def test_solve_command_outputs(tmp_path):
    rc = parse_config("[run]\nband_limit = 6\n[probes]\nn_dirs = 5\n")
    out = tmp_path / "nested" / "solve"
    res = solve_cmd(rc, out)
    rows = _rows(out / "farfield.csv")
    assert len(rows) == 2 * 5
    assert {"density_p.csv", "density_q.csv", "density_field.csv", "probes.csv", "residuals.json"} <= {
        p.name for p in out.iterdir()}
    assert res["transmission_E"] < 1e-2


def test_solve_identical_media_is_null(tmp_path):
    rc = parse_config("[run]\nband_limit = 6\n[materials]\neps_i = 1.0\n")
    assert solve_cmd(rc, tmp_path)["farfield_max"] < 1e-5


def test_derive_constant_matches_phase_law(tmp_path):
    rc = parse_config("[run]\nband_limit = 6\n[probes]\nn_dirs = 4\n[deformation]\nkind = constant\nc = 0.1, 0, 0.2\n")
    derive_cmd(rc, None, tmp_path)
    rows = _rows(tmp_path / "derivative.csv")
    an = np.array([complex(float(r["analytic_re"]), float(r["analytic_im"])) for r in rows])
    law = np.array([complex(float(r["phase_law_re"]), float(r["phase_law_im"])) for r in rows])
    assert np.abs(an - law).max() < 1e-9


def test_derive_bump_table(tmp_path):
    rc = parse_config("[run]\nband_limit = 6\n[probes]\nn_dirs = 4\n")
    summary = derive_cmd(rc, "gaussian_bump", tmp_path)
    rows = _rows(tmp_path / "derivative.csv")
    assert len(rows) == 3 * 4
    assert max(float(r["rel_err"]) for r in rows) < 1e-3
    orders = [float(r["observed_order"]) for r in rows]
    assert all(1.7 <= o <= 2.3 for o in orders)
    assert 1.7 <= summary["observed_order"] <= 2.3
    char = _rows(tmp_path / "characterization.csv")
    assert set(char[0]) == {"point", "lhs_D", "g_D", "diff_D", "lhs_N", "g_N", "diff_N"}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "emshape", "verify", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2
