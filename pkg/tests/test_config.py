import numpy as np
import pytest

from emshape.config import TOLERANCES, ConfigError, RunConfig, load_config, parse_config


def test_defaults():
    rc = RunConfig()
    assert rc.tol("characterization_rel") == TOLERANCES["characterization_rel"]
    cfg = rc.scattering_config()
    assert cfg.kappa_e == pytest.approx(1.0) and cfg.kappa_i == pytest.approx(1.5)
    assert rc.probes("exterior").shape == (2, 3)
    assert rc.deformation_field().kind == "gaussian_bump"


def test_full_file(tmp_path):
    text = """
[run]
seed = 7
band_limit = 6   # coarse

[materials]
omega = 2.0
eps_i = 4.0

[incident]
inc_dir = 1, 0, 0
inc_pol = 0, 0, 1

[deformation]
kind = gaussian_bump
center = [0, 0, 1]
width = 0.5
amp = [0, 0, 1]

[fd]
steps = 1e-2, 5e-3

[probes]
n_dirs = 4

[tolerances]
solution_fd_rel = 2e-3
"""
    p = tmp_path / "run.ini"
    p.write_text(text)
    rc = load_config(p)
    assert rc.seed == 7 and rc.band_limit == 6 and rc.n_dirs == 4
    assert rc.scattering_config().kappa_i == pytest.approx(4.0)
    assert rc.incident().kappa == pytest.approx(2.0)
    assert rc.deformation_field().params["width"] == 0.5
    assert rc.tol("solution_fd_rel") == 2e-3


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match=r":3: unknown key 'sed'"):
        parse_config("[run]\nseed = 1\nsed = 2\n", "x.ini")


def test_unknown_section_reports_line():
    with pytest.raises(ConfigError, match=r":2: unknown section \[solver\]"):
        parse_config("\n[solver]\nx = 1\n", "x.ini")


def test_tolerance_typo_is_an_error():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("[tolerances]\nsolution_fd_rell = 1\n")


@pytest.mark.parametrize("text", [
    "[run]\nseed = one\n",
    "[materials]\nkappa_i = 3.0\n",
    "[incident]\ninc_pol = 0, 0, 1\n",
    "[deformation]\nkind = twist\n",
    "[fd]\nsteps = 1e-2\n",
    "[run\nseed=1\n",
])
def test_invalid_values_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


def test_probes_need_triples():
    rc = parse_config("[probes]\nexterior = 0, 0, 2, 1\n")
    with pytest.raises(ConfigError):
        rc.probes("exterior")
    assert np.allclose(parse_config("[probes]\ninterior = 0, 0, 0.2\n").probes("interior"), [[0, 0, 0.2]])
