import numpy as np
import pytest

from emshape import emfield as ef
from emshape import geometry as geo
from emshape import scattering as sc
from emshape.sphere import default_grid

S6 = default_grid(6)


@pytest.fixture(scope="module")
def desk():
    cfg, inc, s = sc.default_problem(8)
    return cfg, inc, s, sc.solve(cfg, inc, s)


def test_incident_field_validation():
    with pytest.raises(ValueError):
        sc.IncidentField(direction=(0, 0, 2.0))
    with pytest.raises(ValueError):
        sc.IncidentField(polarization=(0, 0, 1.0))
    with pytest.raises(ValueError):
        sc.IncidentField(kappa=-1.0)


def test_incident_field_is_a_maxwell_solution():
    inc = sc.IncidentField(kappa=1.3)
    x = np.array([[0.3, -0.2, 0.5], [1.0, 2.0, 3.0]])
    assert sc.curl_consistency(inc.eval, inc.curl, x) < 1e-8
    assert sc.maxwell_residual(inc.eval, inc.curl, x, 1.3) < 1e-8


def test_identical_media_produce_no_scattering():
    cfg, inc, s = sc.default_problem(6, identical=True)
    sol = sc.solve(cfg, inc, s)
    d = np.array([[0, 0, 1.0], [1.0, 0, 0], [0, 0.6, -0.8]])
    assert np.abs(sol.farfield(d)).max() < 1e-5


def test_wavenumber_mismatch_rejected():
    cfg = ef.ScatteringConfig()
    with pytest.raises(ValueError):
        sc.solve(cfg, sc.IncidentField(kappa=2.0), S6)


def test_conditioning_guard():
    cfg, inc, s = sc.default_problem(6)
    with pytest.raises(sc.ConditioningError):
        sc.solve(cfg, inc, s, cond_limit=1.0)


def test_transmission_and_radiation(desk):
    cfg, inc, s, sol = desk
    tr = sc.transmission_residual(sol)
    assert tr.electric < 1e-3 and tr.magnetic < 1e-3
    sm = sc.silver_mueller(sol, (20.0, 40.0))
    assert sm[1] < 0.5 * sm[0]
    x = np.array([[0.0, 0.0, 2.0]])
    assert sc.maxwell_residual(sol.E_s, sol.curl_E_s, x, cfg.kappa_e) < 1e-4


def test_rotation_about_incidence_axis(desk):
    cfg, inc, s, sol = desk
    assert sc.rotation_equivariance(cfg, s) < 1e-8


def test_derivative_matches_full_pipeline_fd():
    cfg, inc, s = sc.default_problem(6)
    xi = geo.make_deformation("gaussian_bump")
    dsol = sc.d_solution(cfg, inc, s, xi)
    d = np.array([[0, 0, 1.0], [0.6, 0.8, 0.0]])
    res = geo.fd_convergence(lambda t: sc.solve(cfg, inc, s, xi, t).farfield(d), dsol.farfield(d), (1e-2, 5e-3))
    assert res.rel_errors[-1] < 1e-3
    assert res.min_order > 1.7


def test_rigid_translation_phase_law():
    cfg, inc, s = sc.default_problem(6)
    c = (0.1, 0.3, -0.2)
    sol = sc.solve(cfg, inc, s)
    dsol = sc.d_solution(cfg, inc, s, geo.make_deformation("constant", c=c))
    d = np.array([[0, 0, 1.0], [0.6, 0.8, 0.0], [0, -1.0, 0]])
    assert np.abs(dsol.farfield(d) - sc.translation_law(sol, c, d)).max() < 1e-9


def test_tangential_deformation_has_null_characterization(desk):
    cfg, inc, s, sol = desk
    xi = sc.tangential_field()
    rep = sc.characterization_check(sol, sc.d_solution(cfg, inc, s, xi), xi, count=4)
    assert rep.abs_D < 1e-6 and rep.abs_N < 1e-6


def test_magnetic_field_scaling():
    curl = np.array([[1j, 0, 0]])
    assert np.allclose(sc.magnetic_field(curl, 2.0, 0.5), [[1.0, 0, 0]])
