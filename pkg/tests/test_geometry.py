import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emshape import geometry as geo

vec3 = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3)


def _fd_jac(xi, pts, h=1e-5):
    return np.stack([(xi.eval(pts + h * e) - xi.eval(pts - h * e)) / (2 * h) for e in np.eye(3)], axis=2)


@pytest.mark.parametrize("kind", geo.PRESET_KINDS)
def test_preset_jacobian_matches_fd(kind, rng):
    xi = geo.make_deformation(kind)
    pts = rng.standard_normal((15, 3))
    assert np.abs(xi.jac(pts) - _fd_jac(xi, pts)).max() < 1e-8


def test_unknown_preset_rejected():
    with pytest.raises(ValueError):
        geo.make_deformation("twist")


def test_dilation_jacobian_closed_form(grid6):
    g = geo.deformed_geometry(grid6, geo.make_deformation("dilation"), 0.1)
    assert np.allclose(g.J, 1.21)
    assert np.allclose(g.N, grid6.nodes)


def test_inadmissible_scale_rejected(grid6):
    with pytest.raises(geo.InadmissibleDeformation):
        geo.deformed_geometry(grid6, geo.make_deformation("dilation"), -0.95)


@given(vec3)
def test_constant_field_derivatives_vanish(c):
    from emshape.sphere import default_grid

    s = default_grid(5)
    xi = geo.make_deformation("constant", c=c)
    bump = geo.make_deformation("gaussian_bump")
    assert np.abs(geo.d_jacobian(s, xi).values).max() < 1e-12
    assert np.abs(geo.d_normal(s, xi)).max() < 1e-12
    assert np.abs(geo.d2_jacobian(s, xi, bump).values).max() < 1e-12
    assert np.abs(geo.d2_normal(s, bump, xi)).max() < 1e-12


@given(vec3)
def test_rotation_preserves_area(omega):
    from emshape.sphere import default_grid

    s = default_grid(5)
    xi = geo.make_deformation("rotation", omega=omega)
    assert np.abs(geo.d_jacobian(s, xi).values).max() < 1e-12


@given(st.floats(0.1, 3.0))
def test_dilation_derivatives(scale):
    from emshape.sphere import default_grid

    s = default_grid(5)
    xi = geo.make_deformation("dilation", scale=scale)
    assert np.allclose(geo.d_jacobian(s, xi).values, 2 * scale)
    assert np.allclose(geo.d2_jacobian(s, xi, xi).values, 2 * scale**2)


def test_d_normal_is_tangent_and_d2_symmetric(grid8):
    b = geo.make_deformation("gaussian_bump")
    h = geo.make_deformation("harmonic_normal", degree=3, order=2)
    assert np.abs(np.sum(geo.d_normal(grid8, b) * grid8.nodes, axis=1)).max() < 1e-12
    assert np.array_equal(geo.d2_jacobian(grid8, b, h).values, geo.d2_jacobian(grid8, h, b).values)


@pytest.mark.parametrize("kind", ["gaussian_bump", "harmonic_normal", "rotation"])
def test_first_derivatives_against_fd(kind, grid8):
    xi = geo.make_deformation(kind)
    for f, an in ((lambda t: geo.transport_points(grid8.nodes, xi, t).J, geo.d_jacobian(grid8, xi).values),
                  (lambda t: geo.transport_points(grid8.nodes, xi, t).N, geo.d_normal(grid8, xi))):
        res = geo.fd_convergence(f, an, floor=1e-9)
        assert res.order_within(1.8, 2.2)
        assert res.rel_errors[-1] < 1e-4


def test_second_derivative_by_polarization(grid8):
    x1, x2 = geo.make_deformation("gaussian_bump"), geo.make_deformation("rotation")
    both = geo.sum_fields(x1, x2)

    def g(t):
        return sum(sgn * geo.transport_points(grid8.nodes, r, t).J for sgn, r in ((1, both), (-1, x1), (-1, x2)))

    res = geo.fd_convergence(g, 2 * geo.d2_jacobian(grid8, x1, x2).values, order=2)
    assert res.order_within(1.8, 2.2)


def test_gateaux_fd_examples():
    assert geo.gateaux_fd(lambda t: t**3, 1e-2) == pytest.approx(1e-4)
    assert geo.gateaux_fd(lambda t: (1 + t) ** 2, 1e-2, order=2) == pytest.approx(2.0, abs=1e-10)
    res = geo.fd_convergence(lambda t: np.array([t**3]), np.array([0.0]), (1e-2, 5e-3))
    assert res.orders[0] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        geo.gateaux_fd(lambda t: t, 0.0)
