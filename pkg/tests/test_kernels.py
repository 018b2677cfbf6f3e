import numpy as np
import pytest
from scipy import special

from emshape import geometry as geo
from emshape import kernels as kn
from emshape.fields import random_scalar
from emshape.quadrature import singular_rule
from emshape.sphere import default_grid, harmonic_index

S = default_grid(8)


def test_singular_rule_reproduces_constant_potential():
    assert singular_rule(S).self_test() < 1e-8


@pytest.mark.parametrize("n", [0, 1, 3, 6])
def test_single_layer_eigenvalues(n):
    Y = S.synthesis[:, harmonic_index(n, 1 if n else 0)]
    V0 = kn.assemble_V(kn.HelmholtzKernel(0.0), S).matrix
    assert np.allclose(V0 @ Y, Y / (2 * n + 1), atol=1e-10)
    k = 1.0
    j = special.spherical_jn(n, k)
    lam = 1j * k * j * (j + 1j * special.spherical_yn(n, k))
    V1 = kn.assemble_V(kn.HelmholtzKernel(k), S).matrix
    assert np.allclose(V1 @ Y, lam * Y, atol=1e-10)


def test_adjoint_double_layer_of_constant():
    D0 = kn.assemble_D(kn.HelmholtzKernel(0.0), S).matrix
    assert np.allclose(D0 @ np.ones(S.n_nodes), -0.5, atol=1e-10)


def test_potential_of_uniform_layer():
    one = np.ones(S.n_nodes)
    k0 = kn.HelmholtzKernel(0.0)
    assert kn.potential_eval(k0, one, [[0, 0, 2.0]], S)[0] == pytest.approx(0.5, abs=1e-6)
    assert kn.potential_eval(k0, one, [[0, 0, 0.3]], S)[0] == pytest.approx(1.0, abs=1e-6)


def test_targets_too_close_rejected():
    with pytest.raises(kn.TargetTooClose):
        kn.potential_eval(kn.HelmholtzKernel(1.0), np.ones(S.n_nodes), [[0, 0, 1.001]], S)


def test_farfield_requires_unit_directions():
    with pytest.raises(ValueError):
        kn.farfield_eval(kn.HelmholtzKernel(1.0), np.ones(S.n_nodes), [[0, 0, 2.0]], S)


def test_translation_invariance_and_phase_law(rng):
    k = kn.HelmholtzKernel(1.3)
    c = np.array([0.4, -0.1, 0.2])
    xi = geo.make_deformation("constant", c=tuple(c))
    assert np.abs(kn.d_V(k, S, xi).matrix).max() < 1e-9
    assert np.abs(kn.d_D(k, S, xi).matrix).max() < 1e-9
    u = random_scalar(S, rng, 6).values
    d = np.array([[0, 0, 1.0], [0.6, 0, 0.8]])
    law = -1j * 1.3 * (d @ c) * kn.farfield_eval(k, u, d, S)
    assert np.abs(kn.d_farfield(k, xi, u, d, S) - law).max() < 1e-10


def test_dilated_farfield_derivative_closed_form():
    one = np.ones(S.n_nodes)
    d = np.array([[0, 0, 1.0]])
    val = kn.d_farfield(kn.HelmholtzKernel(1.0), geo.make_deformation("dilation"), one, d, S)
    assert val[0] == pytest.approx(4 * np.pi * (np.sin(1.0) + np.cos(1.0)), rel=1e-12)


@pytest.mark.parametrize("which", ["V", "D"])
def test_operator_derivatives_against_fd(which, rng):
    s = default_grid(6)
    k = kn.HelmholtzKernel(1.5)
    xi = geo.make_deformation("gaussian_bump")
    u = random_scalar(s, rng, 4).values
    op = {"V": kn.assemble_V, "D": kn.assemble_D}[which]
    dop = {"V": kn.d_V, "D": kn.d_D}[which]
    res = geo.fd_convergence(lambda t: op(k, s, xi, t).matrix @ u, dop(k, s, xi).matrix @ u, (4e-3, 2e-3, 1e-3))
    assert res.order_within(1.8, 2.2)
    assert res.rel_errors[-1] < 1e-5


def test_potential_derivative_against_fd(rng):
    k = kn.HelmholtzKernel(1.5)
    xi = geo.make_deformation("harmonic_normal")
    u = random_scalar(S, rng, 5).values
    x = np.array([[0.2, 0.1, 2.5]])
    res = geo.fd_convergence(lambda t: kn.potential_eval(k, u, x, S, xi, t), kn.d_potential(k, xi, u, x, S))
    assert res.order_within(1.8, 2.2)
