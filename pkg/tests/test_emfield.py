import numpy as np
import pytest

from emshape import emfield as ef
from emshape import geometry as geo
from emshape import scattering as sc
from emshape.sphere import default_grid, harmonic_index, n_coeffs
from emshape.surfops import HDensity

S = default_grid(6)


def _density(seed, surface=S, degree=4):
    rng = np.random.default_rng(seed)
    n1 = n_coeffs(surface.band_limit) - 1
    m = n_coeffs(degree) - 1
    c = np.zeros(2 * n1, complex)
    c[:m] = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    c[n1:n1 + m] = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return HDensity.from_coeff_vector(surface, c)


def _weighted_rel(a, b, w):
    return np.sqrt(np.sum(w[:, None] * np.abs(a - b) ** 2) / np.sum(w[:, None] * np.abs(b) ** 2))


@pytest.mark.parametrize("name", ["C", "M", "C0star"])
def test_block_and_direct_assemblies_agree(name):
    ctx = ef.EMContext(S)
    c = _density(1, degree=6).coeff_vector()[:, None]
    blocks = {"C": lambda: ef.c_blocks(ctx, 1.5, c), "M": lambda: ef.m_blocks(ctx, 1.5, c),
              "C0star": lambda: ef.c0star_blocks(ctx, c)}[name]()
    direct = {"C": lambda: ef.direct_C(ctx, 1.5, c), "M": lambda: ef.direct_M(ctx, 1.5, c),
              "C0star": lambda: ef.direct_C0star(ctx, c)}[name]()
    a = ef.recompose(ctx, blocks).v[:, :, 0]
    assert _weighted_rel(a, direct.v[:, :, 0], S.weights) < 1e-6


def test_block_operator_matrix_roundtrip():
    op = ef.assemble_C0star(S)
    again = ef.EMBlockOperator.from_matrix(op.matrix)
    assert np.array_equal(again.matrix, op.matrix)
    h = _density(2)
    assert np.allclose(op.apply(h).coeff_vector(), op.matrix @ h.coeff_vector())


def test_potentials_intertwine_under_curl():
    k = 1.5
    h = _density(3)
    x = np.array([[0.1, 0.2, 0.3], [0.0, 0.0, 2.0], [3.0, 1.0, -2.0]])
    E = lambda p: ef.psi_E(k, h, p)  # noqa: E731
    M = lambda p: ef.psi_M(k, h, p)  # noqa: E731
    assert sc.curl_consistency(E, lambda p: k * M(p), x) < 1e-6
    assert sc.curl_consistency(M, lambda p: k * E(p), x) < 1e-6


def test_farfield_is_transverse_and_matches_radial_limit():
    k = 1.0
    h = _density(4)
    d = np.array([[0, 0, 1.0], [0.6, 0.8, 0.0]])
    ffE, ffM = ef.farfield_EM(k, h, d)
    assert np.abs(np.sum(ffE * d, axis=1)).max() < 1e-12
    assert np.abs(np.sum(ffM * d, axis=1)).max() < 1e-12
    r0, r1 = 100.0, 200.0
    v0, v1 = (4 * np.pi * R * np.exp(-1j * k * R) * ef.psi_E(k, h, R * d) for R in (r0, r1))
    assert np.abs((r1 * v1 - r0 * v0) / (r1 - r0) - ffE).max() < 1e-3 * np.abs(ffE).max()


def test_translation_invariance_of_operator_derivatives():
    xi = geo.make_deformation("constant", c=(0.1, 0.2, -0.3))
    for name in ef.EM_OPERATORS:
        assert np.abs(ef.d_emfield(name, xi, S, 1.2).matrix).max() < 1e-9


def test_d_emfield_against_fd():
    k = 1.5
    xi = geo.make_deformation("harmonic_normal")
    h = _density(5)
    x = np.array([[0.0, 0.2, 2.0]])
    an = ef.d_emfield("psiE", xi, S, k, h, x)
    res = geo.fd_convergence(lambda t: ef.psi_E(k, h, x, xi, t), an, (4e-3, 2e-3, 1e-3))
    assert res.order_within(1.7, 2.3)
    assert res.rel_errors[-1] < 1e-4
    with pytest.raises(ValueError):
        ef.d_emfield("psiE", xi, S, k)
    with pytest.raises(ValueError):
        ef.d_emfield("Z", xi, S, k)


def test_config_dispersion_relation():
    cfg = ef.ScatteringConfig.from_materials(omega=1.0, eps_i=2.25, eps_e=1.0)
    assert cfg.kappa_i == pytest.approx(1.5)
    assert cfg.rho == pytest.approx(1.5)
    with pytest.raises(ValueError):
        ef.ScatteringConfig(kappa_i=2.0, kappa_e=1.0, eps_i=2.25)
