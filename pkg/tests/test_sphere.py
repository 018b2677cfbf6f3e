import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emshape.fields import ScalarField, random_coeffs
from emshape.sphere import build_sphere_grid, degrees_orders, harmonic_index, n_coeffs, sph_harm_points


def test_grid_sizes_and_weights():
    s = build_sphere_grid(16, 33, 15)
    assert s.n_nodes == 16 * 33
    assert s.weights.sum() == pytest.approx(4 * np.pi, rel=1e-13)
    assert np.allclose(np.linalg.norm(s.nodes, axis=1), 1.0)


def test_theta_major_order():
    s = build_sphere_grid(4, 9, 3)
    assert np.all(np.diff(s.theta.reshape(4, 9)[:, 0]) > 0)
    assert np.allclose(s.theta.reshape(4, 9), s.theta.reshape(4, 9)[:, :1])


def test_index_layout():
    n, m = degrees_orders(3)
    assert n.size == n_coeffs(3) == 16
    for k in range(n.size):
        assert harmonic_index(n[k], m[k]) == k


def test_low_degree_closed_forms(grid6):
    x = grid6.nodes
    Y00 = grid6.synthesis[:, harmonic_index(0, 0)]
    Y10 = grid6.synthesis[:, harmonic_index(1, 0)]
    Y11 = grid6.synthesis[:, harmonic_index(1, 1)]
    assert np.allclose(Y00, 1 / np.sqrt(4 * np.pi))
    assert np.allclose(Y10, np.sqrt(3 / (4 * np.pi)) * x[:, 2])
    # Condon-Shortley phase
    assert np.allclose(Y11, -np.sqrt(3 / (8 * np.pi)) * (x[:, 0] + 1j * x[:, 1]))


def test_orthonormality(grid8):
    Y = grid8.synthesis
    G = (Y.conj().T * grid8.weights) @ Y
    assert np.abs(G - np.eye(G.shape[0])).max() < 1e-12


def test_pointwise_harmonics_match_grid(grid6):
    assert np.allclose(sph_harm_points(6, grid6.nodes), grid6.synthesis, atol=1e-13)


@given(st.integers(0, 2**31 - 1))
def test_transform_roundtrip(seed):
    from emshape.sphere import default_grid

    s = default_grid(7)
    c = random_coeffs(np.random.default_rng(seed), 7)
    f = ScalarField.from_coeffs(s, c)
    assert np.allclose(f.coeffs, c, atol=1e-12)
    assert f.l2_norm() == pytest.approx(np.linalg.norm(c), rel=1e-12)
