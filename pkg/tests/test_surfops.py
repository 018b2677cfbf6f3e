import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emshape import geometry as geo
from emshape import surfops as so
from emshape.fields import ScalarField, TangentField, random_scalar
from emshape.sphere import default_grid, degrees_orders, harmonic_index

seeds = st.integers(0, 2**31 - 1)
S = default_grid(8)


def _field(seed, degree=8):
    return random_scalar(S, np.random.default_rng(seed), degree)


def _tangent(seed, degree=8):
    rng = np.random.default_rng(seed)
    p, q = random_scalar(S, rng, degree), random_scalar(S, rng, degree)
    return TangentField(S, so.grad_gamma(p).values + so.curlvec_gamma(q).values)


@given(seeds)
def test_div_curl_and_curl_grad_vanish(seed):
    u = _field(seed)
    assert np.abs(so.div_gamma(so.curlvec_gamma(u)).values).max() < 1e-9
    assert np.abs(so.curls_gamma(so.grad_gamma(u)).values).max() < 1e-9


@given(seeds)
def test_curl_curl_is_minus_laplacian(seed):
    u = _field(seed)
    lap = so.laplace_beltrami(u).values
    assert np.abs(so.curls_gamma(so.curlvec_gamma(u)).values + lap).max() < 1e-9 * np.abs(lap).max()


@given(seeds)
def test_grad_and_curl_are_orthogonal(seed):
    u, v = _field(seed), _field(seed + 1)
    g, c = so.grad_gamma(u).values, so.curlvec_gamma(v).values
    assert abs(S.integrate(np.sum(g * c.conj(), axis=1))) < 1e-9 * S.l2_norm(g) * S.l2_norm(c)


@given(seeds)
def test_helmholtz_roundtrip(seed):
    j = _tangent(seed)
    back = so.helmholtz_recompose(so.helmholtz_decompose(j)).values
    assert S.l2_norm(back - j.values) < 1e-9 * S.l2_norm(j.values)


def test_laplacian_spectrum():
    n, _ = degrees_orders(S.band_limit)
    for k in range(n.size):
        if n[k] > S.band_limit - 2:
            continue
        Y = S.synthesis[:, k]
        lap = so.div_gamma(so.grad_gamma(ScalarField(S, Y))).values
        assert np.abs(lap + n[k] * (n[k] + 1) * Y).max() < 1e-8 * max(1, n[k] * (n[k] + 1))


def test_inverse_laplacian_rejects_nonzero_mean():
    with pytest.raises(so.MeanZeroError):
        so.laplace_beltrami_inv(ScalarField(S, np.ones(S.n_nodes)))


def test_gradient_of_height():
    z = ScalarField(S, S.nodes[:, 2])
    expect = np.array([0, 0, 1.0]) - S.nodes[:, 2:3] * S.nodes
    assert np.abs(so.grad_gamma(z).values - expect).max() < 1e-12


def test_mean_curvature_of_sphere():
    cd = so.curvature(S)
    assert np.allclose(cd.H.values, 2.0)


def test_transported_ops_at_zero_are_reference_ops():
    u = _field(3)
    bump = geo.make_deformation("gaussian_bump")
    assert np.allclose(so.transported_op("grad", bump, 0.0, S).apply(u.values), so.grad_gamma(u).values, atol=1e-12)
    with pytest.raises(ValueError):
        so.transported_op("hessian", bump, 0.0, S)


@pytest.mark.parametrize("kind", ["gaussian_bump", "harmonic_normal", "rotation"])
def test_derivative_lemmas_against_fd(kind):
    # the bump is not band-limited; the inverse-Laplacian lemma needs a finer grid to leave the aliasing plateau
    S = default_grid(15 if kind == "gaussian_bump" else 8)
    xi = geo.make_deformation(kind)
    rng = np.random.default_rng(5)
    u = random_scalar(S, rng, 5)
    p, q = random_scalar(S, rng, 5), random_scalar(S, rng, 5)
    w = TangentField(S, so.grad_gamma(p).values + so.curlvec_gamma(q).values)
    f = ScalarField(S, S.synthesis[:, harmonic_index(2, 1)])

    def tr(t):
        return so.transport(S, xi, t)

    cases = [
        (lambda t: so.t_grad(tr(t), u.values), so.d_grad_gamma(xi, u).values),
        (lambda t: so.t_div(tr(t), w.values), so.d_div_gamma(xi, w).values),
        (lambda t: so.t_curlvec(tr(t), u.values), so.d_curlvec_gamma(xi, u).values),
        (lambda t: so.t_curls(tr(t), w.values), so.d_curls_gamma(xi, w).values),
        (lambda t: tr(t).J * so.t_curls(tr(t), w.values), so.d_weighted_curls(xi, w).values),
        (lambda t: so.weighted_div_pi_inverse(tr(t), w.values), so.d_weighted_div(xi, w).values),
        (lambda t: tr(t).J * so.t_div_split(tr(t), so.t_grad(tr(t), u.values)), so.d_weighted_laplacian(xi, u).values),
        (lambda t: so.laplace_beltrami_inv(ScalarField(S, f.values / tr(t).J), xi, t).values,
         so.d_laplace_inv(xi, f).values),
    ]
    for fn, an in cases:
        res = geo.fd_convergence(fn, an, floor=1e-9)
        assert res.order_within(1.8, 2.2), res


def test_dilation_scales_gradient():
    u = _field(7)
    dil = geo.make_deformation("dilation")
    assert np.allclose(so.d_grad_gamma(dil, u).values, -so.grad_gamma(u).values, atol=1e-11)


def test_commutator_with_normal_extension():
    Y = ScalarField(S, S.synthesis[:, harmonic_index(2, 0)])
    lhs, rhs = so.commutator_normal("grad", Y)
    assert np.abs(lhs - rhs).max() < 1e-7 * np.abs(rhs).max()
