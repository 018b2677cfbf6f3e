"""Tangential calculus on the sphere and on transported surfaces Gamma_r.

Reference operators (unit sphere, spectral differentiation):

    grad_Gamma u      tangential gradient
    curl_Gamma u      = grad_Gamma u x n                  (vector curl)
    div_Gamma v       = sum_k (grad_Gamma v_k)_k          (any Cartesian field)
    curl_Gamma v      = -sum_k (grad_Gamma v_k x n)_k     (scalar curl, = n . curl v)
    Delta_Gamma       = div_Gamma grad_Gamma

Transported operators act on reference samples. The surface gradient of
tau_r^{-1} u on Gamma_r, pulled back, is T grad_Gamma u with the nodewise map

    T = E_r (E_r^T E_r)^{-1} E^T,   E = [e1 e2],   E_r = F E,

i.e. the unique tangent vector to Gamma_r reproducing the directional
derivatives of u along the moved frame. At r = 0, T = P and

    dT[xi] = (-A + n (A n)^T) P,    A = [grad_Gamma xi].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fields import MEAN_ZERO_RTOL, ScalarField, TangentField
from .geometry import (DeformationField, check_admissible, make_deformation,
                       tangential_jacobian, transport_points)
from .operators import NODES, NODES3, DenseOperator
from .sphere import ReferenceSurface, degrees_orders, n_coeffs

logger = logging.getLogger(__name__)

OPERATOR_NAMES = ("grad", "div", "curlvec", "curls", "laplace")


class MeanZeroError(ValueError):
    """Raised when an operation needs mean-zero data and does not get it."""


@dataclass(frozen=True, eq=False)
class CurvatureData:
    """R = [grad_Gamma n] per node and H = div_Gamma n."""

    R: np.ndarray
    H: ScalarField


@dataclass(frozen=True, eq=False)
class HDensity:
    """Tangential density j = grad_Gamma p + curl_Gamma q with mean-zero p, q."""

    p: ScalarField
    q: ScalarField

    @property
    def surface(self) -> ReferenceSurface:
        return self.p.surface

    def coeff_vector(self) -> np.ndarray:
        """Stacked coefficients of degrees 1..L for p then q."""
        s = self.surface
        n1 = n_coeffs(s.band_limit)
        return np.concatenate([s.analysis[1:n1] @ self.p.values, s.analysis[1:n1] @ self.q.values])

    @classmethod
    def from_coeff_vector(cls, surface: ReferenceSurface, vec: np.ndarray) -> "HDensity":
        n1 = n_coeffs(surface.band_limit) - 1
        vec = np.asarray(vec)
        syn = surface.synthesis[:, 1:]
        return cls(ScalarField(surface, syn @ vec[:n1]), ScalarField(surface, syn @ vec[n1:]))


@dataclass(frozen=True, eq=False)
class Transport:
    """Nodal transport data for t*r: area ratio, normal and gradient map T.

    When ``xi`` is given (only at t = 0) the derivatives dJ, dN, dT along xi
    are stored as well.
    """

    surface: ReferenceSurface = field(repr=False)
    J: np.ndarray
    N: np.ndarray
    T: np.ndarray
    dJ: np.ndarray | None = None
    dN: np.ndarray | None = None
    dT: np.ndarray | None = None


def gradient_map(F: np.ndarray, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    """T = E_r (E_r^T E_r)^{-1} E^T for tangent frames (e1, e2) and maps F."""
    E = np.stack([e1, e2], axis=-1)
    Er = F @ E
    g = np.swapaxes(Er, -1, -2) @ Er
    return Er @ np.linalg.solve(g, np.swapaxes(E, -1, -2))


def transport(surface: ReferenceSurface, r: DeformationField | None = None, t: float = 0.0,
              xi: DeformationField | None = None) -> Transport:
    """Transport data at the grid nodes, optionally with derivatives along xi at t = 0."""
    check_admissible(surface, r, t)
    geo = transport_points(surface.nodes, r, t)
    T = gradient_map(geo.F, surface.e1, surface.e2)
    if xi is None:
        return Transport(surface, geo.J, geo.N, T)
    if t != 0.0 and r is not None:
        raise ValueError("derivative data is only available at t = 0")
    n = surface.normals
    A = tangential_jacobian(n, xi)
    An = np.einsum("pij,pj->pi", A, n)
    P = np.eye(3) - n[:, :, None] * n[:, None, :]
    dT = (-A + n[:, :, None] * An[:, None, :]) @ P
    return Transport(surface, geo.J, geo.N, T, np.trace(A, axis1=1, axis2=2), -An, dT)


# ---------------------------------------------------------------------------
# array-level primitives; scalar data (N, ...) and vector data (N, 3, ...)
# ---------------------------------------------------------------------------
def ref_grad(surface: ReferenceSurface, u: np.ndarray) -> np.ndarray:
    """Reference tangential gradient of nodal data, (N, ...) -> (N, 3, ...)."""
    u = np.asarray(u)
    flat = u.reshape(u.shape[0], -1)
    g = np.stack([surface.grad_matrix[a] @ flat for a in range(3)], axis=1)
    return g.reshape((u.shape[0], 3) + u.shape[1:])


def ref_grad_components(surface: ReferenceSurface, v: np.ndarray) -> np.ndarray:
    """[grad_Gamma v] with column k the gradient of v_k, (N, 3, ...) -> (N, 3, 3, ...)."""
    v = np.asarray(v)
    cols = [ref_grad(surface, v[:, k]) for k in range(3)]
    return np.stack(cols, axis=2)


def _apply_T(T: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.einsum("pab,pb...->pa...", T, g)


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product along axis 1, broadcasting trailing axes of ``a``."""
    if a.ndim > b.ndim:
        b = b.reshape(b.shape + (1,) * (a.ndim - b.ndim))
    return np.cross(a, b, axis=1) if a.ndim == 2 else np.moveaxis(
        np.cross(np.moveaxis(a, 1, -1), np.moveaxis(np.broadcast_to(b, a.shape), 1, -1)), -1, 1)


def t_grad(tr: Transport, u: np.ndarray) -> np.ndarray:
    return _apply_T(tr.T, ref_grad(tr.surface, u))


def t_div(tr: Transport, v: np.ndarray) -> np.ndarray:
    G = ref_grad_components(tr.surface, v)
    return np.einsum("pka,pak...->p...", tr.T, G)


def t_curlvec(tr: Transport, u: np.ndarray) -> np.ndarray:
    return _cross(t_grad(tr, u), tr.N)


def t_curls(tr: Transport, v: np.ndarray) -> np.ndarray:
    G = _apply_T(tr.T, ref_grad_components(tr.surface, v))  # (N, 3, 3, ...) columns
    out = 0.0
    N = tr.N
    for k in range(3):
        ck = _cross(G[:, :, k], N)
        out = out + ck[:, k]
    return -out


def _reference_transport(surface: ReferenceSurface) -> Transport:
    n = surface.normals
    P = np.eye(3) - n[:, :, None] * n[:, None, :]
    return Transport(surface, np.ones(surface.n_nodes), n.copy(), P)


def _values(u, surface: ReferenceSurface | None = None) -> tuple[np.ndarray, ReferenceSurface]:
    if isinstance(u, (ScalarField, TangentField)):
        return u.values, u.surface
    if surface is None:
        raise ValueError("raw arrays need an explicit surface")
    return np.asarray(u, dtype=complex), surface


# ---------------------------------------------------------------------------
# reference operators
# ---------------------------------------------------------------------------
def curvature(surface: ReferenceSurface) -> CurvatureData:
    """R_Gamma = [grad_Gamma n] and H_Gamma = div_Gamma n computed spectrally."""
    n = surface.normals.astype(complex)
    R = ref_grad_components(surface, n).real
    H = np.trace(R, axis1=1, axis2=2)
    return CurvatureData(R, ScalarField(surface, H))


def grad_gamma(u: ScalarField) -> TangentField:
    """Tangential gradient of a band-limited scalar field."""
    vals, s = _values(u)
    return TangentField(s, ref_grad(s, vals))


def curlvec_gamma(u: ScalarField) -> TangentField:
    """Vector surface curl grad_Gamma u x n."""
    vals, s = _values(u)
    return TangentField(s, np.cross(ref_grad(s, vals), s.normals))


def div_gamma(u, surface: ReferenceSurface | None = None, jac: np.ndarray | None = None) -> ScalarField:
    """Surface divergence of tangent or ambient samples.

    With ``jac`` (ambient Jacobian [Du] at the nodes) the value is
    tr(P [Du]^T) evaluated exactly; otherwise the Cartesian components are
    differentiated spectrally.
    """
    vals, s = _values(u, surface)
    if jac is not None:
        n = s.normals
        P = np.eye(3) - n[:, :, None] * n[:, None, :]
        return ScalarField(s, np.einsum("pij,pji->p", P, jac))
    G = ref_grad_components(s, vals)
    return ScalarField(s, np.trace(G, axis1=1, axis2=2))


def curls_gamma(u, surface: ReferenceSurface | None = None) -> ScalarField:
    """Scalar surface curl n . curl u, i.e. -div_Gamma(n x u)."""
    vals, s = _values(u, surface)
    return ScalarField(s, t_curls(_reference_transport(s), vals))


def laplace_beltrami(u: ScalarField) -> ScalarField:
    """Delta_Gamma u assembled as div_Gamma grad_Gamma u."""
    s = u.surface
    G = ref_grad(s, u.values)
    return ScalarField(s, np.trace(ref_grad_components(s, G), axis1=1, axis2=2))


def _require_mean_zero(values: np.ndarray, weights: np.ndarray, surface: ReferenceSurface,
                       rtol: float = MEAN_ZERO_RTOL) -> None:
    integral = abs(np.sum(weights * values))
    norm = surface.l2_norm(values)
    if integral > rtol * np.sqrt(4.0 * np.pi) * max(norm, 1e-300):
        raise MeanZeroError(f"input has mean {integral / (4 * np.pi):.3e}, expected zero")


def spectral_inverse_laplacian(surface: ReferenceSurface, values: np.ndarray) -> np.ndarray:
    """Pseudo-inverse of Delta_Gamma on the sphere (mean-zero output), nodal in and out."""
    c = surface.analysis_full @ values
    n, _ = degrees_orders(surface.resolved_degree)
    lam = -n * (n + 1.0)
    lam[0] = 1.0
    shape = (-1,) + (1,) * (c.ndim - 1)
    c = c / lam.reshape(shape)
    c[0] = 0.0
    return surface.synthesis_full @ c


def t_div_split(tr: Transport, v: np.ndarray) -> np.ndarray:
    """Transported divergence with the normal part handled by the product rule.

    With v = P v + g n and g = n . v,

        div(v) = div(P v) + g div(n) + n . (T grad g),

    so the reference normal (degree one, differentiated exactly) is never
    multiplied into another field before spectral differentiation.
    """
    n = tr.surface.normals
    ns = n.reshape(n.shape + (1,) * (v.ndim - 2))
    g = np.einsum("pa,pa...->p...", n, v)
    vt = v - ns * g[:, None]
    div_n = t_div(tr, n.astype(complex))
    div_n = div_n.reshape(div_n.shape + (1,) * (g.ndim - 1))
    return t_div(tr, vt) + g * div_n + np.einsum("pa,pa...->p...", n, t_grad(tr, g))


def weighted_div_pi_inverse(tr: Transport, u: np.ndarray) -> np.ndarray:
    """J tau div_{Gamma_r} pi^{-1}(r) applied to tangent reference samples."""
    J = tr.J.reshape((-1,) + (1,) * (u.ndim - 2))
    return J * t_div_split(tr, pi_inverse_values(tr, u))


def weighted_laplacian(tr: Transport) -> np.ndarray:
    """Galerkin matrix of J tau Delta_{Gamma_r} tau^{-1} on degrees 1..L."""
    s = tr.surface
    S1 = s.synthesis[:, 1:]
    lap = t_div_split(tr, t_grad(tr, S1))
    return s.analysis[1:] @ (tr.J[:, None] * lap)


def laplace_beltrami_inv(f: ScalarField, r: DeformationField | None = None, t: float = 0.0) -> ScalarField:
    """Mean-zero solution u of Delta_{Gamma_r} u = f (pulled back to the sphere).

    Rejects f whose integral over Gamma_r is not zero within tolerance.
    """
    s = f.surface
    if r is None or t == 0.0:
        _require_mean_zero(f.values, s.weights, s)
        return ScalarField(s, spectral_inverse_laplacian(s, f.values))
    tr = transport(s, r, t)
    _require_mean_zero(f.values, s.weights * tr.J, s)
    K = weighted_laplacian(tr)
    rhs = s.analysis[1:] @ (tr.J * f.values)
    return ScalarField(s, s.synthesis[:, 1:] @ np.linalg.solve(K, rhs))


# ---------------------------------------------------------------------------
# transported operators as dense matrices
# ---------------------------------------------------------------------------
def transported_op(which: str, r: DeformationField | None, t: float, surface: ReferenceSurface) -> DenseOperator:
    """Nodal matrix of tau_r op_{Gamma_r} tau_r^{-1} for op in OPERATOR_NAMES."""
    if which not in OPERATOR_NAMES:
        raise ValueError(f"unknown operator {which!r}")
    tr = transport(surface, r, t)
    N = surface.n_nodes
    eye = np.eye(N, dtype=complex)
    meta = {"t": t, "deformation": r.tag if r is not None else "none", "op": which}
    if which == "grad":
        M = t_grad(tr, eye)  # (N, 3, N)
        return DenseOperator(M.reshape(3 * N, N), NODES, NODES3, meta)
    if which == "curlvec":
        M = t_curlvec(tr, eye)
        return DenseOperator(M.reshape(3 * N, N), NODES, NODES3, meta)
    if which == "laplace":
        M = t_div(tr, t_grad(tr, eye))
        return DenseOperator(M, NODES, NODES, meta)
    basis = np.zeros((N, 3, 3 * N), dtype=complex)
    for a in range(3):
        basis[np.arange(N), a, 3 * np.arange(N) + a] = 1.0
    M = t_div(tr, basis) if which == "div" else t_curls(tr, basis)
    return DenseOperator(M, NODES3, NODES, meta)


def pi_projection(surface: ReferenceSurface, r: DeformationField | None, t: float,
                  direction: str = "forward") -> DenseOperator:
    """Nodewise pi(r) (tangential projection onto Gamma) or its inverse pi^{-1}(r)."""
    n = surface.normals
    N = surface.n_nodes
    if direction == "forward":
        blocks = np.eye(3) - n[:, :, None] * n[:, None, :]
    elif direction == "inverse":
        tr = transport(surface, r, t)
        nN = np.sum(tr.N * n, axis=1)
        if np.any(np.abs(nN) < 1e-12):
            raise ValueError("transported normal orthogonal to reference normal")
        blocks = np.eye(3) - n[:, :, None] * tr.N[:, None, :] / nN[:, None, None]
    else:
        raise ValueError("direction must be 'forward' or 'inverse'")
    M = np.zeros((3 * N, 3 * N), dtype=complex)
    for i in range(N):
        M[3 * i:3 * i + 3, 3 * i:3 * i + 3] = blocks[i]
    meta = {"t": t, "deformation": r.tag if r is not None else "none", "op": f"pi-{direction}"}
    return DenseOperator(M, NODES3, NODES3, meta)


def pi_inverse_values(tr: Transport, u: np.ndarray) -> np.ndarray:
    """pi^{-1}(r) u = u - n (N . u) / (N . n) applied nodewise."""
    n = tr.surface.normals
    nN = np.sum(tr.N * n, axis=1)
    coef = np.einsum("pa,pa...->p...", tr.N, u) / nN.reshape((-1,) + (1,) * (u.ndim - 2))
    return u - n.reshape(n.shape + (1,) * (u.ndim - 2)) * coef[:, None]


# ---------------------------------------------------------------------------
# Gateaux derivatives at r = 0
# ---------------------------------------------------------------------------
def _tangential_data(xi: DeformationField, surface: ReferenceSurface):
    n = surface.normals
    A = tangential_jacobian(n, xi)
    return A, np.einsum("pij,pj->pi", A, n), np.trace(A, axis1=1, axis2=2)


def d_grad_gamma(xi: DeformationField, u: ScalarField) -> TangentField:
    """-[grad xi] grad u + (grad u . [grad xi] n) n."""
    s = u.surface
    A, An, _ = _tangential_data(xi, s)
    g = ref_grad(s, u.values)
    out = -np.einsum("pij,pj->pi", A, g) + np.sum(g * An, axis=1)[:, None] * s.normals
    return TangentField(s, out)


def d_div_gamma(xi: DeformationField, u) -> ScalarField:
    """-Tr([grad xi][grad u]) + ([grad u] n . [grad xi] n)."""
    vals, s = _values(u)
    A, An, _ = _tangential_data(xi, s)
    G = ref_grad_components(s, vals)
    Gn = np.einsum("pij,pj->pi", G, s.normals)
    return ScalarField(s, -np.einsum("pij,pji->p", A, G) + np.sum(Gn * An, axis=1))


def d_curlvec_gamma(xi: DeformationField, u: ScalarField) -> TangentField:
    """[grad xi]^T curl u - (div xi) curl u."""
    s = u.surface
    A, _, divxi = _tangential_data(xi, s)
    c = np.cross(ref_grad(s, u.values), s.normals)
    return TangentField(s, np.einsum("pji,pj->pi", A, c) - divxi[:, None] * c)


def _curlvec_columns(s: ReferenceSurface, vals: np.ndarray) -> np.ndarray:
    G = ref_grad_components(s, vals)
    return np.stack([np.cross(G[:, :, k], s.normals) for k in range(3)], axis=2)


def d_curls_gamma(xi: DeformationField, u) -> ScalarField:
    """-sum_i grad xi_i . curl u_i - (div xi) curl u."""
    vals, s = _values(u)
    A, _, divxi = _tangential_data(xi, s)
    C = _curlvec_columns(s, vals)
    curl_u = -np.trace(C, axis1=1, axis2=2)
    return ScalarField(s, -np.einsum("pak,pak->p", A, C) - divxi * curl_u)


def d_weighted_curls(xi: DeformationField, u) -> ScalarField:
    """Derivative of J tau curl_{Gamma_r} tau^{-1}: -sum_i grad xi_i . curl u_i."""
    vals, s = _values(u)
    A, _, _ = _tangential_data(xi, s)
    C = _curlvec_columns(s, vals)
    return ScalarField(s, -np.einsum("pak,pak->p", A, C))


def d_weighted_div(xi: DeformationField, u) -> ScalarField:
    """Derivative of J tau div_{Gamma_r} pi^{-1}(r) on tangent data at r = 0."""
    vals, s = _values(u)
    A, An, divxi = _tangential_data(xi, s)
    G = ref_grad_components(s, vals)
    Gn = np.einsum("pij,pj->pi", G, s.normals)
    H = curvature(s).H.values.real
    divu = np.trace(G, axis1=1, axis2=2)
    out = (-np.einsum("pij,pji->p", A, G) + divxi * divu + np.sum(Gn * An, axis=1)
           + np.sum(vals * An, axis=1) * H)
    return ScalarField(s, out)


def d_weighted_laplacian(xi: DeformationField, u: ScalarField) -> ScalarField:
    """Derivative of J tau Delta_{Gamma_r} tau^{-1} applied to u.

    Product rule over J tau div pi^{-1}(r) and pi(r) tau grad tau^{-1}, with
    the derivative of the projected gradient equal to P d_grad_gamma.
    """
    s = u.surface
    n = s.normals
    g = grad_gamma(u)
    dg = d_grad_gamma(xi, u).values
    dg_t = dg - np.sum(dg * n, axis=1)[:, None] * n
    return d_weighted_div(xi, g) + div_gamma(dg_t, surface=s)


def d_laplace_inv(xi: DeformationField, f: ScalarField) -> ScalarField:
    """-Delta^{-1} dK Delta^{-1} f with dK the weighted Laplacian derivative."""
    s = f.surface
    _require_mean_zero(f.values, s.weights, s)
    u = ScalarField(s, spectral_inverse_laplacian(s, f.values))
    inner = d_weighted_laplacian(xi, u)
    inner_vals = inner.values - inner.mean()
    return ScalarField(s, -spectral_inverse_laplacian(s, inner_vals))


# ---------------------------------------------------------------------------
# commutators with the normal derivative (unit sphere, radial extension)
# ---------------------------------------------------------------------------
def commutator_normal(which: str, u, h: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the normal-derivative commutator identity for ``which``.

    The field is extended radially, so d/dn of the field itself vanishes and
    the left side is the normal derivative of op(u) on the parallel spheres.
    It is computed by Richardson-refined central differences of the
    transported operator along the dilation x -> (1 + t) x.
    """
    if which not in ("grad", "curlvec", "div", "curls"):
        raise ValueError(f"unknown commutator {which!r}")
    vals, s = _values(u)
    dil = make_deformation("dilation")
    fn = {"grad": t_grad, "curlvec": t_curlvec, "div": t_div, "curls": t_curls}[which]

    def op(t: float) -> np.ndarray:
        return fn(transport(s, dil, t), vals)

    d1 = (op(h) - op(-h)) / (2 * h)
    d2 = (op(h / 2) - op(-h / 2)) / h
    lhs = (4 * d2 - d1) / 3.0
    cd = curvature(s)
    R, H = cd.R, cd.H.values.real
    if which == "grad":
        rhs = -np.einsum("pij,pj->pi", R, ref_grad(s, vals))
    elif which == "curlvec":
        c = np.cross(ref_grad(s, vals), s.normals)
        rhs = np.einsum("pij,pj->pi", R, c) - H[:, None] * c
    elif which == "div":
        rhs = -np.einsum("pij,pji->p", R, ref_grad_components(s, vals))
    else:
        C = _curlvec_columns(s, vals)
        curl_u = -np.trace(C, axis1=1, axis2=2)
        rhs = -np.einsum("pij,pji->p", R, C) - H * curl_u
    return lhs, rhs


# ---------------------------------------------------------------------------
# Helmholtz decomposition
# ---------------------------------------------------------------------------
def helmholtz_decompose(j: TangentField) -> HDensity:
    """p = Delta^{-1} div j, q = -Delta^{-1} curl j, both mean-zero."""
    s = j.surface
    div = div_gamma(j).values
    curl = curls_gamma(j).values
    p = spectral_inverse_laplacian(s, div - s.integrate(div) / (4 * np.pi))
    q = -spectral_inverse_laplacian(s, curl - s.integrate(curl) / (4 * np.pi))
    return HDensity(ScalarField(s, p), ScalarField(s, q))


def helmholtz_recompose(h: HDensity) -> TangentField:
    """grad_Gamma p + curl_Gamma q."""
    return TangentField(h.surface, grad_gamma(h.p).values + curlvec_gamma(h.q).values)
