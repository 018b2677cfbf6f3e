"""Helmholtz kernels, boundary operators on transported surfaces, potentials.

All operators act on nodal samples over the reference sphere and return
nodal matrices of the transported operator tau_r A_{Gamma_r} tau_r^{-1}:

    V u(x) = int G(x_r - y_r) u(y) J(y) dsigma(y)
    D u(x) = int grad_x G(x_r - y_r) . N(x) u(y) J(y) dsigma(y)
    B j(x) = int grad_x G(x_r - y_r) ((N(x) - N(y)) . j(y)) J(y) dsigma(y)

with x_r = x + t r(x). B agrees with the usual kernel grad G (j . n(x)) on
densities tangent to Gamma_r; subtracting N(y) . j = 0 before quadrature
removes one order of the singularity. Derivative operators at r = 0 are
assembled from the differentiated kernels, never from matrix differences.

With z = x - y and rho = |z|:

    G   = exp(i k rho) / (4 pi rho)
    grad_x G = h(rho) z,          h  = exp(i k rho)(i k rho - 1) / (4 pi rho^3)
    Hess G  = h I + (h'/rho) z z^T, h' = exp(i k rho)(3 - 3 i k rho - k^2 rho^2) / (4 pi rho^4)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._dual import Dual, lift
from .fields import ScalarField
from .geometry import DeformationField, check_admissible, tangential_jacobian, transport_points
from .operators import NODES, NODES3, DenseOperator
from .quadrature import PolarRule, near_rule_points, singular_rule
from .sphere import ReferenceSurface, sph_harm_points

logger = logging.getLogger(__name__)

FOUR_PI = 4.0 * np.pi
NEAR_POINTS_PER_PANEL = 16


class TargetTooClose(ValueError):
    """Raised when a potential target is closer to the surface than allowed."""


@dataclass(frozen=True)
class HelmholtzKernel:
    """Fundamental solution of Delta + kappa^2 with outgoing radiation."""

    kappa: complex

    def __post_init__(self) -> None:
        if np.imag(self.kappa) < 0:
            raise ValueError("kappa must have non-negative imaginary part")

    def G(self, rho: np.ndarray) -> np.ndarray:
        return np.exp(1j * self.kappa * rho) / (FOUR_PI * rho)

    def h(self, rho: np.ndarray) -> np.ndarray:
        k = self.kappa
        return np.exp(1j * k * rho) * (1j * k * rho - 1.0) / (FOUR_PI * rho**3)

    def hp(self, rho: np.ndarray) -> np.ndarray:
        k = self.kappa
        return np.exp(1j * k * rho) * (3.0 - 3j * k * rho - (k * rho) ** 2) / (FOUR_PI * rho**4)


# ---------------------------------------------------------------------------
# geometry samples at arbitrary reference points
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class _Side:
    ref: np.ndarray
    pts: np.ndarray
    N: np.ndarray
    J: np.ndarray


@dataclass(frozen=True, eq=False)
class _DSide:
    ref: np.ndarray
    xi: np.ndarray
    dN: np.ndarray
    divxi: np.ndarray


def _side(points: np.ndarray, r: DeformationField | None, t: float) -> _Side:
    geo = transport_points(points, r, t)
    return _Side(points, geo.points, geo.N, geo.J)


def _dside(points: np.ndarray, xi: DeformationField) -> _DSide:
    flat = points.reshape(-1, 3)
    A = tangential_jacobian(flat, xi)
    An = np.einsum("pij,pj->pi", A, flat)
    shape = points.shape[:-1]
    return _DSide(points, xi.eval(flat).reshape(points.shape), -An.reshape(points.shape),
                  np.trace(A, axis1=1, axis2=2).reshape(shape))


# ---------------------------------------------------------------------------
# kernels on (target, source) samples; sources carry a trailing Q axis
# ---------------------------------------------------------------------------
def _kernel(which: str, k: HelmholtzKernel, x: _Side, y: _Side) -> np.ndarray:
    z = x.pts[:, None, :] - y.pts
    rho = np.linalg.norm(z, axis=-1)
    if which == "V":
        return k.G(rho) * y.J
    h = k.h(rho) * y.J
    if which == "D":
        return h * np.einsum("iqa,ia->iq", z, x.N)
    if which == "B":
        m = x.N[:, None, :] - y.N
        return h[..., None, None] * z[..., :, None] * m[..., None, :]
    raise ValueError(which)


def _dkernel(which: str, k: HelmholtzKernel, x: _Side, y: _Side, dx: _DSide, dy: _DSide) -> np.ndarray:
    """Derivative of the transported kernel at r = 0 along xi."""
    z = x.pts[:, None, :] - y.pts
    rho = np.linalg.norm(z, axis=-1)
    dxi = dx.xi[:, None, :] - dy.xi
    zd = np.sum(z * dxi, axis=-1)
    div = dy.divxi
    if which == "V":
        G = k.G(rho)
        return G * ((zd / rho) * (1j * k.kappa - 1.0 / rho) + div)
    h, hp = k.h(rho), k.hp(rho)
    if which == "D":
        zn = np.einsum("iqa,ia->iq", z, x.N)
        return ((hp / rho) * zd * zn + h * np.einsum("iqa,ia->iq", dxi, x.N)
                + h * np.einsum("iqa,ia->iq", z, dx.dN) + h * zn * div)
    if which == "B":
        m = x.N[:, None, :] - y.N
        dm = dx.dN[:, None, :] - dy.dN
        dgrad = (hp / rho * zd)[..., None] * z + h[..., None] * dxi + (h * div)[..., None] * z
        return dgrad[..., :, None] * m[..., None, :] + h[..., None, None] * z[..., :, None] * dm[..., None, :]
    raise ValueError(which)


def _assemble(which: str, k: HelmholtzKernel, surface: ReferenceSurface,
              r: DeformationField | None, t: float, xi: DeformationField | None = None) -> np.ndarray:
    rule = singular_rule(surface)
    if xi is None:
        check_admissible(surface, r, t)

    def fn(lat, idx, aux):
        xs = surface.nodes[idx]
        if xi is None:
            return _kernel(which, k, _side(xs, r, t), _side(aux, r, t))
        return _dkernel(which, k, _side(xs, None, 0.0), _side(aux, None, 0.0), _dside(xs, xi), _dside(aux, xi))

    return rule.assemble(fn)


def _meta(which: str, k: HelmholtzKernel, r, t: float) -> dict:
    return {"op": which, "kappa": complex(k.kappa), "t": t, "deformation": r.tag if r is not None else "none"}


def _scalar_op(M: np.ndarray, meta: dict) -> DenseOperator:
    return DenseOperator(M, NODES, NODES, meta)


def _block_op(M: np.ndarray, meta: dict) -> DenseOperator:
    N = M.shape[0]
    return DenseOperator(M.transpose(0, 1, 3, 2).reshape(3 * N, 3 * N), NODES3, NODES3, meta)


def assemble_V(kernel: HelmholtzKernel, surface: ReferenceSurface,
               r: DeformationField | None = None, t: float = 0.0) -> DenseOperator:
    """Transported single layer on Gamma_{t r}."""
    return _scalar_op(_assemble("V", kernel, surface, r, t), _meta("V", kernel, r, t))


def assemble_D(kernel: HelmholtzKernel, surface: ReferenceSurface,
               r: DeformationField | None = None, t: float = 0.0) -> DenseOperator:
    """Transported adjoint double layer, kernel grad_x G . N(x)."""
    return _scalar_op(_assemble("D", kernel, surface, r, t), _meta("D", kernel, r, t))


def assemble_B(kernel: HelmholtzKernel, surface: ReferenceSurface,
               r: DeformationField | None = None, t: float = 0.0) -> DenseOperator:
    """Transported B on densities tangent to Gamma_r, as a (3N, 3N) block matrix."""
    return _block_op(_assemble("B", kernel, surface, r, t), _meta("B", kernel, r, t))


def d_V(kernel: HelmholtzKernel, surface: ReferenceSurface, xi: DeformationField) -> DenseOperator:
    return _scalar_op(_assemble("V", kernel, surface, None, 0.0, xi), _meta("dV", kernel, xi, 0.0))


def d_D(kernel: HelmholtzKernel, surface: ReferenceSurface, xi: DeformationField) -> DenseOperator:
    return _scalar_op(_assemble("D", kernel, surface, None, 0.0, xi), _meta("dD", kernel, xi, 0.0))


def d_B(kernel: HelmholtzKernel, surface: ReferenceSurface, xi: DeformationField) -> DenseOperator:
    return _block_op(_assemble("B", kernel, surface, None, 0.0, xi), _meta("dB", kernel, xi, 0.0))


def boundary_operator(which: str, kernel: HelmholtzKernel, surface: ReferenceSurface,
                      r: DeformationField | None = None, t: float = 0.0,
                      xi: DeformationField | None = None) -> Dual:
    """Nodal matrix as a Dual: value at t, or value and derivative at 0 along xi."""
    if xi is None:
        return Dual(_assemble(which, kernel, surface, r, t))
    return Dual(_assemble(which, kernel, surface, None, 0.0),
                _assemble(which, kernel, surface, None, 0.0, xi))


# ---------------------------------------------------------------------------
# off-surface potentials
# ---------------------------------------------------------------------------
def default_d_min(surface: ReferenceSurface) -> float:
    return 2.0 * surface.max_spacing()


def surface_distance(surface: ReferenceSurface, targets: np.ndarray,
                     r: DeformationField | None = None, t: float = 0.0) -> np.ndarray:
    """Distance from each target to the nearest transported node."""
    pts = transport_points(surface.nodes, r, t).points
    d = np.linalg.norm(np.asarray(targets)[:, None, :] - pts[None], axis=-1)
    return d.min(axis=1)


def _check_targets(surface, targets, r, t, d_min):
    d_min = default_d_min(surface) if d_min is None else d_min
    dist = surface_distance(surface, targets, r, t)
    if np.any(dist <= d_min):
        raise TargetTooClose(f"target at distance {dist.min():.3e} <= d_min = {d_min:.3e}")


def _as_density(u) -> np.ndarray:
    return u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=complex)


def _moments_smooth(k: HelmholtzKernel, targets: np.ndarray, y: _Side, w: np.ndarray, u: Dual,
                    dy: _DSide | None):
    """Single-layer and gradient moments at targets from a source sample set.

    S0[u](x) = int G(x - y_r) u J,  S1[u](x) = int grad_x G(x - y_r) u J.
    Returns Duals shaped (n_t, m) and (n_t, 3, m).
    """
    z = targets[:, None, :] - y.pts[None]
    rho = np.linalg.norm(z, axis=-1)
    G = k.G(rho)
    h = k.h(rho)
    wJ = w * y.J
    S0 = np.einsum("tq,qm->tm", G * wJ, u.v)
    S1 = np.einsum("tq,tqa,qm->tam", h * wJ, z, u.v)
    if dy is None and u.d is None:
        return Dual(S0), Dual(S1)
    dS0 = 0.0
    dS1 = 0.0
    if u.d is not None:
        dS0 = np.einsum("tq,qm->tm", G * wJ, u.d)
        dS1 = np.einsum("tq,tqa,qm->tam", h * wJ, z, u.d)
    if dy is not None:
        zx = -np.einsum("tqa,qa->tq", z, dy.xi)
        dG = h * zx + G * dy.divxi
        dS0 = dS0 + np.einsum("tq,qm->tm", dG * wJ, u.v)
        hp = k.hp(rho)
        dgrad = ((hp / rho * zx)[..., None] * z - h[..., None] * dy.xi[None]
                 + (h * dy.divxi)[..., None] * z)
        dS1 = dS1 + np.einsum("tqa,q,qm->tam", dgrad, w * y.J, u.v)
    return Dual(S0, dS0), Dual(S1, dS1)


def layer_moments(kernel: HelmholtzKernel, surface: ReferenceSurface, targets: np.ndarray, u,
                  r: DeformationField | None = None, t: float = 0.0, xi: DeformationField | None = None,
                  near_factor: float = 5.0, centres: np.ndarray | None = None,
                  near_scale: float | None = None):
    """S0 and S1 moments of nodal densities ``u`` (N, m) at arbitrary targets.

    Targets within ``near_factor`` node spacings of the surface use a graded
    rotated rule centred at ``centres`` (default: the radial projection of
    the target), with densities carried by their harmonic expansion. With
    ``xi`` the result holds derivatives at r = 0 along xi; ``u`` may then be a
    Dual holding the density derivative.
    """
    u = lift(u)
    if u.v.ndim == 1:
        u = u.reshape(-1, 1)
    targets = np.atleast_2d(np.asarray(targets, float))
    nt = targets.shape[0]
    m = u.v.shape[1]
    h = surface.max_spacing()
    dist = surface_distance(surface, targets, r, t)
    near = dist < near_factor * h
    S0v = np.zeros((nt, m), complex)
    S1v = np.zeros((nt, 3, m), complex)
    S0d = np.zeros((nt, m), complex)
    S1d = np.zeros((nt, 3, m), complex)
    far = ~near
    if np.any(far):
        y = _side(surface.nodes, r, t)
        dy = _dside(surface.nodes, xi) if xi is not None else None
        a, b = _moments_smooth(kernel, targets[far], y, surface.weights, u, dy)
        S0v[far], S1v[far] = a.v, b.v
        S0d[far], S1d[far] = a.deriv(), b.deriv()
    if np.any(near):
        Lg = surface.resolved_degree
        cv = surface.analysis_full @ u.v
        cd = surface.analysis_full @ u.d if u.d is not None else None
        n_phi = 2 * Lg + 24
        for i in np.nonzero(near)[0]:
            c = targets[i] if centres is None else centres[i]
            scale = dist[i] if near_scale is None else near_scale
            rule = PolarRule.graded(0.5 * max(scale, 1e-3), NEAR_POINTS_PER_PANEL, n_phi)
            pts = near_rule_points(c, rule)
            Y = sph_harm_points(Lg, pts)
            uq = Dual(Y @ cv, None if cd is None else Y @ cd)
            y = _side(pts, r, t)
            dy = _dside(pts, xi) if xi is not None else None
            a, b = _moments_smooth(kernel, targets[i:i + 1], y, rule.weights, uq, dy)
            S0v[i], S1v[i] = a.v[0], b.v[0]
            S0d[i], S1d[i] = a.deriv()[0], b.deriv()[0]
    if xi is None and u.d is None:
        return Dual(S0v), Dual(S1v)
    return Dual(S0v, S0d), Dual(S1v, S1d)


def potential_eval(kernel: HelmholtzKernel, density, targets: np.ndarray, surface: ReferenceSurface,
                   r: DeformationField | None = None, t: float = 0.0, d_min: float | None = None) -> np.ndarray:
    """Single-layer potential psi_kappa u at separated targets (smooth quadrature)."""
    targets = np.atleast_2d(np.asarray(targets, float))
    _check_targets(surface, targets, r, t, d_min)
    u = _as_density(density)
    y = _side(surface.nodes, r, t)
    a, _ = _moments_smooth(kernel, targets, y, surface.weights, lift(u.reshape(u.shape[0], -1)), None)
    return a.v.reshape((targets.shape[0],) + u.shape[1:])


def d_potential(kernel: HelmholtzKernel, xi: DeformationField, density, targets: np.ndarray,
                surface: ReferenceSurface, d_min: float | None = None) -> np.ndarray:
    """Derivative at r = 0 of psi_kappa u with kernel -xi(y) . grad_z G + G div_Gamma xi."""
    targets = np.atleast_2d(np.asarray(targets, float))
    _check_targets(surface, targets, None, 0.0, d_min)
    u = _as_density(density)
    y = _side(surface.nodes, None, 0.0)
    dy = _dside(surface.nodes, xi)
    a, _ = _moments_smooth(kernel, targets, y, surface.weights, lift(u.reshape(u.shape[0], -1)), dy)
    return a.d.reshape((targets.shape[0],) + u.shape[1:])


# ---------------------------------------------------------------------------
# far fields
# ---------------------------------------------------------------------------
def farfield_moment(kernel: HelmholtzKernel, surface: ReferenceSurface, directions: np.ndarray, u,
                    r: DeformationField | None = None, t: float = 0.0,
                    xi: DeformationField | None = None) -> Dual:
    """int exp(-i kappa d . y_r) u(y) J dsigma as a Dual, shape (n_dir, m)."""
    u = lift(u)
    if u.v.ndim == 1:
        u = u.reshape(-1, 1)
    d = np.atleast_2d(np.asarray(directions, float))
    if np.any(np.abs(np.linalg.norm(d, axis=1) - 1.0) > 1e-12):
        raise ValueError("directions must be unit vectors")
    y = _side(surface.nodes, r, t)
    k = kernel.kappa
    E = np.exp(-1j * k * (d @ y.pts.T)) * (surface.weights * y.J)[None]
    val = E @ u.v
    if xi is None and u.d is None:
        return Dual(val)
    der = E @ u.d if u.d is not None else 0.0
    if xi is not None:
        dy = _dside(surface.nodes, xi)
        fac = dy.divxi[None] - 1j * k * (d @ dy.xi.T)
        der = der + (E * fac) @ u.v
    return Dual(val, der)


def farfield_eval(kernel: HelmholtzKernel, density, directions: np.ndarray, surface: ReferenceSurface,
                  r: DeformationField | None = None, t: float = 0.0) -> np.ndarray:
    u = _as_density(density)
    out = farfield_moment(kernel, surface, directions, u.reshape(u.shape[0], -1), r, t).v
    return out.reshape((out.shape[0],) + u.shape[1:])


def d_farfield(kernel: HelmholtzKernel, xi: DeformationField, density, directions: np.ndarray,
               surface: ReferenceSurface) -> np.ndarray:
    """Derivative kernel exp(-i kappa d . y)(div_Gamma xi - i kappa d . xi)."""
    u = _as_density(density)
    out = farfield_moment(kernel, surface, directions, u.reshape(u.shape[0], -1), xi=xi).d
    return out.reshape((out.shape[0],) + u.shape[1:])
