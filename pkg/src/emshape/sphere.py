"""Spherical harmonics and the Gauss-Legendre x uniform-phi grid on S^2.

Harmonics are the orthonormal complex family with the Condon-Shortley phase,

    Y_n^m(theta, phi) = Pbar_n^m(cos theta) exp(i m phi),
    Y_n^{-m} = (-1)^m conj(Y_n^m),

stored in the flat ordering ``index(n, m) = n*n + n + m``.

The grid uses Gauss-Legendre nodes in cos(theta) and a uniform rule in phi.
With ``n_theta >= L + 1`` and ``n_phi >= 2L + 1`` the quadrature integrates
products of two degree-L harmonics exactly, so analysis and synthesis are
mutually inverse on degree-L data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

logger = logging.getLogger(__name__)

FOUR_PI = 4.0 * np.pi


def n_coeffs(band_limit: int) -> int:
    """Number of harmonics of degree <= band_limit."""
    return (band_limit + 1) ** 2


def harmonic_index(n: int, m: int) -> int:
    """Flat index of Y_n^m."""
    if abs(m) > n:
        raise ValueError(f"order {m} exceeds degree {n}")
    return n * n + n + m


def degrees_orders(band_limit: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree and order arrays matching the flat ordering."""
    n = np.concatenate([np.full(2 * k + 1, k) for k in range(band_limit + 1)])
    m = np.concatenate([np.arange(-k, k + 1) for k in range(band_limit + 1)])
    return n, m


def _legendre_table(band_limit: int, cos_t: np.ndarray, sin_t: np.ndarray) -> np.ndarray:
    """Orthonormal associated Legendre values Pbar_n^m for m >= 0.

    Returns an array of shape (L+1, L+1, P) indexed [n, m, point]; entries
    with m > n are zero.
    """
    L = band_limit
    out = np.zeros((L + 1, L + 1) + cos_t.shape)
    pmm = np.full(cos_t.shape, 1.0 / np.sqrt(FOUR_PI))
    for m in range(L + 1):
        if m > 0:
            pmm = -np.sqrt((2 * m + 1) / (2.0 * m)) * sin_t * pmm
        out[m, m] = pmm
        if m + 1 <= L:
            out[m + 1, m] = np.sqrt(2 * m + 3.0) * cos_t * pmm
        for n in range(m + 2, L + 1):
            a = np.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
            b = np.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
            out[n, m] = a * (cos_t * out[n - 1, m] - b * out[n - 2, m])
    return out


def sph_harm_all(band_limit: int, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """All Y_n^m with n <= band_limit at the given angles, shape (P, (L+1)^2)."""
    theta = np.asarray(theta, dtype=float).ravel()
    phi = np.asarray(phi, dtype=float).ravel()
    L = band_limit
    table = _legendre_table(L, np.cos(theta), np.sin(theta))
    out = np.empty((theta.size, n_coeffs(L)), dtype=complex)
    for m in range(L + 1):
        phase = np.exp(1j * m * phi)
        sign = (-1.0) ** m
        for n in range(m, L + 1):
            val = table[n, m] * phase
            out[:, n * n + n + m] = val
            if m > 0:
                out[:, n * n + n - m] = sign * np.conj(val)
    return out


def sph_harm_points(band_limit: int, points: np.ndarray) -> np.ndarray:
    """All Y_n^m evaluated at unit vectors ``points`` of shape (..., 3)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    theta = np.arccos(np.clip(pts[:, 2], -1.0, 1.0))
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    return sph_harm_all(band_limit, theta, phi)


def sph_harm_dtheta(band_limit: int, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Polar derivatives dY_n^m/dtheta, shape (P, (L+1)^2). Requires sin(theta) != 0."""
    theta = np.asarray(theta, dtype=float).ravel()
    phi = np.asarray(phi, dtype=float).ravel()
    L = band_limit
    c, s = np.cos(theta), np.sin(theta)
    table = _legendre_table(L + 1, c, s)
    cot = c / s
    out = np.empty((theta.size, n_coeffs(L)), dtype=complex)
    for m in range(L + 1):
        phase = np.exp(1j * m * phi)
        sign = (-1.0) ** m
        for n in range(m, L + 1):
            upper = table[n, m + 1] if m + 1 <= n else 0.0
            dp = m * cot * table[n, m] + np.sqrt((n - m) * (n + m + 1.0)) * upper
            val = dp * phase
            out[:, n * n + n + m] = val
            if m > 0:
                out[:, n * n + n - m] = sign * np.conj(val)
    return out


@dataclass(frozen=True, eq=False)
class ReferenceSurface:
    """Quadrature grid on the unit sphere with tangent frames.

    Attributes
    ----------
    n_theta, n_phi : int
        Node counts in the polar and azimuthal directions.
    band_limit : int
        Maximum degree L of represented fields.
    theta, phi : np.ndarray, shape (N,)
        Node angles, theta-major ordering.
    nodes : np.ndarray, shape (N, 3)
        Unit position vectors, which are also the outward normals.
    weights : np.ndarray, shape (N,)
        Quadrature weights summing to 4*pi.
    e1, e2 : np.ndarray, shape (N, 3)
        Orthonormal tangent frame (e_theta, e_phi) with e1 x e2 = n.
    """

    n_theta: int
    n_phi: int
    band_limit: int
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    e1: np.ndarray = field(repr=False)
    e2: np.ndarray = field(repr=False)

    @property
    def normals(self) -> np.ndarray:
        return self.nodes

    @property
    def frames(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.e1, self.e2, self.nodes

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def resolved_degree(self) -> int:
        """Largest degree whose analysis is exact on this grid."""
        return max(self.band_limit, min(self.n_theta - 1, (self.n_phi - 1) // 2))

    @cached_property
    def synthesis_full(self) -> np.ndarray:
        """Harmonics up to the resolved degree at the nodes, (N, n_g)."""
        return sph_harm_all(self.resolved_degree, self.theta, self.phi)

    @cached_property
    def analysis_full(self) -> np.ndarray:
        """Quadrature projection onto harmonics up to the resolved degree, (n_g, N)."""
        return np.conj(self.synthesis_full).T * self.weights[None, :]

    @property
    def synthesis(self) -> np.ndarray:
        return self.synthesis_full[:, : n_coeffs(self.band_limit)]

    @property
    def analysis(self) -> np.ndarray:
        return self.analysis_full[: n_coeffs(self.band_limit)]

    @cached_property
    def dtheta_matrix(self) -> np.ndarray:
        """Nodal matrix of d/dtheta after projection to the resolved degree."""
        Lg = self.resolved_degree
        return sph_harm_dtheta(Lg, self.theta, self.phi) @ self.analysis_full

    @cached_property
    def dphi_sin_matrix(self) -> np.ndarray:
        """Nodal matrix of (1/sin theta) d/dphi after projection."""
        Lg = self.resolved_degree
        _, m = degrees_orders(Lg)
        ym = self.synthesis_full * (1j * m)[None, :] / np.sin(self.theta)[:, None]
        return ym @ self.analysis_full

    @cached_property
    def grad_matrix(self) -> np.ndarray:
        """Tangential gradient as a (3, N, N) nodal operator."""
        dt, dp = self.dtheta_matrix, self.dphi_sin_matrix
        return self.e1.T[:, :, None] * dt[None] + self.e2.T[:, :, None] * dp[None]

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Quadrature over the sphere along the first axis."""
        return np.tensordot(self.weights, values, axes=(0, 0))

    def l2_norm(self, values: np.ndarray) -> float:
        v = np.asarray(values)
        return float(np.sqrt(np.sum(self.weights * np.sum(np.abs(v.reshape(v.shape[0], -1)) ** 2, axis=1))))

    def max_spacing(self) -> float:
        """Largest geodesic gap between neighbouring nodes."""
        th = np.unique(self.theta)
        gaps = [np.max(np.diff(np.concatenate([[0.0], th, [np.pi]]))), 2 * np.pi / self.n_phi]
        return float(max(gaps))

    def validate(self, tol: float = 1e-12) -> None:
        """Check the grid invariants, raising ValueError on failure."""
        if abs(self.weights.sum() - FOUR_PI) > tol * FOUR_PI:
            raise ValueError("weights do not sum to 4*pi")
        n = self.nodes
        checks = [
            np.abs(np.linalg.norm(n, axis=1) - 1.0),
            np.abs(np.sum(self.e1 * n, axis=1)),
            np.abs(np.sum(self.e2 * n, axis=1)),
            np.abs(np.sum(self.e1 * self.e2, axis=1)),
        ]
        if max(float(c.max()) for c in checks) > tol:
            raise ValueError("tangent frames are not orthonormal")


def build_sphere_grid(n_theta: int, n_phi: int, band_limit: int) -> ReferenceSurface:
    """Gauss-Legendre(cos theta) x uniform(phi) grid resolving degree ``band_limit``.

    Raises
    ------
    ValueError
        If ``n_theta < band_limit + 1`` or ``n_phi < 2*band_limit + 1``.
    """
    if band_limit < 0:
        raise ValueError("band_limit must be non-negative")
    if n_theta < band_limit + 1 or n_phi < 2 * band_limit + 1:
        raise ValueError(
            f"grid ({n_theta}, {n_phi}) cannot resolve degree {band_limit}: "
            f"need n_theta >= {band_limit + 1} and n_phi >= {2 * band_limit + 1}"
        )
    mu, wmu = np.polynomial.legendre.leggauss(n_theta)
    mu, wmu = mu[::-1], wmu[::-1]
    th = np.arccos(mu)
    ph = 2.0 * np.pi * np.arange(n_phi) / n_phi
    theta = np.repeat(th, n_phi)
    phi = np.tile(ph, n_theta)
    weights = np.repeat(wmu, n_phi) * (2.0 * np.pi / n_phi)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    nodes = np.stack([st * cp, st * sp, ct], axis=1)
    e1 = np.stack([ct * cp, ct * sp, -st], axis=1)
    e2 = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
    surf = ReferenceSurface(n_theta, n_phi, band_limit, theta, phi, nodes, weights, e1, e2)
    surf.validate()
    logger.debug("built grid %dx%d (L=%d)", n_theta, n_phi, band_limit)
    return surf


def default_grid(band_limit: int, margin: int = 2) -> ReferenceSurface:
    """Grid resolving ``band_limit + margin`` so products with n stay exact."""
    Lg = band_limit + margin
    return build_sphere_grid(Lg + 1, 2 * Lg + 2, band_limit)


@lru_cache(maxsize=8)
def refined_grid(band_limit: int, margin: int = 8) -> ReferenceSurface:
    """Shared finer grid for sampling non-band-limited nodal products."""
    return default_grid(band_limit, margin)
