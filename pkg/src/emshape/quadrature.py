"""Rotated polar quadrature for weakly singular and near-singular surface integrals.

For a target at the reference point x the sphere is rotated so x sits at the
north pole. In the rotated polar coordinates (theta', phi') the area element
sin(theta') cancels a 1/|x - y| singularity, leaving a smooth integrand that
Gauss-Legendre in theta' on [0, pi] and the trapezoid rule in phi' integrate
spectrally. Densities given at grid nodes are carried to the rotated points
through their spherical-harmonic expansion.

Targets on one grid latitude share the rotated harmonic table up to a phase,
since a rotation about the z axis by phi multiplies Y_n^m by exp(i m phi).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .sphere import ReferenceSurface, degrees_orders, sph_harm_points

logger = logging.getLogger(__name__)

SELF_TEST_TOL = 1e-8
CACHE_LIMIT = 8_000_000


class QuadratureError(RuntimeError):
    """Raised when the singular rule fails its self-test."""


def rotation_to(theta: float, phi: float) -> np.ndarray:
    """R_z(phi) R_y(theta): maps the north pole to the direction (theta, phi)."""
    ct, st, cp, sp = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    Ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    Rz = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
    return Rz @ Ry


def polar_points(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    st = np.sin(tt)
    return np.stack([st * np.cos(pp), st * np.sin(pp), np.cos(tt)], axis=-1).reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class PolarRule:
    """Tensor rule in pole-centred coordinates; weights include sin(theta')."""

    theta: np.ndarray
    phi: np.ndarray
    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def uniform(cls, n_theta: int, n_phi: int) -> "PolarRule":
        x, w = np.polynomial.legendre.leggauss(n_theta)
        th = 0.5 * np.pi * (x + 1.0)
        wt = 0.5 * np.pi * w * np.sin(th)
        ph = 2.0 * np.pi * np.arange(n_phi) / n_phi
        weights = np.repeat(wt, n_phi) * (2.0 * np.pi / n_phi)
        return cls(th, ph, polar_points(th, ph), weights)

    @classmethod
    def graded(cls, scale: float, n_per_panel: int, n_phi: int) -> "PolarRule":
        """Composite Gauss rule with panels doubling in width away from the pole."""
        edges = [0.0]
        h = max(scale, 1e-4)
        while edges[-1] + h < np.pi - 0.5 * h:
            edges.append(edges[-1] + h)
            h *= 2.0
        edges.append(np.pi)
        x, w = np.polynomial.legendre.leggauss(n_per_panel)
        th, wt = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            th.append(0.5 * (b - a) * x + 0.5 * (b + a))
            wt.append(0.5 * (b - a) * w)
        th = np.concatenate(th)
        wt = np.concatenate(wt) * np.sin(th)
        ph = 2.0 * np.pi * np.arange(n_phi) / n_phi
        weights = np.repeat(wt, n_phi) * (2.0 * np.pi / n_phi)
        return cls(th, ph, polar_points(th, ph), weights)

    @property
    def size(self) -> int:
        return self.weights.size


@dataclass(eq=False)
class SingularRule:
    """Rotate-to-pole rule for all grid nodes of a reference surface.

    Parameters
    ----------
    surface : ReferenceSurface
    n_theta, n_phi : int, optional
        Auxiliary polar grid; defaults scale with the resolved degree.
    """

    surface: ReferenceSurface
    n_theta: int = 0
    n_phi: int = 0
    _tables: dict = field(default_factory=dict, repr=False)
    _checked: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        Lg = self.surface.resolved_degree
        if self.n_theta <= 0:
            self.n_theta = Lg + 14
        if self.n_phi <= 0:
            self.n_phi = 2 * Lg + 16

    @cached_property
    def polar(self) -> PolarRule:
        return PolarRule.uniform(self.n_theta, self.n_phi)

    @property
    def latitudes(self) -> np.ndarray:
        return self.surface.theta[:: self.surface.n_phi]

    @property
    def azimuths(self) -> np.ndarray:
        return self.surface.phi[: self.surface.n_phi]

    def _table(self, lat: int) -> np.ndarray:
        """Harmonics at the polar points rotated to (theta_lat, 0), (Q, n_g)."""
        if lat in self._tables:
            return self._tables[lat]
        R = rotation_to(self.latitudes[lat], 0.0)
        tab = sph_harm_points(self.surface.resolved_degree, self.polar.points @ R.T)
        s = self.surface
        if s.n_theta * tab.size <= CACHE_LIMIT:
            self._tables[lat] = tab
        return tab

    def aux_points(self, lat: int) -> np.ndarray:
        """Rotated polar points for all targets on latitude ``lat``, (n_phi, Q, 3)."""
        out = []
        for ph in self.azimuths:
            R = rotation_to(self.latitudes[lat], ph)
            out.append(self.polar.points @ R.T)
        return np.stack(out)

    def assemble(self, kernel_fn) -> np.ndarray:
        """Nodal matrix of y -> kernel_fn(x_i, y) u(y) integrated over the sphere.

        ``kernel_fn(lat, targets, aux)`` receives the latitude index, the
        target node indices and the rotated points (n, Q, 3), and returns
        kernel samples of shape (n, Q, *comp) already multiplied by any
        area-ratio factor. The result has shape (N, *comp, N).
        """
        s = self.surface
        _, m = degrees_orders(s.resolved_degree)
        w = self.polar.weights
        rows = None
        comp = ()
        for lat in range(s.n_theta):
            idx = np.arange(lat * s.n_phi, (lat + 1) * s.n_phi)
            K = kernel_fn(lat, idx, self.aux_points(lat))
            comp = K.shape[2:]
            Kw = (K * w.reshape((1, -1) + (1,) * len(comp))).reshape(len(idx), w.size, -1)
            r = np.swapaxes(Kw, 1, 2) @ self._table(lat)  # (n, C, n_g)
            r = r * np.exp(1j * np.outer(self.azimuths, m))[:, None, :]
            if rows is None:
                rows = np.empty((s.n_nodes,) + r.shape[1:], dtype=complex)
            rows[idx] = r
        out = rows @ s.analysis_full  # (N, C, N)
        return out.reshape((s.n_nodes,) + comp + (s.n_nodes,))

    def self_test(self) -> float:
        """Max error of the Coulomb single layer applied to 1 (exact value 1)."""
        s = self.surface

        def k(lat, idx, aux):
            x = s.nodes[idx][:, None, :]
            rho = np.linalg.norm(x - aux, axis=-1)
            return 1.0 / (4.0 * np.pi * rho)

        val = self.assemble(k) @ np.ones(s.n_nodes)
        err = float(np.abs(val - 1.0).max())
        if err > SELF_TEST_TOL:
            raise QuadratureError(f"singular rule self-test failed: error {err:.3e}")
        self._checked = True
        return err

    def ensure_checked(self) -> None:
        if not self._checked:
            self.self_test()


_RULES: dict[int, SingularRule] = {}


def singular_rule(surface: ReferenceSurface) -> SingularRule:
    """Shared, self-tested rule per surface object."""
    key = id(surface)
    rule = _RULES.get(key)
    if rule is None or rule.surface is not surface:
        rule = SingularRule(surface)
        rule.ensure_checked()
        _RULES[key] = rule
    return rule


def near_rule_points(centre: np.ndarray, rule: PolarRule) -> np.ndarray:
    """Points of a polar rule rotated so its pole sits at ``centre``."""
    c = np.asarray(centre, float)
    c = c / np.linalg.norm(c)
    theta = np.arccos(np.clip(c[2], -1.0, 1.0))
    phi = np.arctan2(c[1], c[0])
    return rule.points @ rotation_to(theta, phi).T
