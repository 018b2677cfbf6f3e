"""Deformation fields and transported geometry of the perturbed sphere.

A deformation r moves the reference sphere to Gamma_r = (Id + r)(Gamma).
Pulled back to Gamma, the moved surface is described nodewise by

    F      = Id + [Dr]                 (space Jacobian, [Dv] = transpose of [grad v])
    omega  = com(F) n = det(F) F^{-T} n
    J      = |omega|                   (area ratio)
    N      = omega / J                 (transported unit normal)

First and second Gateaux derivatives at r = 0 are written with the
tangential Jacobian A = [grad_Gamma xi] = P [Dxi]^T, whose i-th column is the
tangential gradient of the component xi_i:

    dJ[xi]        = Tr A = div_Gamma xi
    dN[xi]        = -A n
    d2J[xi1,xi2]  = -Tr(A2 A1) + Tr A1 Tr A2 + (A1 n . A2 n)
    d2N[xi1,xi2]  = A2 A1 n + A1 A2 n - (A1 n . A2 n) n
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import ScalarField
from .sphere import ReferenceSurface

logger = logging.getLogger(__name__)

ZERO_SCALE = 1e-10

PRESET_KINDS = ("constant", "dilation", "rotation", "gaussian_bump", "harmonic_normal")
MIN_JACOBIAN = 0.1
MAX_C1_NORM = 0.3


class InadmissibleDeformation(ValueError):
    """Raised when t*r leaves the admissible neighbourhood of zero."""


def _solid_harmonic_terms(degree: int, order: int) -> list[tuple[float, int, int]]:
    """Terms (a, p, k) with r^(n-m) Pn^(m)(z/r) = sum a z^p (r^2)^k."""
    n, m = degree, order
    power = np.polynomial.legendre.leg2poly([0.0] * n + [1.0])
    deriv = np.polynomial.polynomial.polyder(power, m) if m > 0 else power
    terms = []
    for p, a in enumerate(deriv):
        if abs(a) > 0 and (n - m - p) % 2 == 0:
            terms.append((float(a), p, (n - m - p) // 2))
    return terms


def _harmonic_norm(degree: int, order: int) -> float:
    from math import factorial
    n, m = degree, order
    return np.sqrt((2 * n + 1) / (4 * np.pi) * factorial(n - m) / factorial(n + m))


@dataclass(frozen=True, eq=False)
class DeformationField:
    """Closed-form vector field on R^3 with analytic space Jacobian.

    Attributes
    ----------
    kind : str
        One of ``PRESET_KINDS``.
    params : dict
        Preset parameters (see :func:`make_deformation`).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in PRESET_KINDS:
            raise ValueError(f"unknown deformation kind {self.kind!r}")

    @property
    def tag(self) -> str:
        items = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({items})"

    def eval(self, x: np.ndarray) -> np.ndarray:
        """Field values at points ``x`` of shape (..., 3)."""
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k == "constant":
            return np.broadcast_to(np.asarray(p["c"], float), x.shape).copy()
        if k == "dilation":
            return p.get("scale", 1.0) * x
        if k == "rotation":
            return np.cross(np.broadcast_to(np.asarray(p["omega"], float), x.shape), x)
        if k == "gaussian_bump":
            g = self._bump(x)
            return g[..., None] * np.asarray(p["amp"], float)
        h, _ = self._harmonic(x)
        return p.get("amp", 1.0) * h[..., None] * x

    def jac(self, x: np.ndarray) -> np.ndarray:
        """Space Jacobian [D xi] with entries d xi_i / d x_j, shape (..., 3, 3)."""
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        eye = np.broadcast_to(np.eye(3), x.shape + (3,))
        if k == "constant":
            return np.zeros(x.shape + (3,))
        if k == "dilation":
            return p.get("scale", 1.0) * eye.copy()
        if k == "rotation":
            w = np.asarray(p["omega"], float)
            skew = np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])
            return np.broadcast_to(skew, x.shape + (3,)).copy()
        if k == "gaussian_bump":
            c = np.asarray(p["center"], float)
            w = float(p["width"])
            g = self._bump(x)
            grad = -2.0 * (x - c) / w**2 * g[..., None]
            return np.asarray(p["amp"], float)[:, None] * grad[..., None, :]
        h, gh = self._harmonic(x)
        a = p.get("amp", 1.0)
        return a * (h[..., None, None] * eye + x[..., :, None] * gh[..., None, :])

    def _bump(self, x: np.ndarray) -> np.ndarray:
        c = np.asarray(self.params["center"], float)
        w = float(self.params["width"])
        return np.exp(-np.sum((x - c) ** 2, axis=-1) / w**2)

    def _harmonic(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Real part of the orthonormal solid harmonic and its gradient."""
        n = int(self.params.get("degree", 2))
        m = int(self.params.get("order", 0))
        s = np.sum(x * x, axis=-1)
        z = x[..., 2]
        w = (x[..., 0] + 1j * x[..., 1]) ** m
        if m > 0:
            dw = m * (x[..., 0] + 1j * x[..., 1]) ** (m - 1)
        else:
            dw = np.zeros_like(w)
        q = np.zeros_like(s)
        dq = np.zeros(x.shape)
        for a, pz, ks in _solid_harmonic_terms(n, m):
            q = q + a * z**pz * s**ks
            if pz > 0:
                dq[..., 2] += a * pz * z ** (pz - 1) * s**ks
            if ks > 0:
                dq += (a * z**pz * ks * s ** (ks - 1))[..., None] * 2.0 * x
        norm = _harmonic_norm(n, m) * (-1.0) ** m
        h = np.real(w * q) * norm
        gw = np.stack([dw, 1j * dw, np.zeros_like(dw)], axis=-1)
        grad = np.real(gw * q[..., None] + w[..., None] * dq) * norm
        return h, grad

    def c1_norm(self, points: np.ndarray) -> float:
        """max(|xi|) + max(||D xi||_2) over the given points."""
        v = np.linalg.norm(self.eval(points), axis=-1).max()
        j = np.linalg.norm(self.jac(points), ord=2, axis=(-2, -1)).max()
        return float(v + j)

    def admissibility_radius(self, surface: ReferenceSurface) -> float:
        """Largest |t| keeping the C1 bound; infinite for the zero field."""
        c1 = self.c1_norm(surface.nodes)
        return float("inf") if c1 == 0 else MAX_C1_NORM / c1


def _fmt(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ";".join(f"{float(a):g}" for a in v) + "]"
    return f"{v:g}" if isinstance(v, float) else str(v)


def make_deformation(kind: str, **params) -> DeformationField:
    """Build a preset with defaults.

    constant: c=(0, 0, 1); dilation: scale=1; rotation: omega=(0, 0, 1);
    gaussian_bump: center=(0, 0, 1), width=0.8, amp=(0.3, 0.1, 1);
    harmonic_normal: degree=2, order=1, amp=1.
    """
    defaults = {
        "constant": {"c": (0.0, 0.0, 1.0)},
        "dilation": {"scale": 1.0},
        "rotation": {"omega": (0.0, 0.0, 1.0)},
        "gaussian_bump": {"center": (0.0, 0.0, 1.0), "width": 0.8, "amp": (0.3, 0.1, 1.0)},
        "harmonic_normal": {"degree": 2, "order": 1, "amp": 1.0},
    }
    if kind not in defaults:
        raise ValueError(f"unknown deformation kind {kind!r}")
    merged = dict(defaults[kind])
    unknown = set(params) - set(merged)
    if unknown:
        raise ValueError(f"unknown parameters for {kind}: {sorted(unknown)}")
    merged.update(params)
    for key, val in merged.items():
        if isinstance(val, (list, tuple, np.ndarray)):
            merged[key] = tuple(float(a) for a in val)
    return DeformationField(kind, merged)


@dataclass(frozen=True, eq=False)
class DeformedGeometry:
    """Transported geometry of Gamma_r sampled at reference points.

    Attributes
    ----------
    J : np.ndarray, shape (P,)
        Area ratio.
    N : np.ndarray, shape (P, 3)
        Transported unit normal.
    omega : np.ndarray, shape (P, 3)
        Unnormalized cofactor normal.
    F : np.ndarray, shape (P, 3, 3)
        Id + t [Dr] at the points.
    points : np.ndarray, shape (P, 3)
        Moved points x + t r(x).
    """

    J: np.ndarray
    N: np.ndarray
    omega: np.ndarray
    F: np.ndarray
    points: np.ndarray

    def jacobian_field(self, surface: ReferenceSurface) -> ScalarField:
        return ScalarField(surface, self.J)


def cofactor(F: np.ndarray) -> np.ndarray:
    """com(F) = det(F) F^{-T} built from cross products of columns."""
    a, b, c = F[..., :, 0], F[..., :, 1], F[..., :, 2]
    return np.stack([np.cross(b, c), np.cross(c, a), np.cross(a, b)], axis=-1)


def transport_points(points: np.ndarray, r: DeformationField | None, t: float) -> DeformedGeometry:
    """Transported quantities at unit-sphere points (normals equal positions)."""
    pts = np.asarray(points, dtype=float)
    eye = np.broadcast_to(np.eye(3), pts.shape + (3,))
    if r is None or t == 0.0:
        F = eye.copy()
        moved = pts.copy()
    else:
        F = eye + t * r.jac(pts)
        moved = pts + t * r.eval(pts)
    omega = np.einsum("...ij,...j->...i", cofactor(F), pts)
    J = np.linalg.norm(omega, axis=-1)
    return DeformedGeometry(J, omega / J[..., None], omega, F, moved)


def check_admissible(surface: ReferenceSurface, r: DeformationField | None, t: float) -> None:
    """Raise InadmissibleDeformation unless min J > 0.1 and ||t r||_C1 < 0.3."""
    if r is None or t == 0.0:
        return
    c1 = abs(t) * r.c1_norm(surface.nodes)
    if c1 >= MAX_C1_NORM:
        raise InadmissibleDeformation(f"||t r||_C1 = {c1:.3g} exceeds {MAX_C1_NORM}")
    J = transport_points(surface.nodes, r, t).J
    if J.min() <= MIN_JACOBIAN:
        raise InadmissibleDeformation(f"min J = {J.min():.3g} not above {MIN_JACOBIAN}")


def deformed_geometry(surface: ReferenceSurface, r: DeformationField | None, t: float) -> DeformedGeometry:
    """J_r, N(r) and omega_r at the grid nodes for the deformation t*r."""
    check_admissible(surface, r, t)
    return transport_points(surface.nodes, r, t)


def tangential_jacobian(points: np.ndarray, xi: DeformationField) -> np.ndarray:
    """[grad_Gamma xi] = P [D xi]^T at unit-sphere points, shape (P, 3, 3)."""
    pts = np.asarray(points, dtype=float)
    proj = np.eye(3) - pts[..., :, None] * pts[..., None, :]
    return proj @ np.swapaxes(xi.jac(pts), -1, -2)


def d_jacobian(surface: ReferenceSurface, xi: DeformationField) -> ScalarField:
    """Derivative of J_r at r = 0 in direction xi (the surface divergence of xi)."""
    from .surfops import div_gamma

    return div_gamma(xi.eval(surface.nodes), surface=surface, jac=xi.jac(surface.nodes))


def d_normal(surface: ReferenceSurface, xi: DeformationField) -> np.ndarray:
    """Derivative of N(r) at r = 0: -[grad_Gamma xi] n."""
    A = tangential_jacobian(surface.nodes, xi)
    return -np.einsum("pij,pj->pi", A, surface.normals)


def d2_jacobian(surface: ReferenceSurface, xi1: DeformationField, xi2: DeformationField) -> ScalarField:
    """Second derivative of J_r at r = 0 in directions (xi1, xi2)."""
    n = surface.normals
    A1 = tangential_jacobian(n, xi1)
    A2 = tangential_jacobian(n, xi2)
    a1 = np.einsum("pij,pj->pi", A1, n)
    a2 = np.einsum("pij,pj->pi", A2, n)
    # symmetrized so swapping the directions is exact in floating point
    tr12 = 0.5 * (np.einsum("pij,pji->p", A2, A1) + np.einsum("pij,pji->p", A1, A2))
    vals = -tr12 + np.trace(A1, axis1=1, axis2=2) * np.trace(A2, axis1=1, axis2=2) + np.sum(a1 * a2, axis=1)
    return ScalarField(surface, vals)


def d2_normal(surface: ReferenceSurface, xi1: DeformationField, xi2: DeformationField) -> np.ndarray:
    """Second derivative of N(r) at r = 0 in directions (xi1, xi2)."""
    n = surface.normals
    A1 = tangential_jacobian(n, xi1)
    A2 = tangential_jacobian(n, xi2)
    a1 = np.einsum("pij,pj->pi", A1, n)
    a2 = np.einsum("pij,pj->pi", A2, n)
    out = np.einsum("pij,pj->pi", A2, a1) + np.einsum("pij,pj->pi", A1, a2)
    return out - np.sum(a1 * a2, axis=1)[:, None] * n


class _Sum:
    """Sum of deformation fields, used by the polarization oracle."""

    def __init__(self, *fields: DeformationField):
        self.fields = fields

    def eval(self, x):
        return sum(f.eval(x) for f in self.fields)

    def jac(self, x):
        return sum(f.jac(x) for f in self.fields)

    def c1_norm(self, points):
        v = np.linalg.norm(self.eval(points), axis=-1).max()
        j = np.linalg.norm(self.jac(points), ord=2, axis=(-2, -1)).max()
        return float(v + j)


def sum_fields(*fields: DeformationField):
    """Pointwise sum of deformation fields (eval/jac interface only)."""
    return _Sum(*fields)


def gateaux_fd(f: Callable[[float], np.ndarray], t: float, order: int = 1) -> np.ndarray:
    """Central difference of f at 0 with step t.

    order 1: (f(t) - f(-t)) / (2t); order 2: (f(t) - 2 f(0) + f(-t)) / t^2.
    """
    if t <= 0:
        raise ValueError("step must be positive")
    if order == 1:
        return (np.asarray(f(t)) - np.asarray(f(-t))) / (2.0 * t)
    if order == 2:
        return (np.asarray(f(t)) - 2.0 * np.asarray(f(0.0)) + np.asarray(f(-t))) / t**2
    raise ValueError("order must be 1 or 2")


@dataclass(frozen=True)
class ConvergenceResult:
    """Errors of a central-difference sweep against an analytic value.

    Attributes
    ----------
    steps : tuple of float
    abs_errors : tuple of float
        max-norm error per step.
    rel_errors : tuple of float
        abs error over max-norm of the analytic value.
    orders : tuple of float
        log2-type observed orders between consecutive steps.
    exact : bool
        True when every error sits at rounding level, so no order is defined.
    """

    steps: tuple
    abs_errors: tuple
    rel_errors: tuple
    orders: tuple
    exact: bool

    def order_within(self, lo: float, hi: float) -> bool:
        return self.exact or all(lo <= o <= hi for o in self.orders)

    @property
    def min_order(self) -> float:
        return float("nan") if self.exact else min(self.orders)

    @property
    def max_order(self) -> float:
        return float("nan") if self.exact else max(self.orders)


def fd_convergence(f: Callable[[float], np.ndarray], analytic: np.ndarray, steps=(1e-2, 5e-3, 2.5e-3),
                   order: int = 1, floor: float = 1e-11) -> ConvergenceResult:
    """Run gateaux_fd over ``steps`` and report observed convergence orders.

    Errors below ``floor`` relative to the analytic scale count as exact
    (for example polynomial dependence on t, where differences are exact).
    Relative errors fall back to absolute ones when the analytic value is
    zero to rounding.
    """
    analytic = np.asarray(analytic)
    scale = max(float(np.abs(analytic).max()), 1e-300)
    abs_err, rel_err = [], []
    cache: dict[float, np.ndarray] = {}

    def cached(s: float) -> np.ndarray:
        if s not in cache:
            cache[s] = np.asarray(f(s))
        return cache[s]

    for s in steps:
        err = float(np.abs(gateaux_fd(cached, s, order) - analytic).max())
        abs_err.append(err)
        rel_err.append(err / scale if scale > ZERO_SCALE else err)
    exact = max(rel_err) < floor or max(abs_err) < floor
    orders = []
    if not exact:
        for k in range(len(steps) - 1):
            ratio = steps[k] / steps[k + 1]
            e0, e1 = max(abs_err[k], 1e-300), max(abs_err[k + 1], 1e-300)
            orders.append(float(np.log(e0 / e1) / np.log(ratio)))
    return ConvergenceResult(tuple(steps), tuple(abs_err), tuple(rel_err), tuple(orders), exact)
