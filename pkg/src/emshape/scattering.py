"""Dielectric scattering by a deformed sphere and its shape derivative.

Single-density formulation with exterior ansatz

    E^s = -Psi_E^e j - i eta Psi_M^e C0* j,

exterior Dirichlet and Neumann traces

    gamma_D E^s = L_e j,    L_e = C_e - i eta (1/2 - M_e) C0*,
    gamma_N E^s = N_e j,    N_e = -(1/2 - M_e) + i eta C_e C0*,

interior field

    E^i = -(1/rho) Psi_E^i (gamma_N E^inc + N_e j) - Psi_M^i (gamma_D E^inc + L_e j),

and the equation from the interior Dirichlet trace

    S j = rho (-1/2 + M_i) L_e j + C_i N_e j
        = -rho (-1/2 + M_i) gamma_D E^inc - C_i gamma_N E^inc.

Traces are gamma_D v = N x v and gamma_N v = kappa_e^{-1} N x curl v. The
whole chain runs on ``_dual`` values, so the derivative bundle applies the
product rule over every factor: potentials, C0*, S (through S^{-1}) and
the incident traces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _dual as du
from ._dual import Dual
from .emfield import (EMContext, ScatteringConfig, c0star_blocks, c_blocks, farfields, m_blocks,
                      potentials)
from .geometry import DeformationField, make_deformation
from .sphere import ReferenceSurface, default_grid
from .surfops import HDensity

logger = logging.getLogger(__name__)

COND_LIMIT = 1e8


class ConditioningError(RuntimeError):
    """Raised when the assembled system is too ill-conditioned to trust."""


@dataclass(frozen=True)
class IncidentField:
    """Plane wave E^inc(x) = amplitude * P exp(i kappa d . x)."""

    direction: tuple = (0.0, 0.0, 1.0)
    polarization: tuple = (1.0, 0.0, 0.0)
    kappa: complex = 1.0
    amplitude: complex = 1.0

    def __post_init__(self) -> None:
        d = np.asarray(self.direction, float)
        P = np.asarray(self.polarization, complex)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        if abs(np.dot(P, d)) > 1e-12:
            raise ValueError("polarization must be orthogonal to the direction")
        if not np.real(self.kappa) > 0:
            raise ValueError("incident wavenumber must be positive")

    @property
    def d(self) -> np.ndarray:
        return np.asarray(self.direction, float)

    @property
    def P(self) -> np.ndarray:
        return self.amplitude * np.asarray(self.polarization, complex)

    def phase(self, x: np.ndarray) -> np.ndarray:
        return np.exp(1j * self.kappa * (np.asarray(x) @ self.d))

    def eval(self, x: np.ndarray) -> np.ndarray:
        return self.phase(x)[..., None] * self.P

    def curl(self, x: np.ndarray) -> np.ndarray:
        return self.phase(x)[..., None] * (1j * self.kappa * np.cross(self.d, self.P))

    def at(self, X: Dual, which: str = "E") -> Dual:
        """Field (or curl) at moving points X with dE = (grad E) dX."""
        f = self.eval if which == "E" else self.curl
        val = f(X.v)
        if X.d is None:
            return Dual(val)
        return Dual(val, val * (1j * self.kappa * (X.d @ self.d))[:, None])


def _trace_coeffs(ctx: EMContext, g: Dual) -> Dual:
    """Helmholtz coefficients of a tangential field on Gamma_r."""
    g = g.reshape(g.shape[0], 3, -1)
    p = ctx.lap_inv(ctx.div(g))
    q = -ctx.lap_inv(ctx.curls(g))
    return du.concatenate([p, q], axis=0)


def incident_traces(ctx: EMContext, inc: IncidentField, kappa_e: complex) -> tuple[Dual, Dual]:
    """(gamma_D, gamma_N) of the incident wave as Helmholtz coefficients (2 n1, 1)."""
    N = ctx.N
    gD = du.cross(N, inc.at(ctx.X, "E"), axis=1)
    gN = du.cross(N, inc.at(ctx.X, "curl"), axis=1) * (1.0 / kappa_e)
    return _trace_coeffs(ctx, gD), _trace_coeffs(ctx, gN)


def trace_incident(inc: IncidentField, surface: ReferenceSurface, r: DeformationField | None = None,
                   t: float = 0.0, which: str = "D", kappa_e: complex | None = None) -> HDensity:
    """Transported trace of the incident field in Helmholtz coordinates."""
    if which not in ("D", "N"):
        raise ValueError("which must be 'D' or 'N'")
    kappa_e = inc.kappa if kappa_e is None else kappa_e
    ctx = EMContext(surface, r, t)
    gD, gN = incident_traces(ctx, inc, kappa_e)
    c = (gD if which == "D" else gN).v[:, 0]
    return HDensity.from_coeff_vector(surface, c)


class ScatteringPipeline:
    """All solve quantities for one geometry context (values or derivatives)."""

    def __init__(self, ctx: EMContext, config: ScatteringConfig, inc: IncidentField):
        self.ctx, self.config, self.inc = ctx, config, inc

    @cached_property
    def blocks(self) -> dict:
        ctx, cfg = self.ctx, self.config
        return {"Ci": c_blocks(ctx, cfg.kappa_i), "Ce": c_blocks(ctx, cfg.kappa_e),
                "Mi": m_blocks(ctx, cfg.kappa_i), "Me": m_blocks(ctx, cfg.kappa_e),
                "C0": c0star_blocks(ctx)}

    @cached_property
    def parts(self) -> dict:
        b, cfg = self.blocks, self.config
        eye = np.eye(2 * self.ctx.n1)
        ieta = 1j * cfg.eta
        Le = b["Ce"] - du.matmul(0.5 * eye - b["Me"], b["C0"]) * ieta
        Ne = (b["Me"] - 0.5 * eye) + du.matmul(b["Ce"], b["C0"]) * ieta
        Ai = b["Mi"] - 0.5 * eye
        S = du.matmul(Ai, Le) * cfg.rho + du.matmul(b["Ci"], Ne)
        return {"Le": Le, "Ne": Ne, "Ai": Ai, "S": S}

    @property
    def S(self) -> Dual:
        return self.parts["S"]

    @cached_property
    def traces(self) -> tuple[Dual, Dual]:
        return incident_traces(self.ctx, self.inc, self.config.kappa_e)

    @cached_property
    def rhs(self) -> Dual:
        gD, gN = self.traces
        return -(du.matmul(self.parts["Ai"], gD) * self.config.rho) - du.matmul(self.blocks["Ci"], gN)

    @cached_property
    def density(self) -> Dual:
        return du.solve(self.S, self.rhs)

    @cached_property
    def exterior_densities(self) -> Dual:
        """Columns j and C0* j."""
        j = self.density
        return du.concatenate([j, du.matmul(self.blocks["C0"], j)], axis=1)

    @cached_property
    def interior_densities(self) -> Dual:
        """Columns gamma_N E^inc + N_e j and gamma_D E^inc + L_e j."""
        gD, gN = self.traces
        j = self.density
        a = gN + du.matmul(self.parts["Ne"], j)
        b = gD + du.matmul(self.parts["Le"], j)
        return du.concatenate([a, b], axis=1)

    def scattered(self, targets: np.ndarray, **near) -> tuple[Dual, Dual]:
        """E^s and curl E^s at exterior targets, (n, 3)."""
        k = self.config.kappa_e
        ieta = 1j * self.config.eta
        E, M = potentials(self.ctx, k, self.exterior_densities, targets, **near)
        field_ = -E[:, :, 0] - M[:, :, 1] * ieta
        curl = -(M[:, :, 0] * k) - E[:, :, 1] * (ieta * k)
        return field_, curl

    def interior(self, targets: np.ndarray, **near) -> tuple[Dual, Dual]:
        """E^i and curl E^i at interior targets, (n, 3)."""
        k = self.config.kappa_i
        rho = self.config.rho
        E, M = potentials(self.ctx, k, self.interior_densities, targets, **near)
        field_ = -(E[:, :, 0] * (1.0 / rho)) - M[:, :, 1]
        curl = -(M[:, :, 0] * (k / rho)) - E[:, :, 1] * k
        return field_, curl

    def farfield(self, directions: np.ndarray) -> Dual:
        """E^inf with E^s ~ exp(i k R)/(4 pi R) E^inf."""
        E, M = farfields(self.ctx, self.config.kappa_e, self.exterior_densities, directions)
        return -E[:, :, 0] - M[:, :, 1] * (1j * self.config.eta)


@dataclass(eq=False)
class SolutionBundle:
    """Solved density with field evaluators on Gamma_{t r}."""

    pipeline: ScatteringPipeline
    condition: float

    @property
    def surface(self) -> ReferenceSurface:
        return self.pipeline.ctx.surface

    @property
    def j(self) -> HDensity:
        return HDensity.from_coeff_vector(self.surface, self.pipeline.density.v[:, 0])

    def E_s(self, x: np.ndarray, **near) -> np.ndarray:
        return self.pipeline.scattered(np.atleast_2d(x), **near)[0].v

    def curl_E_s(self, x: np.ndarray, **near) -> np.ndarray:
        return self.pipeline.scattered(np.atleast_2d(x), **near)[1].v

    def E_i(self, x: np.ndarray, **near) -> np.ndarray:
        return self.pipeline.interior(np.atleast_2d(x), **near)[0].v

    def curl_E_i(self, x: np.ndarray, **near) -> np.ndarray:
        return self.pipeline.interior(np.atleast_2d(x), **near)[1].v

    def farfield(self, directions: np.ndarray) -> np.ndarray:
        return self.pipeline.farfield(np.atleast_2d(directions)).v


@dataclass(eq=False)
class DerivativeBundle:
    """Shape derivatives at r = 0 along xi of the fields and the far field."""

    pipeline: ScatteringPipeline

    @property
    def j(self) -> np.ndarray:
        return self.pipeline.density.deriv()[:, 0]

    def E_s(self, x: np.ndarray, **near) -> np.ndarray:
        return self.pipeline.scattered(np.atleast_2d(x), **near)[0].deriv()

    def curl_E_s(self, x: np.ndarray, **near) -> np.ndarray:
        return self.pipeline.scattered(np.atleast_2d(x), **near)[1].deriv()

    def E_i(self, x: np.ndarray, **near) -> np.ndarray:
        return self.pipeline.interior(np.atleast_2d(x), **near)[0].deriv()

    def curl_E_i(self, x: np.ndarray, **near) -> np.ndarray:
        return self.pipeline.interior(np.atleast_2d(x), **near)[1].deriv()

    def farfield(self, directions: np.ndarray) -> np.ndarray:
        return self.pipeline.farfield(np.atleast_2d(directions)).deriv()


def assemble_S(config: ScatteringConfig, surface: ReferenceSurface, r: DeformationField | None = None,
               t: float = 0.0, inc: IncidentField | None = None) -> np.ndarray:
    """The system matrix S on stacked Helmholtz coefficients."""
    inc = inc or IncidentField(kappa=config.kappa_e)
    return ScatteringPipeline(EMContext(surface, r, t), config, inc).S.v


def solve(config: ScatteringConfig, inc: IncidentField, surface: ReferenceSurface,
          r: DeformationField | None = None, t: float = 0.0, cond_limit: float = COND_LIMIT) -> SolutionBundle:
    """Dense direct solve of S j = rhs on Gamma_{t r}."""
    if abs(inc.kappa - config.kappa_e) > 1e-14 * abs(config.kappa_e):
        raise ValueError("incident wavenumber must equal kappa_e")
    pipe = ScatteringPipeline(EMContext(surface, r, t), config, inc)
    cond = float(np.linalg.cond(pipe.S.v))
    if cond > cond_limit:
        raise ConditioningError(f"condition estimate {cond:.3e} exceeds {cond_limit:.1e}")
    logger.debug("solve %s: cond(S) = %.3e", pipe.ctx.tag, cond)
    pipe.density  # noqa: B018 - solve eagerly so failures surface here
    return SolutionBundle(pipe, cond)


def d_solution(config: ScatteringConfig, inc: IncidentField, surface: ReferenceSurface,
               xi: DeformationField) -> DerivativeBundle:
    """Shape derivative of the solution at the reference sphere along xi.

    The exterior derivative expands into the five contributions

        (-dPsi_E - i eta dPsi_M C0* - i eta Psi_M dC0*) j
        + (-Psi_E - i eta Psi_M C0*) S^{-1} (-dS j)
        + (-Psi_E - i eta Psi_M C0*) S^{-1} (-rho dM_i gamma_D E^inc - dC_i gamma_N E^inc)
        + (-Psi_E - i eta Psi_M C0*) S^{-1} (-rho (-1/2 + M_i) d gamma_D E^inc)
        + (-Psi_E - i eta Psi_M C0*) S^{-1} (-C_i d gamma_N E^inc),

    which is exactly what the dual-number product rule accumulates.
    """
    pipe = ScatteringPipeline(EMContext(surface, xi=xi), config, inc)
    pipe.density  # noqa: B018
    return DerivativeBundle(pipe)


def magnetic_field(curl_E: np.ndarray, omega: float, mu: float) -> np.ndarray:
    """H = curl E / (i omega mu)."""
    return np.asarray(curl_E) / (1j * omega * mu)


# ---------------------------------------------------------------------------
# checks built on the solution
# ---------------------------------------------------------------------------
def surface_checkpoints(surface: ReferenceSurface, r: DeformationField | None, t: float,
                        count: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Off-grid reference points with transported positions and normals."""
    from .geometry import transport_points

    rng = np.random.default_rng(seed)
    ref = rng.standard_normal((count, 3))
    ref /= np.linalg.norm(ref, axis=1)[:, None]
    geo = transport_points(ref, r, t)
    return ref, geo.points, geo.N


def one_sided_limits(fn, ref: np.ndarray, pts: np.ndarray, normals: np.ndarray, side: int,
                     offsets=(0.02, 0.04, 0.06)) -> tuple[np.ndarray, np.ndarray]:
    """Polynomial extrapolation of fn along +-normal to the surface.

    With k offsets the samples are fitted exactly by a degree k-1 polynomial
    in the signed offset. Returns the extrapolated value and the
    extrapolated normal derivative. ``fn(targets, centres)`` evaluates the
    field near the surface.
    """
    s = np.asarray(offsets, float) * side
    if s.size < 2:
        raise ValueError("need at least two offsets")
    vals = np.stack([fn(pts + sk * normals, ref) for sk in s])
    V = np.vander(s, s.size, increasing=True)  # columns 1, s, s^2, ...
    coef = np.linalg.solve(V, vals.reshape(s.size, -1)).reshape(vals.shape)
    return coef[0], coef[1]


@dataclass
class TransmissionReport:
    electric: float
    magnetic: float


def transmission_residual(sol: SolutionBundle, count: int = 12, seed: int = 0,
                          offsets=(0.02, 0.04, 0.06)) -> TransmissionReport:
    """Relative jumps of n x E and of mu^{-1} n x curl E across Gamma."""
    pipe = sol.pipeline
    cfg, inc = pipe.config, pipe.inc
    ref, pts, nrm = surface_checkpoints(sol.surface, pipe.ctx.r, pipe.ctx.t, count, seed)

    def ext(x, c):
        E, cE = pipe.scattered(x, centres=c, near_scale=None)
        return np.concatenate([E.v + inc.eval(x), (cE.v + inc.curl(x)) / cfg.mu_e], axis=1)

    def inn(x, c):
        E, cE = pipe.interior(x, centres=c)
        return np.concatenate([E.v, cE.v / cfg.mu_i], axis=1)

    eo, _ = one_sided_limits(ext, ref, pts, nrm, +1, offsets)
    ei, _ = one_sided_limits(inn, ref, pts, nrm, -1, offsets)
    out = []
    for sl in (slice(0, 3), slice(3, 6)):
        a = np.cross(nrm, eo[:, sl])
        b = np.cross(nrm, ei[:, sl])
        out.append(float(np.linalg.norm(a - b) / np.linalg.norm(a)))
    return TransmissionReport(*out)


def silver_mueller(sol: SolutionBundle, radii=(20.0, 40.0), directions: np.ndarray | None = None) -> np.ndarray:
    """max |curl E^s x xh - i k E^s| over directions at each radius."""
    k = sol.pipeline.config.kappa_e
    if directions is None:
        directions = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 0.6, -0.8]])
    out = []
    for R in radii:
        x = R * directions
        E, cE = sol.pipeline.scattered(x)
        out.append(float(np.abs(np.cross(cE.v, directions) - 1j * k * E.v).max()))
    return np.asarray(out)


def farfield_limit(sol: SolutionBundle, directions: np.ndarray, radii=(50.0, 100.0)) -> np.ndarray:
    """Richardson-extrapolated 4 pi R exp(-i k R) E^s(R xh) from two radii."""
    k = sol.pipeline.config.kappa_e
    vals = []
    for R in radii:
        vals.append(4 * np.pi * R * np.exp(-1j * k * R) * sol.E_s(R * directions))
    r0, r1 = radii
    return (r1 * vals[1] - r0 * vals[0]) / (r1 - r0)


@dataclass
class CharacterizationReport:
    lhs_D: np.ndarray
    g_D: np.ndarray
    lhs_N: np.ndarray
    g_N: np.ndarray

    @property
    def residual_D(self) -> float:
        return float(np.linalg.norm(self.lhs_D - self.g_D) / max(np.linalg.norm(self.g_D), 1e-300))

    @property
    def residual_N(self) -> float:
        return float(np.linalg.norm(self.lhs_N - self.g_N) / max(np.linalg.norm(self.g_N), 1e-300))

    @property
    def abs_D(self) -> float:
        return float(np.abs(self.lhs_D - self.g_D).max())

    @property
    def abs_N(self) -> float:
        return float(np.abs(self.lhs_N - self.g_N).max())


def characterization_check(sol: SolutionBundle, dsol: DerivativeBundle, xi: DeformationField,
                           count: int = 12, seed: int = 1, offsets=(0.02, 0.04, 0.06)) -> CharacterizationReport:
    """Compare the jumps of the derivative fields with the boundary data g_D, g_N.

    With [F] = F^i - F^s - F^inc, dn = xi . n and c = curl_Gamma(dn) = grad_Gamma(dn) x n,

        g_D = -dn n x d/dn [E] + c (n . [E]),
        g_N = -dn n x d/dn [mu^{-1} curl E] + c (n . [mu^{-1} curl E]).
    """
    pipe, dpipe = sol.pipeline, dsol.pipeline
    cfg, inc = pipe.config, pipe.inc
    ref, pts, nrm = surface_checkpoints(sol.surface, None, 0.0, count, seed)

    def ext(x, c):
        E, cE = pipe.scattered(x, centres=c)
        return np.concatenate([E.v + inc.eval(x), (cE.v + inc.curl(x)) / cfg.mu_e], axis=1)

    def inn(x, c):
        E, cE = pipe.interior(x, centres=c)
        return np.concatenate([E.v, cE.v / cfg.mu_i], axis=1)

    def dext(x, c):
        E, cE = dpipe.scattered(x, centres=c)
        return np.concatenate([E.deriv(), cE.deriv() / cfg.mu_e], axis=1)

    def dinn(x, c):
        E, cE = dpipe.interior(x, centres=c)
        return np.concatenate([E.deriv(), cE.deriv() / cfg.mu_i], axis=1)

    vo, dno = one_sided_limits(ext, ref, pts, nrm, +1, offsets)
    vi, dni = one_sided_limits(inn, ref, pts, nrm, -1, offsets)
    do, _ = one_sided_limits(dext, ref, pts, nrm, +1, offsets)
    di, _ = one_sided_limits(dinn, ref, pts, nrm, -1, offsets)
    jump = vi - vo
    djump_n = dni - dno
    xn = np.sum(xi.eval(ref) * nrm, axis=1)
    # tangential gradient of xi . n on the unit sphere from the ambient Jacobian
    Jx = xi.jac(ref)
    grad = np.einsum("pji,pj->pi", Jx, nrm) + xi.eval(ref)
    grad = grad - np.sum(grad * nrm, axis=1)[:, None] * nrm
    curl_dn = np.cross(grad, nrm)
    out = []
    for sl in (slice(0, 3), slice(3, 6)):
        lhs = np.cross(nrm, di[:, sl] - do[:, sl])
        g = (-xn[:, None] * np.cross(nrm, djump_n[:, sl])
             + curl_dn * np.sum(nrm * jump[:, sl], axis=1)[:, None])
        out += [lhs, g]
    return CharacterizationReport(*out)


def fd_curl(fn, x: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Central-difference curl of a vector field at points x, (n, 3)."""
    x = np.atleast_2d(np.asarray(x, float))
    D = np.empty((x.shape[0], 3, 3), complex)  # D[:, a, b] = d_b F_a
    for b in range(3):
        e = np.zeros(3)
        e[b] = h
        D[:, :, b] = (fn(x + e) - fn(x - e)) / (2 * h)
    return np.stack([D[:, 2, 1] - D[:, 1, 2], D[:, 0, 2] - D[:, 2, 0], D[:, 1, 0] - D[:, 0, 1]], axis=1)


def maxwell_residual(field_fn, curl_fn, x: np.ndarray, kappa: complex, h: float = 1e-3) -> float:
    """max |curl curl E - kappa^2 E| / max |kappa^2 E| with the outer curl by Richardson FD."""
    c1 = fd_curl(curl_fn, x, h)
    c2 = fd_curl(curl_fn, x, 2 * h)
    cc = (4 * c1 - c2) / 3
    E = field_fn(np.atleast_2d(x))
    return float(np.abs(cc - kappa**2 * E).max() / np.abs(kappa**2 * E).max())


def curl_consistency(field_fn, curl_fn, x: np.ndarray, h: float = 1e-3) -> float:
    """Relative mismatch between the evaluated curl and its FD counterpart."""
    c = (4 * fd_curl(field_fn, x, h) - fd_curl(field_fn, x, 2 * h)) / 3
    ref = curl_fn(np.atleast_2d(x))
    return float(np.abs(c - ref).max() / np.abs(ref).max())


def rotation_equivariance(config: ScatteringConfig, surface: ReferenceSurface, angle: float = 0.7,
                          directions: np.ndarray | None = None) -> float:
    """Rotate the incident polarization about d on the sphere; E^inf must rotate with it.

    For the unit sphere the scattered far field of (d, R P) at R x equals
    R E^inf(x) for any rotation R about d. Returns the relative mismatch.
    """
    base = IncidentField(kappa=config.kappa_e)
    d = base.d
    K = np.array([[0, -d[2], d[1]], [d[2], 0, -d[0]], [-d[1], d[0], 0]])
    R = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K
    rot = IncidentField(tuple(d), tuple(R @ np.real(base.P)), config.kappa_e)
    if directions is None:
        rng = np.random.default_rng(3)
        directions = rng.standard_normal((6, 3))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
    f0 = solve(config, base, surface).farfield(directions)
    f1 = solve(config, rot, surface).farfield(directions @ R.T)
    return float(np.abs(f1 - f0 @ R.T).max() / np.abs(f0).max())


def translation_law(sol: SolutionBundle, c, directions: np.ndarray) -> np.ndarray:
    """Far-field derivative for a rigid shift c: i kappa ((d - xh) . c) E^inf(xh)."""
    k = sol.pipeline.config.kappa_e
    d = sol.pipeline.inc.d
    ph = 1j * k * ((d[None, :] - directions) @ np.asarray(c, float))
    return ph[:, None] * sol.farfield(directions)


def default_problem(band_limit: int = 10, identical: bool = False) -> tuple[ScatteringConfig, IncidentField,
                                                                            ReferenceSurface]:
    """Desk-scale configuration: kappa_e = 1, kappa_i = 1.5 (or equal media)."""
    cfg = ScatteringConfig() if not identical else ScatteringConfig(1.0, 1.0, 1.0, 1.0)
    inc = IncidentField(kappa=cfg.kappa_e)
    return cfg, inc, default_grid(band_limit)


def tangential_field(axis=(0.0, 0.0, 1.0)) -> DeformationField:
    """Rotation field omega x x, tangent to the unit sphere everywhere."""
    return make_deformation("rotation", omega=tuple(axis))
