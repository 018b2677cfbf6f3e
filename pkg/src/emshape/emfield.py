"""Electromagnetic boundary operators and potentials in Helmholtz coordinates.

Tangential densities on Gamma_r are represented by potentials (p, q),

    j = grad_{Gamma_r} p + curl_{Gamma_r} q,

stored as stacked harmonic coefficients of degrees 1..L (``HDensity``). The
transport P_r is the identity on these coefficients, so every r-dependence
lives in the operator assembly. An operator A is represented by (P, Q) with
A j = grad P + curl Q, where P = Delta^{-1} div A j and Q = -Delta^{-1} curl A j:

    C_k j = -k N x V j + k^{-1} curl V div j
        P = k Delta^{-1} curl(V j)
        Q = k Delta^{-1} div(P_N V j) + k^{-1} V div j

    M_k j = D j - B j
        P = Delta^{-1} (k^2 N . V j + D div j)
        Q = -Delta^{-1} curl(D j - B j)

    C0* j = N x V0 j + curl V0 div j
        P = -Delta^{-1} curl(V0 j)
        Q = -Delta^{-1} div(P_N V0 j) + V0 div j

with P_N the orthogonal projection onto the tangent plane of Gamma_r and
Delta^{-1} the mean-zero inverse on Gamma_r. Potentials:

    Psi_E j = k psi j + k^{-1} grad psi(div j),   Psi_M j = curl psi j,

and far fields Psi_E^inf j = k xh x a x xh, Psi_M^inf j = i k xh x a with
a = int exp(-i k xh . y) j. Fields behave as exp(i k R)/(4 pi R) E^inf.

Every quantity is computed through ``_dual`` arithmetic: an ``EMContext``
either holds the transported geometry at t (plain values) or the geometry at
t = 0 with its derivative along xi, and the same code yields the operator or
its Gateaux derivative.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _dual as du
from ._dual import Dual
from .geometry import DeformationField, check_admissible, tangential_jacobian, transport_points
from .kernels import HelmholtzKernel, boundary_operator, farfield_moment, layer_moments
from .operators import COEFFS, DenseOperator
from .sphere import ReferenceSurface, n_coeffs, refined_grid
from .surfops import HDensity, gradient_map, ref_grad, ref_grad_components

logger = logging.getLogger(__name__)

EM_OPERATORS = ("C", "M", "C0star")
EM_DERIVATIVES = ("C", "M", "C0star", "psiE", "psiM", "ffE", "ffM")


@dataclass(frozen=True)
class ScatteringConfig:
    """Material data of the interior (i) and exterior (e) media.

    Wavenumbers satisfy kappa^2 = omega^2 eps mu on each side; ``rho`` is
    kappa_i mu_e / (kappa_e mu_i).
    """

    kappa_i: complex = 1.5
    kappa_e: complex = 1.0
    eps_i: float = 2.25
    eps_e: float = 1.0
    mu_i: float = 1.0
    mu_e: float = 1.0
    omega: float = 1.0
    eta: float = 1.0

    def __post_init__(self) -> None:
        for name in ("kappa_i", "kappa_e"):
            k = complex(getattr(self, name))
            if k.imag < 0:
                raise ValueError(f"{name} must have non-negative imaginary part")
            if k == 0:
                raise ValueError(f"{name} must be non-zero")
        for name in ("eps_i", "eps_e", "mu_i", "mu_e", "omega", "eta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for k, eps, mu, side in ((self.kappa_i, self.eps_i, self.mu_i, "interior"),
                                 (self.kappa_e, self.eps_e, self.mu_e, "exterior")):
            target = self.omega**2 * eps * mu
            if abs(complex(k) ** 2 - target) > 1e-10 * max(abs(target), 1.0):
                raise ValueError(f"{side} wavenumber inconsistent with omega^2 eps mu")

    @classmethod
    def from_materials(cls, omega: float, eps_i: float, eps_e: float, mu_i: float = 1.0,
                       mu_e: float = 1.0, eta: float = 1.0) -> "ScatteringConfig":
        return cls(omega * np.sqrt(eps_i * mu_i), omega * np.sqrt(eps_e * mu_e),
                   eps_i, eps_e, mu_i, mu_e, omega, eta)

    @property
    def rho(self) -> complex:
        return self.kappa_i * self.mu_e / (self.kappa_e * self.mu_i)

    def kappa(self, side: str) -> complex:
        if side not in ("i", "e"):
            raise ValueError("side must be 'i' or 'e'")
        return self.kappa_i if side == "i" else self.kappa_e


@dataclass(frozen=True, eq=False)
class EMBlockOperator:
    """Blocks [[pp, pq], [qp, qq]] mapping (p, q) coefficients to (P, Q)."""

    pp: DenseOperator
    pq: DenseOperator
    qp: DenseOperator
    qq: DenseOperator

    @classmethod
    def from_matrix(cls, M: np.ndarray, meta: dict | None = None) -> "EMBlockOperator":
        n = M.shape[0] // 2
        meta = dict(meta or {})
        blocks = [DenseOperator(M[a:a + n, b:b + n], COEFFS, COEFFS, {**meta, "block": tag})
                  for (a, b), tag in zip(((0, 0), (0, n), (n, 0), (n, n)), ("pp", "pq", "qp", "qq"))]
        return cls(*blocks)

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.pp.matrix, self.pq.matrix], [self.qp.matrix, self.qq.matrix]])

    def apply(self, h: HDensity) -> HDensity:
        return HDensity.from_coeff_vector(h.surface, self.matrix @ h.coeff_vector())


# ---------------------------------------------------------------------------
# transported calculus on Duals
# ---------------------------------------------------------------------------
class EMContext:
    """Geometry of Gamma_{t r} (plain values) or of Gamma with derivative along xi.

    Parameters
    ----------
    surface : ReferenceSurface
    r, t : deformation and scale for value mode.
    xi : deformation for derivative mode at t = 0 (``r`` and ``t`` ignored).
    """

    def __init__(self, surface: ReferenceSurface, r: DeformationField | None = None, t: float = 0.0,
                 xi: DeformationField | None = None):
        self.surface = surface
        self.xi = xi
        if xi is not None:
            r, t = None, 0.0
        else:
            check_admissible(surface, r, t)
        self.r, self.t = r, t
        n = surface.normals
        geo = transport_points(surface.nodes, r, t)
        T = gradient_map(geo.F, surface.e1, surface.e2)
        if xi is None:
            self.J, self.N, self.T = Dual(geo.J), Dual(geo.N), Dual(T)
            self.X = Dual(geo.points)
        else:
            A = tangential_jacobian(n, xi)
            An = np.einsum("pij,pj->pi", A, n)
            P = np.eye(3) - n[:, :, None] * n[:, None, :]
            dT = (-A + n[:, :, None] * An[:, None, :]) @ P
            self.J = Dual(geo.J, np.trace(A, axis1=1, axis2=2))
            self.N = Dual(geo.N, -An)
            self.T = Dual(T, dT)
            self.X = Dual(geo.points, xi.eval(surface.nodes))
        self._ops: dict = {}
        self._refined: EMContext | None = None
        L = surface.band_limit
        self.n1 = n_coeffs(L) - 1
        self.S1 = surface.synthesis[:, 1:]
        self.A1 = surface.analysis[1:]

    @property
    def tag(self) -> str:
        if self.xi is not None:
            return f"d[{self.xi.tag}]"
        return "t=0" if self.r is None or self.t == 0 else f"t={self.t:g}*{self.r.tag}"

    def refined(self) -> "EMContext":
        """Same geometry on a finer grid with the same band limit.

        Nodal densities j = T grad p carry products of degree above the
        band limit; potentials sample them on this grid so the harmonic
        interpolation used by the near-surface rule does not alias.
        """
        if self._refined is None:
            fine = refined_grid(self.surface.band_limit)
            self._refined = EMContext(fine, self.r, self.t, self.xi)
        return self._refined

    # -- kernel operators ---------------------------------------------------
    def op(self, which: str, kappa: complex) -> Dual:
        key = (which, complex(kappa))
        if key not in self._ops:
            self._ops[key] = boundary_operator(which, HelmholtzKernel(kappa), self.surface,
                                               self.r, self.t, self.xi)
        return self._ops[key]

    # -- surface differential operators --------------------------------------
    def grad(self, u) -> Dual:
        """(N, m) -> (N, 3, m)."""
        g = du.linear(lambda a: ref_grad(self.surface, a), u)
        return du.einsum("pab,pbm->pam", self.T, g)

    def curlvec(self, u) -> Dual:
        g = self.grad(u)
        Nn = self.N.reshape(-1, 3, 1)
        return _cross1(g, Nn)

    def _tdiv(self, v) -> Dual:
        G = du.linear(lambda a: ref_grad_components(self.surface, a), v)
        return du.einsum("pka,pakm->pm", self.T, G)

    def div(self, v) -> Dual:
        """Divergence on Gamma_r with the reference-normal part split off."""
        n = self.surface.normals
        v = du.lift(v)
        g = du.einsum("pa,pam->pm", n, v)
        vt = v - n[:, :, None] * g.reshape(g.shape[0], 1, -1)
        div_n = self._tdiv(Dual(n.astype(complex)[:, :, None]))
        return self._tdiv(vt) + g * div_n + du.einsum("pa,pam->pm", n, self.grad(g))

    def curls(self, v) -> Dual:
        """Scalar curl -sum_k (T grad v_k x N)_k."""
        G = du.linear(lambda a: ref_grad_components(self.surface, a), v)
        G = du.einsum("pab,pbkm->pakm", self.T, G)
        C = _cross1(G, self.N.reshape(-1, 3, 1, 1))
        return -du.einsum("pkkm->pm", C)

    def project(self, w) -> Dual:
        """Orthogonal projection onto the tangent plane of Gamma_r."""
        Nn = self.N.reshape(-1, 3, 1)
        return du.lift(w) - Nn * du.einsum("pa,pam->pm", self.N, w).reshape(w.shape[0], 1, -1)

    def ncross(self, w) -> Dual:
        return _cross1(self.N.reshape(-1, 3, 1), w)

    @cached_property
    def stiffness(self) -> Dual:
        """Galerkin matrix of J Delta_{Gamma_r} on degrees 1..L."""
        lap = self.div(self.grad(self.S1))
        return du.matmul(self.A1, self.J.reshape(-1, 1) * lap)

    def lap_inv(self, f) -> Dual:
        """Mean-zero Delta_{Gamma_r}^{-1} f as harmonic coefficients (n1, m)."""
        rhs = du.matmul(self.A1, self.J.reshape(-1, 1) * du.lift(f))
        return du.solve(self.stiffness, rhs)

    def coeffs(self, f) -> Dual:
        return du.matmul(self.A1, f)

    # -- densities ------------------------------------------------------------
    def split(self, c) -> tuple[Dual, Dual]:
        c = du.lift(c)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        return c[: self.n1], c[self.n1:]

    def density(self, c) -> tuple[Dual, Dual]:
        """Nodal j (N, 3, m) and div j (N, m) for Helmholtz coefficients c (2 n1, m)."""
        cp, cq = self.split(c)
        gp = self.grad(du.matmul(self.S1, cp))
        j = gp + self.curlvec(du.matmul(self.S1, cq))
        return j, self.div(gp)

    def recompose_coeffs(self, P, Q) -> Dual:
        return du.concatenate([P, Q], axis=0)

    def apply_V(self, which: str, kappa: complex, v) -> Dual:
        """Scalar kernel operator on nodal data with any trailing axes."""
        M = self.op(which, kappa)
        v = du.lift(v)
        flat = v.reshape(v.shape[0], -1)
        return du.matmul(M, flat).reshape(v.shape)

    def apply_B(self, kappa: complex, j) -> Dual:
        M = self.op("B", kappa)
        return du.einsum("pabq,qbm->pam", M, j)


def _cross1(a, b) -> Dual:
    """Cross product along axis 1 with broadcasting of trailing axes."""
    a, b = du.lift(a), du.lift(b)
    shape = np.broadcast_shapes(a.shape, b.shape)

    def bc(x, s):
        return None if x is None else np.broadcast_to(x, s)

    av, bv = np.broadcast_to(a.v, shape), np.broadcast_to(b.v, shape)
    ad, bd = bc(a.d, shape), bc(b.d, shape)
    return du.cross(Dual(av, ad), Dual(bv, bd), axis=1)


# ---------------------------------------------------------------------------
# operators in Helmholtz coordinates (P/Q representations)
# ---------------------------------------------------------------------------
def _basis(ctx: EMContext) -> np.ndarray:
    return np.eye(2 * ctx.n1, dtype=complex)


def c_blocks(ctx: EMContext, kappa: complex, c=None) -> Dual:
    """(P, Q) coefficients of C_kappa applied to Helmholtz coefficients c."""
    c = _basis(ctx) if c is None else c
    j, divj = ctx.density(c)
    w = ctx.apply_V("V", kappa, j)
    P = ctx.lap_inv(ctx.curls(w)) * kappa
    Q = ctx.lap_inv(ctx.div(ctx.project(w))) * kappa + ctx.coeffs(ctx.apply_V("V", kappa, divj)) * (1.0 / kappa)
    return du.concatenate([P, Q], axis=0)


def m_blocks(ctx: EMContext, kappa: complex, c=None) -> Dual:
    """(P', Q') coefficients of M_kappa through the divergence identity."""
    c = _basis(ctx) if c is None else c
    j, divj = ctx.density(c)
    w = ctx.apply_V("V", kappa, j)
    ndotw = du.einsum("pa,pam->pm", ctx.N, w)
    P = ctx.lap_inv(ndotw * kappa**2 + ctx.apply_V("D", kappa, divj))
    mj = ctx.apply_V("D", kappa, j) - ctx.apply_B(kappa, j)
    Q = -ctx.lap_inv(ctx.curls(mj))
    return du.concatenate([P, Q], axis=0)


def c0star_blocks(ctx: EMContext, c=None) -> Dual:
    c = _basis(ctx) if c is None else c
    j, divj = ctx.density(c)
    w = ctx.apply_V("V", 0.0, j)
    P = -ctx.lap_inv(ctx.curls(w))
    Q = -ctx.lap_inv(ctx.div(ctx.project(w))) + ctx.coeffs(ctx.apply_V("V", 0.0, divj))
    return du.concatenate([P, Q], axis=0)


def direct_C(ctx: EMContext, kappa: complex, c) -> Dual:
    """Nodal C_kappa j = -k N x V j + k^{-1} curl V div j."""
    j, divj = ctx.density(c)
    w = ctx.apply_V("V", kappa, j)
    return ctx.ncross(w) * (-kappa) + ctx.curlvec(ctx.apply_V("V", kappa, divj)) * (1.0 / kappa)


def direct_M(ctx: EMContext, kappa: complex, c) -> Dual:
    """Nodal M_kappa j = D j - B j."""
    j, _ = ctx.density(c)
    return ctx.apply_V("D", kappa, j) - ctx.apply_B(kappa, j)


def direct_C0star(ctx: EMContext, c) -> Dual:
    j, divj = ctx.density(c)
    w = ctx.apply_V("V", 0.0, j)
    return ctx.ncross(w) + ctx.curlvec(ctx.apply_V("V", 0.0, divj))


def recompose(ctx: EMContext, PQ) -> Dual:
    """Nodal grad P + curl Q on Gamma_r from stacked coefficients."""
    j, _ = ctx.density(PQ)
    return j


def _block(ctx: EMContext, name: str, M: Dual, derivative: bool) -> EMBlockOperator:
    mat = M.deriv() if derivative else M.v
    return EMBlockOperator.from_matrix(mat, {"op": name, "geometry": ctx.tag})


def assemble_C(kappa: complex, surface: ReferenceSurface, r: DeformationField | None = None,
               t: float = 0.0) -> EMBlockOperator:
    ctx = EMContext(surface, r, t)
    return _block(ctx, "C", c_blocks(ctx, kappa), False)


def assemble_M(kappa: complex, surface: ReferenceSurface, r: DeformationField | None = None,
               t: float = 0.0) -> EMBlockOperator:
    ctx = EMContext(surface, r, t)
    return _block(ctx, "M", m_blocks(ctx, kappa), False)


def assemble_C0star(surface: ReferenceSurface, r: DeformationField | None = None,
                    t: float = 0.0) -> EMBlockOperator:
    ctx = EMContext(surface, r, t)
    return _block(ctx, "C0star", c0star_blocks(ctx), False)


# ---------------------------------------------------------------------------
# potentials and far fields
# ---------------------------------------------------------------------------
def _moments(ctx: EMContext, kappa: complex, c, targets, **near) -> tuple[Dual, Dual, int]:
    ctx = ctx.refined()
    j, divj = ctx.density(c)
    m = j.shape[2]
    u = du.concatenate([j.reshape(j.shape[0], -1), divj], axis=1)  # (N, 3m + m)
    S0, S1 = layer_moments(HelmholtzKernel(kappa), ctx.surface, targets, u, ctx.r, ctx.t, ctx.xi, **near)
    return S0, S1, m


def potentials(ctx: EMContext, kappa: complex, c, targets, **near) -> tuple[Dual, Dual]:
    """Psi_E and Psi_M of the density with coefficients c at targets, (n_t, 3, m)."""
    S0, S1, m = _moments(ctx, kappa, c, targets, **near)
    nt = S0.shape[0]
    S0j = S0[:, : 3 * m].reshape(nt, 3, m)
    S1j = S1[:, :, : 3 * m].reshape(nt, 3, 3, m)  # [target, grad axis, component, m]
    S1d = S1[:, :, 3 * m:]
    psiE = S0j * kappa + S1d * (1.0 / kappa)
    eps = np.zeros((3, 3, 3))
    eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
    eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
    psiM = du.einsum("abc,tbcm->tam", eps, S1j)
    return psiE, psiM


def psi_E(kappa: complex, h: HDensity, targets: np.ndarray, r: DeformationField | None = None,
          t: float = 0.0) -> np.ndarray:
    ctx = EMContext(h.surface, r, t)
    return potentials(ctx, kappa, h.coeff_vector(), targets)[0].v[..., 0]


def psi_M(kappa: complex, h: HDensity, targets: np.ndarray, r: DeformationField | None = None,
          t: float = 0.0) -> np.ndarray:
    ctx = EMContext(h.surface, r, t)
    return potentials(ctx, kappa, h.coeff_vector(), targets)[1].v[..., 0]


def farfields(ctx: EMContext, kappa: complex, c, directions: np.ndarray) -> tuple[Dual, Dual]:
    """Psi_E^inf and Psi_M^inf of the density with coefficients c, (n_d, 3, m)."""
    j, _ = ctx.density(c)
    m = j.shape[2]
    d = np.atleast_2d(np.asarray(directions, float))
    a = farfield_moment(HelmholtzKernel(kappa), ctx.surface, d, j.reshape(j.shape[0], -1),
                        ctx.r, ctx.t, ctx.xi).reshape(d.shape[0], 3, m)
    dd = d[:, :, None]
    ffE = (a - dd * du.einsum("ta,tam->tm", d, a).reshape(d.shape[0], 1, m)) * kappa
    ffM = _cross1(np.broadcast_to(dd, a.shape), a) * (1j * kappa)
    return ffE, ffM


def farfield_EM(kappa: complex, h: HDensity, directions: np.ndarray,
                r: DeformationField | None = None, t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    ctx = EMContext(h.surface, r, t)
    ffE, ffM = farfields(ctx, kappa, h.coeff_vector(), directions)
    return ffE.v[..., 0], ffM.v[..., 0]


def d_emfield(which: str, xi: DeformationField, surface: ReferenceSurface, kappa: complex = 1.0,
              h: HDensity | None = None, targets: np.ndarray | None = None):
    """Gateaux derivative at r = 0 along xi of an EM operator, potential or far field.

    Operators (C, M, C0star) return an EMBlockOperator of derivative blocks;
    potentials and far fields return derivative samples (n, 3) of the map
    r -> Psi(r) P_r^{-1} j with fixed Helmholtz coordinates.
    """
    if which not in EM_DERIVATIVES:
        raise ValueError(f"unknown EM derivative {which!r}")
    ctx = EMContext(surface, xi=xi)
    if which == "C":
        return _block(ctx, "dC", c_blocks(ctx, kappa), True)
    if which == "M":
        return _block(ctx, "dM", m_blocks(ctx, kappa), True)
    if which == "C0star":
        return _block(ctx, "dC0star", c0star_blocks(ctx), True)
    if h is None or targets is None:
        raise ValueError("potential derivatives need a density and targets")
    c = h.coeff_vector()
    if which in ("psiE", "psiM"):
        E, M = potentials(ctx, kappa, c, targets)
        return (E if which == "psiE" else M).deriv()[..., 0]
    E, M = farfields(ctx, kappa, c, targets)
    return (E if which == "ffE" else M).deriv()[..., 0]
