"""Sampled fields on the reference sphere."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sphere import ReferenceSurface, n_coeffs

MEAN_ZERO_RTOL = 1e-10
TANGENCY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Complex nodal samples of a scalar function on the reference sphere.

    Attributes
    ----------
    surface : ReferenceSurface
        Grid the samples live on.
    values : np.ndarray, shape (N,)
        Nodal samples.
    """

    surface: ReferenceSurface = field(repr=False)
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        if v.size != self.surface.n_nodes:
            raise ValueError("sample count does not match the grid")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_coeffs(cls, surface: ReferenceSurface, coeffs: np.ndarray) -> "ScalarField":
        c = np.asarray(coeffs, dtype=complex)
        return cls(surface, surface.synthesis_full[:, : c.size] @ c)

    @property
    def coeffs(self) -> np.ndarray:
        """Harmonic coefficients up to the band limit."""
        return self.surface.analysis @ self.values

    def mean(self) -> complex:
        return complex(self.surface.integrate(self.values) / (4.0 * np.pi))

    def l2_norm(self) -> float:
        return self.surface.l2_norm(self.values)

    def is_mean_zero(self, rtol: float = MEAN_ZERO_RTOL) -> bool:
        integral = abs(self.surface.integrate(self.values))
        return integral <= rtol * np.sqrt(4.0 * np.pi) * max(self.l2_norm(), 1e-300)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.surface, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.surface, self.values - other.values)

    def scale(self, a: complex) -> "ScalarField":
        return ScalarField(self.surface, a * self.values)


@dataclass(frozen=True, eq=False)
class TangentField:
    """Complex Cartesian 3-vector samples tangent to the reference sphere."""

    surface: ReferenceSurface = field(repr=False)
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.surface.n_nodes, 3):
            raise ValueError("tangent field must have shape (N, 3)")
        object.__setattr__(self, "values", v)

    def normal_component(self) -> np.ndarray:
        return np.sum(self.values * self.surface.normals, axis=1)

    def is_tangent(self, tol: float = TANGENCY_TOL) -> bool:
        scale = max(float(np.abs(self.values).max()), 1.0)
        return float(np.abs(self.normal_component()).max()) <= tol * scale

    def l2_norm(self) -> float:
        return self.surface.l2_norm(self.values)


def random_coeffs(rng: np.random.Generator, degree: int, start: int = 0) -> np.ndarray:
    """Random complex coefficients with degrees in [start, degree]."""
    c = rng.standard_normal(n_coeffs(degree)) + 1j * rng.standard_normal(n_coeffs(degree))
    c[: n_coeffs(start - 1) if start > 0 else 0] = 0.0
    return c


def random_scalar(surface: ReferenceSurface, rng: np.random.Generator, degree: int,
                  mean_zero: bool = False) -> ScalarField:
    return ScalarField.from_coeffs(surface, random_coeffs(rng, degree, 1 if mean_zero else 0))
