"""Dense operator container shared by the surface and kernel layers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Layout tags. Vector nodal data is flattened node-major: index 3*i + a.
NODES = "nodes"
NODES3 = "nodes3"
COEFFS = "coeffs"
_WIDTH = {NODES: 1, NODES3: 3}


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Assembled complex matrix with layout descriptors.

    Attributes
    ----------
    matrix : np.ndarray, shape (M, K)
        Dense entries.
    domain, codomain : str
        Layout tags: ``nodes`` (scalar samples), ``nodes3`` (Cartesian
        3-vectors, node-major) or ``coeffs`` (harmonic coefficients).
    meta : dict
        Header data (wavenumber, scale t, deformation tag).
    """

    matrix: np.ndarray
    domain: str = NODES
    codomain: str = NODES
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2:
            raise ValueError("operator matrix must be 2-D")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("operator has non-finite entries")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply to data in the domain layout, returning codomain layout."""
        x = np.asarray(x)
        lead = x.shape[0]
        flat = x.reshape(-1) if x.ndim <= 2 and (x.ndim == 1 or x.shape[1] == 3) else x.reshape(lead, -1)
        out = self.matrix @ flat
        if self.codomain == NODES3:
            return out.reshape(-1, 3)
        return out

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.matrix @ other.matrix, other.domain, self.codomain, dict(self.meta))

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.matrix - other.matrix, self.domain, self.codomain, dict(self.meta))

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2)) if self.matrix.size else 0.0
