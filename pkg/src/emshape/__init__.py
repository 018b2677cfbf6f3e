"""Shape derivatives of electromagnetic transmission problems on deformed spheres.

The reference surface is the unit sphere. Deformations are closed-form vector
fields, surface calculus is spectral on a Gauss-Legendre grid, boundary
integral operators use a rotate-to-pole singular rule, and every shape
derivative is checked against finite differences in the deformation scale.
"""

from .emfield import ScatteringConfig
from .geometry import DeformationField, make_deformation
from .scattering import IncidentField, d_solution, solve
from .sphere import ReferenceSurface, default_grid

__all__ = [
    "DeformationField",
    "IncidentField",
    "ReferenceSurface",
    "ScatteringConfig",
    "d_solution",
    "default_grid",
    "make_deformation",
    "solve",
]

__version__ = "0.1.0"
