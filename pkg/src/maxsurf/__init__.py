"""maxsurf: spacelike maximal surfaces in pseudo-hyperbolic space.

Geometry of the signature (2, n+1) quadric, positivity predicates for
boundary loops, a discrete variational solver for finite and asymptotic
Plateau problems, and numerical checks of the structural properties of the
solutions.
"""

from .ambient import AmbientSpace, DomainError, GeodesicType, PointedPlane, TripleClass
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "AmbientSpace",
    "DomainError",
    "GeodesicType",
    "PointedPlane",
    "TripleClass",
    "KERNEL_BACKEND",
    "__version__",
]
