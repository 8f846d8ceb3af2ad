"""Computational convex projective geometry.

Submodules: ``projlinalg`` (exp/log and flags), ``convexbody`` (hulls, cones,
Hilbert metric), ``benzecri`` (normal charts), ``charfn`` (characteristic
functions of polyhedral cones), ``smoothing`` (relative smoothing), ``cusps``
(generalized cusps and deformations) and ``cli``.
"""

from .errors import ConvexProjError

__version__ = "0.1.0"

__all__ = ["ConvexProjError", "__version__"]
