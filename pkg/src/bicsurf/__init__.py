"""Computable surfaces of bounded integral curvature.

Curvature is a signed measure (atoms, curve parts, absolutely continuous
parts). Distances are computed on polyhedral cone surfaces and on conformal
metrics ``e^{2u}`` times a background metric, where ``u`` is a Green or
logarithmic potential of the prescribed curvature.
"""

__version__ = "0.1.0"

from . import errors, measure, polyhedral, green, conformal, gallery  # noqa: E402
from ._backend import BACKEND  # noqa: E402
from .conformal import ConformalMetric, classify_construct, distance, length  # noqa: E402
from .gallery import GalleryItem  # noqa: E402
from .green import PLANE, SPHERE, TORUS, potential  # noqa: E402
from .measure import SignedMeasure, gauss_bonnet_residual, total_mass, weak_distance  # noqa: E402
from .polyhedral import ConeSurface, curvature_measure, intrinsic_distance  # noqa: E402

__all__ = [
    "__version__",
    "errors",
    "measure",
    "polyhedral",
    "green",
    "conformal",
    "gallery",
    "BACKEND",
    "ConformalMetric",
    "classify_construct",
    "distance",
    "length",
    "GalleryItem",
    "PLANE",
    "SPHERE",
    "TORUS",
    "potential",
    "SignedMeasure",
    "gauss_bonnet_residual",
    "total_mass",
    "weak_distance",
    "ConeSurface",
    "curvature_measure",
    "intrinsic_distance",
]
