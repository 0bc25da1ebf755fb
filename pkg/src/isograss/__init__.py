"""Exact-arithmetic toolkit for maximal isotropic Grassmannians."""

__version__ = "0.1.0"

from .exterior import (
    HYPERBOLIC,
    PLAIN,
    MultiVector,
    coefficient,
    contract,
    wedge,
)
from .quadratic import (
    QuadraticSpace,
    Subspace,
    bilinear,
    is_isotropic,
    is_isotropic_subspace,
    orthogonal_complement,
    space_from_name,
    witt_index,
)

__all__ = [
    "HYPERBOLIC",
    "PLAIN",
    "MultiVector",
    "QuadraticSpace",
    "Subspace",
    "bilinear",
    "coefficient",
    "contract",
    "is_isotropic",
    "is_isotropic_subspace",
    "orthogonal_complement",
    "space_from_name",
    "wedge",
    "witt_index",
    "__version__",
]
