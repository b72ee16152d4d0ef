"""Low-rank elementwise identity approximation toolkit."""

from .matrices import (
    DensityProfile,
    FactoredMatrix,
    Provenance,
    approx_error,
    distribution_function,
    from_factors,
    make_block_sparse,
    make_identity,
    make_random_sign,
    numerical_rank,
    submatrix,
)
from .storage import read_matrix, write_matrix

__version__ = "0.1.0"

__all__ = [
    "DensityProfile",
    "FactoredMatrix",
    "Provenance",
    "approx_error",
    "distribution_function",
    "from_factors",
    "make_block_sparse",
    "make_identity",
    "make_random_sign",
    "numerical_rank",
    "read_matrix",
    "submatrix",
    "write_matrix",
    "__version__",
]
