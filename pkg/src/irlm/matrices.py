"""Rank-constrained approximations of the identity and elementwise metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from . import rng
from .errors import ConstructionError, ParameterError

KIND_IDENTITY = 0
KIND_RANDOM_SIGN = 1
KIND_BLOCK_SPARSE = 2

KIND_NAMES = {
    KIND_IDENTITY: "identity",
    KIND_RANDOM_SIGN: "random_sign",
    KIND_BLOCK_SPARSE: "block_sparse",
}
KIND_CODES = {name: code for code, name in KIND_NAMES.items()}


@dataclass(frozen=True)
class Provenance:
    """Construction descriptor: enough to rebuild the matrix exactly."""

    kind: str
    seed: int | None = None
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class FactoredMatrix:
    """N x N matrix stored as left (N x r) times right (r x N).

    The materialized product has rank at most r by construction.  Instances
    are immutable; the dense form is computed lazily and cached.  For the
    sign-based kinds the dense entries are materialized through an exact
    integer Gram so the diagonal is exactly 1 and values are identical
    across platforms and BLAS implementations.
    """

    n_dim: int
    rank_budget: int
    left: np.ndarray
    right: np.ndarray
    provenance: Provenance

    def __post_init__(self):
        if self.n_dim < 1:
            raise ParameterError(f"n_dim must be >= 1, got {self.n_dim}")
        if self.rank_budget < 1:
            raise ParameterError(f"rank_budget must be >= 1, got {self.rank_budget}")
        left = np.ascontiguousarray(np.asarray(self.left, dtype=np.float64))
        right = np.ascontiguousarray(np.asarray(self.right, dtype=np.float64))
        if left.shape != (self.n_dim, self.rank_budget):
            raise ParameterError(
                f"left factor shape {left.shape} != ({self.n_dim}, {self.rank_budget})"
            )
        if right.shape != (self.rank_budget, self.n_dim):
            raise ParameterError(
                f"right factor shape {right.shape} != ({self.rank_budget}, {self.n_dim})"
            )
        left.flags.writeable = False
        right.flags.writeable = False
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @cached_property
    def _dense(self) -> np.ndarray:
        mat = _materialize(self)
        mat.flags.writeable = False
        return mat

    def dense(self) -> np.ndarray:
        """Dense row-major materialization (read-only view, cached)."""
        return self._dense


def _materialize(a: FactoredMatrix) -> np.ndarray:
    kind = a.provenance.kind
    if kind == "identity":
        return np.eye(a.n_dim)
    if kind in ("random_sign", "random_sign_slice"):
        # left holds X / n with X in {-1, +1}; recover X and use the exact
        # integer Gram so every entry is a correctly rounded lattice value.
        x = np.sign(a.left)
        return (x @ x.T) / a.rank_budget
    if kind == "block_sparse":
        return _materialize_blocks(a)
    return a.left @ a.right


def _materialize_blocks(a: FactoredMatrix) -> np.ndarray:
    mat = np.zeros((a.n_dim, a.n_dim))
    for start, size, rank, col, exact in a.provenance.params["blocks"]:
        if exact:
            mat[start : start + size, start : start + size] = np.eye(size)
        else:
            x = np.sign(a.left[start : start + size, col : col + rank])
            mat[start : start + size, start : start + size] = (x @ x.T) / rank
    return mat


def make_identity(n_dim: int) -> FactoredMatrix:
    if n_dim < 1:
        raise ParameterError(f"N must be >= 1, got {n_dim}")
    eye = np.eye(n_dim)
    return FactoredMatrix(n_dim, n_dim, eye, eye.copy(), Provenance("identity", 0))


def make_random_sign(n_dim: int, rank: int, seed: int) -> FactoredMatrix:
    """Sign-vector Gram approximation: A[i, j] = <x_i, x_j> / rank.

    Row i of the sign matrix is keyed by (seed, kind, i*rank + column), so
    the construction is reproducible entry by entry.  The diagonal is
    exactly 1 and off-diagonal entries live on the lattice {-1 + 2k/rank}.
    """
    if not 1 <= rank <= n_dim:
        raise ParameterError(f"need 1 <= n <= N, got n={rank}, N={n_dim}")
    x = rng.sign_matrix(n_dim, rank, seed, KIND_RANDOM_SIGN)
    return FactoredMatrix(
        n_dim,
        rank,
        x / rank,
        x.T.copy(),
        Provenance("random_sign", int(seed)),
    )


def _block_seed(master: int, block: int, attempt: int) -> int:
    # Block 0, attempt 0 uses the master seed unchanged so that a single
    # block construction coincides bit for bit with make_random_sign.
    if block == 0 and attempt == 0:
        return int(master)
    return rng.derive_key(master, KIND_BLOCK_SPARSE, block, attempt)


def make_block_sparse(
    n_dim: int,
    rank: int,
    seed: int,
    alpha: float = 1.0,
    beta: float = 8.0,
    max_retries: int = 16,
) -> FactoredMatrix:
    """Block-diagonal identity approximation with O(log(N)/n) fill.

    Block size B = min(N, ceil(alpha * N * ln(N) / n)); the rank budget is
    split evenly over the ceil(N/B) blocks.  A block whose share covers its
    size becomes an exact identity block; otherwise it is a random-sign
    approximation, which must be allotted at least ceil(beta * ln(B+1))
    columns or the sizing is infeasible (for a single block this is the
    precondition n >= beta * ln(N+1)).  Each random block is re-seeded up
    to max_retries times looking for block error <= 1/3; if no attempt
    reaches that, the first attempt is kept and the shortfall is recorded
    in the provenance.
    """
    if not 1 <= rank <= n_dim:
        raise ParameterError(f"need 1 <= n <= N, got n={rank}, N={n_dim}")
    if alpha <= 0 or beta <= 0:
        raise ParameterError("alpha and beta must be positive")
    log_n = math.log(n_dim) if n_dim > 1 else 0.0
    block_size = max(1, min(n_dim, math.ceil(alpha * n_dim * log_n / rank)))
    n_blocks = math.ceil(n_dim / block_size)
    if n_blocks > rank:
        raise ConstructionError(
            f"infeasible sizing: {n_blocks} blocks of size {block_size} exceed "
            f"the rank budget n={rank} at one column per block"
        )
    sizes = [block_size] * (n_blocks - 1) + [n_dim - (n_blocks - 1) * block_size]
    base_share, extra = divmod(rank, n_blocks)
    shares = [base_share + (1 if b < extra else 0) for b in range(n_blocks)]
    ranks = [min(share, size) for share, size in zip(shares, sizes)]
    for b, (size, r_b) in enumerate(zip(sizes, ranks)):
        if r_b == size:
            continue  # exact identity block, no probabilistic sizing needed
        required = math.ceil(beta * math.log(size + 1))
        if r_b < required:
            raise ConstructionError(
                f"infeasible sizing: block {b} of size {size} gets rank {r_b}, "
                f"below the required ceil(beta*ln(B+1))={required}"
            )

    left = np.zeros((n_dim, rank))
    right = np.zeros((rank, n_dim))
    blocks = []
    attempts_used = []
    block_errors = []
    row = 0
    col = 0
    for b, (size, r_b) in enumerate(zip(sizes, ranks)):
        exact = r_b == size
        if exact:
            left[row : row + size, col : col + r_b] = np.eye(size)
            right[col : col + r_b, row : row + size] = np.eye(size)
            attempts_used.append(0)
            block_errors.append(0.0)
        else:
            chosen = None
            for attempt in range(max_retries):
                x = rng.sign_matrix(size, r_b, _block_seed(seed, b, attempt), KIND_RANDOM_SIGN)
                block = (x @ x.T) / r_b
                err = _offdiag_abs_max(block)
                if chosen is None:
                    chosen = (x, err, attempt)
                if err <= 1.0 / 3.0:
                    chosen = (x, err, attempt)
                    break
            x, err, attempt = chosen
            left[row : row + size, col : col + r_b] = x / r_b
            right[col : col + r_b, row : row + size] = x.T
            attempts_used.append(attempt)
            block_errors.append(float(err))
        blocks.append((row, size, r_b, col, exact))
        row += size
        col += r_b
    params = {
        "alpha": float(alpha),
        "beta": float(beta),
        "block_size": block_size,
        "n_blocks": n_blocks,
        "blocks": tuple(blocks),
        "attempts": tuple(attempts_used),
        "block_errors": tuple(block_errors),
    }
    return FactoredMatrix(n_dim, rank, left, right, Provenance("block_sparse", int(seed), params))


def from_factors(
    left: np.ndarray,
    right: np.ndarray,
    kind: str = "custom",
    seed: int | None = None,
    **params: Any,
) -> FactoredMatrix:
    """Wrap explicit factors.  The rank budget is the inner dimension, which
    library constructors keep at most N but hand-built factors may exceed."""
    left = np.atleast_2d(np.asarray(left, dtype=np.float64))
    right = np.atleast_2d(np.asarray(right, dtype=np.float64))
    return FactoredMatrix(left.shape[0], left.shape[1], left, right, Provenance(kind, seed, params))


def submatrix(a: FactoredMatrix, indices: np.ndarray) -> FactoredMatrix:
    """Principal submatrix on the given indices, still in factored form."""
    indices = np.asarray(indices, dtype=np.intp)
    if indices.size == 0:
        raise ParameterError("submatrix needs at least one index")
    kind = a.provenance.kind
    child_kind = "random_sign_slice" if kind in ("random_sign", "random_sign_slice") else "custom"
    return FactoredMatrix(
        int(indices.size),
        a.rank_budget,
        a.left[indices],
        np.ascontiguousarray(a.right[:, indices]),
        Provenance(child_kind, a.provenance.seed, {"parent": kind, "size": int(indices.size)}),
    )


def _offdiag_abs_max(mat: np.ndarray) -> float:
    if mat.shape[0] == 1:
        return 0.0
    tmp = np.abs(mat).copy()
    np.fill_diagonal(tmp, 0.0)
    return float(tmp.max())


def approx_error(a: FactoredMatrix) -> float:
    """max_{i,j} |A[i, j] - delta[i, j]|: the elementwise distance to I."""
    mat = a.dense()
    diag_dev = float(np.abs(np.diagonal(mat) - 1.0).max())
    return max(diag_dev, _offdiag_abs_max(mat))


@dataclass(frozen=True)
class DensityProfile:
    """Large-entry statistics of a matrix at one threshold."""

    gamma: float
    global_density: float
    column_densities: np.ndarray
    nnz_fraction: float

    def __post_init__(self):
        cols = np.asarray(self.column_densities, dtype=np.float64)
        cols.flags.writeable = False
        object.__setattr__(self, "column_densities", cols)


def distribution_function(a: FactoredMatrix, gamma: float) -> DensityProfile:
    """Fraction of ordered pairs (i, j) with |A[i, j]| strictly above gamma,
    together with per-column densities and the exact nonzero fraction."""
    if gamma < 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    mat = a.dense()
    n = a.n_dim
    large = np.abs(mat) > gamma
    col_counts = large.sum(axis=0)
    return DensityProfile(
        gamma=float(gamma),
        global_density=float(col_counts.sum()) / (n * n),
        column_densities=col_counts.astype(np.float64) / n,
        nnz_fraction=float(np.count_nonzero(mat)) / (n * n),
    )


def factor_singular_values(a: FactoredMatrix) -> np.ndarray:
    """Singular values of the materialized matrix, via the thin factor core."""
    q, r_l = np.linalg.qr(a.left)
    core = r_l @ a.right
    return np.linalg.svd(core, compute_uv=False)


def numerical_rank(a: FactoredMatrix, tol: float) -> int:
    """Count of singular values above tol times the largest one."""
    if not 0 < tol < 1:
        raise ParameterError(f"tol must be in (0, 1), got {tol}")
    s = factor_singular_values(a)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))
