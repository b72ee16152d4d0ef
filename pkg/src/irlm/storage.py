"""IRLM1 binary matrix files.

Layout: 40-byte header, then payload.
  bytes  0..7   magic "IRLM0001"
  bytes  8..15  u64 little-endian N (ambient size)
  bytes 16..23  u64 little-endian n (rank budget)
  bytes 24..31  u64 little-endian kind code (0 identity, 1 random_sign, 2 block_sparse)
  bytes 32..39  u64 little-endian seed
Payload: left factor (N x n) then right factor (n x N), little-endian
float64, row-major.  Readers reject wrong magic and any size mismatch.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .matrices import KIND_CODES, KIND_NAMES, FactoredMatrix, Provenance

MAGIC = b"IRLM0001"
HEADER = struct.Struct("<8sQQQQ")


def write_matrix(a: FactoredMatrix, path: str | Path) -> None:
    code = file_kind_code(a)
    seed = a.provenance.seed or 0
    header = HEADER.pack(MAGIC, a.n_dim, a.rank_budget, code, seed)
    left = np.ascontiguousarray(a.left, dtype="<f8")
    right = np.ascontiguousarray(a.right, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(left.tobytes())
        fh.write(right.tobytes())


def read_matrix(path: str | Path) -> FactoredMatrix:
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, n_dim, rank, code, seed = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if code not in KIND_NAMES:
        raise FormatError(f"{path}: unknown kind code {code}")
    if n_dim < 1 or rank < 1:
        raise FormatError(f"{path}: invalid dimensions N={n_dim}, n={rank}")
    expected = HEADER.size + 2 * 8 * n_dim * rank
    if len(data) != expected:
        raise FormatError(f"{path}: payload is {len(data)} bytes, expected {expected}")
    body = np.frombuffer(data, dtype="<f8", offset=HEADER.size)
    left = body[: n_dim * rank].reshape(n_dim, rank).astype(np.float64)
    right = body[n_dim * rank :].reshape(rank, n_dim).astype(np.float64)
    kind = KIND_NAMES[code]
    if kind == "block_sparse":
        # Block layout is not stored, so a loaded block matrix materializes
        # through the generic factor product.
        kind_out = "custom"
        params = {"loaded_kind": "block_sparse"}
    else:
        kind_out = kind
        params = {}
    mat = FactoredMatrix(n_dim, rank, left, right, Provenance(kind_out, int(seed), params))
    object.__setattr__(mat, "_file_kind_code", int(code))
    return mat


def file_kind_code(a: FactoredMatrix) -> int:
    """Kind code used in the header for this matrix."""
    stored = getattr(a, "_file_kind_code", None)
    if stored is not None:
        return stored
    code = KIND_CODES.get(a.provenance.kind)
    if code is None:
        raise FormatError(f"kind '{a.provenance.kind}' has no file representation")
    return code
