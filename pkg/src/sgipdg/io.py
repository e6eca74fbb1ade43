"""Matrix Market exchange and sparsity-pattern coordinate files."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp


def write_matrix(A, path, comment="", symmetric=False):
    """Write a sparse matrix in Matrix Market coordinate format.

    ``symmetric=True`` stores only the lower triangle under a symmetric header.
    """
    symmetry = "symmetric" if symmetric else "general"
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), comment=comment, precision=17,
                     symmetry=symmetry)
    return Path(path)


def read_matrix(path) -> sp.csr_matrix:
    return sp.csr_matrix(scipy.io.mmread(str(path)))


def emit_sparsity_pattern(A, path, matrix_market=False):
    """Write the stored nonzeros of ``A`` as 1-based "row col" lines.

    With ``matrix_market=True`` a pattern-only Matrix Market file is written
    next to ``path`` (suffix ``.mtx``) as well. Returns the number of lines.
    """
    A = sp.coo_matrix(A)
    order = np.lexsort((A.col, A.row))
    rows, cols = A.row[order] + 1, A.col[order] + 1
    path = Path(path)
    np.savetxt(path, np.column_stack([rows, cols]), fmt="%d")
    if matrix_market:
        pattern = sp.coo_matrix((np.ones(rows.size), (rows - 1, cols - 1)), shape=A.shape)
        scipy.io.mmwrite(str(path.with_suffix(".mtx")), pattern, field="pattern")
    return int(rows.size)


def read_sparsity_pattern(path, shape=None) -> sp.csr_matrix:
    """Boolean matrix from a coordinate file written by :func:`emit_sparsity_pattern`."""
    rc = np.loadtxt(path, dtype=np.int64, ndmin=2)
    if shape is None:
        shape = (int(rc[:, 0].max()), int(rc[:, 1].max())) if rc.size else (0, 0)
    data = np.ones(rc.shape[0], dtype=bool)
    return sp.csr_matrix((data, (rc[:, 0] - 1, rc[:, 1] - 1)), shape=shape)
