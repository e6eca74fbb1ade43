"""Small tensor helpers shared by assembly, projection and error evaluation."""
from __future__ import annotations

import numpy as np


def mode_product(T, M, axis):
    """Contract ``T`` along ``axis`` with the columns of ``M``.

    result[..., p, ...] = sum_a M[p, a] * T[..., a, ...]
    """
    out = np.tensordot(M, T, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def multi_mode_product(T, mats):
    for axis, M in enumerate(mats):
        if M is not None:
            T = mode_product(T, M, axis)
    return T


def block_to_kron(block, perm, shape):
    """Coefficients of one level block (dof order) as a Kronecker-order tensor."""
    return np.asarray(block)[perm].reshape(shape)


def kron_to_block(tensor, perm):
    out = np.empty(tensor.size, dtype=tensor.dtype)
    out[perm] = tensor.ravel()
    return out


def tensor_points(axes):
    """All points of the tensor grid spanned by 1D coordinate arrays, shape (n, d)."""
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)
