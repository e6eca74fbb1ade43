"""Multi-index bookkeeping for the sparse grid space.

Level multi-indices ``l`` with ``|l|_1 <= N`` select tensor increment spaces;
a degree of freedom is a triple (level, cell, polyidx) of multi-indices.
Dofs are numbered lexicographically by (|l|_1, l, j, i), so each level owns a
contiguous block and the blocks of a level pair form a contiguous sub-matrix.
"""
from __future__ import annotations

from functools import cached_property
from itertools import product
from math import comb, prod
from typing import NamedTuple

import numpy as np

from .multiwavelet import ParameterError, level_size, support_1d

MAX_DOF = 10**8


class CapacityError(RuntimeError):
    """Requested discretisation exceeds the configured resource guard."""


def l1(alpha):
    return sum(alpha)


def linf(alpha):
    return max(alpha)


def mi_max(alpha, beta):
    return tuple(max(a, b) for a, b in zip(alpha, beta))


def mi_min(alpha, beta):
    return tuple(min(a, b) for a, b in zip(alpha, beta))


def mi_le(alpha, beta):
    return all(a <= b for a, b in zip(alpha, beta))


def enumerate_levels(d, N):
    """All level multi-indices with |l|_1 <= N, ordered by (|l|_1, l)."""
    if int(d) != d or d < 2:
        raise ParameterError("dimension d must be an integer >= 2")
    if int(N) != N or N < 0:
        raise ParameterError("level N must be an integer >= 0")
    levels = [l for l in product(range(N + 1), repeat=d) if sum(l) <= N]
    levels.sort(key=lambda l: (sum(l), l))
    return levels


def count_levels(d, N):
    return comb(N + d, d)


def blocks_coupled(l, lp, N):
    """True when the (l, l') block survives the semi-orthogonal truncation."""
    return l1(mi_max(l, lp)) <= N


class DofDescriptor(NamedTuple):
    level: tuple
    cell: tuple
    polyidx: tuple  # 1-based


def support_box(dof):
    return tuple(support_1d(l, j) for l, j in zip(dof.level, dof.cell))


def block_size(level, k):
    return (k + 1) ** len(level) * prod(level_size(l) for l in level)


def count_dofs(d, k, N):
    return sum(block_size(l, k) for l in enumerate_levels(d, N))


class DofMap:
    """Dense numbering of the tensor multiwavelets spanning the sparse space."""

    def __init__(self, d, k, N, max_dof=MAX_DOF):
        if int(k) != k or k < 1:
            raise ParameterError("polynomial degree k must be an integer >= 1")
        self.d, self.k, self.N = int(d), int(k), int(N)
        self.levels = enumerate_levels(self.d, self.N)
        self.level_index = {l: n for n, l in enumerate(self.levels)}
        sizes = [block_size(l, self.k) for l in self.levels]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.size = int(self.offsets[-1])
        if self.size > max_dof:
            raise CapacityError(
                f"sparse space has {self.size} dofs, above the limit of {max_dof}"
            )

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"DofMap(d={self.d}, k={self.k}, N={self.N}, size={self.size})"

    def cells_shape(self, level):
        return tuple(level_size(l) for l in level)

    def block_slice(self, level):
        n = self.level_index[level]
        return slice(int(self.offsets[n]), int(self.offsets[n + 1]))

    def index(self, dof):
        dof = DofDescriptor(*dof)
        try:
            n = self.level_index[tuple(dof.level)]
        except KeyError:
            raise KeyError(f"level {dof.level} not in the sparse space") from None
        cshape = self.cells_shape(dof.level)
        nj = np.ravel_multi_index(dof.cell, cshape)
        ni = np.ravel_multi_index(tuple(i - 1 for i in dof.polyidx), (self.k + 1,) * self.d)
        return int(self.offsets[n] + nj * (self.k + 1) ** self.d + ni)

    def descriptor(self, index):
        if not 0 <= index < self.size:
            raise IndexError(index)
        n = int(np.searchsorted(self.offsets, index, side="right") - 1)
        level = self.levels[n]
        local = int(index - self.offsets[n])
        nj, ni = divmod(local, (self.k + 1) ** self.d)
        cell = tuple(int(c) for c in np.unravel_index(nj, self.cells_shape(level)))
        poly = tuple(int(i) + 1 for i in np.unravel_index(ni, (self.k + 1,) * self.d))
        return DofDescriptor(level, cell, poly)

    @cached_property
    def descriptors(self):
        return [self.descriptor(a) for a in range(self.size)]

    def level_of(self):
        """Array giving the position in ``levels`` of every dof's level."""
        return np.repeat(np.arange(len(self.levels)), np.diff(self.offsets))

    def kron_permutation(self, level):
        """Map from Kronecker (j1, i1, j2, i2, ...) order to dof order.

        ``perm[q]`` is the in-block dof position of Kronecker position q.
        """
        d, n = self.d, self.k + 1
        cshape = self.cells_shape(level)
        kshape = [s for c in cshape for s in (c, n)]
        dof_pos = np.arange(prod(kshape)).reshape(cshape + (n,) * d)
        axes = [ax for m in range(d) for ax in (m, d + m)]
        return dof_pos.transpose(axes).ravel()


def build_dofmap(d, k, N):
    return DofMap(d, k, N)
