"""Symmetric interior penalty DG stiffness matrices on the sparse grid space.

For tensor-product orthonormal bases the gradient and face terms of the
bilinear form factor exactly: on a face normal to axis m the tangential
factors integrate to Kronecker deltas, and so do the non-differentiated
factors of the volume gradient term. Hence

    B(v_a, v_b) = sum_m A1[a_m, b_m] prod_{n != m} delta(a_n, b_n)
                  + int c v_a v_b,

with A1 the 1D IPDG matrix (penalty sigma / h, h = 2**-N) written in the
multiwavelet basis. Only the coefficient term needs multi-dimensional work.
It is built blockwise per level pair, either as Kronecker products of 1D
weighted mass blocks (separable c) or by tensor Gauss quadrature on the grid
of the finer level of the pair (general c).

:func:`pair_entry` evaluates a single entry straight from the definition and
serves as the reference route.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from math import prod
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ._tensor import block_to_kron, kron_to_block, multi_mode_product, tensor_points
from .multiwavelet import (
    LEFT,
    RIGHT,
    MultiwaveletHierarchy,
    ParameterError,
    inner_product_1d,
    legendre_basis,
    level_size,
    support_1d,
)
from .problems import ProblemSpec, SeparableField
from .quadrature import candidate_faces, gauss_rule, merged_segments_1d
from .sparse_space import CapacityError, DofMap, blocks_coupled, mi_max

log = logging.getLogger(__name__)

METHODS = ("original", "modified")
MAX_NNZ = 2 * 10**9


@dataclass(frozen=True)
class AssemblyConfig:
    k: int
    N: int
    method: str = "modified"
    sigma: Optional[float] = None
    quad_points: Optional[int] = None
    droptol: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.sigma is not None and not self.sigma > 0:
            raise ParameterError("penalty sigma must be positive")
        if self.quad_points is not None and self.quad_points < self.k + 1:
            raise ParameterError("quad_points must be at least k + 1")
        if self.droptol < 0:
            raise ParameterError("droptol must be non-negative")

    @property
    def h(self):
        return 2.0**-self.N

    @property
    def nq(self):
        return self.quad_points or self.k + 3

    def penalty(self, d):
        return 5.0 * self.k * d if self.sigma is None else float(self.sigma)


# ---------------------------------------------------------------------------
# 1D operators in the multiwavelet basis


@lru_cache(maxsize=16)
def hierarchy(k, N):
    return MultiwaveletHierarchy(k, N)


def ipdg_matrix_1d(hier, sigma):
    """1D IPDG matrix with penalty sigma / h on the level-N grid.

    Interior nodes use jump v(x-) - v(x+) and the average of the one-sided
    derivatives; at x = 0 and x = 1 the jump is the signed trace along the
    outward normal and the average is the one-sided derivative.
    """
    k, N = hier.k, hier.N
    n, cells, h = k + 1, 2**N, 2.0**-N
    t, w = gauss_rule(n + 1).nodes, gauss_rule(n + 1).weights
    dpsi = legendre_basis(t, k, 1)
    K = np.einsum("g,gp,gq->pq", w, dpsi, dpsi) / h**2
    v0, v1 = legendre_basis(0.0, k) / np.sqrt(h), legendre_basis(1.0, k) / np.sqrt(h)
    d0, d1 = legendre_basis(0.0, k, 1) / h**1.5, legendre_basis(1.0, k, 1) / h**1.5

    J = np.zeros((cells + 1, cells * n))
    D = np.zeros((cells + 1, cells * n))
    for s in range(cells + 1):
        wgt = 1.0 if s in (0, cells) else 0.5
        if s > 0:
            J[s, (s - 1) * n : s * n] += v1
            D[s, (s - 1) * n : s * n] += wgt * d1
        if s < cells:
            J[s, s * n : (s + 1) * n] -= v0
            D[s, s * n : (s + 1) * n] += wgt * d0
    A = np.kron(np.eye(cells), K) - D.T @ J - J.T @ D + (sigma / h) * (J.T @ J)
    T = hier.fine_transform()
    A = T @ A @ T.T
    return 0.5 * (A + A.T)


def _levels_array(hier):
    return np.repeat(np.arange(hier.N + 1), np.diff(hier.offsets))


def weighted_mass_1d(hier, weight, nq):
    """M[a, b] = int weight * v_a * v_b, Gauss rule on cells of the finer level."""
    lev = _levels_array(hier)
    M = np.zeros((hier.size, hier.size))
    rule = gauss_rule(nq)
    for L in range(hier.N + 1):
        cells = 2**L
        x = ((np.arange(cells)[:, None] + rule.nodes) / cells).ravel()
        wq = np.tile(rule.weights / cells, cells) * weight(x)
        E = hier.eval_matrix(x, levels=range(L + 1))
        G = E.T @ (wq[:, None] * E)
        nL = hier.offsets[L + 1]
        mask = (lev[:nL, None] == L) | (lev[None, :nL] == L)
        M[:nL, :nL][mask] = G[mask]
    return 0.5 * (M + M.T)


def fine_nodes(N, nq):
    """Gauss nodes and weights on every cell of the level-N grid of [0, 1]."""
    rule = gauss_rule(nq)
    cells = 2**N
    x = ((np.arange(cells)[:, None] + rule.nodes) / cells).ravel()
    return x, np.tile(rule.weights / cells, cells)


def project_1d(hier, g, nq):
    """<g, v_a> for every 1D basis function, integrated on the level-N cells."""
    x, w = fine_nodes(hier.N, nq)
    E = hier.eval_matrix(x)
    return E.T @ (w * g(x))


def _sparsify(block):
    # only exact zeros (pairs that are not coupled at all) are dropped here
    return sp.csr_matrix(block)


class _Operators:
    """1D blocks shared by all level pairs of one assembly."""

    def __init__(self, d, cfg, c):
        self.hier = hierarchy(cfg.k, cfg.N)
        self.A1 = ipdg_matrix_1d(self.hier, cfg.penalty(d))
        self.sep_terms = None
        if isinstance(c, SeparableField):
            cache = {}
            terms = []
            for term in c.terms:
                mats = []
                for g in term.factors:
                    if id(g) not in cache:
                        cache[id(g)] = weighted_mass_1d(self.hier, g, cfg.nq)
                    mats.append(cache[id(g)])
                terms.append((float(term.coef), mats))
            self.sep_terms = terms
        self._blocks = {}

    def sub(self, name, mat, lm, lpm):
        key = (name, lm, lpm)
        if key not in self._blocks:
            h = self.hier
            self._blocks[key] = _sparsify(mat[h.level_slice(lm), h.level_slice(lpm)])
        return self._blocks[key]

    def identity(self, lm):
        key = ("I", lm)
        if key not in self._blocks:
            n = self.hier.offsets[lm + 1] - self.hier.offsets[lm]
            self._blocks[key] = sp.identity(n, format="csr")
        return self._blocks[key]


def _kron_all(factors):
    out = factors[0]
    for f in factors[1:]:
        out = sp.kron(out, f, format="csr")
    return out


def _laplace_block(ops, l, lp):
    diff = [m for m in range(len(l)) if l[m] != lp[m]]
    if len(diff) > 1:
        return None
    axes = diff if diff else range(len(l))
    total = None
    for m in axes:
        factors = [
            ops.sub("A", ops.A1, l[n], lp[n]) if n == m else ops.identity(l[n])
            for n in range(len(l))
        ]
        blk = _kron_all(factors)
        total = blk if total is None else total + blk
    return total


def _separable_mass_block(ops, l, lp):
    total = None
    for coef, mats in ops.sep_terms:
        factors = [ops.sub(("M", id(M)), M, l[m], lp[m]) for m, M in enumerate(mats)]
        blk = coef * _kron_all(factors)
        total = blk if total is None else total + blk
    return total


class _GeneralMass:
    """Coefficient blocks by tensor Gauss quadrature for non-separable c."""

    def __init__(self, hier, spec, nq):
        self.hier, self.spec, self.nq = hier, spec, nq
        self.rule = gauss_rule(nq)
        self._grid_key = None
        self._grid = None
        self._pairs = {}

    def _axis(self, L):
        cells = 2**L
        x = ((np.arange(cells)[:, None] + self.rule.nodes) / cells).ravel()
        return x, np.tile(self.rule.weights / cells, cells)

    def grid(self, L):
        if self._grid_key != L:
            axes = [self._axis(Lm)[0] for Lm in L]
            vals = np.asarray(self.spec.c(tensor_points(axes)), dtype=float)
            self.spec.check_coefficient(vals)
            self._grid = vals.reshape([a.size for a in axes])
            self._grid_key = L
        return self._grid

    def pairs_1d(self, lm, lpm):
        """Overlapping 1D pairs (local indices) and their weighted value products."""
        key = (lm, lpm)
        if key not in self._pairs:
            L = max(lm, lpm)
            x, w = self._axis(L)
            Ea = self.hier.eval_matrix(x, levels=[lm])
            Eb = self.hier.eval_matrix(x, levels=[lpm])
            overlap = (np.abs(Ea).T @ np.abs(Eb)) > 0
            ia, ib = np.nonzero(overlap)
            G = (Ea[:, ia] * Eb[:, ib] * w[:, None]).T
            self._pairs[key] = (ia, ib, G)
        return self._pairs[key]

    def block(self, l, lp, n_l, n_lp):
        L = mi_max(l, lp)
        cgrid = self.grid(L)
        parts = [self.pairs_1d(l[m], lp[m]) for m in range(len(l))]
        vals = multi_mode_product(cgrid, [p[2] for p in parts])
        ia = np.meshgrid(*[p[0] for p in parts], indexing="ij")
        ib = np.meshgrid(*[p[1] for p in parts], indexing="ij")
        rows = np.ravel_multi_index([a.ravel() for a in ia], n_l)
        cols = np.ravel_multi_index([b.ravel() for b in ib], n_lp)
        return sp.csr_matrix(
            (vals.ravel(), (rows, cols)), shape=(prod(n_l), prod(n_lp))
        )


def _check_separable_c(spec, hier, nq):
    """Sign check of c at tensor quadrature nodes (sampled when very large)."""
    d = spec.d
    x, _ = fine_nodes(hier.N, nq)
    if x.size**d <= 2_000_000:
        pts = tensor_points([x] * d)
    else:
        from scipy.stats import qmc

        pts = qmc.Halton(d, seed=0).random(200_000)
    spec.check_coefficient(spec.c(pts))


def _kron_shape(dofmap, level):
    n = dofmap.k + 1
    return tuple(n * s for s in dofmap.cells_shape(level))


def level_pairs(dofmap, method):
    """Upper-triangular (row level, column level) pairs that carry entries."""
    out = []
    for a, b in combinations_with_replacement(range(len(dofmap.levels)), 2):
        l, lp = dofmap.levels[a], dofmap.levels[b]
        if method == "modified" and not blocks_coupled(l, lp, dofmap.N):
            continue
        out.append((l, lp))
    return out


@lru_cache(maxsize=None)
def _pair_counts_1d(k, a, b):
    """(overlapping, touching-only) ordered 1D basis pairs for levels a and b."""
    sa = np.array([support_1d(a, j) for j in range(level_size(a))])
    sb = np.array([support_1d(b, j) for j in range(level_size(b))])
    lo = np.maximum(sa[:, None, 0], sb[None, :, 0])
    hi = np.minimum(sa[:, None, 1], sb[None, :, 1])
    n2 = (k + 1) ** 2
    return int(np.sum(lo < hi)) * n2, int(np.sum(lo == hi)) * n2


def structural_nnz(dofmap: DofMap, method: str = "modified") -> int:
    """Entries of the coupling pattern, counted without assembling.

    A pair is counted when its supports overlap in every direction (the
    coefficient term) or when it differs in one direction only, where the
    supports touch, and coincides in all others (face terms). For a
    non-vanishing c this is the pattern stored at ``droptol=0``.
    """
    if method not in METHODS:
        raise ParameterError(f"method must be one of {METHODS}, got {method!r}")
    k, d = dofmap.k, dofmap.d
    total = 0
    for l, lp in level_pairs(dofmap, method):
        counts = [_pair_counts_1d(k, a, b) for a, b in zip(l, lp)]
        same = [(k + 1) * level_size(a) if a == b else 0 for a, b in zip(l, lp)]
        n = prod(c[0] for c in counts)
        for m in range(d):
            n += counts[m][1] * prod(same[q] for q in range(d) if q != m)
        total += n if l == lp else 2 * n
    return total


def assemble_matrix(dofmap: DofMap, spec: ProblemSpec, cfg: AssemblyConfig) -> sp.csr_matrix:
    """Stiffness matrix of B (``original``) or of its truncation B^so (``modified``)."""
    if (dofmap.k, dofmap.N) != (cfg.k, cfg.N) or dofmap.d != spec.d:
        raise ParameterError("dofmap, problem and config disagree on (d, k, N)")
    ops = _Operators(spec.d, cfg, spec.c)
    general = None
    if ops.sep_terms is None:
        general = _GeneralMass(ops.hier, spec, cfg.nq)
    else:
        _check_separable_c(spec, ops.hier, cfg.nq)

    pairs = level_pairs(dofmap, cfg.method)
    if general is not None:
        pairs.sort(key=lambda p: mi_max(*p))

    rows, cols, vals = [], [], []
    nnz = 0
    perms = {l: dofmap.kron_permutation(l) for l in dofmap.levels}
    for l, lp in pairs:
        n_l, n_lp = _kron_shape(dofmap, l), _kron_shape(dofmap, lp)
        if general is not None:
            blk = general.block(l, lp, n_l, n_lp)
        else:
            blk = _separable_mass_block(ops, l, lp)
        lap = _laplace_block(ops, l, lp)
        if lap is not None:
            blk = blk + lap
        if l == lp:
            blk = 0.5 * (blk + blk.T)
        blk = blk.tocoo()
        keep = blk.data != 0.0
        r = dofmap.block_slice(l).start + perms[l][blk.row[keep]]
        c = dofmap.block_slice(lp).start + perms[lp][blk.col[keep]]
        v = blk.data[keep]
        rows.append(r.astype(np.int32))
        cols.append(c.astype(np.int32))
        vals.append(v)
        nnz += v.size * (1 if l == lp else 2)
        if nnz > MAX_NNZ:
            raise CapacityError(f"matrix would exceed {MAX_NNZ} stored entries")
        if l != lp:
            rows.append(c.astype(np.int32))
            cols.append(r.astype(np.int32))
            vals.append(v)

    n = dofmap.size
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    del rows, cols, vals
    apply_droptol(A, cfg.droptol)
    A.sort_indices()
    return A


def apply_droptol(A, droptol):
    """Remove entries with |value| <= droptol * max|entry| (in place)."""
    if A.nnz == 0:
        return A
    thr = droptol * np.abs(A.data).max()
    A.data[np.abs(A.data) <= thr] = 0.0
    A.eliminate_zeros()
    return A


def numerical_nnz(A, droptol=1e-12):
    """Stored entries that survive a relative drop tolerance (A is not modified)."""
    if A.nnz == 0:
        return 0
    return int(np.count_nonzero(np.abs(A.data) > droptol * np.abs(A.data).max()))


def assemble_load(dofmap: DofMap, spec: ProblemSpec, cfg: AssemblyConfig) -> np.ndarray:
    """L(v_a) = int f v_a for every dof, Gauss rule on the level-N cells."""
    from .metrics import project_sparse

    return project_sparse(spec.f, dofmap, cfg.nq)


# ---------------------------------------------------------------------------
# reference route: one entry straight from the definition


def _basis_1d(dofmap_k, N, level, j, i):
    hier = hierarchy(dofmap_k, max(N, level))
    return hier.functions[hier.index(i, level, j)]


def pair_entry(a, b, spec: ProblemSpec, cfg: AssemblyConfig) -> float:
    """B(v_a, v_b) for two dof descriptors, evaluated term by term.

    Volume integrals use Gauss rules on merged 1D segments (the coefficient
    term on their tensor boxes), and face integrals run over
    :func:`candidate_faces`.
    """
    d, k, N = spec.d, cfg.k, cfg.N
    sigma, h, nq = cfg.penalty(d), cfg.h, cfg.nq
    fa = [_basis_1d(k, N, l, j, i) for l, j, i in zip(a.level, a.cell, a.polyidx)]
    fb = [_basis_1d(k, N, l, j, i) for l, j, i in zip(b.level, b.cell, b.polyidx)]

    mass = [inner_product_1d(x, y, quad_order=nq) for x, y in zip(fa, fb)]
    stiff = [inner_product_1d(x, y, quad_order=nq, deriv=(1, 1)) for x, y in zip(fa, fb)]
    total = sum(stiff[m] * prod(mass[:m] + mass[m + 1 :]) for m in range(d))

    segs = [merged_segments_1d(x, y) for x, y in zip(fa, fb)]
    if all(segs):
        rule = gauss_rule(nq)
        for box in np.ndindex(*[len(s) for s in segs]):
            axes, wts, prods = [], [], []
            for m, q in enumerate(box):
                lo, hi = segs[m][q]
                x, w = rule.on(lo, hi)
                axes.append(x)
                wts.append(w)
                prods.append(fa[m].shape._eval(x, RIGHT, 0) * fb[m].shape._eval(x, RIGHT, 0))
            cvals = np.asarray(spec.c(tensor_points(axes)), dtype=float)
            spec.check_coefficient(cvals)
            weight = prods[0] * wts[0]
            for m in range(1, d):
                weight = np.multiply.outer(weight, prods[m] * wts[m])
            total += float(np.dot(weight.ravel(), cvals))

    for face in candidate_faces(a, b, N):
        m, t = face.normal_axis, face.coordinate
        tangential = prod(mass[:m] + mass[m + 1 :])
        if tangential == 0.0:
            continue
        ja, da = _trace(fa[m], t)
        jb, db = _trace(fb[m], t)
        total += tangential * (-da * jb - db * ja + sigma / h * ja * jb)
    return float(total)


def _trace(f, t):
    """Signed jump along +x and derivative average of a 1D factor at node t."""
    vl = f.shape._eval(np.array(t), LEFT, 0) if t > 0 else 0.0
    vr = f.shape._eval(np.array(t), RIGHT, 0) if t < 1 else 0.0
    dl = f.shape._eval(np.array(t), LEFT, 1) if t > 0 else None
    dr = f.shape._eval(np.array(t), RIGHT, 1) if t < 1 else None
    if dl is None:
        avg = dr
    elif dr is None:
        avg = dl
    else:
        avg = 0.5 * (dl + dr)
    return float(vl - vr), float(avg)
