"""Orthonormal Alpert-type multiwavelets on [0, 1].

Conventions
-----------
Every smooth piece of a basis function is stored as coefficients in the
reference-orthonormal Legendre basis of its segment,

    psi_p(t) = sqrt(2p + 1) * P_p(2t - 1),   t = (x - a) / (b - a),

so a segment [a, b] with coefficient vector c represents sum_p c_p psi_p(t).

Levels follow the usual hierarchy: level 0 holds the k+1 orthonormal
polynomials on [0, 1], level 1 the k+1 mother wavelets, and level l >= 2 the
dilates ``2**((l-1)/2) * h_i(2**(l-1) x - j)`` for j < 2**(l-1).

Point evaluation is one-sided. ``side="right"`` returns the right limit,
``side="left"`` the left limit; the default takes the right limit everywhere
except at x = 1, where only the left limit exists.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre as npleg

RIGHT = "right"
LEFT = "left"

_RESIDUAL_TOL = 1e-10


class ParameterError(ValueError):
    pass


class DomainError(ValueError):
    pass


def legendre_basis(t, k, deriv=0):
    """Values of psi_0..psi_k (or their t-derivatives) at reference points t.

    Returns an array of shape ``t.shape + (k + 1,)``.
    """
    t = np.asarray(t, dtype=float)
    s = 2.0 * t - 1.0
    scale = np.sqrt(2.0 * np.arange(k + 1) + 1.0)
    if deriv == 0:
        return npleg.legvander(s, k).reshape(t.shape + (k + 1,)) * scale
    out = np.empty(t.shape + (k + 1,))
    eye = np.eye(k + 1)
    for p in range(k + 1):
        dc = npleg.legder(eye[p], deriv) * 2.0**deriv
        out[..., p] = npleg.legval(s, dc) if dc.size else 0.0
    return out * scale


def _check_side(side):
    if side not in (LEFT, RIGHT, None):
        raise ParameterError(f"side must be 'left', 'right' or None, got {side!r}")


def _resolve_side(x, side):
    """Per-point boolean array: True where the left limit is taken."""
    x = np.asarray(x, dtype=float)
    if side is None:
        return x >= 1.0
    return np.full(x.shape, side == LEFT)


def _check_domain(x, side):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
        raise DomainError("evaluation point outside [0, 1]")
    if side == LEFT and np.any(x <= 0.0):
        raise DomainError("left limit requires x > 0")
    if side == RIGHT and np.any(x >= 1.0):
        raise DomainError("right limit requires x < 1")


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Piecewise polynomial on dyadic breakpoints, zero outside its support."""

    breakpoints: tuple
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
            raise ParameterError("breakpoints must be strictly increasing")
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] != bp.size - 1:
            raise ParameterError("need one coefficient row per segment")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self):
        return self.coeffs.shape[1] - 1

    @property
    def support(self):
        return (self.breakpoints[0], self.breakpoints[-1])

    def _eval(self, x, side, deriv):
        x = np.asarray(x, dtype=float)
        bp = np.asarray(self.breakpoints)
        left = _resolve_side(x, side)
        seg = np.where(
            left,
            np.searchsorted(bp, x, side="left") - 1,
            np.searchsorted(bp, x, side="right") - 1,
        )
        inside = (seg >= 0) & (seg < len(bp) - 1)
        seg = np.clip(seg, 0, len(bp) - 2)
        a, b = bp[seg], bp[seg + 1]
        t = (x - a) / (b - a)
        vals = legendre_basis(t, self.degree, deriv)
        out = np.einsum("...p,...p->...", vals, self.coeffs[seg])
        if deriv:
            out = out / (b - a) ** deriv
        return np.where(inside, out, 0.0)

    def __call__(self, x, side=None):
        _check_side(side)
        return self._eval(x, side, 0)

    def derivative(self, x, side=None):
        _check_side(side)
        return self._eval(x, side, 1)


@dataclass(frozen=True)
class BasisFunction1D:
    """Multiwavelet v_{i,l}^j; ``i`` is 1-based as in the usual notation."""

    i: int
    level: int
    j: int
    shape: PiecewisePolynomial = field(repr=False, compare=False)

    @property
    def support(self):
        return support_1d(self.level, self.j)

    @property
    def breakpoints(self):
        return self.shape.breakpoints

    def __call__(self, x, side=None):
        return evaluate(self, x, side)


def support_1d(level, j):
    if level <= 1:
        return (0.0, 1.0)
    w = 2.0 ** -(level - 1)
    return (j * w, (j + 1) * w)


def level_size(level):
    """Number of translates on a level: max(1, 2**(level-1))."""
    return 1 if level == 0 else 2 ** (level - 1)


def mother_coordinates(k):
    """Mother wavelets as rows of a (k+1, 2(k+1)) coordinate matrix.

    Coordinates refer to the fine modes sqrt(2) psi_p(2x) on [0, 1/2]
    (columns 0..k) and sqrt(2) psi_p(2x - 1) on [1/2, 1] (columns k+1..2k+1).
    The complement of the global polynomials is obtained by modified
    Gram-Schmidt over the fine modes in index order.
    """
    if k < 1:
        raise ParameterError("polynomial degree k must be >= 1")
    n = k + 1
    t, w = np.polynomial.legendre.leggauss(n + 1)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    psi_fine = legendre_basis(t, k)  # (q, p)
    # global psi_i restricted to the left half: psi_i(t/2); right half: psi_i((t+1)/2)
    left = legendre_basis(0.5 * t, k)
    right = legendre_basis(0.5 * (t + 1.0), k)
    coarse = np.empty((n, 2 * n))
    coarse[:, :n] = np.einsum("q,qi,qp->ip", w, left, psi_fine) / np.sqrt(2.0)
    coarse[:, n:] = np.einsum("q,qi,qp->ip", w, right, psi_fine) / np.sqrt(2.0)

    accepted = []
    basis = [row for row in coarse]
    for p in range(2 * n):
        if len(accepted) == n:
            break
        v = np.zeros(2 * n)
        v[p] = 1.0
        for _ in range(2):
            for q in basis:
                v -= (q @ v) * q
        nrm = np.linalg.norm(v)
        if nrm < _RESIDUAL_TOL:
            continue
        v /= nrm
        lead = np.flatnonzero(np.abs(v) > _RESIDUAL_TOL)[0]
        if v[lead] < 0:
            v = -v
        accepted.append(v)
        basis.append(v)
    if len(accepted) != n:  # pragma: no cover - construction always succeeds
        raise RuntimeError("failed to complete the wavelet basis")
    return np.array(accepted)


def _make_function(k, mothers, i, level, j):
    n = k + 1
    if level == 0:
        coeffs = np.zeros((1, n))
        coeffs[0, i - 1] = 1.0
        return BasisFunction1D(i, 0, 0, PiecewisePolynomial((0.0, 1.0), coeffs))
    a, b = support_1d(level, j)
    g = mothers[i - 1]
    coeffs = 2.0 ** (level / 2.0) * np.vstack([g[:n], g[n:]])
    return BasisFunction1D(i, level, j, PiecewisePolynomial((a, 0.5 * (a + b), b), coeffs))


def build_hierarchy(k, N):
    """All basis functions up to level N, ordered by (level, j, i)."""
    return MultiwaveletHierarchy(k, N).functions


def _scalar_if_scalar(x, values):
    return float(values) if np.ndim(x) == 0 else values


def evaluate(b, x, side=None):
    _check_side(side)
    _check_domain(x, side)
    return _scalar_if_scalar(x, b.shape(x, side))


def evaluate_derivative(b, x, side=None):
    _check_side(side)
    _check_domain(x, side)
    return _scalar_if_scalar(x, b.shape.derivative(x, side))


def gauss_legendre01(n):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def merged_segments_1d(a, b):
    """Maximal open intervals on which both ``a`` and ``b`` are polynomials."""
    lo = max(a.breakpoints[0], b.breakpoints[0])
    hi = min(a.breakpoints[-1], b.breakpoints[-1])
    if hi <= lo:
        return []
    pts = sorted({p for p in (*a.breakpoints, *b.breakpoints) if lo <= p <= hi})
    return list(zip(pts[:-1], pts[1:]))


def inner_product_1d(a, b, weight=None, quad_order=None, deriv=(0, 0)):
    """Integral of weight * a^(da) * b^(db) over [0, 1] by piecewise Gauss rules.

    ``deriv`` selects derivatives of the two factors, which lets the same
    routine produce broken stiffness entries.
    """
    k = max(a.shape.degree, b.shape.degree)
    if quad_order is None:
        quad_order = k + 3
    if quad_order < k + 1:
        raise ParameterError("quad_order must be at least k + 1")
    t, w = gauss_legendre01(quad_order)
    total = 0.0
    for lo, hi in merged_segments_1d(a, b):
        x = lo + (hi - lo) * t
        fa = a.shape._eval(x, RIGHT, deriv[0])
        fb = b.shape._eval(x, RIGHT, deriv[1])
        vals = fa * fb
        if weight is not None:
            vals = vals * weight(x)
        total += (hi - lo) * np.dot(w, vals)
    return float(total)


class MultiwaveletHierarchy:
    """The 1D basis up to level N with vectorised evaluation helpers.

    Functions are indexed globally in (level, j, i) order; ``offsets[l]`` is
    the index of the first function on level l.
    """

    def __init__(self, k, N):
        if int(k) != k or k < 1:
            raise ParameterError("polynomial degree k must be an integer >= 1")
        if int(N) != N or N < 0:
            raise ParameterError("max level N must be an integer >= 0")
        self.k = int(k)
        self.N = int(N)
        self.mothers = mother_coordinates(self.k)
        n = self.k + 1
        self.offsets = [0]
        for level in range(self.N + 1):
            self.offsets.append(self.offsets[-1] + n * level_size(level))
        self.size = self.offsets[-1]

    @cached_property
    def functions(self):
        return tuple(
            _make_function(self.k, self.mothers, i, level, j)
            for level in range(self.N + 1)
            for j in range(level_size(level))
            for i in range(1, self.k + 2)
        )

    def index(self, i, level, j):
        return self.offsets[level] + j * (self.k + 1) + (i - 1)

    def level_slice(self, level):
        return slice(self.offsets[level], self.offsets[level + 1])

    @cached_property
    def _mother_pieces(self):
        n = self.k + 1
        return self.mothers[:, :n], self.mothers[:, n:]

    def level_values(self, level, x, side=None, deriv=0):
        """Nonzero values of level-``level`` functions at points x.

        Returns ``(j, vals)``: the translate index active at each point and
        an array ``vals[..., i-1]``. Points outside [0, 1] get zeros.
        """
        x = np.asarray(x, dtype=float)
        left = _resolve_side(x, side)
        k = self.k
        if level == 0:
            inside = (x >= 0.0) & (x <= 1.0)
            vals = legendre_basis(np.clip(x, 0.0, 1.0), k, deriv)
            return np.zeros(x.shape, dtype=np.int64), vals * inside[..., None]
        m = 2 ** (level - 1)
        y = m * x
        # cell index of the half-width grid; left limits shift exact nodes down
        q = np.where(left, np.ceil(2.0 * y) - 1.0, np.floor(2.0 * y))
        inside = (q >= 0) & (q < 2 * m)
        q = np.clip(q, 0, 2 * m - 1).astype(np.int64)
        j = q // 2
        half = q % 2
        t = 2.0 * y - q
        psi = legendre_basis(t, k, deriv)  # (..., p)
        lcoef, rcoef = self._mother_pieces
        coef = np.where(half[..., None, None] == 0, lcoef, rcoef)  # (..., i, p)
        vals = np.einsum("...ip,...p->...i", coef, psi)
        scale = 2.0 ** (level / 2.0) * (2.0 * m) ** deriv
        return j, vals * scale * inside[..., None]

    def eval_matrix(self, x, side=None, deriv=0, levels=None):
        """Dense matrix E[p, alpha] of basis function values at points x."""
        x = np.asarray(x, dtype=float).ravel()
        levels = range(self.N + 1) if levels is None else levels
        n = self.k + 1
        blocks = []
        for level in levels:
            j, vals = self.level_values(level, x, side, deriv)
            block = np.zeros((x.size, level_size(level), n))
            block[np.arange(x.size), j] = vals
            blocks.append(block.reshape(x.size, -1))
        return np.hstack(blocks)

    def fine_transform(self, level=None):
        """Orthogonal map from hierarchical coefficients to cell Legendre modes.

        Row alpha holds the coordinates of basis function alpha (restricted
        to levels <= ``level``) in the L2-orthonormal modes
        ``2**(L/2) psi_p(2**L x - q)`` of the cells of grid level L.
        """
        L = self.N if level is None else level
        n = self.k + 1
        t, w = gauss_legendre01(n + 1)
        cells = 2**L
        x = ((np.arange(cells)[:, None] + t[None, :]) / cells).ravel()
        E = self.eval_matrix(x, levels=range(L + 1)).reshape(cells, t.size, -1)
        psi = legendre_basis(t, self.k)
        T = np.einsum("g,cga,gp->acp", w, E, psi) * 2.0 ** (-L / 2.0)
        return T.reshape(E.shape[2], cells * n)
