"""Gauss rules, piecewise integration partitions and IPDG face candidates."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .multiwavelet import ParameterError, merged_segments_1d, support_1d

__all__ = [
    "QuadratureRule",
    "Face",
    "gauss_rule",
    "merged_segments_1d",
    "candidate_faces",
    "all_faces",
]


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def on(self, a, b):
        """Nodes and weights mapped to [a, b]."""
        return a + (b - a) * self.nodes, (b - a) * self.weights


@lru_cache(maxsize=None)
def gauss_rule(n):
    """n-point Gauss-Legendre rule on [0, 1]."""
    if int(n) != n or not 1 <= n <= 64:
        raise ParameterError("Gauss rule size must be in 1..64")
    t, w = np.polynomial.legendre.leggauss(int(n))
    nodes, weights = 0.5 * (t + 1.0), 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights)


@dataclass(frozen=True)
class Face:
    """Piece of the hyperplane x[normal_axis] == coordinate.

    ``extent`` lists one closed interval per axis; the entry for the normal
    axis is the degenerate interval (coordinate, coordinate).
    """

    normal_axis: int
    coordinate: float
    extent: tuple
    kind: str

    @property
    def is_boundary(self):
        return self.kind == "boundary"


def _kind(t):
    return "boundary" if t in (0.0, 1.0) else "interior"


def _breakpoints_1d(level, j):
    a, b = support_1d(level, j)
    return (a, b) if level == 0 else (a, 0.5 * (a + b), b)


def candidate_faces(a, b, N):
    """Faces of the level-N grid on which the IPDG edge terms of (a, b) can be nonzero.

    ``a`` and ``b`` are dof descriptors. Faces sit at breakpoints of either
    factor inside the closed overlap of the two supports, or on the domain
    boundary where both supports reach it.
    """
    d = len(a.level)
    sa = [support_1d(l, j) for l, j in zip(a.level, a.cell)]
    sb = [support_1d(l, j) for l, j in zip(b.level, b.cell)]
    closed = [(max(x[0], y[0]), min(x[1], y[1])) for x, y in zip(sa, sb)]
    if any(lo > hi for lo, hi in closed):
        return []
    h = 2.0**-N
    faces = []
    for m in range(d):
        extent_ok = all(closed[n][1] > closed[n][0] for n in range(d) if n != m)
        if not extent_ok:
            continue
        lo, hi = closed[m]
        ts = set()
        for level, j in ((a.level[m], a.cell[m]), (b.level[m], b.cell[m])):
            ts.update(t for t in _breakpoints_1d(level, j) if lo <= t <= hi)
        for t in (0.0, 1.0):
            if sa[m][0] <= t <= sa[m][1] and sb[m][0] <= t <= sb[m][1]:
                ts.add(t)
        for t in sorted(ts):
            if abs(t / h - round(t / h)) > 1e-12:  # pragma: no cover - dyadic by construction
                raise ParameterError("face coordinate is not on the level-N grid")
            extent = tuple((t, t) if n == m else closed[n] for n in range(d))
            faces.append(Face(m, t, extent, _kind(t)))
    return faces


def all_faces(d, N):
    """Every face of the uniform level-N grid (test oracles only)."""
    h = 2.0**-N
    cells = 2**N
    faces = []
    for m in range(d):
        for s in range(cells + 1):
            t = s * h
            for idx in np.ndindex(*(cells,) * (d - 1)):
                tangential = [(c * h, (c + 1) * h) for c in idx]
                extent = tuple(tangential[:m]) + ((t, t),) + tuple(tangential[m:])
                faces.append(Face(m, t, extent, _kind(t)))
    return faces
