"""Sparse grid L2 projection, evaluation of sparse grid functions, error norms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._tensor import block_to_kron, kron_to_block, multi_mode_product, tensor_points
from .assembly import fine_nodes, hierarchy, project_1d
from .multiwavelet import LEFT, RIGHT, level_size
from .problems import ProblemSpec, SeparableField
from .sparse_space import DofMap

QMC_POINTS = 200_000
_CHUNK_POINTS = 1_500_000


class CapabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class ErrorReport:
    l2_error: float
    h1_error: float
    energy_error: Optional[float] = None
    orders: Optional[tuple] = None
    method: str = "tensor"


def observed_order(e_prev, e_curr):
    if not (e_prev > 0 and e_curr > 0):
        raise ValueError("observed order needs two positive errors")
    return math.log2(e_prev / e_curr)


def _kron_shape(dofmap, level):
    n = dofmap.k + 1
    return tuple(n * s for s in dofmap.cells_shape(level))


def _chunks(n_first, rest, limit=_CHUNK_POINTS):
    step = max(1, limit // max(rest, 1))
    for start in range(0, n_first, step):
        yield slice(start, min(n_first, start + step))


# ---------------------------------------------------------------------------
# projection


def project_sparse(g, dofmap: DofMap, quad_points=None) -> np.ndarray:
    """Coefficients <g, v_a> of the L2 projection onto the sparse space.

    The integrals use ``quad_points`` Gauss points per axis on every cell of
    the level-N grid. Separable fields are projected factor by factor.
    """
    d, k, N = dofmap.d, dofmap.k, dofmap.N
    nq = quad_points or k + 3
    hier = hierarchy(k, N)
    out = np.zeros(dofmap.size)
    if isinstance(g, SeparableField):
        cache = {}
        terms = []
        for term in g.terms:
            vecs = []
            for fac in term.factors:
                if id(fac) not in cache:
                    cache[id(fac)] = project_1d(hier, fac, nq)
                vecs.append(cache[id(fac)])
            terms.append((term.coef, vecs))
        for l in dofmap.levels:
            block = 0.0
            for coef, vecs in terms:
                parts = [vecs[m][hier.level_slice(l[m])] for m in range(d)]
                t = parts[0]
                for p in parts[1:]:
                    t = np.multiply.outer(t, p)
                block = block + coef * t
            out[dofmap.block_slice(l)] = kron_to_block(np.asarray(block), dofmap.kron_permutation(l))
        return out

    x, w = fine_nodes(N, nq)
    E = {lm: hier.eval_matrix(x, levels=[lm]) for lm in range(N + 1)}
    acc = {l: 0.0 for l in dofmap.levels}
    for chunk in _chunks(x.size, x.size ** (d - 1)):
        axes = [x[chunk]] + [x] * (d - 1)
        wts = [w[chunk]] + [w] * (d - 1)
        vals = np.asarray(g(tensor_points(axes)), dtype=float).reshape([a.size for a in axes])
        for m in range(d):
            shape = [1] * d
            shape[m] = -1
            vals = vals * wts[m].reshape(shape)
        for l in dofmap.levels:
            mats = [E[l[0]][chunk].T] + [E[lm].T for lm in l[1:]]
            acc[l] = acc[l] + multi_mode_product(vals, mats)
    for l in dofmap.levels:
        out[dofmap.block_slice(l)] = kron_to_block(np.asarray(acc[l]), dofmap.kron_permutation(l))
    return out


# ---------------------------------------------------------------------------
# evaluation of sparse grid functions


class SparseGridFunction:
    """u_h = sum_a coeffs[a] v_a, evaluated on tensor grids or scattered points."""

    def __init__(self, coeffs, dofmap: DofMap):
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.shape != (dofmap.size,):
            raise ValueError("coefficient vector does not match the dof map")
        self.dofmap = dofmap
        self.hier = hierarchy(dofmap.k, dofmap.N)
        self._blocks = {
            l: block_to_kron(
                self.coeffs[dofmap.block_slice(l)],
                dofmap.kron_permutation(l),
                _kron_shape(dofmap, l),
            )
            for l in dofmap.levels
        }

    def on_grid(self, axes, sides=None, derivs=None):
        """Values on the tensor grid of 1D point arrays ``axes``.

        ``sides[m]`` picks one-sided limits and ``derivs[m]`` the derivative
        order along axis m.
        """
        d = self.dofmap.d
        sides = sides or [None] * d
        derivs = derivs or [0] * d
        cache = {}

        def emat(m, lm):
            key = (m, lm)
            if key not in cache:
                cache[key] = self.hier.eval_matrix(axes[m], sides[m], derivs[m], levels=[lm])
            return cache[key]

        out = np.zeros([len(a) for a in axes])
        for l, T in self._blocks.items():
            out += multi_mode_product(T, [emat(m, lm) for m, lm in enumerate(l)])
        return out

    def at_points(self, X, deriv_axis=None):
        """Values (or one partial derivative) at scattered points X of shape (n, d)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d, n = self.dofmap.d, self.dofmap.k + 1
        out = np.zeros(X.shape[0])
        for l in self.dofmap.levels:
            cshape = self.dofmap.cells_shape(l)
            block = self.coeffs[self.dofmap.block_slice(l)].reshape(-1, n**d)
            js, vals = [], []
            for m in range(d):
                j, v = self.hier.level_values(l[m], X[:, m], None, int(deriv_axis == m))
                js.append(j)
                vals.append(v)
            flat = np.ravel_multi_index(js, cshape)
            outer = vals[0]
            for v in vals[1:]:
                outer = (outer[:, :, None] * v[:, None, :]).reshape(X.shape[0], -1)
            out += np.einsum("pi,pi->p", block[flat], outer)
        return out

    def __call__(self, X):
        return self.at_points(X)


def _separable_on_grid(field, axes, deriv_axis=None):
    out = 0.0
    for term in field.terms:
        val = np.asarray(term.coef, dtype=float)
        for m, g in enumerate(term.factors):
            fm = term.derivatives[m] if m == deriv_axis else g
            val = np.multiply.outer(val, fm(axes[m]))
        out = out + val
    return np.asarray(out)


def _exact_on_grid(spec, axes, deriv_axis=None):
    """Exact solution (or one gradient component) on a tensor grid."""
    u = spec.u
    if isinstance(u, SeparableField) and (deriv_axis is None or u.has_gradient):
        return _separable_on_grid(u, axes, deriv_axis)
    pts = tensor_points(axes)
    shape = [len(a) for a in axes]
    if deriv_axis is None:
        return np.asarray(u(pts), dtype=float).reshape(shape)
    return np.asarray(spec.grad_u(pts), dtype=float)[:, deriv_axis].reshape(shape)


def _weights_grid(wts):
    out = np.asarray(wts[0])
    for w in wts[1:]:
        out = np.multiply.outer(out, w)
    return out


# ---------------------------------------------------------------------------
# error norms


def error_norms(coeffs, dofmap: DofMap, spec: ProblemSpec, quad_points=None,
                energy=False, qmc_points=QMC_POINTS, method=None):
    """L2 and broken H1-seminorm errors of u_h against the exact solution.

    Up to d = 3 the integrals are tensor Gauss rules on every cell of the
    level-N grid. For d >= 4 they are quasi-Monte Carlo averages over
    ``qmc_points`` scrambled Halton points (``method`` overrides the choice).
    ``energy=True`` adds the energy norm, which includes face terms.
    """
    if not spec.has_exact:
        raise CapabilityError("problem has no exact solution")
    need_grad = spec.grad_u is not None
    uh = SparseGridFunction(coeffs, dofmap)
    d, k, N = dofmap.d, dofmap.k, dofmap.N
    method = method or ("tensor" if d <= 3 else "qmc")
    if method == "qmc":
        return _qmc_errors(uh, spec, qmc_points, need_grad)

    nq = quad_points or k + 3
    x, w = fine_nodes(N, nq)
    l2 = h1 = cmass = 0.0
    for chunk in _chunks(x.size, x.size ** (d - 1)):
        axes = [x[chunk]] + [x] * (d - 1)
        W = _weights_grid([w[chunk]] + [w] * (d - 1))
        err = uh.on_grid(axes) - _exact_on_grid(spec, axes)
        l2 += float(np.sum(W * err**2))
        if energy:
            cvals = np.asarray(spec.c(tensor_points(axes)), dtype=float).reshape(err.shape)
            cmass += float(np.sum(W * cvals * err**2))
        if need_grad:
            for m in range(d):
                derivs = [0] * d
                derivs[m] = 1
                gerr = uh.on_grid(axes, derivs=derivs) - _exact_on_grid(spec, axes, m)
                h1 += float(np.sum(W * gerr**2))
    energy_error = None
    if energy:
        energy_error = math.sqrt(h1 + cmass + _face_energy(uh, spec, nq))
    return ErrorReport(
        math.sqrt(l2), math.sqrt(h1) if need_grad else float("nan"), energy_error
    )


def _face_energy(uh, spec, nq):
    """h * sum_e int {dv/dn}^2 + (1/h) * sum_e int [v]^2 for v = u_h - u."""
    d, N = uh.dofmap.d, uh.dofmap.N
    h = 2.0**-N
    cells = 2**N
    x, w = fine_nodes(N, nq)
    t = np.arange(cells + 1) * h
    total = 0.0
    for m in range(d):
        axes = [x] * d
        axes[m] = t
        W = _weights_grid([w] * (d - 1)).reshape(
            [1 if n == m else x.size for n in range(d)]
        )
        u_exact = _exact_on_grid(spec, axes)
        du_exact = _exact_on_grid(spec, axes, m)
        sides = [None] * d
        derivs = [0] * d
        vals, ders = {}, {}
        for side in (LEFT, RIGHT):
            sides[m] = side
            vals[side] = uh.on_grid(axes, sides=list(sides)) - u_exact
            derivs[m] = 1
            ders[side] = uh.on_grid(axes, sides=list(sides), derivs=list(derivs)) - du_exact
            derivs[m] = 0
        # outside the domain v vanishes and the average is one-sided
        idx = [slice(None)] * d
        sl_first = list(idx)
        sl_first[m] = 0
        sl_last = list(idx)
        sl_last[m] = cells
        vals[LEFT][tuple(sl_first)] = 0.0
        vals[RIGHT][tuple(sl_last)] = 0.0
        avg = 0.5 * (ders[LEFT] + ders[RIGHT])
        avg[tuple(sl_first)] = ders[RIGHT][tuple(sl_first)]
        avg[tuple(sl_last)] = ders[LEFT][tuple(sl_last)]
        jump = vals[LEFT] - vals[RIGHT]
        total += h * float(np.sum(W * avg**2)) + float(np.sum(W * jump**2)) / h
    return total


def _qmc_errors(uh, spec, npts, need_grad):
    from scipy.stats import qmc

    d = uh.dofmap.d
    X = qmc.Halton(d, scramble=True, seed=0).random(npts)
    l2 = h1 = 0.0
    grad = None
    for start in range(0, npts, 50_000):
        P = X[start : start + 50_000]
        l2 += float(np.sum((uh.at_points(P) - spec.u(P)) ** 2))
        if need_grad:
            grad = spec.grad_u(P)
            for m in range(d):
                h1 += float(np.sum((uh.at_points(P, m) - grad[:, m]) ** 2))
    return ErrorReport(
        math.sqrt(l2 / npts),
        math.sqrt(h1 / npts) if need_grad else float("nan"),
        method="qmc",
    )


def level_block_norms(coeffs, dofmap):
    """||Q_l u||_{L2} per level block, i.e. the Euclidean norm of each block."""
    return {l: float(np.linalg.norm(coeffs[dofmap.block_slice(l)])) for l in dofmap.levels}


def projection_energy_error(g, dofmap, spec, quad_points=None):
    """Energy norm of P_N g - g (u of ``spec`` is taken as g)."""
    coeffs = project_sparse(g, dofmap, quad_points)
    return error_norms(coeffs, dofmap, spec, quad_points, energy=True).energy_error
