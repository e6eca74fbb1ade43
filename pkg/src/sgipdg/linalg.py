"""Linear solvers and extreme eigenvalue estimates for SPD stiffness matrices."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .multiwavelet import ParameterError

log = logging.getLogger(__name__)

DENSE_LIMIT = 20_000
EIG_DENSE_LIMIT = 6_000
SOLVERS = ("dense", "cg")


class IterativeFailure(RuntimeError):
    """CG stopped before reaching the requested relative residual."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class DefinitenessError(RuntimeError):
    """The matrix is not positive definite (Cholesky breakdown)."""


class EstimationError(RuntimeError):
    """Eigenvalue iteration did not converge; ``partial`` holds what was found."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial or {}


@dataclass(frozen=True)
class SolverConfig:
    method: str = "dense"
    rel_tol: float = 1e-11
    max_iter: Optional[int] = None
    preconditioner: str = "none"

    def __post_init__(self):
        if self.method not in SOLVERS:
            raise ParameterError(f"solver must be one of {SOLVERS}, got {self.method!r}")
        if not 0.0 < self.rel_tol < 1.0:
            raise ParameterError("rel_tol must lie in (0, 1)")
        if self.max_iter is not None and self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")
        if self.preconditioner not in ("none", "diagonal"):
            raise ParameterError("preconditioner must be 'none' or 'diagonal'")


def _check_system(A, b):
    n = A.shape[0]
    if A.shape != (n, n):
        raise ParameterError("matrix must be square")
    if b.shape != (n,):
        raise ParameterError(f"right-hand side has shape {b.shape}, expected ({n},)")


def cg_solve(A, b, rel_tol, max_iter=None, diagonal=False):
    """Conjugate gradients from the zero vector; returns (x, iterations)."""
    n = A.shape[0]
    max_iter = max_iter or 20 * n
    M = None
    if diagonal:
        M = sp.diags(1.0 / A.diagonal())
    its = 0

    def count(_):
        nonlocal its
        its += 1

    x, info = spla.cg(A, b, x0=np.zeros(n), rtol=rel_tol, atol=0.0,
                      maxiter=max_iter, M=M, callback=count)
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(b - A @ x) / bnorm if bnorm > 0 else 0.0
    if info != 0:
        raise IterativeFailure(
            f"CG did not converge in {max_iter} iterations (relative residual {res:.3e})",
            res,
        )
    return x, its


def solve(A, rhs, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Solve A x = rhs for symmetric positive definite A."""
    b = np.asarray(rhs, dtype=float)
    _check_system(A, b)
    n = A.shape[0]
    if cfg.method == "dense":
        if n > DENSE_LIMIT:
            raise ParameterError(f"dense Cholesky is limited to n <= {DENSE_LIMIT}, got {n}")
        Ad = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        try:
            factor = sla.cho_factor(Ad, lower=True, check_finite=False)
        except sla.LinAlgError as exc:
            raise DefinitenessError(
                "Cholesky breakdown: matrix is not positive definite "
                "(penalty too small or level too coarse?)"
            ) from exc
        return sla.cho_solve(factor, b, check_finite=False)
    A = sp.csr_matrix(A)
    x, its = cg_solve(A, b, cfg.rel_tol, cfg.max_iter, cfg.preconditioner == "diagonal")
    log.debug("CG converged in %d iterations", its)
    return x


def extreme_eigenvalues(A, tol=1e-8):
    """(lambda_min, lambda_max) of a symmetric positive definite matrix.

    Small matrices use a dense symmetric eigensolver. Larger ones use
    Lanczos for lambda_max and Lanczos on the inverse, applied through CG
    solves at ``tol / 10``, for lambda_min.
    """
    n = A.shape[0]
    if n <= EIG_DENSE_LIMIT:
        Ad = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        ev = sla.eigvalsh(Ad, subset_by_index=None)
        return float(ev[0]), float(ev[-1])

    A = sp.csr_matrix(A)
    partial = {}
    try:
        lmax = spla.eigsh(A, k=1, which="LA", tol=tol, return_eigenvectors=False)[0]
        partial["lambda_max"] = float(lmax)
        inv = spla.LinearOperator(
            A.shape, matvec=lambda v: cg_solve(A, np.ravel(v), tol / 10)[0], dtype=float
        )
        mu = spla.eigsh(inv, k=1, which="LA", tol=tol, return_eigenvectors=False)[0]
    except (spla.ArpackNoConvergence, IterativeFailure) as exc:
        raise EstimationError(f"eigenvalue estimation failed: {exc}", partial) from exc
    if mu <= 0:
        raise DefinitenessError("matrix is not positive definite")
    return 1.0 / float(mu), float(lmax)


def condition_number(A, tol=1e-8) -> float:
    """Spectral condition number lambda_max / lambda_min of an SPD matrix."""
    lmin, lmax = extreme_eigenvalues(A, tol)
    if lmin <= 0:
        raise DefinitenessError(f"smallest eigenvalue {lmin:.3e} is not positive")
    return lmax / lmin
