"""Convergence studies: assemble, solve and measure over a range of levels."""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .assembly import (
    MAX_NNZ, METHODS, AssemblyConfig, assemble_load, assemble_matrix, numerical_nnz, structural_nnz,
)
from .io import emit_sparsity_pattern, write_matrix
from .linalg import DENSE_LIMIT, SolverConfig, condition_number, solve
from .metrics import error_norms, observed_order
from .multiwavelet import ParameterError
from .problems import builtin_problem
from .sparse_space import CapacityError, DofMap

log = logging.getLogger(__name__)

CSV_HEADER = (
    "method", "d", "k", "N", "dof", "l2_error", "l2_order", "h1_error", "h1_order",
    "nnz", "o_s", "kappa2", "t_assemble", "t_solve",
)
KAPPA_AUTO_LIMIT = 20_000


@dataclass
class StudyRow:
    method: str
    d: int
    k: int
    N: int
    dof: Optional[int] = None
    l2_error: Optional[float] = None
    l2_order: Optional[float] = None
    h1_error: Optional[float] = None
    h1_order: Optional[float] = None
    nnz: Optional[int] = None
    kappa2: Optional[float] = None
    t_assemble: Optional[float] = None
    t_solve: Optional[float] = None
    error: Optional[str] = None
    # entries above 1e-12 * max|a|; not part of the CSV
    nnz_numerical: Optional[int] = None

    @property
    def o_s(self):
        if self.nnz is None or self.dof is None or self.dof < 2 or self.nnz < 1:
            return None
        return math.log(self.nnz) / math.log(self.dof)

    @property
    def ok(self):
        return self.error is None

    def csv_fields(self):
        def num(v, fmt):
            return "" if v is None or (isinstance(v, float) and math.isnan(v)) else format(v, fmt)

        return [
            self.method, str(self.d), str(self.k), str(self.N), num(self.dof, "d"),
            num(self.l2_error, ".6e"), num(self.l2_order, ".4f"),
            num(self.h1_error, ".6e"), num(self.h1_order, ".4f"),
            num(self.nnz, "d"), num(self.o_s, ".6f"), num(self.kappa2, ".6e"),
            num(self.t_assemble, ".3f"), num(self.t_solve, ".3f"),
        ]


@dataclass
class StudyConfig:
    d: int
    k: int
    levels: tuple
    method: str = "both"
    problem: str = "example1"
    sigma: Optional[float] = None
    quad_points: Optional[int] = None
    solver: Optional[str] = None
    rel_tol: float = 1e-11
    droptol: float = 0.0
    kappa2: Optional[bool] = None
    out: Optional[str] = None
    emit_matrix: Optional[str] = None
    emit_pattern: Optional[str] = None

    def __post_init__(self):
        self.levels = tuple(int(n) for n in self.levels)
        if not self.levels:
            raise ParameterError("level range is empty")
        if list(self.levels) != sorted(set(self.levels)):
            raise ParameterError("levels must be strictly ascending")
        if self.method not in METHODS + ("both",):
            raise ParameterError(f"method must be original, modified or both, got {self.method!r}")
        if self.solver not in (None, "dense", "cg"):
            raise ParameterError(f"solver must be dense or cg, got {self.solver!r}")

    @property
    def methods(self):
        return ("modified", "original") if self.method == "both" else (self.method,)


def _tagged_path(base, method, N):
    base = Path(base)
    return base.with_name(f"{base.stem}_{method}_N{N}{base.suffix}")


def _run_row(cfg: StudyConfig, spec, method, N):
    row = StudyRow(method, cfg.d, cfg.k, N)
    dofmap = DofMap(cfg.d, cfg.k, N)
    row.dof = dofmap.size
    projected = structural_nnz(dofmap, method)
    if projected > MAX_NNZ:
        raise CapacityError(f"projected {projected} stored entries exceed {MAX_NNZ}")

    acfg = AssemblyConfig(cfg.k, N, method, cfg.sigma, cfg.quad_points, cfg.droptol)
    t0 = time.perf_counter()
    A = assemble_matrix(dofmap, spec, acfg)
    b = assemble_load(dofmap, spec, acfg)
    row.t_assemble = time.perf_counter() - t0
    row.nnz = int(A.nnz)
    row.nnz_numerical = numerical_nnz(A)
    if cfg.emit_matrix:
        write_matrix(A, _tagged_path(cfg.emit_matrix, method, N))
    if cfg.emit_pattern:
        emit_sparsity_pattern(A, _tagged_path(cfg.emit_pattern, method, N))

    solver = cfg.solver or ("dense" if dofmap.size <= DENSE_LIMIT else "cg")
    t0 = time.perf_counter()
    x = solve(A, b, SolverConfig(solver, cfg.rel_tol))
    row.t_solve = time.perf_counter() - t0

    if spec.has_exact:
        rep = error_norms(x, dofmap, spec, cfg.quad_points)
        row.l2_error, row.h1_error = rep.l2_error, rep.h1_error
    want_kappa = cfg.kappa2 if cfg.kappa2 is not None else dofmap.size <= KAPPA_AUTO_LIMIT
    if want_kappa:
        row.kappa2 = condition_number(A)
    return row


def _fill_orders(rows):
    prev = {}
    for row in rows:
        p = prev.get(row.method)
        if p is not None and p.N == row.N - 1:
            for name in ("l2", "h1"):
                e0, e1 = getattr(p, f"{name}_error"), getattr(row, f"{name}_error")
                if e0 and e1 and e0 > 0 and e1 > 0:
                    setattr(row, f"{name}_order", observed_order(e0, e1))
        prev[row.method] = row if row.ok else None


def run_study(cfg: StudyConfig, spec=None):
    """Run every (method, N) of ``cfg``; failures are recorded on the row."""
    spec = spec or builtin_problem(cfg.problem, cfg.d)
    rows = []
    for method in cfg.methods:
        for N in cfg.levels:
            try:
                row = _run_row(cfg, spec, method, N)
            except Exception as exc:  # recorded per row, the study goes on
                log.error("%s N=%d failed: %s", method, N, exc)
                row = StudyRow(method, cfg.d, cfg.k, N, error=f"{type(exc).__name__}: {exc}")
                try:
                    row.dof = DofMap(cfg.d, cfg.k, N).size
                except Exception:
                    pass
            log.info("%s N=%d dof=%s nnz=%s (numerical %s) l2=%s", method, N, row.dof, row.nnz,
                     row.nnz_numerical, row.l2_error)
            rows.append(row)
    _fill_orders(rows)
    if cfg.out:
        write_csv(rows, cfg.out)
    return rows


def _write_rows(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(row.csv_fields())


def write_csv(rows, path):
    """Write study rows to ``path`` (a file name or an open text stream)."""
    if hasattr(path, "write"):
        _write_rows(rows, path)
        return None
    with open(path, "w", newline="") as fh:
        _write_rows(rows, fh)
    return Path(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

