"""Sparse grid interior penalty DG solver for -Laplace(u) + c u = f on [0, 1]^d.

The approximation space is spanned by tensor products of Alpert-type
orthonormal multiwavelets on levels with |l|_1 <= N. Two stiffness matrices
are available: the plain IPDG form (``original``) and its truncation that
drops every block pair with |max(l, l')|_1 > N (``modified``), which is much
sparser at the same accuracy.
"""
from .assembly import (
    AssemblyConfig,
    apply_droptol,
    assemble_load,
    assemble_matrix,
    ipdg_matrix_1d,
    numerical_nnz,
    pair_entry,
    structural_nnz,
)
from .io import emit_sparsity_pattern, read_matrix, read_sparsity_pattern, write_matrix
from .linalg import (
    DefinitenessError,
    EstimationError,
    IterativeFailure,
    SolverConfig,
    condition_number,
    solve,
)
from .metrics import (
    CapabilityError,
    ErrorReport,
    SparseGridFunction,
    error_norms,
    observed_order,
    project_sparse,
)
from .multiwavelet import (
    DomainError,
    MultiwaveletHierarchy,
    ParameterError,
    build_hierarchy,
    evaluate,
    evaluate_derivative,
    inner_product_1d,
)
from .problems import PROBLEMS, ProblemError, ProblemSpec, SeparableField, SeparableTerm, builtin_problem
from .sparse_space import CapacityError, DofMap, blocks_coupled, build_dofmap, count_dofs, enumerate_levels
from .study import StudyConfig, StudyRow, run_study, write_csv

__version__ = "0.1.0"
