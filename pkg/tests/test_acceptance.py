"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``ACCEPTANCE`` line with PASS or FAIL and the details
of any mismatch. Reference values are transcribed from the published
convergence, sparsity and conditioning tables. Where a published value
cannot be reproduced the test is left failing on purpose.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import pytest

from oracles import brute_force_matrix, gram_matrix
from sgipdg.assembly import AssemblyConfig, assemble_matrix, structural_nnz
from sgipdg.metrics import projection_energy_error
from sgipdg.multiwavelet import MultiwaveletHierarchy, inner_product_1d
from sgipdg.problems import builtin_problem, constant_c
from sgipdg.sparse_space import DofMap, count_dofs, l1, mi_max
from sgipdg.study import StudyConfig, run_study

# Example 1, d = 2: (L2, H1) per N = 2..6; both methods share the columns
ERRORS_D2 = {
    1: ([6.12e-2, 1.62e-2, 4.02e-3, 9.99e-4, 2.52e-4], [6.88e-1, 3.37e-1, 1.66e-1, 8.26e-2, 4.11e-2]),
    2: ([1.52e-3, 2.27e-4, 3.51e-5, 5.27e-6, 7.61e-7], [5.27e-2, 1.34e-2, 3.35e-3, 8.37e-4, 2.09e-4]),
    3: ([9.17e-5, 6.03e-6, 3.84e-7, 2.43e-8, 1.54e-9], [3.53e-3, 4.37e-4, 5.43e-5, 6.78e-6, 8.47e-7]),
}
ORDERS_D2 = {1: [1.92, 2.01, 2.01, 1.99], 2: [2.74, 2.70, 2.74, 2.79], 3: [3.93, 3.97, 3.98, 3.98]}

# d = 2 sparsity and conditioning: N -> (DOF, NNZ mod, O_s mod, kappa mod, NNZ orig, O_s orig, kappa orig)
SPARSITY_D2 = {
    1: {2: (32, 592, 1.84, 8.23e1, 976, 1.99, 8.23e1),
        3: (80, 2608, 1.80, 3.49e2, 5424, 1.96, 3.49e2),
        4: (448, 9808, 1.51, 1.40e3, 26192, 1.67, 1.40e3),
        5: (1024, 33160, 1.50, 5.54e3, 116122, 1.68, 5.54e3),
        6: (2304, 103968, 1.49, 2.20e4, 493154, 1.69, 2.20e4)},
    2: {2: (180, 2976, 1.54, 3.51e2, 4920, 1.64, 3.51e2),
        3: (432, 12864, 1.56, 1.37e3, 27120, 1.68, 1.37e3),
        4: (1008, 48132, 1.56, 5.35e3, 131076, 1.70, 5.35e3),
        5: (2304, 162324, 1.55, 2.11e4, 580352, 1.71, 2.11e4),
        6: (5184, 509616, 1.54, 8.37e4, 2460726, 1.72, 8.37e4)},
    3: {2: (128, 9216, 1.88, 8.53e2, 15616, 1.99, 8.53e2),
        3: (768, 39952, 1.59, 3.29e3, 85760, 1.71, 3.29e3),
        4: (1792, 149264, 1.59, 1.28e4, 413952, 1.73, 1.28e4),
        5: (4096, 505072, 1.58, 5.04e4, 1848064, 1.73, 5.04e4),
        6: (9216, 1587200, 1.56, 2.00e5, 7869696, 1.74, 2.00e5)},
}

# Example 1, d = 3: (L2, H1) per N = 2..5 (k = 3: N = 2..4)
ERRORS_D3 = {
    1: ([1.30e-1, 3.54e-2, 8.88e-3, 2.16e-3], [9.45e-1, 4.41e-1, 2.07e-1, 9.90e-2]),
    2: ([1.13e-3, 2.10e-4, 3.73e-5, 6.15e-6], [4.54e-2, 1.19e-2, 3.01e-3, 7.54e-4]),
    3: ([1.12e-4, 7.40e-6, 4.72e-7], [1.30e-3, 1.39e-4, 1.58e-5]),
}
ORDERS_D3 = {1: [1.87, 1.99, 2.04], 2: [2.43, 2.49, 2.60], 3: [3.92, 3.97]}

# d = 3 sparsity: N -> (DOF, NNZ mod, O_s mod, NNZ orig, O_s orig)
SPARSITY_D3 = {
    1: {2: (104, 4.31e3, 1.80, 1.05e4, 1.99), 3: (304, 2.34e4, 1.76, 8.26e4, 1.98),
        4: (832, 1.08e5, 1.72, 5.51e5, 1.97), 5: (2176, 4.47e5, 1.69, 3.27e6, 1.95),
        6: (5504, 1.69e6, 1.67, 1.80e7, 1.94)},
    2: {2: (351, 4.93e4, 1.84, 1.19e5, 1.99), 3: (1026, 2.65e5, 1.80, 9.38e5, 1.98),
        4: (2808, 1.22e6, 1.76, 6.26e6, 1.97), 5: (7344, 5.03e6, 1.73, 3.73e7, 1.96),
        6: (18576, 1.91e7, 1.71, 2.06e8, 1.95)},
    3: {2: (832, 2.76e5, 1.86, 6.69e5, 1.99), 3: (2432, 1.48e6, 1.82, 5.26e6, 1.99),
        4: (6656, 6.81e6, 1.79, 3.51e7, 1.97), 5: (17408, 2.81e7, 1.76, 2.10e8, 1.96),
        6: (44032, 1.07e8, 1.73, 1.16e9, 1.95)},
}

# higher dimensions, modified method: DOF per N = 2.. and k = 1 L2 errors
DOF_HIGH = {
    4: {1: [304, 1008, 3072, 8832, 24320], 2: [1539, 5103, 15552, 44712, 123120],
        3: [4864, 16128, 49152]},
    5: {1: [832, 3072, 10272, 32064, 95104], 2: [6318, 23328, 78003, 243486, 722196],
        3: [26624, 98304, 328704]},
    6: {1: [2176, 8832, 32064, 107712, 341504], 2: [24786, 100602, 365229]},
}
L2_HIGH = {4: ([1.49e-1, 7.35e-2, 2.15e-2, 5.62e-3], 0.05),
           5: ([1.30e-1, 9.37e-2, 4.10e-2], 0.10),
           6: ([1.03e-1, 8.71e-2], 0.10)}

ASSEMBLE_LIMIT = 4 * 10**7


def report(capsys, number, title, failures, checked, notes=()):
    status = "PASS" if not failures else "FAIL"
    with capsys.disabled():
        print(f"\nACCEPTANCE {number} ({title}): {status}; {checked} checks, {len(failures)} failed")
        for line in list(notes) + failures:
            print(f"    {line}")
    assert not failures, f"criterion {number}: " + "; ".join(failures[:5])


def rel(a, b):
    return abs(a - b) / abs(b)


@lru_cache(maxsize=None)
def study(d, k, levels, method="both", kappa2=False):
    rows = run_study(StudyConfig(d, k, levels, method=method, kappa2=kappa2))
    bad = [r for r in rows if not r.ok]
    assert not bad, bad[0].error
    return {(r.method, r.N): r for r in rows}


def d2_rows(k):
    # condition numbers are part of the d = 2 table up to N = 5
    rows = dict(study(2, k, (2, 3, 4, 5), kappa2=True))
    rows.update(study(2, k, (6,), kappa2=False))
    return rows


def d3_rows(k):
    return study(3, k, (2, 3, 4, 5) if k < 3 else (2, 3, 4))


def test_criterion_01_dof_counts(capsys):
    failures, checked = [], 0
    for k, rows in SPARSITY_D2.items():
        for N, row in rows.items():
            checked += 1
            if count_dofs(2, k, N) != row[0]:
                failures.append(f"d=2 k={k} N={N}: {count_dofs(2, k, N)} vs table {row[0]}")
    for k, rows in SPARSITY_D3.items():
        for N, row in rows.items():
            checked += 1
            if count_dofs(3, k, N) != row[0]:
                failures.append(f"d=3 k={k} N={N}: {count_dofs(3, k, N)} vs table {row[0]}")
    for d, per_k in DOF_HIGH.items():
        for k, values in per_k.items():
            for N, dof in enumerate(values, start=2):
                checked += 1
                if DofMap(d, k, N).size != dof:
                    failures.append(f"d={d} k={k} N={N}: {DofMap(d, k, N).size} vs table {dof}")
    report(capsys, 1, "DOF exactness", failures, checked)


def _compare_errors(failures, label, rows, l2_ref, h1_ref, levels):
    checked = 0
    for N, l2, h1 in zip(levels, l2_ref, h1_ref):
        mod, org = rows[("modified", N)], rows[("original", N)]
        for name, r in (("modified", mod), ("original", org)):
            checked += 2
            if rel(r.l2_error, l2) > 0.02:
                failures.append(f"{label} N={N} {name}: L2 {r.l2_error:.4e} vs {l2:.2e} ({100 * rel(r.l2_error, l2):.1f}%)")
            if rel(r.h1_error, h1) > 0.05:
                failures.append(f"{label} N={N} {name}: H1 {r.h1_error:.4e} vs {h1:.2e} ({100 * rel(r.h1_error, h1):.1f}%)")
        checked += 2
        for name in ("l2_error", "h1_error"):
            a, b = getattr(mod, name), getattr(org, name)
            if f"{a:.2e}" != f"{b:.2e}":
                failures.append(f"{label} N={N}: {name} modified {a:.4e} vs original {b:.4e} differ in 3 digits")
    return checked


def test_criterion_02_convergence_d2(capsys):
    failures, checked = [], 0
    for k, (l2, h1) in ERRORS_D2.items():
        checked += _compare_errors(failures, f"d=2 k={k}", d2_rows(k), l2, h1, range(2, 7))
    report(capsys, 2, "d=2 convergence table", failures, checked)


def test_criterion_03_convergence_d3(capsys):
    failures, checked = [], 0
    for k, (l2, h1) in ERRORS_D3.items():
        checked += _compare_errors(failures, f"d=3 k={k}", d3_rows(k), l2, h1, range(2, 2 + len(l2)))
    report(capsys, 3, "d=3 convergence table", failures, checked)


def test_criterion_04_observed_orders(capsys):
    failures, checked = [], 0
    cases = [(2, k, d2_rows(k), 6, ORDERS_D2[k][-1]) for k in (1, 2, 3)]
    cases += [(3, k, d3_rows(k), 1 + len(ERRORS_D3[k][0]), ORDERS_D3[k][-1]) for k in (1, 2, 3)]
    for d, k, rows, N, ref in cases:
        for method in ("modified", "original"):
            checked += 1
            order = math.log2(rows[(method, N - 1)].l2_error / rows[(method, N)].l2_error)
            if abs(order - ref) > 0.15:
                failures.append(f"d={d} k={k} N={N} {method}: order {order:.3f} vs {ref:.2f}")
    report(capsys, 4, "final observed L2 orders", failures, checked)


def test_criterion_05_higher_dimensions(capsys):
    failures, checked = [], 0
    for d, (refs, tol) in L2_HIGH.items():
        levels = tuple(range(2, 2 + len(refs)))
        rows = study(d, 1, levels, method="modified")
        for N, ref in zip(levels, refs):
            checked += 1
            err = rows[("modified", N)].l2_error
            if rel(err, ref) > tol:
                failures.append(f"d={d} k=1 N={N}: L2 {err:.4e} vs {ref:.2e} ({100 * rel(err, ref):.1f}% > {100 * tol:.0f}%)")
    report(capsys, 5, "higher-dimensional L2 errors", failures, checked)


@lru_cache(maxsize=None)
def stored_nnz(d, k, N, method):
    """Entries stored at the default drop tolerance.

    Rows too large to assemble here fall back to the structural count,
    which equals the stored count on every row that is assembled.
    """
    dm = DofMap(d, k, N)
    count = structural_nnz(dm, method)
    if count > ASSEMBLE_LIMIT:
        return count, False
    spec = builtin_problem("example1", d)
    A = assemble_matrix(dm, spec, AssemblyConfig(k, N, method))
    assert A.nnz == count
    return int(A.nnz), True


def test_criterion_06_sparsity(capsys):
    failures, checked = [], 0
    fallback = []
    tables = [(2, k, N, row[0], row[1], row[2], row[4], row[5])
              for k, rows in SPARSITY_D2.items() for N, row in rows.items()]
    tables += [(3, k, N, *row) for k, rows in SPARSITY_D3.items() for N, row in rows.items()]
    for d, k, N, _, nnz_m, os_m, nnz_o, os_o in tables:
        dof = count_dofs(d, k, N)
        got = {}
        for method, ref_nnz, ref_os in (("modified", nnz_m, os_m), ("original", nnz_o, os_o)):
            nnz, assembled = stored_nnz(d, k, N, method)
            got[method] = nnz
            if not assembled:
                fallback.append(f"d={d} k={k} N={N} {method}")
            os_ = math.log(nnz) / math.log(dof)
            checked += 2
            if rel(nnz, ref_nnz) > 0.05:
                failures.append(f"d={d} k={k} N={N} {method}: NNZ {nnz} vs {ref_nnz:.4g} ({100 * rel(nnz, ref_nnz):.1f}%)")
            if abs(os_ - ref_os) > 0.03:
                failures.append(f"d={d} k={k} N={N} {method}: O_s {os_:.3f} vs {ref_os:.2f}")
        if N >= 3:
            checked += 1
            if not got["modified"] < got["original"]:
                failures.append(f"d={d} k={k} N={N}: modified NNZ not below original")
    notes = ["structural count used (too large to assemble here): " + ", ".join(fallback)] if fallback else []
    report(capsys, 6, "sparsity NNZ and O_s", failures, checked, notes)


def test_criterion_07_conditioning(capsys):
    failures, checked = [], 0
    for k, rows in SPARSITY_D2.items():
        res = d2_rows(k)
        for N in (2, 3, 4, 5):
            ref_m, ref_o = rows[N][3], rows[N][6]
            km, ko = res[("modified", N)].kappa2, res[("original", N)].kappa2
            checked += 3
            if rel(km, ref_m) > 0.02:
                failures.append(f"k={k} N={N} modified: kappa {km:.4e} vs {ref_m:.2e}")
            if rel(ko, ref_o) > 0.02:
                failures.append(f"k={k} N={N} original: kappa {ko:.4e} vs {ref_o:.2e}")
            if not 0.99 <= km / ko <= 1.01:
                failures.append(f"k={k} N={N}: kappa ratio {km / ko:.4f}")
    report(capsys, 7, "condition numbers", failures, checked)


def test_criterion_08_semi_orthogonality(capsys):
    failures, checked = [], 0
    cases = [(2, k, N) for k in (1, 2) for N in (1, 2, 3)] + [(3, 1, N) for N in (1, 2, 3)]
    for d, k, N in cases:
        dm = DofMap(d, k, N)
        A = assemble_matrix(dm, constant_c(d), AssemblyConfig(k, N, "original")).toarray()
        worst = 0.0
        for l in dm.levels:
            for lp in dm.levels:
                if l1(mi_max(l, lp)) > N:
                    checked += 1
                    worst = max(worst, np.abs(A[dm.block_slice(l), dm.block_slice(lp)]).max())
        if worst >= 1e-10:
            failures.append(f"d={d} k={k} N={N}: largest entry in cut blocks {worst:.2e}")
    report(capsys, 8, "semi-orthogonality zero blocks", failures, checked)


def test_criterion_09_oracle_equivalence(capsys):
    failures, checked = [], 0
    spec = builtin_problem("example1", 2)
    for N in (1, 2, 3):
        dm = DofMap(2, 1, N)
        cfg = AssemblyConfig(1, N, "original")
        A = assemble_matrix(dm, spec, cfg).toarray()
        B = brute_force_matrix(dm, spec.c, cfg.penalty(2))
        err = np.abs(A - B).max() / np.abs(B).max()
        checked += 1
        if err > 1e-8:
            failures.append(f"N={N}: relative difference {err:.2e}")
    report(capsys, 9, "oracle equivalence", failures, checked)


def test_criterion_10_basis_properties(capsys):
    failures, checked = [], 0
    rng = np.random.default_rng(0)
    t, w = np.polynomial.legendre.leggauss(8)
    for k in (1, 2, 3):
        hier = MultiwaveletHierarchy(k, 4)
        checked += 1
        G = gram_matrix(k, 4)
        if np.abs(G - np.eye(len(G))).max() >= 1e-10:
            failures.append(f"k={k}: orthonormality {np.abs(G - np.eye(len(G))).max():.1e}")
        worst = 0.0
        for f in hier.functions:
            if f.level == 0:
                continue
            for m in range(k + 1):
                total = 0.0
                for lo, hi in zip(f.breakpoints[:-1], f.breakpoints[1:]):
                    x = lo + (hi - lo) * 0.5 * (t + 1)
                    total += 0.5 * (hi - lo) * np.dot(w, f(x) * x**m)
                worst = max(worst, abs(total))
        checked += 1
        if worst >= 1e-10:
            failures.append(f"k={k}: vanishing moments {worst:.1e}")
        worst = 0.0
        for f in hier.functions:
            if f.level < 2:
                continue
            mother = hier.functions[hier.index(f.i, 1, 0)]
            m = 2 ** (f.level - 1)
            x = (f.j + rng.uniform(0, 1, 100)) / m
            worst = max(worst, np.abs(f(x) - 2 ** ((f.level - 1) / 2) * mother(m * x - f.j)).max())
        checked += 1
        if worst >= 1e-10:
            failures.append(f"k={k}: dilation identity {worst:.1e}")
        x = rng.uniform(0, 1, 100)
        E = hier.eval_matrix(x)
        worst = 0.0
        for p in range(k + 1):
            c = np.array([inner_product_1d(f, hier.functions[0], weight=lambda s, p=p: s**p)
                          for f in hier.functions])
            worst = max(worst, np.abs(E @ c - x**p).max())
        checked += 1
        if worst >= 1e-10:
            failures.append(f"k={k}: polynomial reproduction {worst:.1e}")
    report(capsys, 10, "basis properties", failures, checked)


def test_criterion_11_projection_decay(capsys):
    failures, checked, notes = [], 0, []
    spec = builtin_problem("example1", 2)
    levels = np.arange(3, 7)
    for k in (1, 2, 3):
        errs = [projection_energy_error(spec.u, DofMap(2, k, int(N)), spec) for N in levels]
        q = -np.polyfit(levels, np.log2(errs), 1)[0]
        checked += 1
        if abs(q - k) > 0.25:
            failures.append(f"k={k}: slope {q:.3f}")
        notes.append(f"k={k}: energy-norm slope {q:.3f}")
    report(capsys, 11, "projection decay", failures, checked, notes)
