"""Brute-force global minimiser for tiny instances.

A concave function on a polytope attains its minimum at a vertex, so listing
every basic feasible solution of the constraint system and evaluating the
cost at each one gives the exact optimum. The constraint system is rebuilt
here independently of the solver module, with plain loops.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import MifpoInstance, RepresentationVars, eval_objective
from .errors import BudgetError, DomainError

RANK_TOL = 1e-10
FEAS_TOL = 1e-9
DEDUP_TOL = 1e-8


@dataclass(frozen=True)
class OracleBudget:
    max_variables: int = 20
    max_bases: int = 2_000_000

    def __post_init__(self):
        if self.max_variables < 1 or self.max_bases < 1:
            raise DomainError("oracle budget must be positive")


def independent_rows(A: np.ndarray, b: np.ndarray, tol: float = RANK_TOL):
    """Drop linearly dependent rows by Gaussian elimination with partial pivoting.

    Returns ``(A_sub, b_sub)`` built from the original rows that were kept.
    """
    A = np.asarray(A, dtype=float)
    M = np.hstack([A, np.asarray(b, dtype=float).reshape(-1, 1)])
    work = M.copy()
    m, n = A.shape
    kept = []
    order = list(range(m))
    col = 0
    row = 0
    while row < m and col < n:
        piv = row + int(np.argmax(np.abs(work[row:, col])))
        if abs(work[piv, col]) < tol:
            col += 1
            continue
        work[[row, piv]] = work[[piv, row]]
        order[row], order[piv] = order[piv], order[row]
        work[row + 1:] -= np.outer(work[row + 1:, col] / work[row, col], work[row])
        kept.append(order[row])
        row += 1
        col += 1
    kept.sort()
    return A[kept], np.asarray(b, dtype=float)[kept]


def enumerate_vertices(A, b, budget: OracleBudget = OracleBudget()) -> np.ndarray:
    """All vertices of ``{x >= 0, A x = b}``, sorted lexicographically.

    Every column subset of size ``rank(A)`` is tried as a basis.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    n = A.shape[1]
    if n > budget.max_variables:
        raise BudgetError(f"{n} variables exceed the oracle budget of {budget.max_variables}")
    A, b = independent_rows(A, b)
    m = A.shape[0]
    n_bases = math.comb(n, m)
    if n_bases > budget.max_bases:
        raise BudgetError(f"{n_bases} candidate bases exceed the oracle budget of {budget.max_bases}")
    if m == 0:
        return np.zeros((1, n))

    combos = np.array(list(itertools.combinations(range(n), m)), dtype=np.intp)
    found = []
    for chunk in np.array_split(combos, max(1, len(combos) // 20000)):
        B = A[:, chunk].transpose(1, 0, 2)  # (batch, m, m)
        sv = np.linalg.svd(B, compute_uv=False)
        ok = sv[:, -1] > RANK_TOL * np.maximum(sv[:, 0], 1.0)
        if not ok.any():
            continue
        xb = np.linalg.solve(B[ok], np.broadcast_to(b, (ok.sum(), m))[..., None])[..., 0]
        good = (xb >= -FEAS_TOL).all(axis=1)
        for cols, vals in zip(chunk[ok][good], xb[good]):
            x = np.zeros(n)
            x[cols] = vals
            x[x < 0] = 0.0
            if np.abs(A @ x - b).max() <= DEDUP_TOL:
                found.append(x)
    if not found:
        return np.zeros((0, n))
    X = np.array(found)
    X = X[np.lexsort(X.T[::-1])]
    keep = [0]
    for i in range(1, len(X)):
        if np.abs(X[i] - X[keep]).max(axis=1).min() > DEDUP_TOL:
            keep.append(i)
    return X[keep]


def oracle_system(inst: MifpoInstance, gamma: float):
    """Constraint matrix and right-hand side in the layout ``[r0 | r1 | phi0 | phi1]``."""
    L0, L1, k = inst.L0, inst.L1, inst.k
    Z = L0 * L1 * k
    with_phi = gamma > 0
    n = 4 * Z if with_phi else 2 * Z

    def r0(u, v, j):
        return (u * L1 + v) * k + j

    def r1(v, u, j):
        return Z + (v * L0 + u) * k + j

    rows, rhs = [], []
    for u in range(L0):
        row = np.zeros(n)
        for v in range(L1):
            for j in range(k):
                row[r0(u, v, j)] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for v in range(L1):
        row = np.zeros(n)
        for u in range(L0):
            for j in range(k):
                row[r1(v, u, j)] = 1.0
        rows.append(row)
        rhs.append(1.0)
    if with_phi:
        for block in (2, 3):
            row = np.zeros(n)
            row[block * Z:(block + 1) * Z] = 1.0
            rows.append(row)
            rhs.append(1.0)
    for u in range(L0):
        for v in range(L1):
            for j in range(k):
                row = np.zeros(n)
                row[r0(u, v, j)] = inst.beta0[u]
                row[r1(v, u, j)] = -inst.beta1[v]
                if with_phi:
                    z = r0(u, v, j)
                    row[2 * Z + z] = gamma
                    row[3 * Z + z] = -gamma
                rows.append(row)
                rhs.append(0.0)
    return np.array(rows), np.array(rhs)


def _to_vars(inst: MifpoInstance, x: np.ndarray) -> RepresentationVars:
    L0, L1, k = inst.L0, inst.L1, inst.k
    Z = L0 * L1 * k
    r0 = x[:Z].reshape(L0, L1, k)
    r1 = x[Z:2 * Z].reshape(L1, L0, k)
    if x.size == 4 * Z:
        return RepresentationVars(r0, r1, x[2 * Z:3 * Z].reshape(L0, L1, k), x[3 * Z:].reshape(L0, L1, k))
    return RepresentationVars(r0, r1)


def oracle_min(inst: MifpoInstance, gamma: float, budget: OracleBudget = OracleBudget()):
    """Exact ``(error, vars)`` minimum by exhaustive vertex enumeration."""
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    A, b = oracle_system(inst, gamma)
    V = enumerate_vertices(A, b, budget)
    if len(V) == 0:
        raise DomainError("constraint polytope has no vertices")
    best_E, best = np.inf, None
    for x in V:
        rv = _to_vars(inst, x)
        E = eval_objective(inst, rv)
        if E < best_E:
            best_E, best = E, rv
    return float(best_E), best


def fits_budget(inst: MifpoInstance, gamma: float, budget: OracleBudget = OracleBudget()) -> bool:
    n = (4 if gamma > 0 else 2) * inst.n_atoms
    return n <= budget.max_variables
