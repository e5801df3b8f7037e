"""Standard-form linear programming: minimise ``c @ x`` over ``{x >= 0, A x = b}``.

The native engine is a dense two-phase tableau simplex with Bland's
smallest-index rule, so it always terminates and returns a vertex, and the
same input always gives the same output. A HiGHS dual simplex (through
scipy) is available for problems too large for a dense tableau.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import LpNumericalError, ShapeError

PIVOT_TOL = 1e-9
REDUNDANT_TOL = 1e-10
FEAS_TOL = 1e-8


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape != (b.size, c.size):
            raise ShapeError(f"A is {A.shape}, expected ({b.size}, {c.size})")
        if not (np.isfinite(c).all() and np.isfinite(A).all() and np.isfinite(b).all()):
            raise ShapeError("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size

    def with_cost(self, c) -> "LpProblem":
        return LpProblem(c, self.A, self.b)


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    objective: float
    status: LpStatus
    basis: tuple = ()
    iterations: int = 0
    rows: tuple = ()

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    colv = T[:, col].copy()
    colv[row] = 0.0
    T -= np.outer(colv, T[row])


def _bland_ratio(T: np.ndarray, col: int, basis: np.ndarray):
    d = T[:-1, col]
    rows = np.flatnonzero(d > PIVOT_TOL)
    if rows.size == 0:
        return None
    ratios = T[rows, -1] / d[rows]
    best = ratios.min()
    # ties broken by smallest basic variable index
    cand = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
    return int(cand[np.argmin(basis[cand])])


def _iterate(T: np.ndarray, basis: np.ndarray, allowed: np.ndarray, max_iter: int):
    """Run Bland-rule pivots on tableau ``T`` (last row holds reduced costs)."""
    it = 0
    while it < max_iter:
        red = T[-1, :-1]
        enter = np.flatnonzero((red < -PIVOT_TOL) & allowed)
        if enter.size == 0:
            return "optimal", it
        col = int(enter[0])
        row = _bland_ratio(T, col, basis)
        if row is None:
            return "unbounded", it
        _pivot(T, row, col)
        basis[row] = col
        it += 1
    raise LpNumericalError(f"simplex exceeded {max_iter} pivots")


def _phase2(p: LpProblem, T2: np.ndarray, basis: np.ndarray, rows: np.ndarray, max_iter: int, it1: int):
    n = p.n
    T2[-1, :n] = p.c
    T2[-1, -1] = 0.0
    for i, j in enumerate(basis):
        if T2[-1, j] != 0.0:
            T2[-1] -= T2[-1, j] * T2[i]
    status, it2 = _iterate(T2, basis, np.ones(n, dtype=bool), max_iter)
    if status == "unbounded":
        return LpSolution(np.zeros(n), float("-inf"), LpStatus.UNBOUNDED, iterations=it1 + it2)
    x = _refine(p, basis, T2[:-1, -1])
    return LpSolution(x, float(p.c @ x), LpStatus.OPTIMAL, tuple(int(j) for j in basis),
                      it1 + it2, tuple(int(i) for i in rows))


def _warm_tableau(p: LpProblem, basis, rows):
    """Tableau for a known feasible basis, or ``None`` if it is unusable."""
    basis = np.asarray(basis, dtype=np.intp)
    rows = np.asarray(rows, dtype=np.intp)
    if basis.size != rows.size or basis.size == 0:
        return None
    A, b = p.A[rows], p.b[rows]
    try:
        D = np.linalg.solve(A[:, basis], np.hstack([A, b[:, None]]))
    except np.linalg.LinAlgError:
        return None
    if not np.isfinite(D).all() or D[:, -1].min() < -FEAS_TOL:
        return None
    # rows outside the kept set must be implied by the kept ones
    if np.abs(p.A @ _expand(p.n, basis, D[:, -1]) - p.b).max(initial=0.0) > FEAS_TOL:
        return None
    D[:, -1] = np.maximum(D[:, -1], 0.0)
    T = np.zeros((rows.size + 1, p.n + 1))
    T[:-1] = D
    return T, basis.copy(), rows


def _expand(n, basis, xb):
    x = np.zeros(n)
    x[basis] = xb
    return x


def _simplex(p: LpProblem, max_iter: int, warm=None) -> LpSolution:
    if warm is not None:
        w = _warm_tableau(p, *warm)
        if w is not None:
            return _phase2(p, w[0], w[1], w[2], max_iter, 0)

    A, b = p.A.copy(), p.b.copy()
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # phase 1: artificial basis
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    allowed = np.ones(n + m, dtype=bool)
    _, it1 = _iterate(T, basis, allowed, max_iter)
    scale = max(1.0, np.abs(b).max(initial=0.0))
    if -T[-1, -1] > FEAS_TOL * scale:
        return LpSolution(np.zeros(n), float("nan"), LpStatus.INFEASIBLE, iterations=it1)

    # drive artificials out of the basis; rows that cannot be pivoted are redundant
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= n:
            row = np.abs(T[i, :n])
            j = int(np.argmax(row)) if n else 0
            if n and row[j] > REDUNDANT_TOL:
                _pivot(T, i, j)
                basis[i] = j
            else:
                keep[i] = False
    rows = np.flatnonzero(keep)
    T2 = np.zeros((rows.size + 1, n + 1))
    T2[:-1, :n] = T[rows, :n]
    T2[:-1, -1] = T[rows, -1]
    return _phase2(p, T2, basis[rows].copy(), rows, max_iter, it1)


def _refine(p: LpProblem, basis: np.ndarray, xb_tab: np.ndarray) -> np.ndarray:
    """Recompute basic values from the original data and certify feasibility."""
    n = p.n
    x = np.zeros(n)
    x[basis] = xb_tab
    if basis.size:
        B = p.A[:, basis]
        sol, *_ = np.linalg.lstsq(B, p.b, rcond=None)
        cand = np.zeros(n)
        cand[basis] = sol
        if np.abs(p.A @ cand - p.b).max() <= np.abs(p.A @ x - p.b).max():
            x = cand
    x[(x < 0) & (x > -1e-9)] = 0.0
    x[np.abs(x) < 1e-15] = 0.0
    resid = np.abs(p.A @ x - p.b).max(initial=0.0)
    if resid > FEAS_TOL or x.min(initial=0.0) < -1e-9:
        cond = np.linalg.cond(p.A[:, basis]) if basis.size else float("nan")
        raise LpNumericalError(
            f"simplex result fails certification: residual {resid:.3e}, "
            f"min entry {x.min():.3e}, basis condition number {cond:.3e}"
        )
    return x


def _highs(p: LpProblem) -> LpSolution:
    from scipy.optimize import linprog

    res = linprog(p.c, A_eq=p.A, b_eq=p.b, bounds=(0, None), method="highs-ds")
    if res.status == 2:
        return LpSolution(np.zeros(p.n), float("nan"), LpStatus.INFEASIBLE)
    if res.status == 3:
        return LpSolution(np.zeros(p.n), float("-inf"), LpStatus.UNBOUNDED)
    if res.status != 0:
        raise LpNumericalError(f"HiGHS failed: {res.message}")
    x = np.asarray(res.x, dtype=float)
    basis = np.flatnonzero(x > 1e-9)
    x = _refine(p, basis, x[basis])
    return LpSolution(x, float(p.c @ x), LpStatus.OPTIMAL, tuple(int(j) for j in basis), int(res.nit))


def _complete_basis(A: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Extend linearly independent ``support`` columns to a basis of ``A``."""
    from scipy.linalg import qr

    m = A.shape[0]
    if support.size == m:
        return support
    if support.size:
        Q, _ = np.linalg.qr(A[:, support])
        R = A - Q @ (Q.T @ A)
    else:
        R = A.copy()
    R[:, support] = 0.0
    _, _, piv = qr(R, pivoting=True, mode="economic")
    return np.concatenate([support, piv[:m - support.size]])


def adjacent_vertices(p: LpProblem, x: np.ndarray, basis=None, rows=None, tol: float = 1e-12):
    """Vertices reached from vertex ``x`` by one non-degenerate simplex pivot.

    ``basis`` and ``rows`` (as returned in :class:`LpSolution`) name a basis
    of ``x``; without them one is built from the support of ``x``. Each
    nonbasic column defines an edge, followed until a basic variable hits
    zero. Zero-length edges and unbounded rays are skipped, so at degenerate
    vertices the list may be incomplete. Returns a list of
    ``(vertex, basis, rows)`` triples.
    """
    from scipy.linalg import qr

    x = np.asarray(x, dtype=float)
    if rows is None or basis is None:
        if p.m == 0:
            return []
        _, R, piv = qr(p.A.T, pivoting=True, mode="economic")
        diag = np.abs(np.diag(R))
        m = int((diag > REDUNDANT_TOL * max(diag.max(initial=0.0), 1.0)).sum())
        rows = np.sort(piv[:m])
        support = np.flatnonzero(x > tol)
        if support.size > m:
            return []
        basis = _complete_basis(p.A[rows], support)
    basis = np.asarray(basis, dtype=np.intp)
    rows = np.asarray(rows, dtype=np.intp)
    A = p.A[rows]
    try:
        D = np.linalg.solve(A[:, basis], A)  # B^-1 A
    except np.linalg.LinAlgError:
        return []
    xb = x[basis]
    out = []
    for j in np.setdiff1d(np.arange(p.n), basis):
        d = D[:, j]
        pos = np.flatnonzero(d > PIVOT_TOL)
        if pos.size == 0:
            continue
        ratios = xb[pos] / d[pos]
        leave = pos[int(np.argmin(ratios))]
        t = float(ratios.min())
        if t <= tol:
            continue
        y = np.zeros(p.n)
        y[basis] = np.maximum(xb - t * d, 0.0)
        y[basis[leave]] = 0.0
        y[j] = t
        nb = basis.copy()
        nb[leave] = j
        out.append((y, nb, rows))
    return out


def solve_lp(p: LpProblem, method: str = "simplex", max_iter: int = 200_000,
             warm_basis=None, warm_rows=None) -> LpSolution:
    """Solve ``p``. ``method`` is ``"simplex"`` (native, Bland's rule) or ``"highs"``.

    With ``warm_basis`` and ``warm_rows`` from an earlier solution of a
    problem with the same constraints, the native simplex skips phase one
    (falling back to a cold start when that basis is not feasible).
    """
    if method == "simplex":
        warm = None if warm_basis is None else (warm_basis, warm_rows)
        return _simplex(p, max_iter, warm)
    if method == "highs":
        return _highs(p)
    raise ValueError(f"unknown LP method {method!r}")
