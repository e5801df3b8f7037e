"""Pareto-front optimiser.

For a fairness level ``gamma`` we minimise the concave cost ``E`` over the
polytope of representations whose group-conditional atom distributions are
within TV distance ``gamma``. The TV bound is written with two auxiliary
distributions ``phi0, phi1`` as ``mu0 + gamma*phi0 == mu1 + gamma*phi1``,
which keeps every constraint a linear equality.

The minimisation is a successive-linearisation (convex-concave) loop: the
cost is replaced by its supergradient plane at the current point, an LP is
solved, and the move is kept while it strictly improves the true cost. Each
restart begins at the vertex minimising a random linear cost.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import (
    MASS_EPS,
    FrontPoint,
    MifpoInstance,
    ObjectiveKind,
    ParetoFront,
    RepresentationVars,
    atom_masses,
    atom_marginals,
    baseline_error,
    eval_objective,
    h_eval,
)
from .errors import DomainError, SolverError
from .lp import LpProblem, adjacent_vertices, solve_lp

ENTROPY_CLAMP = 1e-12
# above this many variables the dense tableau is replaced by HiGHS under method="auto"
AUTO_SIMPLEX_MAX_VARS = 400


@dataclass(frozen=True)
class SolveConfig:
    restarts: int = 8
    max_iters: int = 50
    tol: float = 1e-9
    seed: int = 0
    lp_method: str = "auto"
    escape_tries: int = 4
    neighbour_max_vars: int = 1200

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1 or self.tol <= 0 or self.escape_tries < 0:
            raise DomainError("restarts, max_iters and tol must be positive, escape_tries nonnegative")
        if self.lp_method not in ("auto", "simplex", "highs"):
            raise DomainError(f"unknown lp_method {self.lp_method!r}")


def gamma_grid(count: int = 21) -> np.ndarray:
    """``count`` evenly spaced fairness levels from 0 to 1."""
    if count < 2:
        raise DomainError("a gamma grid needs at least two points")
    return np.linspace(0.0, 1.0, count)


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    return gamma


def _n_vars(inst: MifpoInstance, gamma: float) -> int:
    return (4 if gamma > 0 else 2) * inst.n_atoms


def assemble_constraints(inst: MifpoInstance, gamma: float) -> LpProblem:
    """Equality system over the variable layout ``[r0 | r1 | phi0 | phi1]``.

    ``r0`` is flattened in ``(u, v, j)`` order, ``r1`` in ``(v, u, j)`` order
    and both ``phi`` in atom order ``(u, v, j)``. For ``gamma == 0`` there
    are no ``phi`` blocks and the atom rows force ``mu0 == mu1``. The cost
    vector of the returned problem is zero.
    """
    gamma = _check_gamma(gamma)
    L0, L1, k = inst.L0, inst.L1, inst.k
    Z = inst.n_atoms
    n = _n_vars(inst, gamma)
    u, v, j = np.meshgrid(np.arange(L0), np.arange(L1), np.arange(k), indexing="ij")
    u, v, j = u.ravel(), v.ravel(), j.ravel()
    atom = np.arange(Z)
    col_r0 = atom
    col_r1 = Z + v * L0 * k + u * k + j

    n_rows = L0 + L1 + (2 if gamma > 0 else 0) + Z
    A = np.zeros((n_rows, n))
    b = np.zeros(n_rows)
    A[u, col_r0] = 1.0
    A[L0 + v, col_r1] = 1.0
    b[: L0 + L1] = 1.0
    off = L0 + L1
    if gamma > 0:
        A[off, 2 * Z:3 * Z] = 1.0
        A[off + 1, 3 * Z:4 * Z] = 1.0
        b[off:off + 2] = 1.0
        off += 2
    rows = off + atom
    A[rows, col_r0] = inst.beta0[u]
    A[rows, col_r1] = -inst.beta1[v]
    if gamma > 0:
        A[rows, 2 * Z + atom] = gamma
        A[rows, 3 * Z + atom] = -gamma
    return LpProblem(np.zeros(n), A, b)


def vars_to_vector(rv: RepresentationVars) -> np.ndarray:
    parts = [rv.r0.ravel(), rv.r1.ravel()]
    if rv.phi0 is not None:
        parts += [rv.phi0.ravel(), rv.phi1.ravel()]
    return np.concatenate(parts)


def vector_to_vars(inst: MifpoInstance, x: np.ndarray) -> RepresentationVars:
    L0, L1, k = inst.L0, inst.L1, inst.k
    Z = inst.n_atoms
    x = np.where(np.abs(x) < 1e-15, 0.0, x)
    r0 = x[:Z].reshape(L0, L1, k)
    r1 = x[Z:2 * Z].reshape(L1, L0, k)
    if x.size == 4 * Z:
        return RepresentationVars(r0, r1, x[2 * Z:3 * Z].reshape(L0, L1, k), x[3 * Z:].reshape(L0, L1, k))
    return RepresentationVars(r0, r1)


def lift_to_gamma(inst: MifpoInstance, rv: RepresentationVars, gamma: float) -> RepresentationVars:
    """Attach witness distributions so that ``rv`` fits the layout for ``gamma``.

    Requires ``eval_fairness(rv) <= gamma`` (up to 1e-9). The unused budget
    ``gamma - F`` is spread uniformly over the atoms on both sides.
    """
    gamma = _check_gamma(gamma)
    if gamma == 0.0:
        return RepresentationVars(rv.r0, rv.r1)
    mu0, mu1 = atom_marginals(inst, rv)
    F = 0.5 * np.abs(mu0 - mu1).sum()
    if F > gamma + 1e-9:
        raise DomainError(f"representation has fairness {F:.6g} > gamma {gamma:.6g}")
    slack = max(gamma - F, 0.0) / mu0.size
    d0 = np.maximum(mu1 - mu0, 0.0) + slack
    d1 = np.maximum(mu0 - mu1, 0.0) + slack
    # each side has mass max(F, gamma); normalising by it rather than by gamma
    # keeps phi a distribution when F exceeds a tiny gamma by rounding, and a
    # side left empty by rounding falls back to uniform
    phi0, phi1 = (d / d.sum() if d.sum() > 0 else np.full_like(d, 1.0 / d.size) for d in (d0, d1))
    return RepresentationVars(rv.r0, rv.r1, phi0, phi1)


def _entropy_dlog(x: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(x, ENTROPY_CLAMP)) + 1.0


def objective_subgradient(inst: MifpoInstance, rv: RepresentationVars,
                          tie_rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Supergradient of the concave cost, flattened to the variable layout of ``rv``.

    Min-error atoms cost ``min(Y=1 mass, Y=0 mass)``; the active piece is
    differentiated, the Y=1 piece on ties. Entropy atoms use
    ``-(e(Y=0 mass) + e(Y=1 mass) - e(total mass))`` with ``e(x) = x log x``,
    the derivative of ``e`` being evaluated at ``max(x, 1e-12)``; an empty
    atom is linearised at the fully merged pair.
    Entries for ``phi`` are zero.

    With ``tie_rng`` every tied or empty atom instead draws a random element
    of its superdifferential (a random piece, or a random reference mixture),
    which the solver uses to leave flat fixed points.
    """
    c0, c1 = atom_masses(inst, rv)
    ru = inst.rho0[:, None, None]
    rv_ = inst.rho1[None, :, None]
    if inst.objective is ObjectiveKind.MIN_ERROR:
        y1 = c0 * ru + c1 * rv_
        y0 = c0 * (1 - ru) + c1 * (1 - rv_)
        first = y1 <= y0
        if tie_rng is not None:
            tied = np.abs(y1 - y0) <= 1e-12 * np.maximum(c0 + c1, MASS_EPS)
            first = np.where(tied, tie_rng.random(first.shape) < 0.5, first)
        d0 = np.where(first, ru, 1 - ru)
        d1 = np.where(first, rv_, 1 - rv_)
    else:
        # an empty atom is linearised at a reference pair mixture; by 1-homogeneity
        # that plane still dominates the cost, whereas clamping alone gives slope 0
        empty = (c0 + c1) <= MASS_EPS
        if empty.any():
            share = np.full(c0.shape, 0.5)
            if tie_rng is not None:
                share = tie_rng.choice(np.array([1e-6, 0.5, 1 - 1e-6]), size=c0.shape)
            ref0 = 2 * share * inst.alpha0 * inst.beta0[:, None, None]
            ref1 = 2 * (1 - share) * inst.alpha1 * inst.beta1[None, :, None]
            c0 = np.where(empty, ref0, c0)
            c1 = np.where(empty, ref1, c1)
        y1 = c0 * ru + c1 * rv_
        y0 = c0 * (1 - ru) + c1 * (1 - rv_)
        e1, e0, et = _entropy_dlog(y1), _entropy_dlog(y0), _entropy_dlog(c0 + c1)
        d0 = -(e0 * (1 - ru) + e1 * ru - et)
        d1 = -(e0 * (1 - rv_) + e1 * rv_ - et)
    g0 = inst.alpha0 * inst.beta0[:, None, None] * d0
    g1 = (inst.alpha1 * inst.beta1[None, :, None] * d1).transpose(1, 0, 2)
    parts = [g0.ravel(), g1.ravel()]
    if rv.phi0 is not None:
        parts.append(np.zeros(2 * inst.n_atoms))
    return np.concatenate(parts)


def _lp_method(cfg: SolveConfig, n: int) -> str:
    if cfg.lp_method != "auto":
        return cfg.lp_method
    return "simplex" if n <= AUTO_SIMPLEX_MAX_VARS else "highs"


def _solve_vertex(problem: LpProblem, c: np.ndarray, method: str, warm=None):
    basis, rows = (None, None) if warm is None or not warm[0] else warm
    sol = solve_lp(problem.with_cost(c), method=method, warm_basis=basis, warm_rows=rows)
    if not sol.optimal:
        raise SolverError(f"LP subproblem returned status {sol.status.value}")
    return sol.x, (sol.basis, sol.rows)


@dataclass
class MifpoSolution:
    error: float
    vars: RepresentationVars
    restarts_used: int
    iterations: list


def _descend(inst, problem, x, method, cfg, rng, history=None, warm=None):
    """Successive linearisation from ``x``; returns ``(x, E, steps)``.

    At a fixed point of the deterministic rule, up to ``cfg.escape_tries``
    randomised supergradients, each with a slightly tilted cost, are tried;
    after that the adjacent vertices are scanned for a strictly cheaper one
    (skipped above ``cfg.neighbour_max_vars`` variables).
    """
    rv = vector_to_vars(inst, x)
    E = eval_objective(inst, rv)
    if history is not None:
        history.append(E)
    steps = 0
    escapes = 0
    while steps < cfg.max_iters:
        tie_rng = rng if escapes else None
        g = objective_subgradient(inst, rv, tie_rng)
        if escapes:
            # a small tilt selects a random vertex of a degenerate optimal face
            g = g + 1e-6 * max(np.abs(g).max(), 1.0) * rng.standard_normal(g.size)
        x_new, warm_new = _solve_vertex(problem, g, method, warm)
        rv_new = vector_to_vars(inst, x_new)
        E_new = eval_objective(inst, rv_new)
        if E_new < E - cfg.tol:
            x, rv, E, warm = x_new, rv_new, E_new, warm_new
        elif escapes < cfg.escape_tries:
            escapes += 1
            continue
        else:
            found = _best_neighbour(inst, problem, x, E - cfg.tol, cfg, warm)
            if found is None:
                break
            x, warm = found
            rv = vector_to_vars(inst, x)
            E = eval_objective(inst, rv)
        steps += 1
        escapes = 0
        if history is not None:
            history.append(E)
    return x, E, steps


def _best_neighbour(inst, problem, x, bound, cfg, warm):
    """Adjacent vertex (with its basis) of true cost below ``bound``, or ``None``."""
    if problem.n > cfg.neighbour_max_vars:
        return None
    basis, rows = (None, None) if warm is None or not warm[0] else warm
    best, best_E = None, bound
    for y, nb, nr in adjacent_vertices(problem, x, basis, rows):
        E = eval_objective(inst, vector_to_vars(inst, y))
        if E < best_E:
            best, best_E = (y, (tuple(nb), tuple(nr))), E
    return best


def solve_mifpo_detailed(inst: MifpoInstance, gamma: float, cfg: SolveConfig = SolveConfig(),
                         warm_start: Optional[RepresentationVars] = None) -> MifpoSolution:
    """Like :func:`solve_mifpo` but also reports restart and iteration metadata."""
    gamma = _check_gamma(gamma)
    problem = assemble_constraints(inst, gamma)
    method = _lp_method(cfg, problem.n)
    rng = np.random.default_rng(cfg.seed)

    starts = []
    if warm_start is not None:
        starts.append(vars_to_vector(lift_to_gamma(inst, warm_start, gamma)))
    starts += [None] * cfg.restarts

    best_x, best_E, iters = None, np.inf, []
    c = np.zeros(problem.n)
    n_random = 0
    for x0 in starts:
        warm = None
        if x0 is None:
            # random cost on the representation only; phi stays free to absorb the slack.
            # Costs come in antithetic pairs so opposite corners are both visited.
            if n_random % 2 == 0:
                c = np.zeros(problem.n)
                c[:2 * inst.n_atoms] = rng.standard_normal(2 * inst.n_atoms)
            else:
                c = -c
            n_random += 1
            x0, warm = _solve_vertex(problem, c, method)
        x, E, steps = _descend(inst, problem, x0, method, cfg, rng, warm=warm)
        iters.append(steps)
        if E < best_E - 1e-15:
            best_x, best_E = x, E
    rv = vector_to_vars(inst, best_x)
    return MifpoSolution(best_E, rv, len(starts), iters)


def solve_mifpo(inst: MifpoInstance, gamma: float, cfg: SolveConfig = SolveConfig(),
                warm_start: Optional[RepresentationVars] = None):
    """Best feasible ``(error, vars)`` found for fairness level ``gamma``.

    The error is an upper bound on the true minimum for the instance: it is
    the exact cost of the returned feasible point.
    """
    sol = solve_mifpo_detailed(inst, gamma, cfg, warm_start)
    return sol.error, sol.vars


def transport_cost_matrix(inst: MifpoInstance) -> np.ndarray:
    """Cost of merging source ``u`` with source ``v`` under perfect fairness."""
    mix = inst.alpha0 * inst.rho0[:, None] + inst.alpha1 * inst.rho1[None, :]
    return np.asarray(h_eval(inst.objective, np.clip(mix, 0.0, 1.0)), dtype=float).reshape(inst.L0, inst.L1)


def solve_perfect_fair(inst: MifpoInstance, method: str = "simplex"):
    """Exact minimum at ``gamma == 0`` through the transportation LP.

    Returns ``(error, vars)`` where ``vars`` uses atom ``j = 0`` of every pair.
    """
    L0, L1, k = inst.L0, inst.L1, inst.k
    C = transport_cost_matrix(inst)
    A = np.zeros((L0 + L1, L0 * L1))
    for u in range(L0):
        A[u, u * L1:(u + 1) * L1] = 1.0
    for v in range(L1):
        A[L0 + v, v::L1] = 1.0
    b = np.concatenate([inst.beta0, inst.beta1])
    sol = solve_lp(LpProblem(C.ravel(), A, b), method=method)
    if not sol.optimal:
        raise SolverError(f"transport LP returned status {sol.status.value}")
    w = sol.x.reshape(L0, L1)
    r0 = np.zeros((L0, L1, k))
    r1 = np.zeros((L1, L0, k))
    # divide by the plan's own marginals so every row of r sums to one exactly;
    # dividing by beta instead amplifies LP rounding on tiny bins
    r0[:, :, 0] = w / w.sum(axis=1, keepdims=True)
    r1[:, :, 0] = (w / w.sum(axis=0, keepdims=True)).T
    rv = RepresentationVars(r0, r1)
    return eval_objective(inst, rv), rv


def sweep_front(inst: MifpoInstance, grid: Optional[Sequence[float]] = None,
                cfg: SolveConfig = SolveConfig(), warm_start: bool = True) -> ParetoFront:
    """Compute the front over ``grid`` (default: 21 uniform points).

    ``gamma == 0`` is solved exactly; other levels run the linearisation
    solver, seeded additionally with the previous level's answer when
    ``warm_start`` is set. A running minimum makes the errors non-increasing.
    """
    grid = gamma_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or (np.diff(grid) <= 0).any() or grid[0] < 0 or grid[-1] > 1:
        raise DomainError("gamma grid must be strictly increasing within [0, 1]")

    points = []
    prev = None
    for i, gamma in enumerate(grid):
        if gamma == 0.0:
            err, rv = solve_perfect_fair(inst)
            used = 0
        else:
            sol = solve_mifpo_detailed(inst, gamma, replace(cfg, seed=cfg.seed + i),
                                       prev if warm_start else None)
            err, rv, used = sol.error, sol.vars, sol.restarts_used
        if points and err > points[-1].error:
            # earlier answer stays feasible at a looser level
            err = points[-1].error
            rv = lift_to_gamma(inst, points[-1].vars, gamma)
        points.append(FrontPoint(float(gamma), float(err), rv, used))
        prev = rv
    return ParetoFront(inst.objective, baseline_error(inst), points)


def constraint_residual(inst: MifpoInstance, gamma: float, rv: RepresentationVars) -> float:
    """Max-norm violation of the assembled equalities at ``rv`` (layout must match ``gamma``)."""
    p = assemble_constraints(inst, gamma)
    x = vars_to_vector(rv)
    if x.size != p.n:
        raise DomainError("variables do not match the layout for this gamma")
    return float(np.abs(p.A @ x - p.b).max())
