import numpy as np
import pytest

from mifpo.errors import ShapeError
from mifpo.lp import LpProblem, LpStatus, adjacent_vertices, solve_lp


def random_feasible(rng, m, n):
    A = rng.standard_normal((m, n))
    x0 = rng.uniform(0, 1, n)
    b = A @ x0
    # dual-feasible cost: c = A^T y + s with s >= 0, so b @ y is a lower bound
    y = rng.standard_normal(m)
    s = rng.uniform(0, 1, n)
    return LpProblem(A.T @ y + s, A, b), y


def test_simple_vertex():
    sol = solve_lp(LpProblem([1.0, 0.0], [[1.0, 1.0]], [1.0]))
    assert sol.status is LpStatus.OPTIMAL
    np.testing.assert_allclose(sol.x, [0.0, 1.0])
    assert sol.objective == 0.0


def test_infeasible():
    assert solve_lp(LpProblem([1.0], [[1.0]], [-1.0])).status is LpStatus.INFEASIBLE


def test_unbounded():
    # x1 - x2 = 0, minimise -x1
    assert solve_lp(LpProblem([-1.0, 0.0], [[1.0, -1.0]], [0.0])).status is LpStatus.UNBOUNDED


def test_transport_diagonal():
    A = [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]]
    sol = solve_lp(LpProblem([0, 1, 1, 0], A, [0.5, 0.5, 0.5, 0.5]))
    assert sol.objective == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(sol.x, [0.5, 0, 0, 0.5], atol=1e-12)


def test_redundant_rows_and_negative_rhs():
    A = [[1, 1, 0], [2, 2, 0], [0, -1, -1]]
    sol = solve_lp(LpProblem([1, 2, 3], A, [1, 2, -1]))
    # x1 + x2 = 1 and x2 + x3 = 1: x2 = 1 costs 2, x1 = x3 = 1 costs 4
    assert sol.optimal and sol.objective == pytest.approx(2.0)
    assert len(sol.rows) == 2


def test_shape_validation():
    with pytest.raises(ShapeError):
        LpProblem([1.0, 2.0], [[1.0]], [1.0])
    with pytest.raises(ShapeError):
        LpProblem([np.inf], [[1.0]], [1.0])


@pytest.mark.parametrize("seed", range(10))
def test_random_against_duality_and_highs(seed):
    rng = np.random.default_rng(seed)
    p, y = random_feasible(rng, 4, 9)
    sol = solve_lp(p)
    assert sol.optimal
    assert np.abs(p.A @ sol.x - p.b).max() <= 1e-8 and sol.x.min() >= -1e-9
    assert sol.objective >= p.b @ y - 1e-9
    # basic solution: no more than m positive entries
    assert (sol.x > 1e-9).sum() <= p.m
    ref = solve_lp(p, method="highs")
    assert sol.objective == pytest.approx(ref.objective, abs=1e-8)


def test_deterministic():
    p, _ = random_feasible(np.random.default_rng(5), 5, 12)
    a, b = solve_lp(p), solve_lp(p)
    assert np.array_equal(a.x, b.x) and a.basis == b.basis


def test_warm_start_matches_cold():
    rng = np.random.default_rng(8)
    p, _ = random_feasible(rng, 5, 12)
    first = solve_lp(p)
    q = p.with_cost(rng.uniform(0, 1, p.n))
    cold = solve_lp(q)
    warm = solve_lp(q, warm_basis=first.basis, warm_rows=first.rows)
    assert warm.objective == pytest.approx(cold.objective, abs=1e-10)
    # a bogus basis falls back to a cold start
    bogus = solve_lp(q, warm_basis=(0, 0, 0, 0, 0), warm_rows=first.rows)
    assert bogus.objective == pytest.approx(cold.objective, abs=1e-10)


def test_unknown_method():
    with pytest.raises(ValueError):
        solve_lp(LpProblem([1.0], [[1.0]], [1.0]), method="interior")


def test_adjacent_vertices_of_simplex():
    p = LpProblem(np.zeros(3), [[1.0, 1.0, 1.0]], [1.0])
    nbrs = adjacent_vertices(p, np.array([1.0, 0.0, 0.0]))
    got = sorted(tuple(v) for v, _, _ in nbrs)
    assert got == [(0.0, 0.0, 1.0), (0.0, 1.0, 0.0)]


def test_adjacent_vertices_with_basis():
    A = [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]]
    p = LpProblem(np.zeros(4), A, [0.5, 0.5, 0.5, 0.5])
    sol = solve_lp(p.with_cost([0, 1, 1, 0]))
    nbrs = adjacent_vertices(p, sol.x, sol.basis, sol.rows)
    assert any(np.allclose(v, [0, 0.5, 0.5, 0]) for v, _, _ in nbrs)
    for v, basis, rows in nbrs:
        assert np.abs(p.A @ v - p.b).max() <= 1e-12
        assert len(basis) == len(rows)
