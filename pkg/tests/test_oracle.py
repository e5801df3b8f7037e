import numpy as np
import pytest

from mifpo.core import MifpoInstance, baseline_error, random_instance, two_point_instance
from mifpo.errors import BudgetError, DomainError
from mifpo.oracle import (
    OracleBudget,
    enumerate_vertices,
    fits_budget,
    independent_rows,
    oracle_min,
    oracle_system,
)
from mifpo.solver import assemble_constraints, solve_perfect_fair


def test_simplex_vertices():
    V = enumerate_vertices([[1.0, 1.0, 1.0]], [1.0])
    assert V.tolist() == [[0, 0, 1], [0, 1, 0], [1, 0, 0]]


def test_segment_vertices():
    V = enumerate_vertices([[1.0, 1.0]], [1.0])
    assert V.tolist() == [[0, 1], [1, 0]]


def test_redundant_rows_dropped():
    A, b = independent_rows([[1, 1], [2, 2], [1, -1]], [1, 2, 0])
    assert A.shape == (2, 2)
    V = enumerate_vertices([[1, 1], [2, 2], [1, -1]], [1, 2, 0])
    np.testing.assert_allclose(V, [[0.5, 0.5]])


def test_degenerate_vertex_deduplicated():
    # x1 + x2 + x3 = 1, x1 - x2 = 0 -> vertices (0,0,1), (1/2,1/2,0); (0,0,1) is degenerate
    V = enumerate_vertices([[1, 1, 1], [1, -1, 0]], [1, 0])
    np.testing.assert_allclose(V, [[0, 0, 1], [0.5, 0.5, 0]], atol=1e-15)


def test_empty_polytope():
    assert enumerate_vertices([[1.0, 1.0]], [-1.0]).shape == (0, 2)


def test_budget_variables():
    with pytest.raises(BudgetError):
        enumerate_vertices(np.ones((1, 21)), [1.0])


def test_budget_bases():
    with pytest.raises(BudgetError):
        enumerate_vertices(np.eye(10, 20), np.ones(10), OracleBudget(max_bases=100))


def test_budget_on_instance():
    inst = random_instance(np.random.default_rng(0), 2, 2, 2)
    assert not fits_budget(inst, 0.5) and fits_budget(inst, 0.0)
    with pytest.raises(BudgetError):
        oracle_min(inst, 0.5)


@pytest.mark.parametrize("gamma,expected", [(0.0, 0.5), (0.5, 0.25), (1.0, 0.0)])
def test_two_point_instance(gamma, expected):
    err, rv = oracle_min(two_point_instance(k=2), gamma)
    assert err == pytest.approx(expected, abs=1e-12)
    rv.check(1e-9)


def test_gamma_domain():
    with pytest.raises(DomainError):
        oracle_min(two_point_instance(k=2), 1.2)


@pytest.mark.parametrize("gamma", [0.0, 0.35])
def test_loop_system_matches_vectorised(gamma):
    # the loop construction and the solver's sparse assembly describe the same polytope
    inst = random_instance(np.random.default_rng(4), 2, 3, 2)
    A, b = oracle_system(inst, gamma)
    p = assemble_constraints(inst, gamma)
    np.testing.assert_array_equal(A, p.A)
    np.testing.assert_array_equal(b, p.b)


def test_birkhoff_corners():
    A = [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]]
    V = enumerate_vertices(A, [0.5, 0.5, 0.5, 0.5])
    np.testing.assert_allclose(V, [[0, 0.5, 0.5, 0], [0.5, 0, 0, 0.5]], atol=1e-15)


def test_flat_single_bin():
    inst = MifpoInstance(0.3, [0.4], [1.0], [0.4], [1.0], 2, "entropy")
    for g in (0.0, 0.5, 1.0):
        assert oracle_min(inst, g)[0] == pytest.approx(baseline_error(inst), abs=1e-12)


def test_perfect_fair_agreement():
    rng = np.random.default_rng(6)
    for kind in ("min-error", "entropy"):
        inst = random_instance(rng, 2, 2, 1, kind)
        assert oracle_min(inst, 0.0)[0] == pytest.approx(solve_perfect_fair(inst)[0], abs=1e-9)


def test_single_atom_per_pair_cannot_separate():
    # with one atom the two groups share it at every gamma, so the error stays at h(1/2)
    inst = two_point_instance(k=1)
    assert oracle_min(inst, 0.5)[0] == pytest.approx(0.5, abs=1e-12)
