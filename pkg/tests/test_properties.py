import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mifpo.core import (
    FiniteRepresentation,
    atom_marginals,
    baseline_error,
    eval_fairness,
    eval_objective,
    h_eval,
    pair_cost,
    random_instance,
    random_vars,
    tv_distance,
    tv_equality_witness,
)
from mifpo.fairclass import classifier_to_point, induced_representation
from mifpo.pipeline import expected_calibration_error, pava_isotonic
from mifpo.reprlab import (
    TwoPointRep,
    compress_two_point,
    compression_bound,
    entropy_decomposition_check,
    eval_rep,
    factorisation_residual,
    factorise,
    is_invertible,
    make_invertible,
    two_point_cost,
)
from mifpo.solver import constraint_residual, lift_to_gamma, solve_perfect_fair

kinds = st.sampled_from(["min-error", "entropy"])
unit = st.floats(0.0, 1.0)
pos = st.floats(1e-6, 1.0)
seeds = st.integers(0, 2**32 - 1)


def simplex(n):
    return st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n).map(lambda v: np.array(v) / sum(v))


@given(kinds, unit)
def test_h_symmetric_and_bounded(kind, p):
    a, b = h_eval(kind, p), h_eval(kind, 1 - p)
    assert abs(a - b) <= 1e-12
    assert 0.0 <= a <= h_eval(kind, 0.5) + 1e-15


@given(kinds, unit, unit, pos, pos, pos, pos)
def test_pair_cost_concave(kind, r0, r1, a0, a1, b0, b1):
    g = lambda x, y: float(pair_cost(kind, np.array(x), np.array(y), r0, r1))
    gap = 0.5 * (g(a0, a1) + g(b0, b1)) - g((a0 + b0) / 2, (a1 + b1) / 2)
    assert gap <= 1e-9


@given(kinds, unit, unit, pos, pos, st.floats(0.1, 10.0))
def test_pair_cost_homogeneous(kind, r0, r1, c0, c1, s):
    g = lambda x, y: float(pair_cost(kind, np.array(x), np.array(y), r0, r1))
    assert abs(g(s * c0, s * c1) - s * g(c0, c1)) <= 1e-9 * max(1.0, s)


@given(st.integers(2, 7).flatmap(lambda n: st.tuples(simplex(n), simplex(n))))
def test_tv_witness(pair):
    mu0, mu1 = pair
    g, p0, p1 = tv_equality_witness(mu0, mu1)
    assert g == tv_distance(mu0, mu1)
    assert np.abs(mu0 + g * p0 - mu1 - g * p1).max() <= 1e-12
    assert abs(p0.sum() - 1) <= 1e-12 and abs(p1.sum() - 1) <= 1e-12


@given(st.integers(2, 6).flatmap(lambda n: st.tuples(simplex(n), simplex(n), simplex(n))))
def test_tv_triangle(triple):
    a, b, c = triple
    assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-15


@given(pos, pos, unit, unit)
def test_entropy_identity(a, b, pa, pb):
    assert entropy_decomposition_check(a, b, pa, pb) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4), st.integers(1, 3), kinds)
def test_data_processing(seed, L0, L1, k, kind):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, L0, L1, k, kind)
    rv = random_vars(rng, inst)
    assert eval_objective(inst, rv) >= baseline_error(inst) - 1e-9
    mu0, mu1 = atom_marginals(inst, rv)
    assert abs(eval_fairness(inst, rv) - tv_distance(mu0.ravel(), mu1.ravel())) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3), st.integers(1, 2), kinds, st.floats(0.0, 1.0))
def test_perfect_fair_lifts_everywhere(seed, L0, L1, k, kind, gamma):
    inst = random_instance(np.random.default_rng(seed), L0, L1, k, kind)
    err, rv = solve_perfect_fair(inst)
    assert eval_fairness(inst, rv) <= 1e-10
    assert err >= baseline_error(inst) - 1e-9
    assert constraint_residual(inst, gamma, lift_to_gamma(inst, rv, gamma)) <= 1e-12


def _rep(seed, n0, n1, z, collide=False):
    rng = np.random.default_rng(seed)

    def rows(n):
        t = rng.dirichlet(np.ones(z), size=n) * (rng.random((n, z)) > 0.5)
        t[t.sum(axis=1) == 0, 0] = 1.0
        return t / t.sum(axis=1, keepdims=True)

    r0, r1 = rng.uniform(0, 1, n0), rng.uniform(0, 1, n1)
    if collide:
        r0, r1 = rng.choice(r0[:1 + n0 // 2], n0), rng.choice(r1[:1 + n1 // 2], n1)
    return FiniteRepresentation(float(rng.uniform(0.1, 0.9)), rng.dirichlet(np.ones(n0)), rng.dirichlet(np.ones(n1)),
                                r0, r1, rows(n0), rows(n1))


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4), st.integers(1, 5), kinds)
def test_invertible_form(seed, n0, n1, z, kind):
    rep = _rep(seed, n0, n1, z)
    out = make_invertible(rep)
    assert is_invertible(out)
    e, f = eval_rep(rep, kind)
    e2, f2 = eval_rep(out, kind)
    assert e2 <= e + 1e-10 and abs(f2 - f) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 5), st.integers(2, 5), st.integers(1, 5))
def test_factorise_preserves_atoms(seed, n0, n1, z):
    rep = _rep(seed, n0, n1, z, collide=True)
    out = factorise(rep)
    assert factorisation_residual(rep, out) <= 1e-12
    assert np.unique(np.round(out.rho_s0, 12)).size == out.rho_s0.size


@settings(max_examples=80, deadline=None)
@given(seeds, st.integers(1, 60), st.sampled_from([1, 2, 5, 50]), kinds)
def test_compression(seed, n, bins, kind):
    rng = np.random.default_rng(seed)
    a0 = float(rng.uniform(0.1, 0.9))
    rep = TwoPointRep(a0 * rng.dirichlet(np.ones(n)) * rng.uniform(0.05, 1),
                      (1 - a0) * rng.dirichlet(np.ones(n)) * rng.uniform(0.05, 1),
                      float(rng.uniform()), float(rng.uniform()), a0)
    E, F = two_point_cost(rep, kind)
    out = compress_two_point(rep, bins)
    E2, F2 = two_point_cost(out, kind)
    assert F2 <= F + 1e-12
    assert abs(E2 - E) <= compression_bound(rep, bins, kind)
    assert out.w0.size <= bins
    assert math.isclose(out.weight_u, rep.weight_u, abs_tol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.integers(0, 1)), min_size=1, max_size=40))
def test_pava_monotone_and_mean_preserving(pairs):
    s = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs], dtype=float)
    f = pava_isotonic(s, y)
    assert np.all(np.diff(f.values) >= 0)
    fitted = f(s)
    assert abs(fitted.mean() - y.mean()) <= 1e-12
    # the fitted values are calibrated on the training points by construction
    assert expected_calibration_error(fitted, y, bins=1) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(1, 5), unit, unit)
def test_classifier_induces_representation(seed, L0, L1, t0, t1):
    inst = random_instance(np.random.default_rng(seed), L0, L1, 1)
    p = classifier_to_point(inst, t0, t1)
    e, f = eval_rep(induced_representation(inst, t0, t1), "min-error")
    assert abs(f - p.sp_distance) <= 1e-12
    assert e <= p.error + 1e-12
    assert p.error >= baseline_error(inst) - 1e-12
    assume(p.sp_distance == 0.0)
    # a zero-parity classifier is a perfectly fair representation
    assert p.error >= solve_perfect_fair(inst)[0] - 1e-9
