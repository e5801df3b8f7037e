import json

import numpy as np
import pytest

from mifpo.core import FrontPoint, MifpoInstance, ObjectiveKind, ParetoFront, baseline_error, random_instance, two_point_instance
from mifpo.errors import DomainError
from mifpo.fairclass import (
    NEVER_POSITIVE,
    ClassifierPoint,
    baseline_against_front,
    candidate_thresholds,
    classifier_to_point,
    dominance_check,
    dominance_grid,
    induced_representation,
    pareto_envelope,
    sweep_group_thresholds,
)
from mifpo.reprlab import eval_rep
from mifpo.solver import SolveConfig


class TestClassifierPoint:
    def test_two_point_split(self):
        p = classifier_to_point(two_point_instance(), 0.5, 0.5)
        assert p.error == 0.0 and p.sp_distance == 1.0

    def test_two_point_always_negative(self):
        p = classifier_to_point(two_point_instance(), NEVER_POSITIVE, NEVER_POSITIVE)
        assert p.error == 0.5 and p.sp_distance == 0.0

    def test_uninformative(self):
        inst = MifpoInstance(0.3, [0.5], [1.0], [0.5], [1.0], 2)
        for t0, t1 in [(0.0, 0.0), (0.7, 0.2), (1.01, 0.5)]:
            assert classifier_to_point(inst, t0, t1).error == pytest.approx(0.5)

    def test_error_formula(self):
        inst = MifpoInstance(0.4, [0.2, 0.7], [0.5, 0.5], [0.1, 0.6, 0.9], [0.2, 0.3, 0.5], 2)
        p = classifier_to_point(inst, 0.5, 0.5)
        e0 = 0.5 * 0.2 + 0.5 * 0.3
        e1 = 0.2 * 0.1 + 0.3 * 0.4 + 0.5 * 0.1
        assert p.error == pytest.approx(0.4 * e0 + 0.6 * e1, abs=1e-15)
        assert p.sp_distance == pytest.approx(abs(0.8 - 0.5), abs=1e-15)

    def test_induced_representation(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            inst = random_instance(rng, 4, 3, 2)
            t0, t1 = rng.uniform(0, 1, 2)
            p = classifier_to_point(inst, t0, t1)
            e, f = eval_rep(induced_representation(inst, t0, t1), "min-error")
            assert f == pytest.approx(p.sp_distance, abs=1e-12)
            assert e <= p.error + 1e-12

    def test_threshold_domain(self):
        with pytest.raises(DomainError):
            classifier_to_point(two_point_instance(), -0.1, 0.5)
        with pytest.raises(DomainError):
            classifier_to_point(two_point_instance(), float("nan"), 0.5)

    def test_to_dict(self):
        assert ClassifierPoint(0.2, 0.3, (0.1, 0.4)).to_dict() == {"gamma": 0.2, "error": 0.3, "thresholds": [0.1, 0.4]}


class TestSweep:
    def test_two_point_envelope(self):
        s = sweep_group_thresholds(two_point_instance())
        env = {(p.sp_distance, p.error) for p in s.envelope}
        assert (1.0, 0.0) in env and (0.0, 0.5) in env

    def test_flat_instance(self):
        inst = MifpoInstance(0.5, [0.3, 0.8], [0.4, 0.6], [0.3, 0.8], [0.4, 0.6], 2)
        s = sweep_group_thresholds(inst)
        assert min(p.error for p in s.envelope) == pytest.approx(baseline_error(inst), abs=1e-15)
        # equal thresholds give equal predictions across groups
        same = [p for p in s.points if p.thresholds[0] == p.thresholds[1]]
        assert all(p.sp_distance == 0.0 for p in same)

    def test_single_bin_counts(self):
        inst = MifpoInstance(0.5, [0.3], [1.0], [0.6], [1.0], 2)
        assert len(sweep_group_thresholds(inst).points) <= 4

    def test_envelope_is_pareto(self):
        inst = random_instance(np.random.default_rng(1), 4, 4, 2)
        s = sweep_group_thresholds(inst)
        env = s.envelope
        assert all(a.sp_distance < b.sp_distance and a.error > b.error for a, b in zip(env, env[1:]))
        for p in s.points:
            assert any(q.sp_distance <= p.sp_distance and q.error <= p.error + 1e-12 for q in env)

    def test_candidates(self):
        c = candidate_thresholds(np.array([0.2, 0.6]), 3)
        np.testing.assert_allclose(c, [0.0, 0.4, 0.5, 1.0, NEVER_POSITIVE], atol=1e-15)
        with pytest.raises(DomainError):
            candidate_thresholds(np.array([0.5]), 1)

    def test_envelope_helper(self):
        pts = [ClassifierPoint(0.0, 0.5, ()), ClassifierPoint(0.5, 0.5, ()), ClassifierPoint(0.6, 0.2, ())]
        assert [p.sp_distance for p in pareto_envelope(pts)] == [0.0, 0.6]


class TestDominance:
    def test_two_point(self):
        sweep, front, rep = baseline_against_front(two_point_instance(k=2))
        assert rep.ok and rep.checked == len(sweep.points)
        d = json.loads(rep.to_json())
        assert d["ok"] is True and d["violations"] == []

    def test_random_instances(self):
        rng = np.random.default_rng(2)
        for i in range(3):
            inst = random_instance(rng, 3, 3, 2, "entropy")
            _, front, rep = baseline_against_front(inst, cfg=SolveConfig(seed=i))
            assert front.objective is ObjectiveKind.MIN_ERROR
            assert rep.ok, rep.to_dict()

    def test_detects_violation(self):
        front = ParetoFront(ObjectiveKind.MIN_ERROR, 0.0, [FrontPoint(0.0, 0.5, None, 0), FrontPoint(1.0, 0.5, None, 0)])
        rep = dominance_check([ClassifierPoint(0.5, 0.1, (0.2, 0.3))], front)
        assert not rep.ok and rep.to_dict()["violations"][0]["front_error"] == 0.5

    def test_rejects_entropy_front(self):
        front = ParetoFront(ObjectiveKind.ENTROPY, 0.0, [FrontPoint(0.0, 0.5, None, 0)])
        with pytest.raises(DomainError):
            dominance_check([], front)

    def test_grid_augmented(self):
        sweep = sweep_group_thresholds(random_instance(np.random.default_rng(3), 3, 3, 2))
        g = dominance_grid(sweep, [0.0, 0.5, 1.0])
        assert {0.0, 0.5, 1.0} <= set(g.tolist())
        assert all(p.sp_distance in g for p in sweep.envelope)
