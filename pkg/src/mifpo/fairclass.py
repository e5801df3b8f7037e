"""Group-threshold classifiers on a quantized instance, and their place under the front.

A classifier that thresholds the bin centre ``rho_u`` separately per group
induces a representation with two atoms (the predicted label). Its
statistical-parity distance is the TV distance of that representation, and
its 0-1 error is at least the representation's optimal error, so every such
classifier lies on or above the min-error front.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import FiniteRepresentation, MifpoInstance, ObjectiveKind, ParetoFront
from .errors import DomainError

NEVER_POSITIVE = 1.01  # any threshold above 1 predicts 0 for every bin


@dataclass(frozen=True)
class ClassifierPoint:
    sp_distance: float
    error: float
    thresholds: tuple

    def to_dict(self) -> dict:
        return {"gamma": self.sp_distance, "error": self.error, "thresholds": list(self.thresholds)}


def _check_threshold(t: float) -> float:
    t = float(t)
    if not (np.isfinite(t) and t >= 0.0):
        raise DomainError(f"threshold must be finite and nonnegative, got {t}")
    return t


def group_predictions(inst: MifpoInstance, t0: float, t1: float):
    """Per-bin predicted labels: bin ``u`` of group ``a`` predicts 1 iff ``rho_u >= t_a``."""
    t0, t1 = _check_threshold(t0), _check_threshold(t1)
    return inst.rho0 >= t0, inst.rho1 >= t1


def classifier_to_point(inst: MifpoInstance, t0: float, t1: float) -> ClassifierPoint:
    """0-1 error and statistical-parity distance of the group-threshold rule ``(t0, t1)``."""
    p0, p1 = group_predictions(inst, t0, t1)
    err0 = np.dot(inst.beta0, np.where(p0, 1.0 - inst.rho0, inst.rho0))
    err1 = np.dot(inst.beta1, np.where(p1, 1.0 - inst.rho1, inst.rho1))
    error = float(inst.alpha0 * err0 + inst.alpha1 * err1)
    sp = abs(float(np.dot(inst.beta1, p1)) - float(np.dot(inst.beta0, p0)))
    return ClassifierPoint(sp, error, (float(t0), float(t1)))


def induced_representation(inst: MifpoInstance, t0: float, t1: float) -> FiniteRepresentation:
    """Two-atom representation ``Z = predicted label`` (atom 0 is ``Y_hat = 0``)."""
    p0, p1 = group_predictions(inst, t0, t1)
    t0_tab = np.stack([~p0, p0], axis=1).astype(float)
    t1_tab = np.stack([~p1, p1], axis=1).astype(float)
    return FiniteRepresentation(inst.alpha0, inst.beta0, inst.beta1, inst.rho0, inst.rho1, t0_tab, t1_tab)


def candidate_thresholds(rho: np.ndarray, grid_resolution: int) -> np.ndarray:
    """Uniform grid, midpoints between distinct centres, ``0``, ``1`` and the never-positive threshold."""
    if grid_resolution < 2:
        raise DomainError("grid resolution must be >= 2")
    r = np.unique(rho)
    mids = (r[1:] + r[:-1]) / 2.0
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, grid_resolution), mids, [0.0, 1.0, NEVER_POSITIVE]]))


@dataclass
class ThresholdSweep:
    points: list = field(default_factory=list)
    envelope: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"points": [p.to_dict() for p in self.points], "envelope": [p.to_dict() for p in self.envelope]}


def pareto_envelope(points: Sequence[ClassifierPoint], tol: float = 1e-12) -> list:
    """Points not dominated in (sp_distance, error), sorted by sp_distance."""
    order = sorted(points, key=lambda p: (p.sp_distance, p.error))
    env, best = [], np.inf
    for p in order:
        if p.error < best - tol:
            env.append(p)
            best = p.error
    return env


def sweep_group_thresholds(inst: MifpoInstance, grid_resolution: int = 11) -> ThresholdSweep:
    """All distinct group-threshold classifiers over the candidate grid, plus their envelope."""
    th0 = candidate_thresholds(inst.rho0, grid_resolution)
    th1 = candidate_thresholds(inst.rho1, grid_resolution)
    seen, pts = set(), []
    for t0 in th0:
        for t1 in th1:
            p = classifier_to_point(inst, t0, t1)
            key = (round(p.sp_distance, 12), round(p.error, 12))
            if key not in seen:
                seen.add(key)
                pts.append(p)
    return ThresholdSweep(pts, pareto_envelope(pts))


@dataclass
class DominanceReport:
    checked: int
    violations: list
    tol: float

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "checked": self.checked,
            "tol": self.tol,
            "ok": self.ok,
            "violations": [
                {"gamma": p.sp_distance, "classifier_error": p.error, "front_error": f, "thresholds": list(p.thresholds)}
                for p, f in self.violations
            ],
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def dominance_check(points: Sequence[ClassifierPoint], front: ParetoFront, tol: float = 1e-3) -> DominanceReport:
    """Every classifier must satisfy ``error >= front(sp_distance) - tol``.

    ``front`` should be a min-error front of the same instance; its value at
    ``sp_distance`` is the piecewise-linear interpolation of its points.
    """
    if ObjectiveKind.parse(front.objective) is not ObjectiveKind.MIN_ERROR:
        raise DomainError("classifier errors compare only against a min-error front")
    bad = []
    for p in points:
        f = float(front.interpolate(p.sp_distance))
        if p.error < f - tol:
            bad.append((p, f))
    return DominanceReport(len(points), bad, tol)


def dominance_grid(sweep: ThresholdSweep, base: Sequence[float]) -> np.ndarray:
    """``base`` grid augmented with the envelope's sp values.

    Interpolating a convex front between grid points overestimates it, so
    the front is solved exactly at the envelope abscissae; points off the
    envelope are then covered by monotonicity.
    """
    extra = [p.sp_distance for p in sweep.envelope]
    return np.unique(np.clip(np.concatenate([np.asarray(base, dtype=float), extra]), 0.0, 1.0))


def baseline_against_front(inst: MifpoInstance, grid_resolution: int = 11, base_grid=None, cfg=None,
                           tol: float = 1e-3):
    """Sweep thresholds, solve the min-error front on the augmented grid, check dominance.

    Returns ``(sweep, front, report)``.
    """
    from .solver import SolveConfig, gamma_grid, sweep_front

    me = inst.with_objective(ObjectiveKind.MIN_ERROR)
    sweep = sweep_group_thresholds(me, grid_resolution)
    grid = dominance_grid(sweep, gamma_grid() if base_grid is None else base_grid)
    front = sweep_front(me, grid, cfg or SolveConfig())
    return sweep, front, dominance_check(sweep.points, front, tol)
