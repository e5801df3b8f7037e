"""Domain types and evaluation routines for discretised fair-representation problems.

An instance describes two groups (A=0 and A=1). Each group is a finite
histogram over points of [0, 1], where a point ``rho`` is P(Y=1) for the
source points it stands for. A representation sends every source point to
atoms ``(u, v, j)`` of a product code space; from it we evaluate

* the prediction cost ``E`` (expected uncertainty of Y given the atom), and
* the fairness value ``F`` (total variation between the two group-conditional
  atom distributions).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, DomainError, ShapeError

MASS_EPS = 1e-15
_P_SLACK = 1e-12


class ObjectiveKind(str, Enum):
    """Concave uncertainty measure applied to P(Y=1 | atom)."""

    MIN_ERROR = "min-error"
    ENTROPY = "entropy"

    @classmethod
    def parse(cls, value) -> "ObjectiveKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("_", "-"))
        except ValueError:
            raise DomainError(f"unknown objective {value!r}; expected 'min-error' or 'entropy'") from None


def _check_unit_interval(p: np.ndarray) -> np.ndarray:
    if p.size and (np.isnan(p).any() or p.min() < -_P_SLACK or p.max() > 1 + _P_SLACK):
        raise DomainError("probability argument outside [0, 1]")
    return np.clip(p, 0.0, 1.0)


def _h(kind: ObjectiveKind, p: np.ndarray) -> np.ndarray:
    # unchecked vectorised form, p already in [0, 1]
    if kind is ObjectiveKind.MIN_ERROR:
        return np.minimum(p, 1.0 - p)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.where(p > 0, p * np.log(p), 0.0) - np.where(q > 0, q * np.log(q), 0.0)
    return out


def h_eval(kind, p):
    """Evaluate the uncertainty function ``h`` at ``p = P(Y=1)``.

    ``min-error`` gives ``min(p, 1-p)``; ``entropy`` gives the binary entropy
    in nats. Accepts scalars or arrays; scalars return a float.
    """
    kind = ObjectiveKind.parse(kind)
    arr = _check_unit_interval(np.asarray(p, dtype=float))
    out = _h(kind, arr)
    return float(out) if out.ndim == 0 else out


def tv_distance(mu0, mu1) -> float:
    """Total variation distance ``0.5 * sum |mu0 - mu1|`` of two finite distributions."""
    mu0 = np.asarray(mu0, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    if mu0.shape != mu1.shape:
        raise ShapeError(f"distributions live on different index spaces: {mu0.shape} vs {mu1.shape}")
    return float(0.5 * np.abs(mu0 - mu1).sum())


def tv_equality_witness(mu0, mu1):
    """Return ``(gamma, phi0, phi1)`` with ``mu0 + gamma*phi0 == mu1 + gamma*phi1``.

    ``gamma`` is the TV distance and ``phi0``/``phi1`` are the normalised
    positive parts of ``mu1 - mu0`` and ``mu0 - mu1``. When the inputs coincide
    ``gamma`` is 0 and both ``phi`` are uniform; callers must not rely on them.
    """
    mu0 = np.asarray(mu0, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    gamma = tv_distance(mu0, mu1)
    if gamma == 0.0:
        uniform = np.full(mu0.shape, 1.0 / max(mu0.size, 1))
        return 0.0, uniform, uniform.copy()
    phi0 = np.maximum(mu1 - mu0, 0.0) / gamma
    phi1 = np.maximum(mu0 - mu1, 0.0) / gamma
    return gamma, phi0, phi1


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MifpoInstance:
    """Parameters of a discretised Pareto-front problem.

    Bins with zero weight are dropped on construction, so every stored
    ``beta`` entry is strictly positive.
    """

    alpha0: float
    rho0: np.ndarray
    beta0: np.ndarray
    rho1: np.ndarray
    beta1: np.ndarray
    k: int = 10
    objective: ObjectiveKind = ObjectiveKind.MIN_ERROR

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "objective", ObjectiveKind.parse(self.objective))
        alpha0 = float(self.alpha0)
        if not 0.0 < alpha0 < 1.0:
            raise DomainError(f"alpha0 must lie in (0, 1), got {alpha0}")
        set_(self, "alpha0", alpha0)
        k = int(self.k)
        if k < 1 or k != self.k:
            raise DomainError(f"k must be a positive integer, got {self.k}")
        set_(self, "k", k)
        for side in ("0", "1"):
            rho = np.asarray(getattr(self, "rho" + side), dtype=float).ravel()
            beta = np.asarray(getattr(self, "beta" + side), dtype=float).ravel()
            if rho.shape != beta.shape:
                raise ShapeError(f"rho{side} and beta{side} differ in length")
            if (beta < 0).any():
                raise DomainError(f"beta{side} has negative entries")
            keep = beta > 0
            rho, beta = rho[keep], beta[keep]
            if beta.size == 0:
                raise DomainError(f"group {side} has no positive-weight bins")
            if abs(beta.sum() - 1.0) > 1e-12:
                raise DomainError(f"beta{side} sums to {beta.sum():.15g}, not 1")
            if (rho < 0).any() or (rho > 1).any():
                raise DomainError(f"rho{side} entries outside [0, 1]")
            set_(self, "rho" + side, _readonly(rho))
            set_(self, "beta" + side, _readonly(beta))

    @property
    def alpha1(self) -> float:
        return 1.0 - self.alpha0

    @property
    def L0(self) -> int:
        return self.rho0.size

    @property
    def L1(self) -> int:
        return self.rho1.size

    @property
    def n_atoms(self) -> int:
        return self.L0 * self.L1 * self.k

    def with_objective(self, objective) -> "MifpoInstance":
        return MifpoInstance(self.alpha0, self.rho0, self.beta0, self.rho1, self.beta1, self.k, objective)

    def with_k(self, k: int) -> "MifpoInstance":
        return MifpoInstance(self.alpha0, self.rho0, self.beta0, self.rho1, self.beta1, k, self.objective)

    def to_dict(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "rho0": self.rho0.tolist(),
            "beta0": self.beta0.tolist(),
            "rho1": self.rho1.tolist(),
            "beta1": self.beta1.tolist(),
            "k": self.k,
            "objective": self.objective.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MifpoInstance":
        missing = {"alpha0", "rho0", "beta0", "rho1", "beta1", "k", "objective"} - set(d)
        if missing:
            raise DataError(f"instance JSON lacks keys: {sorted(missing)}")
        return cls(d["alpha0"], d["rho0"], d["beta0"], d["rho1"], d["beta1"], d["k"], d["objective"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MifpoInstance":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed instance JSON: {exc}") from exc


@dataclass(frozen=True)
class RepresentationVars:
    """Decision variables of the discretised problem.

    ``r0[u, v, j]`` is P(Z=(u,v,j) | source u of group 0) and ``r1[v, u, j]``
    is P(Z=(u,v,j) | source v of group 1). ``phi0``/``phi1`` are indexed by
    atom ``(u, v, j)`` and are only present for a positive fairness level.
    """

    r0: np.ndarray
    r1: np.ndarray
    phi0: Optional[np.ndarray] = None
    phi1: Optional[np.ndarray] = None

    def __post_init__(self):
        set_ = object.__setattr__
        r0 = _readonly(self.r0)
        r1 = _readonly(self.r1)
        if r0.ndim != 3 or r1.ndim != 3 or r0.shape != (r1.shape[1], r1.shape[0], r1.shape[2]):
            raise ShapeError(f"r0 {r0.shape} and r1 {r1.shape} are not (L0,L1,k) and (L1,L0,k)")
        set_(self, "r0", r0)
        set_(self, "r1", r1)
        if (self.phi0 is None) != (self.phi1 is None):
            raise ShapeError("phi0 and phi1 must be given together")
        if self.phi0 is not None:
            phi0, phi1 = _readonly(self.phi0), _readonly(self.phi1)
            if phi0.shape != r0.shape or phi1.shape != r0.shape:
                raise ShapeError("phi arrays must be indexed like r0 (u, v, j)")
            set_(self, "phi0", phi0)
            set_(self, "phi1", phi1)

    @property
    def shape(self):
        return self.r0.shape

    def check(self, tol: float = 1e-9) -> None:
        """Raise DomainError unless rows and phi are probability vectors."""
        if min(self.r0.min(), self.r1.min()) < -1e-12:
            raise DomainError("negative transition probability")
        if np.abs(self.r0.sum(axis=(1, 2)) - 1).max() > tol or np.abs(self.r1.sum(axis=(1, 2)) - 1).max() > tol:
            raise DomainError("transition rows do not sum to 1")
        if self.phi0 is not None:
            if min(self.phi0.min(), self.phi1.min()) < -1e-12:
                raise DomainError("negative witness entry")
            if abs(self.phi0.sum() - 1) > tol or abs(self.phi1.sum() - 1) > tol:
                raise DomainError("witness distributions do not sum to 1")


def _check_dims(inst: MifpoInstance, rv: RepresentationVars) -> None:
    if rv.shape != (inst.L0, inst.L1, inst.k):
        raise ShapeError(f"variables shaped {rv.shape}, instance expects {(inst.L0, inst.L1, inst.k)}")


def atom_masses(inst: MifpoInstance, rv: RepresentationVars):
    """Return ``(c0, c1)``: the joint masses P(Z=z, A=a) on atoms ``(u, v, j)``."""
    _check_dims(inst, rv)
    c0 = inst.alpha0 * inst.beta0[:, None, None] * rv.r0
    c1 = inst.alpha1 * inst.beta1[None, :, None] * rv.r1.transpose(1, 0, 2)
    return c0, c1


def atom_marginals(inst: MifpoInstance, rv: RepresentationVars):
    """Return ``(mu0, mu1)``: the group-conditional atom distributions, indexed ``(u, v, j)``."""
    _check_dims(inst, rv)
    mu0 = inst.beta0[:, None, None] * rv.r0
    mu1 = inst.beta1[None, :, None] * rv.r1.transpose(1, 0, 2)
    return mu0, mu1


def pair_cost(kind: ObjectiveKind, c0, c1, rho_u, rho_v):
    """Mass-weighted uncertainty ``(c0+c1) * h(mixture)`` of atoms fed by two sources.

    Zero-mass atoms contribute 0. All arguments broadcast.
    """
    c0 = np.asarray(c0, dtype=float)
    c1 = np.asarray(c1, dtype=float)
    mass = c0 + c1
    y1 = c0 * rho_u + c1 * rho_v
    live = mass > MASS_EPS
    p = np.where(live, y1 / np.where(live, mass, 1.0), 0.0)
    return np.where(live, mass * _h(ObjectiveKind.parse(kind), np.clip(p, 0.0, 1.0)), 0.0)


def eval_objective(inst: MifpoInstance, rv: RepresentationVars) -> float:
    """Prediction cost ``E`` of a representation of ``inst``."""
    c0, c1 = atom_masses(inst, rv)
    cost = pair_cost(inst.objective, c0, c1, inst.rho0[:, None, None], inst.rho1[None, :, None])
    return float(cost.sum())


def eval_fairness(inst: MifpoInstance, rv: RepresentationVars) -> float:
    """Fairness value ``F``: TV distance between the group-conditional atom distributions."""
    mu0, mu1 = atom_marginals(inst, rv)
    return float(0.5 * np.abs(mu0 - mu1).sum())


def baseline_error(inst: MifpoInstance) -> float:
    """Cost of the identity representation, a lower bound on every achievable cost."""
    kind = inst.objective
    return float(
        inst.alpha0 * np.dot(inst.beta0, _h(kind, inst.rho0))
        + inst.alpha1 * np.dot(inst.beta1, _h(kind, inst.rho1))
    )


@dataclass(frozen=True)
class FiniteRepresentation:
    """A general finite representation of a two-group source space.

    ``t0[s, z]`` is P(Z=z | X=s, A=0) for source ``s`` of group 0, and
    likewise ``t1``; both share one atom axis.
    """

    alpha0: float
    s0_weights: np.ndarray
    s1_weights: np.ndarray
    rho_s0: np.ndarray
    rho_s1: np.ndarray
    t0: np.ndarray
    t1: np.ndarray

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "alpha0", float(self.alpha0))
        if not 0.0 < self.alpha0 < 1.0:
            raise DomainError("alpha0 must lie in (0, 1)")
        for name in ("s0_weights", "s1_weights", "rho_s0", "rho_s1"):
            set_(self, name, _readonly(np.asarray(getattr(self, name), dtype=float).ravel()))
        t0 = _readonly(np.atleast_2d(self.t0))
        t1 = _readonly(np.atleast_2d(self.t1))
        if t0.shape[0] != self.s0_weights.size or t1.shape[0] != self.s1_weights.size:
            raise ShapeError("transition tables need one row per source point")
        if t0.shape[1] != t1.shape[1]:
            raise ShapeError("t0 and t1 must share one atom index space")
        if self.rho_s0.size != self.s0_weights.size or self.rho_s1.size != self.s1_weights.size:
            raise ShapeError("rho lists must match the weight lists")
        for t in (t0, t1):
            if t.size and (t.min() < 0 or np.abs(t.sum(axis=1) - 1).max() > 1e-12):
                raise DomainError("transition rows must be nonnegative and sum to 1")
        set_(self, "t0", t0)
        set_(self, "t1", t1)

    @property
    def alpha1(self) -> float:
        return 1.0 - self.alpha0

    @property
    def n_atoms(self) -> int:
        return self.t0.shape[1]

    def marginals(self):
        """Group-conditional atom distributions ``(mu0, mu1)``."""
        return self.s0_weights @ self.t0, self.s1_weights @ self.t1

    def atom_mass(self) -> np.ndarray:
        mu0, mu1 = self.marginals()
        return self.alpha0 * mu0 + self.alpha1 * mu1

    def atom_label_prob(self) -> np.ndarray:
        """P(Y=1 | Z=z) per atom; zero-mass atoms get 0."""
        y1 = self.alpha0 * (self.s0_weights * self.rho_s0) @ self.t0
        y1 = y1 + self.alpha1 * (self.s1_weights * self.rho_s1) @ self.t1
        mass = self.atom_mass()
        live = mass > MASS_EPS
        return np.where(live, y1 / np.where(live, mass, 1.0), 0.0)

    def to_dict(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "s0_weights": self.s0_weights.tolist(),
            "s1_weights": self.s1_weights.tolist(),
            "rho_s0": self.rho_s0.tolist(),
            "rho_s1": self.rho_s1.tolist(),
            "t0": self.t0.tolist(),
            "t1": self.t1.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteRepresentation":
        try:
            return cls(d["alpha0"], d["s0_weights"], d["s1_weights"], d["rho_s0"], d["rho_s1"], d["t0"], d["t1"])
        except KeyError as exc:
            raise DataError(f"representation JSON lacks key {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FiniteRepresentation":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FrontPoint:
    gamma: float
    error: float
    vars: Optional[RepresentationVars] = None
    restarts_used: int = 0


@dataclass
class ParetoFront:
    """Monotone list of ``(gamma, error)`` points with solver metadata."""

    objective: ObjectiveKind
    baseline_error: float
    points: list = field(default_factory=list)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([p.gamma for p in self.points])

    @property
    def errors(self) -> np.ndarray:
        return np.array([p.error for p in self.points])

    def interpolate(self, gamma) -> np.ndarray:
        """Piecewise-linear front value at ``gamma`` (clamped at the ends)."""
        return np.interp(gamma, self.gammas, self.errors)

    def to_dict(self) -> dict:
        return {
            "objective": ObjectiveKind.parse(self.objective).value,
            "points": [
                {"gamma": p.gamma, "error": p.error, "restarts_used": p.restarts_used} for p in self.points
            ],
            "baseline_error": self.baseline_error,
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def to_csv(self) -> str:
        lines = ["gamma,error"]
        lines += [f"{p.gamma:.12g},{p.error:.12g}" for p in self.points]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ParetoFront":
        pts = [FrontPoint(p["gamma"], p["error"], None, p.get("restarts_used", 0)) for p in d["points"]]
        return cls(ObjectiveKind.parse(d["objective"]), d["baseline_error"], pts)


def two_point_instance(alpha0: float = 0.5, k: int = 2, objective="min-error") -> MifpoInstance:
    """Group 0 always has Y=0, group 1 always Y=1: the front is ``min(alpha0, alpha1) * (1 - gamma)``."""
    return MifpoInstance(alpha0, [0.0], [1.0], [1.0], [1.0], k, objective)


def random_instance(rng: np.random.Generator, L0: int, L1: int, k: int, objective="min-error",
                    alpha_range: Sequence[float] = (0.2, 0.8)) -> MifpoInstance:
    """Random instance with Dirichlet bin weights and uniform bin centres."""
    beta0 = rng.dirichlet(np.ones(L0))
    beta1 = rng.dirichlet(np.ones(L1))
    beta0 = beta0 / beta0.sum()
    beta1 = beta1 / beta1.sum()
    return MifpoInstance(
        float(rng.uniform(*alpha_range)),
        np.sort(rng.uniform(0, 1, L0)),
        beta0,
        np.sort(rng.uniform(0, 1, L1)),
        beta1,
        k,
        objective,
    )


def random_vars(rng: np.random.Generator, inst: MifpoInstance) -> RepresentationVars:
    """Feasible transition rows drawn from a flat Dirichlet (no fairness witness)."""
    L0, L1, k = inst.L0, inst.L1, inst.k
    r0 = rng.dirichlet(np.ones(L1 * k), size=L0).reshape(L0, L1, k)
    r1 = rng.dirichlet(np.ones(L0 * k), size=L1).reshape(L1, L0, k)
    return RepresentationVars(r0, r1)
