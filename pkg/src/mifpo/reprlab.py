"""Constructive tools for finite representations.

* :func:`make_invertible` splits atoms until every atom has at most one
  parent per group, never increasing the error and keeping the fairness
  value fixed.
* :func:`factorise` merges source points with equal label distribution.
* :func:`compress_two_point` snaps the atoms of one ``(u, v)`` pair to a
  uniform grid of mixture weights.
* :func:`entropy_decomposition_check` verifies the ``x log x`` form of the
  entropy atom cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    MASS_EPS,
    FiniteRepresentation,
    MifpoInstance,
    ObjectiveKind,
    RepresentationVars,
    _h,
    tv_distance,
)
from .errors import DomainError, ShapeError

PARENT_TOL = 1e-15
RHO_DECIMALS = 12


# ---------------------------------------------------------------------------
# general finite representations


def eval_rep(rep: FiniteRepresentation, objective="min-error"):
    """``(error, fairness)``: expected ``h`` of the atom label distribution, and TV of the marginals."""
    kind = ObjectiveKind.parse(objective)
    mass = rep.atom_mass()
    p = np.clip(rep.atom_label_prob(), 0.0, 1.0)
    live = mass > MASS_EPS
    error = float(np.sum(mass[live] * _h(kind, p[live])))
    mu0, mu1 = rep.marginals()
    return error, tv_distance(mu0, mu1)


def parents(rep: FiniteRepresentation):
    """Boolean parent tables ``(P0, P1)`` of shape ``(|S_a|, |Z|)``."""
    return rep.t0 > PARENT_TOL, rep.t1 > PARENT_TOL


def is_invertible(rep: FiniteRepresentation) -> bool:
    P0, P1 = parents(rep)
    return bool((P0.sum(axis=0) <= 1).all() and (P1.sum(axis=0) <= 1).all())


def _with_tables(rep: FiniteRepresentation, t0, t1) -> FiniteRepresentation:
    # renormalise rows against rounding drift before revalidation
    t0 = t0 / t0.sum(axis=1, keepdims=True)
    t1 = t1 / t1.sum(axis=1, keepdims=True)
    return FiniteRepresentation(rep.alpha0, rep.s0_weights, rep.s1_weights, rep.rho_s0, rep.rho_s1, t0, t1)


def split_atom(rep: FiniteRepresentation, z: int, side: int, x: int) -> FiniteRepresentation:
    """Split atom ``z`` so that source ``x`` of group ``side`` becomes the sole parent of one half.

    With ``kappa = P(X = x | Z = z, A = side)``, the new atom ``z'`` (kept at
    index ``z``) takes row ``x`` of group ``side`` and a ``kappa`` share of
    the other group's mass on ``z``; the appended atom ``z''`` takes the
    remaining parents of group ``side`` and the ``1 - kappa`` share.
    """
    tabs = [np.array(rep.t0, dtype=float), np.array(rep.t1, dtype=float)]
    weights = (rep.s0_weights, rep.s1_weights)
    own, other = tabs[side], tabs[1 - side]
    col_mass = weights[side] * own[:, z]
    total = col_mass.sum()
    if total <= 0 or own[x, z] <= PARENT_TOL:
        raise DomainError(f"source {x} is not a parent of atom {z}")
    kappa = col_mass[x] / total

    own_new = own[:, [z]].copy()
    own_new[x, 0] = 0.0
    keep = own[x, z]
    own[:, z] = 0.0
    own[x, z] = keep

    other_new = (1.0 - kappa) * other[:, [z]]
    other[:, z] *= kappa
    tabs[side] = np.hstack([own, own_new])
    tabs[1 - side] = np.hstack([other, other_new])
    return _with_tables(rep, tabs[0], tabs[1])


def make_invertible(rep: FiniteRepresentation, max_splits: int = 100_000):
    """Split atoms until each has at most one parent per group.

    The lowest atom with several parents on some group is handled first
    (group 0 before group 1), splitting off its lowest-index parent.
    Returns the new representation; :func:`make_invertible_log` also returns
    the list of ``(atom, side, parent)`` splits performed.
    """
    return make_invertible_log(rep, max_splits)[0]


def make_invertible_log(rep: FiniteRepresentation, max_splits: int = 100_000):
    log = []
    for _ in range(max_splits):
        P0, P1 = parents(rep)
        multi = [(P0.sum(axis=0) > 1), (P1.sum(axis=0) > 1)]
        cand = np.flatnonzero(multi[0] | multi[1])
        if cand.size == 0:
            return rep, log
        z = int(cand[0])
        side = 0 if multi[0][z] else 1
        x = int(np.flatnonzero((P0 if side == 0 else P1)[:, z])[0])
        rep = split_atom(rep, z, side, x)
        log.append((z, side, x))
    raise RuntimeError(f"no invertible form within {max_splits} splits")


def _merge_side(weights, rho, t):
    key = np.round(rho, RHO_DECIMALS)
    groups = {}
    for i, kval in enumerate(key):
        groups.setdefault(float(kval), []).append(i)
    order = sorted(groups.values(), key=lambda ix: ix[0])
    w = np.array([weights[ix].sum() for ix in order])
    r = np.array([rho[ix[0]] for ix in order])
    rows = np.array([(weights[ix, None] * t[ix]).sum(axis=0) / weights[ix].sum() for ix in order])
    return w, r, rows, order


def factorise(rep: FiniteRepresentation) -> FiniteRepresentation:
    """Merge, per group, source points whose ``rho`` agree to 12 decimals.

    Merged weight is the sum of weights; merged row is the weight-averaged
    row. Groups keep their order of first appearance, so an input without
    collisions is returned unchanged.
    """
    w0, r0, t0, o0 = _merge_side(rep.s0_weights, rep.rho_s0, rep.t0)
    w1, r1, t1, o1 = _merge_side(rep.s1_weights, rep.rho_s1, rep.t1)
    if len(o0) == rep.s0_weights.size and len(o1) == rep.s1_weights.size:
        return rep
    return FiniteRepresentation(rep.alpha0, w0, w1, r0, r1, t0, t1)


def factorisation_residual(rep: FiniteRepresentation, merged: FiniteRepresentation) -> float:
    """Largest deviation in atom marginals and atom label probabilities between the two."""
    if rep.n_atoms != merged.n_atoms:
        raise ShapeError("representations use different atom spaces")
    a0, a1 = rep.marginals()
    b0, b1 = merged.marginals()
    res = max(np.abs(a0 - b0).max(initial=0.0), np.abs(a1 - b1).max(initial=0.0))
    return float(max(res, np.abs(rep.atom_label_prob() - merged.atom_label_prob()).max(initial=0.0)))


def random_representation(rng: np.random.Generator, n0: int, n1: int, n_atoms: int,
                          sparsity: float = 0.4, rho_collisions: bool = False) -> FiniteRepresentation:
    """Random representation; rows are sparse Dirichlet draws."""

    def rows(n):
        t = rng.dirichlet(np.ones(n_atoms), size=n)
        t = t * (rng.random((n, n_atoms)) > sparsity)
        dead = t.sum(axis=1) == 0
        t[dead, rng.integers(n_atoms, size=int(dead.sum()))] = 1.0
        return t / t.sum(axis=1, keepdims=True)

    def rhos(n):
        r = rng.uniform(0, 1, n)
        if rho_collisions and n > 1:
            r = rng.choice(r[: max(1, n // 2)], size=n)
        return r

    return FiniteRepresentation(
        float(rng.uniform(0.2, 0.8)), rng.dirichlet(np.ones(n0)), rng.dirichlet(np.ones(n1)),
        rhos(n0), rhos(n1), rows(n0), rows(n1),
    )


# ---------------------------------------------------------------------------
# two-point representations


@dataclass(frozen=True)
class TwoPointRep:
    """Atoms parented by one pair ``(u, v)``.

    ``w0[j]`` is the group-0 mass ``alpha0 * beta0(u) * r0[u, v, j]`` on atom
    ``j`` and ``w1`` likewise; ``alpha0`` converts masses back to the
    group-conditional marginals needed for the fairness contribution.
    """

    w0: np.ndarray
    w1: np.ndarray
    rho_u: float
    rho_v: float
    alpha0: float = 0.5

    def __post_init__(self):
        w0 = np.asarray(self.w0, dtype=float).ravel()
        w1 = np.asarray(self.w1, dtype=float).ravel()
        if w0.size != w1.size:
            raise ShapeError("w0 and w1 must have equal length")
        if w0.size and min(w0.min(), w1.min()) < 0:
            raise DomainError("masses must be nonnegative")
        if w0.sum() <= 0 and w1.sum() <= 0:
            raise DomainError("a two-point representation needs positive mass")
        for r in (self.rho_u, self.rho_v):
            if not 0.0 <= r <= 1.0:
                raise DomainError("rho must lie in [0, 1]")
        if not 0.0 < self.alpha0 < 1.0:
            raise DomainError("alpha0 must lie in (0, 1)")
        object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "w1", w1)

    @property
    def weight_u(self) -> float:
        return float(self.w0.sum())

    @property
    def weight_v(self) -> float:
        return float(self.w1.sum())


def two_point_from_vars(inst: MifpoInstance, rv: RepresentationVars, u: int, v: int) -> TwoPointRep:
    c0 = inst.alpha0 * inst.beta0[u] * rv.r0[u, v]
    c1 = inst.alpha1 * inst.beta1[v] * rv.r1[v, u]
    return TwoPointRep(c0, c1, float(inst.rho0[u]), float(inst.rho1[v]), inst.alpha0)


def two_point_cost(rep: TwoPointRep, objective="min-error"):
    """``(E_uv, F_uv)``: the pair's error contribution and its TV contribution."""
    kind = ObjectiveKind.parse(objective)
    m = rep.w0 + rep.w1
    live = m > MASS_EPS
    q = (rep.w0[live] * rep.rho_u + rep.w1[live] * rep.rho_v) / m[live]
    E = float(np.sum(m[live] * _h(kind, np.clip(q, 0.0, 1.0))))
    F = 0.5 * float(np.abs(rep.w0 / rep.alpha0 - rep.w1 / (1.0 - rep.alpha0)).sum())
    return E, F


def compress_two_point(rep: TwoPointRep, bins: int) -> TwoPointRep:
    """Merge atoms whose share ``w0 / (w0 + w1)`` falls in the same grid cell.

    The grid has ``bins`` uniform points on ``[0, 1]`` (one point when
    ``bins == 1``); each atom goes to its nearest point, ties to the lower.
    Zero-mass atoms are dropped and occupied cells are emitted in grid order.
    """
    if bins < 1:
        raise DomainError("bins must be >= 1")
    m = rep.w0 + rep.w1
    live = m > 0
    w0, w1 = rep.w0[live], rep.w1[live]
    share = w0 / m[live]
    if bins == 1:
        idx = np.zeros(share.size, dtype=int)
    else:
        idx = np.clip(np.ceil(share * (bins - 1) - 0.5), 0, bins - 1).astype(int)
    cells = np.unique(idx)
    pos = np.searchsorted(cells, idx)
    n0 = np.bincount(pos, weights=w0, minlength=cells.size)
    n1 = np.bincount(pos, weights=w1, minlength=cells.size)
    return TwoPointRep(n0, n1, rep.rho_u, rep.rho_v, rep.alpha0)


def h_modulus(objective, t: float) -> float:
    """Modulus of continuity of ``h``: ``|h(p) - h(q)| <= h_modulus(|p - q|)``."""
    kind = ObjectiveKind.parse(objective)
    t = min(max(float(t), 0.0), 0.5)
    return float(_h(kind, np.array(t)))


def compression_bound(rep: TwoPointRep, bins: int, objective="min-error") -> float:
    """Allowed ``|E_uv change|`` for :func:`compress_two_point`: ``2 (w_u + w_v) eps``.

    ``eps`` is the ``h`` modulus at one grid width ``1 / (bins - 1)``, or at 1
    when there is a single grid point.
    """
    width = 1.0 if bins <= 1 else 1.0 / (bins - 1)
    return 2.0 * (rep.weight_u + rep.weight_v) * h_modulus(objective, width)


def random_two_point(rng: np.random.Generator, n_atoms: int = 100) -> TwoPointRep:
    a0 = float(rng.uniform(0.2, 0.8))
    wu, wv = rng.uniform(0.05, 1.0, 2)
    w0 = a0 * wu * rng.dirichlet(np.ones(n_atoms))
    w1 = (1 - a0) * wv * rng.dirichlet(np.ones(n_atoms))
    return TwoPointRep(w0, w1, float(rng.uniform()), float(rng.uniform()), a0)


# ---------------------------------------------------------------------------
# entropy decomposition


def _xlogx(x: float) -> float:
    return 0.0 if x <= 0.0 else x * math.log(x)


def _binary_entropy(p: float) -> float:
    return -_xlogx(p) - _xlogx(1.0 - p)


def entropy_decomposition_check(a: float, b: float, p_a: float, p_b: float) -> float:
    """Residual between ``(a + b) H(mix)`` and ``-[e(Y=0 mass) + e(Y=1 mass) - e(a + b)]``."""
    if a <= 0 or b <= 0:
        raise DomainError("masses must be positive")
    for p in (p_a, p_b):
        if not 0.0 <= p <= 1.0:
            raise DomainError("probabilities must lie in [0, 1]")
    y1 = a * p_a + b * p_b
    y0 = a * (1 - p_a) + b * (1 - p_b)
    direct = (a + b) * _binary_entropy(min(max(y1 / (a + b), 0.0), 1.0))
    return abs(direct + _xlogx(y0) + _xlogx(y1) - _xlogx(a + b))
