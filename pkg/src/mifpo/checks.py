"""Randomized property suites shared by the ``check`` command and the test suite.

Each suite draws its cases from a seeded generator and returns a
:class:`SuiteResult` with the number of cases and a description of every
failure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .core import (
    ObjectiveKind,
    atom_marginals,
    baseline_error,
    eval_fairness,
    eval_objective,
    pair_cost,
    random_instance,
    random_vars,
    tv_distance,
    tv_equality_witness,
)
from .reprlab import (
    compress_two_point,
    compression_bound,
    entropy_decomposition_check,
    eval_rep,
    factorisation_residual,
    factorise,
    is_invertible,
    make_invertible,
    random_representation,
    random_two_point,
    two_point_cost,
)

KINDS = (ObjectiveKind.MIN_ERROR, ObjectiveKind.ENTROPY)
ORACLE_GAMMAS = (0.0, 0.3, 0.7, 1.0)


@dataclass
class SuiteResult:
    name: str
    total: int = 0
    failures: list = field(default_factory=list)
    worst: float = 0.0  # largest observed violation measure (0 when none)

    @property
    def passed(self) -> int:
        return self.total - len(self.failures)

    @property
    def ok(self) -> bool:
        return not self.failures

    def record(self, ok: bool, message: str, measure: float = 0.0) -> None:
        self.total += 1
        self.worst = max(self.worst, float(measure))
        if not ok:
            self.failures.append(message)

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}: {self.passed}/{self.total} (worst {self.worst:.3e})"


def _g(c0, c1, r0, r1, kind):
    return float(pair_cost(kind, np.array(c0), np.array(c1), r0, r1))


def concavity_suite(rng: np.random.Generator, n: int = 1000, tol: float = 1e-9) -> SuiteResult:
    """Midpoint concavity of the atom cost ``g(c0, c1)`` for both objectives."""
    res = SuiteResult("concavity")
    for i in range(n):
        kind = KINDS[i % 2]
        r0, r1 = rng.uniform(0, 1, 2)
        c, d = rng.uniform(1e-6, 1, 2), rng.uniform(1e-6, 1, 2)
        m = (c + d) / 2
        gap = 0.5 * (_g(*c, r0, r1, kind) + _g(*d, r0, r1, kind)) - _g(*m, r0, r1, kind)
        res.record(gap <= tol, f"case {i}: midpoint gap {gap:.3e}", max(gap, 0.0))
    return res


def tv_witness_suite(rng: np.random.Generator, n: int = 500, tol: float = 1e-12) -> SuiteResult:
    """Witness identity, exact gamma recovery, and the converse TV bound."""
    res = SuiteResult("tv-witness")
    for i in range(n):
        size = int(rng.integers(2, 8))
        mu0, mu1 = rng.dirichlet(np.ones(size)), rng.dirichlet(np.ones(size))
        gamma, phi0, phi1 = tv_equality_witness(mu0, mu1)
        resid = float(np.abs(mu0 + gamma * phi0 - mu1 - gamma * phi1).max())
        sums = max(abs(phi0.sum() - 1), abs(phi1.sum() - 1))
        exact = gamma == tv_distance(mu0, mu1)
        # converse: enlarge gamma with a common direction psi; the identity still holds
        big = gamma + float(rng.uniform(0, 1 - gamma))
        psi = rng.dirichlet(np.ones(size))
        q0 = (gamma * phi0 + (big - gamma) * psi) / big
        q1 = (gamma * phi1 + (big - gamma) * psi) / big
        conv_resid = float(np.abs(mu0 + big * q0 - mu1 - big * q1).max())
        conv = tv_distance(mu0, mu1) <= big + tol
        worst = max(resid, sums, conv_resid)
        res.record(worst <= tol and exact and conv, f"case {i}: residual {worst:.3e}, exact={exact}", worst)
    return res


def entropy_identity_suite(rng: np.random.Generator, n: int = 1000, tol: float = 1e-12) -> SuiteResult:
    res = SuiteResult("entropy-identity")
    cases = [(0.5, 0.5, 0.5, 0.5), (0.3, 0.7, 0.2, 0.9), (0.4, 0.6, 0.0, 1.0), (0.2, 0.8, 1.0, 0.0),
             (1.0, 1.0, 0.0, 0.0), (1.0, 1.0, 1.0, 1.0), (1e-9, 1.0, 0.3, 0.7)]
    cases += [tuple(rng.uniform(1e-6, 1, 2)) + tuple(rng.uniform(0, 1, 2)) for _ in range(n)]
    for i, (a, b, pa, pb) in enumerate(cases):
        r = entropy_decomposition_check(a, b, pa, pb)
        res.record(r <= tol, f"case {i} {(a, b, pa, pb)}: residual {r:.3e}", r)
    return res


def data_processing_suite(rng: np.random.Generator, n: int = 1000, tol: float = 1e-9) -> SuiteResult:
    """Random feasible variables never beat the identity-representation error."""
    res = SuiteResult("data-processing")
    for i in range(n):
        inst = random_instance(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)),
                               int(rng.integers(1, 4)), KINDS[i % 2])
        rv = random_vars(rng, inst)
        gap = baseline_error(inst) - eval_objective(inst, rv)
        mu0, mu1 = atom_marginals(inst, rv)
        tv_gap = abs(eval_fairness(inst, rv) - tv_distance(mu0.ravel(), mu1.ravel()))
        res.record(gap <= tol and tv_gap <= 1e-12, f"case {i}: below baseline by {gap:.3e}", max(gap, tv_gap, 0.0))
    return res


def invertibility_suite(rng: np.random.Generator, n: int = 200, tol: float = 1e-10) -> SuiteResult:
    """Atom splitting reaches an invertible form without raising error or moving fairness."""
    res = SuiteResult("invertibility")
    for i in range(n):
        rep = random_representation(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)),
                                    int(rng.integers(1, 7)))
        out = make_invertible(rep)
        inv = is_invertible(out)
        worst = 0.0
        for kind in KINDS:
            e, f = eval_rep(rep, kind)
            e2, f2 = eval_rep(out, kind)
            worst = max(worst, e2 - e, abs(f2 - f))
        res.record(inv and worst <= tol, f"case {i}: invertible={inv}, worst {worst:.3e}", max(worst, 0.0))
    return res


def factorisation_suite(rng: np.random.Generator, n: int = 200, tol: float = 1e-12) -> SuiteResult:
    res = SuiteResult("factorisation")
    for i in range(n):
        rep = random_representation(rng, int(rng.integers(2, 6)), int(rng.integers(2, 6)),
                                    int(rng.integers(1, 7)), rho_collisions=True)
        merged = factorise(rep)
        worst = factorisation_residual(rep, merged)
        for kind in KINDS:
            e, f = eval_rep(rep, kind)
            e2, f2 = eval_rep(merged, kind)
            worst = max(worst, abs(e2 - e), abs(f2 - f))
        res.record(worst <= tol, f"case {i}: residual {worst:.3e}", worst)
    return res


def compression_suite(rng: np.random.Generator, n: int = 200, bins=(1, 5, 50)) -> SuiteResult:
    """Grid compression of two-point representations: TV never grows, error moves within the bound."""
    res = SuiteResult("compression")
    for i in range(n):
        rep = random_two_point(rng, int(rng.integers(1, 101)))
        for b in bins:
            for kind in KINDS:
                E, F = two_point_cost(rep, kind)
                E2, F2 = two_point_cost(compress_two_point(rep, b), kind)
                bound = compression_bound(rep, b, kind)
                ok = F2 <= F + 1e-12 and abs(E2 - E) <= bound
                res.record(ok, f"case {i} bins={b} {kind.value}: dF={F2 - F:.3e}, |dE|={abs(E2 - E):.3e} > {bound:.3e}",
                           max(F2 - F, abs(E2 - E) / bound if bound > 0 else 0.0, 0.0))
    return res


def oracle_shapes(max_variables: int = 20):
    """``(L0, L1, k)`` with entries at most 2 whose largest layout fits the oracle budget."""
    return [s for s in itertools.product((1, 2), (1, 2), (1, 2)) if 4 * s[0] * s[1] * s[2] <= max_variables]


@dataclass(frozen=True)
class OracleRecord:
    instance: int
    shape: tuple
    objective: str
    gamma: float
    solver: float
    oracle: float
    perfect_fair: Optional[float] = None  # transport solve, only at gamma = 0


def oracle_records(rng: np.random.Generator, n: int = 30, gammas=ORACLE_GAMMAS, restarts: int = 8):
    """Solver, oracle and (at ``gamma = 0``) transport values on ``n`` random tiny instances.

    Instance ``i`` alternates the objective and is solved with seed ``i``.
    """
    from .oracle import OracleBudget, oracle_min
    from .solver import SolveConfig, solve_mifpo, solve_perfect_fair

    budget = OracleBudget()
    shapes = oracle_shapes(budget.max_variables)
    out = []
    for i in range(n):
        shape = shapes[int(rng.integers(len(shapes)))]
        inst = random_instance(rng, *shape, KINDS[i % 2])
        for g in gammas:
            eo, _ = oracle_min(inst, g, budget)
            es, _ = solve_mifpo(inst, g, SolveConfig(restarts=restarts, seed=i))
            ep = solve_perfect_fair(inst)[0] if g == 0.0 else None
            out.append(OracleRecord(i, shape, inst.objective.value, float(g), es, eo, ep))
    return out


def oracle_suite(rng: np.random.Generator, n: int = 30, gammas=ORACLE_GAMMAS, restarts: int = 8,
                 tol: float = 1e-3) -> SuiteResult:
    """Solver against exhaustive vertex enumeration on tiny instances.

    Checks ``|solve - oracle| <= tol``, ``solve >= oracle - 1e-9`` and, at
    ``gamma = 0``, exact agreement of the transport solve with the oracle.
    """
    res = SuiteResult("oracle")
    for r in oracle_records(rng, n, gammas, restarts):
        gap = r.solver - r.oracle
        ok = abs(gap) <= tol and gap >= -1e-9
        worst = abs(gap)
        if r.perfect_fair is not None:
            ok = ok and abs(r.perfect_fair - r.oracle) <= 1e-9
            worst = max(worst, abs(r.perfect_fair - r.oracle))
        res.record(ok, f"instance {r.instance} {r.shape} {r.objective} gamma={r.gamma}: "
                       f"solver {r.solver:.9f}, oracle {r.oracle:.9f}", worst)
    return res


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "concavity": concavity_suite,
    "tv-witness": tv_witness_suite,
    "entropy-identity": entropy_identity_suite,
    "data-processing": data_processing_suite,
    "invertibility": invertibility_suite,
    "factorisation": factorisation_suite,
    "compression": compression_suite,
    "oracle": oracle_suite,
}


def run_suite(name: str, seed: int, instances=None) -> SuiteResult:
    """Run one suite; ``instances`` overrides its default case count."""
    if name not in SUITES:
        raise KeyError(name)
    rng = np.random.default_rng(seed)
    fn = SUITES[name]
    return fn(rng) if instances is None else fn(rng, instances)
