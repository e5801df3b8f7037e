"""Model-independent fairness-performance Pareto fronts for binary labels and a binary group."""

from .core import (
    FiniteRepresentation,
    FrontPoint,
    MifpoInstance,
    ObjectiveKind,
    ParetoFront,
    RepresentationVars,
    baseline_error,
    eval_fairness,
    eval_objective,
    h_eval,
    tv_distance,
    tv_equality_witness,
    two_point_instance,
)
from .errors import (
    BudgetError,
    DataError,
    DomainError,
    LpNumericalError,
    MifpoError,
    ShapeError,
    SolverError,
)
from .lp import LpProblem, LpSolution, LpStatus, solve_lp
from .oracle import OracleBudget, oracle_min
from .solver import SolveConfig, gamma_grid, solve_mifpo, solve_perfect_fair, sweep_front

__version__ = "0.1.0"
