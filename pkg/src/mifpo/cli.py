"""Command-line entry point: ``mifpo {generate,front,check,baseline,oracle}``.

Every command is a pure function of its input files, flags and seed.
Exit codes: 0 success, 1 usage error, 2 data error, 3 solver error,
4 check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import MifpoInstance, ObjectiveKind, random_instance
from .errors import BudgetError, DataError, DomainError, MifpoError, ShapeError, SolverError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _fraction(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("expected a value strictly between 0 and 1")
    return v


def _gamma_list(text: str):
    try:
        vals = sorted({float(t) for t in text.split(",") if t.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"gammas must be a comma-separated list of numbers, got {text!r}") from None
    if not vals or vals[0] < 0 or vals[-1] > 1:
        raise argparse.ArgumentTypeError("gammas must lie in [0, 1]")
    return vals


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _out_dir(args) -> Path:
    d = Path(args.output_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {d}: {exc.strerror}") from None
    return d


def _grid(args):
    from .solver import gamma_grid

    return np.array(args.gammas) if args.gammas is not None else gamma_grid(args.gamma_count)


def _solve_cfg(args):
    from .solver import SolveConfig

    return SolveConfig(restarts=args.restarts, seed=args.seed)


def _load_instance(path: str, objective: Optional[str], atoms: Optional[int]) -> MifpoInstance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    try:
        inst = MifpoInstance.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: invalid instance JSON ({exc})") from None
    if objective is not None:
        inst = inst.with_objective(objective)
    if atoms is not None:
        inst = inst.with_k(atoms)
    return inst


def _instance_from_args(args):
    """Instance from ``--instance`` JSON, or calibrated and quantized from an ``--input`` CSV.

    Returns ``(instance, model, report)``; the last two are ``None`` for JSON input.
    """
    from .pipeline import instance_from_dataset, load_csv

    if args.instance:
        return _load_instance(args.instance, args.objective, args.atoms), None, None
    if not args.input:
        raise UsageError("one of --input or --instance is required")
    ds = load_csv(args.input, args.sensitive_col, args.label_col)
    return instance_from_dataset(ds, args.bins, args.atoms or 10, args.objective or "min-error",
                                 args.train_fraction, args.seed)


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    from .pipeline import SyntheticSpec, separable_spec, synthetic_generate, write_csv

    if args.n < 2:
        raise UsageError("--n must be at least 2")
    if not 0.0 < args.alpha0 < 1.0:
        raise UsageError("--alpha0 must lie in (0, 1)")
    spec = separable_spec(args.alpha0) if args.kind == "separable" else SyntheticSpec(alpha0=args.alpha0)
    ds = synthetic_generate(args.n, args.seed, spec)
    try:
        write_csv(ds, args.output, args.sensitive_col, args.label_col)
    except OSError as exc:
        raise DataError(f"cannot write {args.output}: {exc.strerror}") from None
    print(f"wrote {ds.n} rows to {args.output}")
    return EXIT_OK


def cmd_front(args) -> int:
    from .solver import sweep_front

    inst, model, report = _instance_from_args(args)
    out = _out_dir(args)
    front = sweep_front(inst, _grid(args), _solve_cfg(args))
    _dump(inst.to_dict(), out / "instance.json")
    if model is not None:
        _dump({"model": model.to_dict(), "report": report.to_dict()}, out / "calibration.json")
    (out / "front.json").write_text(front.to_json() + "\n", encoding="utf-8")
    (out / "front.csv").write_text(front.to_csv(), encoding="utf-8")
    for p in front.points:
        print(f"gamma={p.gamma:.4f} error={p.error:.6f}")
    if report is not None:
        print(f"held-out ECE {report.ece:.4f}")
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import SUITES, run_suite

    names = list(SUITES) if args.suite == "all" else [args.suite]
    if any(n not in SUITES for n in names):
        raise UsageError(f"unknown suite {args.suite!r}; choose from all, {', '.join(SUITES)}")
    failed = False
    for name in names:
        res = run_suite(name, args.seed, args.instances)
        print(res.line())
        for msg in res.failures[:10]:
            print(f"  {msg}")
        failed |= not res.ok
    return EXIT_CHECK if failed else EXIT_OK


def cmd_baseline(args) -> int:
    from .fairclass import baseline_against_front

    inst, _, _ = _instance_from_args(args)
    out = _out_dir(args)
    sweep, front, report = baseline_against_front(inst, args.grid_resolution, _grid(args), _solve_cfg(args))
    _dump(sweep.to_dict(), out / "classifier_points.json")
    (out / "front.json").write_text(front.to_json() + "\n", encoding="utf-8")
    _dump(report.to_dict(), out / "dominance.json")
    print(f"{len(sweep.points)} classifier points, {len(sweep.envelope)} on the envelope")
    if report.ok:
        print(f"dominance holds for all {report.checked} points (tol {report.tol:g})")
        return EXIT_OK
    for p, f in report.violations:
        print(f"violation at gamma={p.sp_distance:.6f}: classifier {p.error:.6f} < front {f:.6f} "
              f"(thresholds {p.thresholds[0]:g}, {p.thresholds[1]:g})")
    return EXIT_CHECK


def cmd_oracle(args) -> int:
    from .oracle import OracleBudget, oracle_min
    from .solver import solve_mifpo

    if args.instance:
        inst = _load_instance(args.instance, args.objective, args.atoms)
    else:
        inst = random_instance(np.random.default_rng(args.seed), args.L0, args.L1, args.atoms or 1,
                               args.objective or "min-error")
    budget = OracleBudget(args.max_variables)
    rows, bad = [], False
    for g in _grid(args):
        eo, _ = oracle_min(inst, float(g), budget)
        es, _ = solve_mifpo(inst, float(g), _solve_cfg(args))
        ok = abs(es - eo) <= args.tol and es >= eo - 1e-9
        bad |= not ok
        rows.append({"gamma": float(g), "oracle": eo, "solver": es, "ok": ok})
        print(f"{'ok ' if ok else 'BAD'} gamma={g:.4f} oracle={eo:.9f} solver={es:.9f}")
    if args.output_dir:
        _dump({"instance": inst.to_dict(), "results": rows}, _out_dir(args) / "oracle.json")
    return EXIT_CHECK if bad else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_instance_source(p):
    p.add_argument("--input", help="CSV dataset (header row, comma-separated)")
    p.add_argument("--instance", help="instance JSON instead of a dataset")
    p.add_argument("--sensitive-col", default="a")
    p.add_argument("--label-col", default="y")
    p.add_argument("--bins", type=_positive_int, default=10, help="histogram bins L (default 10)")
    p.add_argument("--train-fraction", type=_fraction, default=0.75)


def _add_solver(p):
    p.add_argument("--atoms", type=_positive_int, default=None, help="atoms k per pair (default 10)")
    p.add_argument("--objective", choices=[k.value for k in ObjectiveKind], default=None)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gammas", type=_gamma_list, default=None, help="comma-separated fairness levels")
    g.add_argument("--gamma-count", type=_positive_int, default=21, help="uniform grid size (default 21)")
    p.add_argument("--restarts", type=_positive_int, default=8)
    p.add_argument("--seed", type=int, required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mifpo", description="Fairness-performance Pareto fronts of labelled data.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True, help="CSV path")
    p.add_argument("--alpha0", type=float, default=0.5)
    p.add_argument("--kind", choices=["logistic", "separable"], default="logistic")
    p.add_argument("--sensitive-col", default="a")
    p.add_argument("--label-col", default="y")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("front", help="calibrate, quantize and sweep the front")
    _add_instance_source(p)
    _add_solver(p)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_front)

    p = sub.add_parser("check", help="run the randomized property suites")
    p.add_argument("--suite", default="all")
    p.add_argument("--instances", type=_positive_int, default=None, help="cases per suite")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("baseline", help="group-threshold classifiers against the front")
    _add_instance_source(p)
    _add_solver(p)
    p.add_argument("--grid-resolution", type=_positive_int, default=11)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("oracle", help="compare the solver with vertex enumeration")
    p.add_argument("--instance", help="instance JSON (otherwise a random one is drawn)")
    p.add_argument("--L0", type=_positive_int, default=1)
    p.add_argument("--L1", type=_positive_int, default=1)
    p.add_argument("--max-variables", type=_positive_int, default=20)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--output-dir", default=None)
    _add_solver(p)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits on usage errors and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mifpo {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ShapeError) as exc:
        print(f"mifpo {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BudgetError as exc:
        print(f"mifpo {args.command}: oracle budget exceeded: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"mifpo {args.command}: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except DomainError as exc:
        print(f"mifpo {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MifpoError as exc:
        print(f"mifpo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
