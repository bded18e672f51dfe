"""Command-line interface: ``partinv solve | check | compare``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import checks
from .diagnostics import Status, write_history_csv
from .pinv import ErrorSchedule, SolverConfig
from .solvers import (
    iterate_q_form,
    iterate_r_form,
    solve_composite,
    solve_coupled,
    solve_multi_min,
    solve_multi_primal,
)
from .spec_io import SpecError, build_config, build_problem, load_spec

EXIT_CODES = {Status.CONVERGED: 0, Status.MAX_ITER: 2, Status.DIVERGED: 3}
CHECK_TOL = 1e-8
COMPARE_TOL = 1e-9

log = logging.getLogger("partinv")


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 1


def _load(path):
    spec = load_spec(path)
    problem, x0, v0 = build_problem(spec)
    return spec, problem, x0, v0, build_config(spec)


def _run_solver(spec, problem, x0, v0, config):
    if spec.kind == "composite":
        return solve_composite(problem, x0, v0, config, spec.solver)
    if spec.kind == "multi_primal":
        return solve_multi_primal(problem, x0, v0, config, spec.solver)
    if spec.kind == "multi_min":
        f, z, blocks = problem
        return solve_multi_min(f, z, blocks, x0, v0, config, spec.solver)
    return solve_coupled(problem, x0, v0, config, spec.solver)


def _solution_json(sol) -> dict:
    out = {
        "status": str(sol.status),
        "iterations": sol.iterations,
        "rho_primal": sol.rho_primal,
        "rho_dual": sol.rho_dual,
        "x": sol.x.tolist(),
        "v": sol.v.tolist(),
    }
    if sol.x_blocks is not None:
        out["x_blocks"] = [b.tolist() for b in sol.x_blocks]
    if sol.v_blocks is not None:
        out["v_blocks"] = [b.tolist() for b in sol.v_blocks]
    if sol.objective is not None:
        out["objective"] = sol.objective
    return out


def cmd_solve(spec_path, out_csv=None, summary_to_stdout=True, solution_path=None) -> int:
    try:
        spec, problem, x0, v0, config = _load(spec_path)
    except SpecError as exc:
        return _fail(str(exc))
    sol = _run_solver(spec, problem, x0, v0, config)
    if out_csv is not None:
        with open(out_csv, "wb") as fh:
            write_history_csv(sol.history, fh)
    if solution_path is not None:
        with open(solution_path, "w") as fh:
            json.dump(_solution_json(sol), fh, indent=2)
    if summary_to_stdout:
        print(f"{sol.status} {sol.iterations} {sol.rho_primal:.11e} {sol.rho_dual:.11e}")
    return EXIT_CODES[sol.status]


def cmd_check(kind: str, dims, trials: int, seed: int = 0) -> int:
    if trials < 1:
        return _fail("--trials must be >= 1")
    dims = list(dims or [])
    if any(d < 1 for d in dims):
        return _fail("--dims entries must be positive")
    if kind == "projections":
        if len(dims) == 1:
            dims = dims * 2
        if len(dims) != 2:
            return _fail("projections needs --dims M N (rows and columns of L)")
        dev = checks.projection_deviation(dims[0], dims[1], trials, seed)
    elif kind in ("partial_inverse", "firm_nonexpansive"):
        if len(dims) != 1:
            return _fail(f"{kind} needs --dims N")
        fn = checks.partial_inverse_deviation if kind == "partial_inverse" else checks.firm_nonexpansive_deviation
        dev = fn(dims[0], trials, seed)
    else:
        return _fail(f"unknown check kind {kind!r}")
    ok = dev <= CHECK_TOL
    print(f"{kind} max_deviation {dev:.11e} {'ok' if ok else 'FAIL'}")
    return 0 if ok else 1


def compare_forms(problem, x0, v0, config: SolverConfig, iterations: int) -> float:
    """Largest entrywise gap between the Q-form and R-form iterates."""
    config = SolverConfig(
        max_iter=config.max_iter, tol=config.tol, relaxation=config.relaxation,
        errors=ErrorSchedule.zero(), history_stride=config.history_stride,
    )
    qs = iterate_q_form(problem, x0, v0, config)
    rs = iterate_r_form(problem, x0, v0, config)
    worst = 0.0
    for n, (a, b) in enumerate(zip(qs, rs)):
        gap = max(float(np.abs(getattr(a, k) - getattr(b, k)).max()) for k in "xyuv")
        worst = max(worst, gap)
        if n >= iterations:
            break
    return worst


def cmd_compare(spec_path, iterations: int) -> int:
    if iterations < 0:
        return _fail("--iters must be >= 0")
    try:
        spec, problem, x0, v0, config = _load(spec_path)
    except SpecError as exc:
        return _fail(str(exc))
    if spec.kind != "composite":
        return _fail(f"compare needs a problem of kind 'composite', got {spec.kind!r}")
    gap = compare_forms(problem, x0, v0, config, iterations)
    ok = gap <= COMPARE_TOL
    print(f"max_discrepancy {gap:.11e} over {iterations} iterations {'ok' if ok else 'FAIL'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partinv", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver events to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the problem described by a JSON file")
    p.add_argument("spec", help="problem file (JSON)")
    p.add_argument("--out", help="write the convergence history as CSV")
    p.add_argument("--solution", help="write the solution as JSON")
    p.add_argument("--no-summary", action="store_true", help="do not print the summary line")

    p = sub.add_parser("check", help="run a randomized invariant suite")
    p.add_argument("kind", choices=["projections", "partial_inverse", "firm_nonexpansive"])
    p.add_argument("--dims", type=int, nargs="+", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("compare", help="run Q-form and R-form in lockstep")
    p.add_argument("spec", help="problem file of kind 'composite'")
    p.add_argument("--iters", type=int, default=200)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "solve":
        return cmd_solve(args.spec, args.out, not args.no_summary, args.solution)
    if args.command == "check":
        return cmd_check(args.kind, args.dims, args.trials, args.seed)
    return cmd_compare(args.spec, args.iters)


if __name__ == "__main__":
    sys.exit(main())
