import io

import numpy as np
import pytest

from partinv import (
    ConvergenceRecord,
    DenseMap,
    SolverConfig,
    Status,
    ZeroFunction,
    kkt_residual,
    should_stop,
    solve_q_form,
    write_history_csv,
)
from partinv.diagnostics import CSV_HEADER

from problems import lasso_1d, regression_set

CFG = SolverConfig()


def test_kkt_examples():
    p = lasso_1d()
    rp, rd = kkt_residual(p.A, p.B, p.L, [2.0], [1.0])
    assert rp <= 1e-12 and rd <= 1e-12
    rp, rd = kkt_residual(p.A, p.B, p.L, [0.0], [0.0])
    assert rp == pytest.approx(1.5, abs=1e-15) and rd == 0.0
    Z = ZeroFunction(2)
    assert kkt_residual(Z, Z, DenseMap(np.eye(2)), [3.0, -1.0], [0.0, 0.0]) == (0.0, 0.0)


def test_kkt_dimension_errors():
    p = lasso_1d()
    with pytest.raises(ValueError):
        kkt_residual(p.A, p.B, p.L, [1.0, 2.0], [0.0])
    with pytest.raises(ValueError):
        kkt_residual(p.A, ZeroFunction(2), p.L, [1.0], [0.0])


def test_should_stop():
    assert should_stop(ConvergenceRecord(0, 0.0, 0.0), CFG) is Status.CONVERGED
    assert should_stop(ConvergenceRecord(0, 1.5, 0.0), CFG) is Status.CONTINUE
    assert should_stop(ConvergenceRecord(0, 1.5, 0.0, step_norm=1e13), CFG) is Status.DIVERGED
    assert should_stop(ConvergenceRecord(0, np.nan, 0.0), CFG) is Status.DIVERGED
    assert should_stop(ConvergenceRecord(0, 1.0, 0.0), CFG, iterate_norm=2e12) is Status.DIVERGED


def _csv(history) -> list[str]:
    buf = io.BytesIO()
    write_history_csv(history, buf)
    return buf.getvalue().decode().splitlines()


def test_csv_single_record():
    lines = _csv([ConvergenceRecord(0, 1.5, 0.0)])
    assert lines == [CSV_HEADER, "0,1.5,0,0,0,0,0"]
    assert CSV_HEADER == "iter,rho_primal,rho_dual,step_norm,subspace_drift,q1,q2"


def test_csv_hundred_records():
    lines = _csv([ConvergenceRecord(i, 1.0 / (i + 1), 0.0) for i in range(100)])
    assert len(lines) == 101
    its = [int(line.split(",")[0]) for line in lines[1:]]
    assert its == sorted(its) and len(set(its)) == 100


def test_csv_precision():
    val = 1.0 / 3.0
    row = _csv([ConvergenceRecord(3, val, np.pi)])[1].split(",")
    assert float(row[1]) == val and float(row[2]) == np.pi


def test_csv_errors():
    with pytest.raises(ValueError):
        _csv([])
    with pytest.raises(ValueError):
        _csv([ConvergenceRecord(2, 0, 0), ConvergenceRecord(2, 0, 0)])


def test_kkt_continuity(rng):
    for case in regression_set():
        A, B, L = case.problem.A, case.problem.B, case.problem.L
        for _ in range(10):
            x = case.x + rng.standard_normal(len(case.x))
            v = case.v + rng.standard_normal(len(case.v))
            dx = 1e-9 * rng.standard_normal(len(x))
            dv = 1e-9 * rng.standard_normal(len(v))
            r0 = np.array(kkt_residual(A, B, L, x, v))
            r1 = np.array(kkt_residual(A, B, L, x + dx, v + dv))
            assert np.abs(r1 - r0).max() <= 1e-6


def test_reported_finals_match_recomputed():
    for case in regression_set():
        sol = solve_q_form(case.problem, config=SolverConfig(tol=1e-10))
        assert sol.converged
        rp, rd = kkt_residual(case.problem.A, case.problem.B, case.problem.L, sol.x, sol.v)
        assert abs(rp - sol.rho_primal) <= 1e-12
        assert abs(rd - sol.rho_dual) <= 1e-12
        assert rp + rd <= 1e-10
