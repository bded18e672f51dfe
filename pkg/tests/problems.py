"""Shared problem instances for the test suite.

Reference solutions come from ``partinv.oracles`` (linear KKT solves) or are
closed-form values checked against the grid oracle in test_oracles.py.
"""
from dataclasses import dataclass

import numpy as np

from partinv import CompositeProblem, DenseMap, L1Norm, Quadratic, ZeroFunction
from partinv.oracles import kkt_linear_solve, random_quadratic_instance

# accepted by test_oracles.py::test_lasso_1d_grid
LASSO_X, LASSO_V = 2.0, 1.0


@dataclass
class Case:
    name: str
    problem: CompositeProblem
    x: np.ndarray
    v: np.ndarray
    ref_tol: float  # accuracy of the reference solution itself


def lasso_1d() -> CompositeProblem:
    return CompositeProblem(Quadratic([[1.0]], [3.0]), L1Norm(1), DenseMap([[1.0]]))


def quadratic_case(seed: int, n: int, m: int) -> Case:
    rng = np.random.default_rng(seed)
    M_A, c_A, M_B, c_B, L = random_quadratic_instance(rng, n, m)
    x, v = kkt_linear_solve(M_A, c_A, M_B, c_B, L)
    prob = CompositeProblem(Quadratic(M_A, c_A), Quadratic(M_B, c_B), DenseMap(L))
    return Case(f"quadratic_{seed}_{n}x{m}", prob, x, v, 1e-10)


def l1_2d_case() -> Case:
    # min 1/2||x||^2 - c.x + 0.5 ||L x||_1 with L invertible; the dual is unique.
    L = np.array([[1.0, 0.5], [-0.3, 1.2]])
    c = np.array([2.0, -1.0])
    prob = CompositeProblem(Quadratic(np.eye(2), c), L1Norm(2, scale=0.5), DenseMap(L))
    # reference from the grid oracle (test_oracles.py::test_l1_2d_grid), refined by hand:
    # both components of Lx are nonzero there, so x = c - 0.5 L^T sign(Lx)
    x = c - 0.5 * L.T @ np.sign(L @ c)
    v = 0.5 * np.sign(L @ x)
    return Case("l1_2d", prob, x, v, 1e-12)


def regression_set() -> list[Case]:
    cases = [
        Case("lasso_1d", lasso_1d(), np.array([LASSO_X]), np.array([LASSO_V]), 0.0),
        Case(
            "b_zero",
            CompositeProblem(Quadratic([[1.0]], [5.0]), ZeroFunction(1), DenseMap([[2.5]])),
            np.array([5.0]),
            np.array([0.0]),
            0.0,
        ),
        l1_2d_case(),
    ]
    cases += [quadratic_case(s, n, m) for s, (n, m) in enumerate([(3, 2), (2, 5), (6, 6), (8, 3)])]
    return cases


def random_composite(rng: np.random.Generator) -> CompositeProblem:
    """Random problem mixing nonsmooth and smooth catalog operators."""
    from partinv import Box, EuclideanBall

    n = int(rng.integers(1, 8))
    m = int(rng.integers(1, 8))
    G = rng.standard_normal((n, n))
    kind_a = rng.integers(3)
    if kind_a == 0:
        A = Quadratic(G.T @ G / n + 0.1 * np.eye(n), rng.standard_normal(n))
    elif kind_a == 1:
        A = L1Norm(n, scale=rng.uniform(0.1, 1))
    else:
        A = EuclideanBall(rng.standard_normal(n), rng.uniform(0.5, 2))
    kind_b = rng.integers(3)
    if kind_b == 0:
        B = L1Norm(m, scale=rng.uniform(0.1, 1))
    elif kind_b == 1:
        lo = rng.uniform(-1, 0, m)
        B = Box(lo, lo + rng.uniform(0.1, 2, m))
    else:
        H = rng.standard_normal((m, m))
        B = Quadratic(H.T @ H / m, rng.standard_normal(m))
    L = DenseMap(rng.standard_normal((m, n)))
    return CompositeProblem(A, B, L)
