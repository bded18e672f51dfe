"""Independent reference computations used to check the solvers.

Nothing here calls the resolvent, projector or solver code paths: partial
inverses are built from their graph, minimizers are found by exhaustive
grid search and quadratic problems are solved as one linear system.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .linops import LinearMap

__all__ = [
    "LinearOperatorOracle",
    "partial_inverse_matrix",
    "grid_argmin",
    "kkt_linear_solve",
    "dense_matrix",
    "random_quadratic_instance",
]


@dataclass(frozen=True)
class LinearOperatorOracle:
    """Linear monotone operator ``x -> A x`` and an orthonormal basis of a subspace ``V``."""

    A_matrix: np.ndarray
    V_basis: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A_matrix, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A_matrix must be square")
        B = np.asarray(self.V_basis, dtype=float).reshape(n, -1)
        if np.abs(B.T @ B - np.eye(B.shape[1])).max(initial=0.0) > 1e-12:
            raise ValueError("V_basis must be orthonormal")
        if np.linalg.eigvalsh(0.5 * (A + A.T)).min() < -1e-10:
            raise ValueError("A_matrix is not monotone")
        object.__setattr__(self, "A_matrix", A)
        object.__setattr__(self, "V_basis", B)

    @property
    def dim(self) -> int:
        return self.A_matrix.shape[0]

    @property
    def projector(self) -> np.ndarray:
        return self.V_basis @ self.V_basis.T

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, k: int | None = None) -> "LinearOperatorOracle":
        """Random instance: ``G^T G / n + 0.1 Id`` plus a skew part, random ``k``-dim subspace."""
        G = rng.standard_normal((n, n))
        S = rng.standard_normal((n, n))
        A = G.T @ G / n + 0.1 * np.eye(n) + 0.5 * (S - S.T)
        if k is None:
            k = int(rng.integers(0, n + 1))
        if k == 0:
            basis = np.zeros((n, 0))
        else:
            basis, _ = np.linalg.qr(rng.standard_normal((n, k)))
        return cls(A, basis)


def partial_inverse_matrix(o: LinearOperatorOracle) -> np.ndarray:
    """Resolvent matrix of the partial inverse, built from its graph.

    The graph of ``A_V`` is ``{(P x + P' A x, P A x + P' x)}`` with ``P`` the
    projector onto ``V`` and ``P' = Id - P``. Writing it as ``second = M first``
    gives the matrix ``M`` of ``A_V``; the result is ``(Id + M)^-1``.
    """
    n = o.dim
    P = o.projector
    Pp = np.eye(n) - P
    A = o.A_matrix
    first = P + Pp @ A
    second = P @ A + Pp
    if np.linalg.cond(first) > 1e12:
        raise np.linalg.LinAlgError("graph of the partial inverse is numerically not a function")
    M = np.linalg.solve(first.T, second.T).T
    return np.linalg.inv(np.eye(n) + M)


def grid_argmin(objective: Callable[[np.ndarray], np.ndarray], box: Sequence[tuple[float, float]],
                steps: int | Sequence[int]) -> np.ndarray:
    """Exhaustive minimization over a regular grid (one or two dimensions).

    ``objective`` receives a ``(k, d)`` array of points and returns ``k``
    values. Each axis gets ``steps + 1`` equispaced nodes including both ends.
    Ties go to the lexicographically smallest point.
    """
    d = len(box)
    if d not in (1, 2):
        raise ValueError("grid_argmin supports one or two dimensions")
    steps = [int(steps)] * d if np.isscalar(steps) else [int(s) for s in steps]
    if len(steps) != d or min(steps) < 1000:
        raise ValueError("need at least 1000 steps per dimension")
    axes = [np.linspace(lo, hi, s + 1) for (lo, hi), s in zip(box, steps)]
    best_val, best_pt = np.inf, None
    if d == 1:
        chunks = [axes[0][:, None]]
    else:
        rows_per_chunk = max(1, 2_000_000 // axes[1].size)
        chunks = (
            np.column_stack([np.repeat(axes[0][i:i + rows_per_chunk], axes[1].size),
                             np.tile(axes[1], min(rows_per_chunk, axes[0].size - i))])
            for i in range(0, axes[0].size, rows_per_chunk)
        )
    for pts in chunks:
        vals = np.asarray(objective(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("objective returned non-finite values on the grid")
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_pt = vals[j], pts[j].copy()
    return best_pt


def dense_matrix(L: LinearMap | np.ndarray) -> np.ndarray:
    """Materialize a linear map column by column."""
    if isinstance(L, LinearMap):
        return np.column_stack([L.matvec(e) for e in np.eye(L.domain_dim)])
    return np.array(L, dtype=float, ndmin=2)


def kkt_linear_solve(M_A, c_A, M_B, c_B, L) -> tuple[np.ndarray, np.ndarray]:
    """Primal-dual solution when ``A x = M_A x - c_A`` and ``B y = M_B y - c_B``.

    Solves ``(M_A + L^T M_B L) x = c_A + L^T c_B`` and sets
    ``v = M_B L x - c_B``.
    """
    Lm = dense_matrix(L)
    M_A = np.array(M_A, dtype=float, ndmin=2)
    M_B = np.array(M_B, dtype=float, ndmin=2)
    c_A = np.atleast_1d(np.asarray(c_A, dtype=float))
    c_B = np.atleast_1d(np.asarray(c_B, dtype=float))
    H = M_A + Lm.T @ M_B @ Lm
    if np.linalg.cond(H) > 1e12:
        raise np.linalg.LinAlgError("M_A + L^T M_B L is singular")
    x = np.linalg.solve(H, c_A + Lm.T @ c_B)
    v = M_B @ (Lm @ x) - c_B
    stationarity = np.linalg.norm(M_A @ x - c_A + Lm.T @ v)
    if stationarity > 1e-10 * (1 + np.linalg.norm(c_A) + np.linalg.norm(Lm.T @ c_B)):
        raise np.linalg.LinAlgError(f"KKT solve inaccurate (stationarity residual {stationarity:.3e})")
    return x, v


def random_quadratic_instance(rng: np.random.Generator, n: int, m: int):
    """Random ``(M_A, c_A, M_B, c_B, L)`` with ``M_A`` positive definite and ``M_B`` PSD."""
    G = rng.standard_normal((n, n))
    H = rng.standard_normal((m, m))
    M_A = G.T @ G / n + 0.5 * np.eye(n)
    M_B = H.T @ H / m
    L = rng.standard_normal((m, n)) / np.sqrt(max(n, m))
    return M_A, rng.standard_normal(n), M_B, rng.standard_normal(m), L
