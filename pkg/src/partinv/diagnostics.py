"""Residuals, stopping decisions and CSV export of convergence histories."""
from __future__ import annotations

import enum
import math
from dataclasses import astuple, dataclass
from typing import BinaryIO, Iterable

import numpy as np

from .linops import LinearMap, as_vector
from .monotone import MonotoneOp

__all__ = [
    "DIVERGENCE_BOUND",
    "Status",
    "ConvergenceRecord",
    "kkt_residual",
    "should_stop",
    "write_history_csv",
]

DIVERGENCE_BOUND = 1e12

CSV_HEADER = "iter,rho_primal,rho_dual,step_norm,subspace_drift,q1,q2"


class Status(str, enum.Enum):
    CONTINUE = "continue"
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    DIVERGED = "diverged"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ConvergenceRecord:
    """One row of a convergence history.

    ``q1`` and ``q2`` are the asymptotic quantities that the theory drives to
    zero (for the primal-dual solvers: ``||x_n - w_n||`` and
    ``||u_n - r_n + t_n||``).
    """

    iteration: int
    rho_primal: float
    rho_dual: float
    step_norm: float = 0.0
    subspace_drift: float = 0.0
    q1: float = 0.0
    q2: float = 0.0


def kkt_residual(A: MonotoneOp, B: MonotoneOp, L: LinearMap, x, v) -> tuple[float, float]:
    """Distances certifying ``-L*v in A x`` and ``v in B L x``.

    Returns ``(||x - J_A(x - L*v)||, ||Lx - J_B(Lx + v)||)``; both vanish
    exactly at primal-dual solution pairs.
    """
    x = as_vector(x, L.domain_dim, "x")
    v = as_vector(v, L.codomain_dim, "v")
    if A.dim != L.domain_dim:
        raise ValueError(f"A acts on R^{A.dim} but L has domain R^{L.domain_dim}")
    if B.dim != L.codomain_dim:
        raise ValueError(f"B acts on R^{B.dim} but L has codomain R^{L.codomain_dim}")
    return _kkt(A, B, L, x, v)


def _kkt(A, B, L, x, v):
    Lx = L.matvec(x)
    rho_p = float(np.linalg.norm(x - A._resolve(x - L.rmatvec(v))))
    rho_d = float(np.linalg.norm(Lx - B._resolve(Lx + v)))
    return rho_p, rho_d


def should_stop(record: ConvergenceRecord, config, iterate_norm: float = 0.0) -> Status:
    """Decide whether a run is converged, diverged, or should continue."""
    magnitudes = (record.rho_primal, record.rho_dual, record.step_norm, iterate_norm)
    if any(not math.isfinite(m) or m > DIVERGENCE_BOUND for m in magnitudes):
        return Status.DIVERGED
    if record.rho_primal + record.rho_dual <= config.tol:
        return Status.CONVERGED
    return Status.CONTINUE


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_history_csv(history: Iterable[ConvergenceRecord], sink: BinaryIO) -> None:
    """Write ``history`` as CSV (header ``iter,rho_primal,...``) to a binary stream."""
    rows = list(history)
    if not rows:
        raise ValueError("cannot write an empty history")
    lines = [CSV_HEADER]
    last = None
    for rec in rows:
        if last is not None and rec.iteration <= last:
            raise ValueError("history iterations must be strictly increasing")
        last = rec.iteration
        lines.append(",".join(_fmt(f) for f in astuple(rec)))
    sink.write(("\n".join(lines) + "\n").encode("ascii"))
