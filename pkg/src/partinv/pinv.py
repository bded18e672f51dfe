"""Relaxed inexact proximal point step and Spingarn's method of partial inverses."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .diagnostics import DIVERGENCE_BOUND, ConvergenceRecord, Status
from .errors import DimensionError
from .linops import as_vector
from .monotone import MonotoneOp, SubspaceProjectorPair

__all__ = [
    "RelaxationSchedule",
    "ErrorSchedule",
    "SolverConfig",
    "SpingarnState",
    "SpingarnResult",
    "ppa_step",
    "iterate_spingarn",
    "spingarn_run",
]

MEMBERSHIP_TOL = 1e-9


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 < lam < 2.0):
        raise ValueError(f"relaxation parameter must lie in (0, 2), got {lam}")
    return lam


@dataclass(frozen=True)
class RelaxationSchedule:
    """Relaxation parameters ``lambda_n``, each strictly inside (0, 2).

    Constant schedules satisfy ``sum lambda_n (2 - lambda_n) = inf``
    automatically. For a custom rule only the per-step range is checked; the
    divergence of that series is the caller's obligation.
    """

    rule: Callable[[int], float]
    label: str = "custom"

    @classmethod
    def constant(cls, lam: float = 1.0) -> "RelaxationSchedule":
        lam = _check_lambda(lam)
        return cls(lambda n: lam, f"constant({lam!r})")

    @classmethod
    def from_rule(cls, rule: Callable[[int], float], label: str = "custom") -> "RelaxationSchedule":
        return cls(rule, label)

    def __call__(self, n: int) -> float:
        return _check_lambda(self.rule(n))


@dataclass(frozen=True)
class ErrorSchedule:
    """Deterministic error injection with ``||e_n|| = scale / (n + 1)**power``.

    Only meant for testing robustness; ``ErrorSchedule.zero()`` is the
    production default. ``power > 1`` keeps the error norms summable.
    """

    scale: float = 0.0
    power: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("error scale must be nonnegative")
        if self.scale > 0 and self.power <= 1:
            raise ValueError("error power must exceed 1 for a summable schedule")

    @classmethod
    def zero(cls) -> "ErrorSchedule":
        return cls()

    @classmethod
    def summable(cls, scale: float, power: float = 2.0, seed: int = 0) -> "ErrorSchedule":
        return cls(float(scale), float(power), int(seed))

    @property
    def is_zero(self) -> bool:
        return self.scale == 0.0

    def norm(self, n: int) -> float:
        return 0.0 if self.is_zero else self.scale / (n + 1) ** self.power

    def sample(self, n: int, dim: int, stream: int = 0) -> np.ndarray:
        if self.is_zero:
            return np.zeros(dim)
        rng = np.random.default_rng([self.seed, stream, n])
        d = rng.standard_normal(dim)
        return (self.norm(n) / np.linalg.norm(d)) * d


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 100_000
    tol: float = 1e-8
    relaxation: RelaxationSchedule = field(default_factory=RelaxationSchedule.constant)
    errors: ErrorSchedule = field(default_factory=ErrorSchedule.zero)
    history_stride: int = 1

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.history_stride < 1:
            raise ValueError("history_stride must be >= 1")


def ppa_step(resolvent: MonotoneOp, z, lam: float, c=None) -> np.ndarray:
    """One relaxed inexact proximal point update ``z + lam (J z + c - z)``."""
    lam = _check_lambda(lam)
    z = as_vector(z, resolvent.dim, "z")
    c = np.zeros_like(z) if c is None else as_vector(c, resolvent.dim, "c")
    return z + lam * (resolvent._resolve(z) + c - z)


@dataclass
class SpingarnState:
    """Iterate ``(x_n, u_n)`` together with the quantities computed from it."""

    iteration: int
    x: np.ndarray
    u: np.ndarray
    p: np.ndarray
    r: np.ndarray
    e: np.ndarray
    lam: float
    pv_r: np.ndarray
    pvp_p: np.ndarray


@dataclass
class SpingarnResult:
    x: np.ndarray
    u: np.ndarray
    status: Status
    iterations: int
    residual: float
    history: list[ConvergenceRecord]


def iterate_spingarn(
    op: MonotoneOp, proj: SubspaceProjectorPair, x0, u0, config: SolverConfig
) -> Iterator[SpingarnState]:
    """Yield the method-of-partial-inverses iterates indefinitely.

    Each yielded state carries ``x_n, u_n`` and ``p_n, r_n``; the update to
    ``n + 1`` happens when the generator is advanced.
    """
    if proj.dim != op.dim:
        raise DimensionError("subspace dimension", op.dim, proj.dim)
    x = as_vector(x0, op.dim, "x0")
    u = as_vector(u0, op.dim, "u0")
    if np.linalg.norm(proj.project_Vperp(x)) > MEMBERSHIP_TOL * (1 + np.linalg.norm(x)):
        raise ValueError("x0 must lie in V")
    if np.linalg.norm(proj.project_V(u)) > MEMBERSHIP_TOL * (1 + np.linalg.norm(u)):
        raise ValueError("u0 must lie in V^perp")
    n = 0
    while True:
        lam = config.relaxation(n)
        e = config.errors.sample(n, op.dim)
        p = op._resolve(x + u) + e
        r = x + u - p
        pv_r = proj.project_V(r)
        pvp_p = proj.project_Vperp(p)
        yield SpingarnState(n, x, u, p, r, e, lam, pv_r, pvp_p)
        x = x - lam * pv_r
        u = u - lam * pvp_p
        n += 1


def _record(state: SpingarnState, proj: SubspaceProjectorPair) -> ConvergenceRecord:
    x, u = state.x, state.u
    drift = max(
        np.linalg.norm(proj.project_Vperp(x)) / (1 + np.linalg.norm(x)),
        np.linalg.norm(proj.project_V(u)) / (1 + np.linalg.norm(u)),
    )
    q1 = np.linalg.norm(proj.project_V(state.p - state.e) - x)
    q2 = np.linalg.norm(proj.project_Vperp(state.r + state.e) - u)
    return ConvergenceRecord(
        iteration=state.iteration,
        rho_primal=float(np.linalg.norm(state.pv_r)),
        rho_dual=float(np.linalg.norm(state.pvp_p)),
        step_norm=float(state.lam * np.hypot(np.linalg.norm(state.pv_r), np.linalg.norm(state.pvp_p))),
        subspace_drift=float(drift),
        q1=float(q1),
        q2=float(q2),
    )


def spingarn_run(
    op: MonotoneOp, proj: SubspaceProjectorPair, x0, u0, config: SolverConfig | None = None
) -> SpingarnResult:
    """Find ``x in V``, ``u in V^perp`` with ``u in op(x)``.

    Stops once ``max(||P_V r_n||, ||P_Vperp p_n||) <= tol (1 + ||x_n|| + ||u_n||)``.
    A run that exhausts ``max_iter`` (for instance because no solution exists)
    returns status ``max_iter`` with the last iterate.
    """
    config = config or SolverConfig()
    history: list[ConvergenceRecord] = []
    status = Status.MAX_ITER
    for state in iterate_spingarn(op, proj, x0, u0, config):
        n = state.iteration
        size = np.linalg.norm(state.x) + np.linalg.norm(state.u)
        gap = max(np.linalg.norm(state.pv_r), np.linalg.norm(state.pvp_p))
        if not np.isfinite(size) or size > DIVERGENCE_BOUND:
            status = Status.DIVERGED
        elif gap <= config.tol * (1 + size):
            status = Status.CONVERGED
        elif n >= config.max_iter:
            status = Status.MAX_ITER
        else:
            if n % config.history_stride == 0:
                history.append(_record(state, proj))
            continue
        history.append(_record(state, proj))
        break
    residual = float(np.linalg.norm(state.x - op._resolve(state.x + state.u)))
    return SpingarnResult(state.x, state.u, status, n, residual, history)
