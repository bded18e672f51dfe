"""Primal-dual methods of partial inverses for ``0 in Ax + L* B L x``.

The Q-form applies ``(Id + L*L)^-1`` each iteration, the R-form applies
``(Id + LL*)^-1``. Both are the method of partial inverses run on the
product operator ``(x, y) -> Ax x By`` and the graph subspace of ``L``, so
they generate the same iterates. The multi-operator, structured
minimization and coupled problems are solved by reducing them to a single
composite problem.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .diagnostics import ConvergenceRecord, Status, _kkt, should_stop
from .errors import DimensionError
from .linops import ColumnSumMap, GramSolver, LinearMap, RowStackMap, as_vector
from .monotone import MonotoneOp, ProductOp, ProxOperator, shift_graph, shift_input
from .pinv import SolverConfig

__all__ = [
    "CompositeProblem",
    "PrimalBlock",
    "MultiPrimalProblem",
    "CoupledBlock",
    "CoupledProblem",
    "PDState",
    "PrimalDualSolution",
    "iterate_q_form",
    "iterate_r_form",
    "solve_q_form",
    "solve_r_form",
    "solve_composite",
    "solve_multi_primal",
    "solve_multi_min",
    "solve_coupled",
]

logger = logging.getLogger(__name__)

REPROJECT_THRESHOLD = 1e-6


@dataclass(frozen=True)
class CompositeProblem:
    A: MonotoneOp
    B: MonotoneOp
    L: LinearMap

    def __post_init__(self):
        if self.A.dim != self.L.domain_dim:
            raise DimensionError("A (vs domain of L)", self.L.domain_dim, self.A.dim)
        if self.B.dim != self.L.codomain_dim:
            raise DimensionError("B (vs codomain of L)", self.L.codomain_dim, self.B.dim)

    @property
    def primal_dim(self) -> int:
        return self.L.domain_dim

    @property
    def dual_dim(self) -> int:
        return self.L.codomain_dim


@dataclass(frozen=True)
class PrimalBlock:
    B: MonotoneOp
    o: np.ndarray
    L: LinearMap


@dataclass(frozen=True)
class MultiPrimalProblem:
    """``z in C x + sum_i L_i* B_i(L_i x - o_i)``."""

    C: MonotoneOp
    z: np.ndarray
    blocks: Sequence[PrimalBlock]

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("at least one block is required")
        as_vector(self.z, self.C.dim, "z")
        for i, blk in enumerate(self.blocks):
            if blk.L.domain_dim != self.C.dim:
                raise DimensionError(f"blocks[{i}].L domain", self.C.dim, blk.L.domain_dim)
            if blk.B.dim != blk.L.codomain_dim:
                raise DimensionError(f"blocks[{i}].B", blk.L.codomain_dim, blk.B.dim)
            as_vector(blk.o, blk.L.codomain_dim, f"blocks[{i}].o")

    def reduce(self) -> CompositeProblem:
        A = shift_input(self.C, self.z)
        B = ProductOp([shift_graph(b.B, b.o) for b in self.blocks])
        L = RowStackMap([b.L for b in self.blocks])
        return CompositeProblem(A, B, L)


@dataclass(frozen=True)
class CoupledBlock:
    A: MonotoneOp
    z: np.ndarray
    L: LinearMap


@dataclass(frozen=True)
class CoupledProblem:
    """``z_i in A_i x_i + L_i* D(sum_j L_j x_j - o)`` for every ``i``."""

    D: MonotoneOp
    o: np.ndarray
    blocks: Sequence[CoupledBlock]

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("at least one block is required")
        as_vector(self.o, self.D.dim, "o")
        for i, blk in enumerate(self.blocks):
            if blk.L.codomain_dim != self.D.dim:
                raise DimensionError(f"blocks[{i}].L codomain", self.D.dim, blk.L.codomain_dim)
            if blk.A.dim != blk.L.domain_dim:
                raise DimensionError(f"blocks[{i}].A", blk.L.domain_dim, blk.A.dim)
            as_vector(blk.z, blk.L.domain_dim, f"blocks[{i}].z")

    def reduce(self) -> CompositeProblem:
        A = ProductOp([shift_input(b.A, b.z) for b in self.blocks])
        B = shift_graph(self.D, self.o)
        L = ColumnSumMap([b.L for b in self.blocks])
        return CompositeProblem(A, B, L)


@dataclass
class PDState:
    """Iterate ``(x_n, y_n, u_n, v_n)`` and the auxiliaries of step ``n``.

    ``dx, dy, du, dv`` are the increments that produce iterate ``n + 1``.
    """

    iteration: int
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    s: np.ndarray
    t: np.ndarray
    w: np.ndarray
    lam: float
    dx: np.ndarray
    dy: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    drift: float
    reprojections: int

    def composite(self) -> np.ndarray:
        """``(x_n + u_n, y_n + v_n)``, the proximal-point variable on the product space."""
        return np.concatenate([self.x + self.u, self.y + self.v])


@dataclass
class PrimalDualSolution:
    x: np.ndarray
    v: np.ndarray
    status: Status
    iterations: int
    rho_primal: float
    rho_dual: float
    history: list[ConvergenceRecord] = field(default_factory=list)
    x_blocks: list[np.ndarray] | None = None
    v_blocks: list[np.ndarray] | None = None
    objective: float | None = None
    reprojections: int = 0

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def _initial(problem: CompositeProblem, x0, v0):
    L = problem.L
    x = np.zeros(L.domain_dim) if x0 is None else as_vector(x0, L.domain_dim, "x0")
    v = np.zeros(L.codomain_dim) if v0 is None else as_vector(v0, L.codomain_dim, "v0")
    return x, L.matvec(x), -L.rmatvec(v), v


def _drift(L, x, y, u, v) -> float:
    dy = np.linalg.norm(y - L.matvec(x)) / (1 + np.linalg.norm(y))
    du = np.linalg.norm(u + L.rmatvec(v)) / (1 + np.linalg.norm(u))
    return float(max(dy, du))


def _iterate(problem: CompositeProblem, x0, v0, config: SolverConfig, side: str, gram: GramSolver | None):
    A, B, L = problem.A, problem.B, problem.L
    if gram is None:
        gram = GramSolver(L, side)
    elif gram.side != side or gram.map is not L:
        raise ValueError(f"gram solver must be the {side} side of the problem's L")
    solve = gram._solve
    errors = config.errors
    x, y, u, v = _initial(problem, x0, v0)
    drift = _drift(L, x, y, u, v)
    reprojections = 0
    n = 0
    while True:
        lam = config.relaxation(n)
        p = A._resolve(x + u)
        q = B._resolve(y + v)
        if not errors.is_zero:
            p = p + errors.sample(n, L.domain_dim, stream=0)
            q = q + errors.sample(n, L.codomain_dim, stream=1)
        r = x + u - p
        s = y + v - q
        if side == "primal":
            t = solve(r + L.rmatvec(s))
            w = solve(p + L.rmatvec(q))
            Lt = L.matvec(t)
            dx = -lam * t
            dy = -lam * Lt
            du = lam * (w - p)
            dv = lam * (L.matvec(w) - q)
        else:
            t = solve(L.matvec(r) - s)
            w = solve(L.matvec(p) - q)
            dx = lam * (L.rmatvec(t) - r)
            dy = -lam * (t + s)
            du = -lam * L.rmatvec(w)
            dv = lam * w
        yield PDState(n, x, y, u, v, p, q, r, s, t, w, lam, dx, dy, du, dv, drift, reprojections)
        x = x + dx
        y = y + dy
        u = u + du
        v = v + dv
        drift = _drift(L, x, y, u, v)
        if drift > REPROJECT_THRESHOLD:
            logger.warning("iteration %d: subspace drift %.3e, re-projecting y and u", n + 1, drift)
            y = L.matvec(x)
            u = -L.rmatvec(v)
            reprojections += 1
        n += 1


def iterate_q_form(problem: CompositeProblem, x0=None, v0=None, config: SolverConfig | None = None,
                   gram: GramSolver | None = None) -> Iterator[PDState]:
    """Generate the Q-form iterates (uses ``Q = (Id + L*L)^-1``) indefinitely."""
    return _iterate(problem, x0, v0, config or SolverConfig(), "primal", gram)


def iterate_r_form(problem: CompositeProblem, x0=None, v0=None, config: SolverConfig | None = None,
                   gram: GramSolver | None = None) -> Iterator[PDState]:
    """Generate the R-form iterates (uses ``R = (Id + LL*)^-1``) indefinitely."""
    return _iterate(problem, x0, v0, config or SolverConfig(), "dual", gram)


def _asymptotics(state: PDState, side: str, L: LinearMap) -> tuple[float, float]:
    # zero-error form of ||x_n - w_n|| and ||u_n - r_n + t_n|| in Q-form terms;
    # for the R-form, Q(r + L*s) = r - L*t and Q(p + L*q) = p - L*w
    if side == "primal":
        qt, qw = state.t, state.w
    else:
        qt = state.r - L.rmatvec(state.t)
        qw = state.p - L.rmatvec(state.w)
    return float(np.linalg.norm(state.x - qw)), float(np.linalg.norm(state.u - state.r + qt))


def _run(problem: CompositeProblem, states: Iterator[PDState], config: SolverConfig, side: str) -> PrimalDualSolution:
    A, B, L = problem.A, problem.B, problem.L
    history: list[ConvergenceRecord] = []
    for state in states:
        n = state.iteration
        rho_p, rho_d = _kkt(A, B, L, state.x, state.v)
        step = float(np.sqrt(sum(np.dot(d, d) for d in (state.dx, state.dy, state.du, state.dv))))
        q1, q2 = _asymptotics(state, side, L)
        rec = ConvergenceRecord(n, rho_p, rho_d, step, state.drift, q1, q2)
        size = float(np.linalg.norm(state.x) + np.linalg.norm(state.v))
        status = should_stop(rec, config, iterate_norm=size)
        if status is Status.CONTINUE and n >= config.max_iter:
            status = Status.MAX_ITER
        if status is not Status.CONTINUE:
            history.append(rec)
            break
        if n % config.history_stride == 0:
            history.append(rec)
    return PrimalDualSolution(
        x=state.x, v=state.v, status=status, iterations=n, rho_primal=rho_p, rho_dual=rho_d,
        history=history, reprojections=state.reprojections,
    )


def solve_q_form(problem: CompositeProblem, x0=None, v0=None, config: SolverConfig | None = None) -> PrimalDualSolution:
    """Solve the composite inclusion with the Q-form iteration.

    Stops when ``rho_primal + rho_dual <= tol`` where
    ``rho_primal = ||x - J_A(x - L*v)||`` and ``rho_dual = ||Lx - J_B(Lx + v)||``.
    """
    config = config or SolverConfig()
    return _run(problem, iterate_q_form(problem, x0, v0, config), config, "primal")


def solve_r_form(problem: CompositeProblem, x0=None, v0=None, config: SolverConfig | None = None) -> PrimalDualSolution:
    """Same as :func:`solve_q_form` but factorizes ``Id + LL*``."""
    config = config or SolverConfig()
    return _run(problem, iterate_r_form(problem, x0, v0, config), config, "dual")


def choose_form(problem: CompositeProblem) -> str:
    return "q_form" if problem.primal_dim <= problem.dual_dim else "r_form"


def solve_composite(problem: CompositeProblem, x0=None, v0=None, config: SolverConfig | None = None,
                    solver: str = "auto") -> PrimalDualSolution:
    if solver == "auto":
        solver = choose_form(problem)
    if solver == "q_form":
        return solve_q_form(problem, x0, v0, config)
    if solver == "r_form":
        return solve_r_form(problem, x0, v0, config)
    raise ValueError(f"unknown solver {solver!r}")


def _concat_blocks(parts, dims, name):
    if parts is None:
        return None
    if len(parts) != len(dims):
        raise ValueError(f"{name}: expected {len(dims)} blocks, got {len(parts)}")
    return np.concatenate([as_vector(p, d, f"{name}[{i}]") for i, (p, d) in enumerate(zip(parts, dims))])


def solve_multi_primal(problem: MultiPrimalProblem, x0=None, v0=None, config: SolverConfig | None = None,
                       solver: str = "q_form") -> PrimalDualSolution:
    """Solve ``z in Cx + sum_i L_i* B_i(L_i x - o_i)`` and its dual.

    ``v0`` is a list with one initial dual vector per block. On convergence
    ``z - sum_i L_i* v_i in C x`` and ``v_i in B_i(L_i x - o_i)`` hold up to
    the reported residuals.
    """
    reduced = problem.reduce()
    L: RowStackMap = reduced.L
    v0 = _concat_blocks(v0, L.block_dims, "v0")
    sol = solve_composite(reduced, x0, v0, config, solver)
    sol.v_blocks = L.split(sol.v)
    return sol


def _primal_objective(f: ProxOperator, z, blocks, x) -> float:
    val = f.value(x) - float(np.dot(x, z))
    for g, o, Lm in blocks:
        val += g.value(Lm.matvec(x) - o)
    return float(val)


def solve_multi_min(f: ProxOperator, z, blocks: Sequence[tuple[ProxOperator, np.ndarray, LinearMap]],
                    x0=None, v0=None, config: SolverConfig | None = None,
                    solver: str = "q_form") -> PrimalDualSolution:
    """Minimize ``f(x) + sum_i g_i(L_i x - o_i) - <x, z>`` with prox steps.

    ``blocks`` holds ``(g_i, o_i, L_i)`` triples. The returned solution also
    carries the primal objective value at ``x``. If ``z`` is not in the range
    of the subdifferential sum, the run ends without converging.
    """
    z = as_vector(z, f.dim, "z")
    blocks = [(g, as_vector(o, Lm.codomain_dim, f"blocks[{i}].o"), Lm) for i, (g, o, Lm) in enumerate(blocks)]
    problem = MultiPrimalProblem(f, z, [PrimalBlock(g, o, Lm) for g, o, Lm in blocks])
    sol = solve_multi_primal(problem, x0, v0, config, solver)
    sol.objective = _primal_objective(f, z, blocks, sol.x)
    return sol


def solve_coupled(problem: CoupledProblem, x0=None, v0=None, config: SolverConfig | None = None,
                  solver: str = "r_form") -> PrimalDualSolution:
    """Solve the coupled system ``z_i in A_i x_i + L_i* D(sum_j L_j x_j - o)``.

    ``x0`` is a list with one initial vector per block. When every ``A_i`` and
    ``D`` is a prox operator the result also reports
    ``sum_i (f_i(x_i) - <x_i, z_i>) + g(sum_i L_i x_i - o)``.
    """
    reduced = problem.reduce()
    L: ColumnSumMap = reduced.L
    x0 = _concat_blocks(x0, L.block_dims, "x0")
    sol = solve_composite(reduced, x0, v0, config, solver)
    sol.x_blocks = L.split(sol.x)
    if isinstance(problem.D, ProxOperator) and all(isinstance(b.A, ProxOperator) for b in problem.blocks):
        val = problem.D.value(L.matvec(sol.x) - problem.o)
        for blk, xi in zip(problem.blocks, sol.x_blocks):
            val += blk.A.value(xi) - float(np.dot(xi, blk.z))
        sol.objective = float(val)
    return sol
