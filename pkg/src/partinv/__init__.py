"""Spingarn's method of partial inverses and primal-dual splitting for composite monotone inclusions."""
from .diagnostics import ConvergenceRecord, Status, kkt_residual, should_stop, write_history_csv
from .errors import DimensionError, InvariantViolation, NonFiniteError
from .linops import (
    ColumnSumMap,
    DenseMap,
    GramSolver,
    GraphProjector,
    IdentityMap,
    LinearMap,
    RowStackMap,
    ScaledIdentityMap,
    adjoint_consistency_check,
    compose_blocks,
)
from .monotone import (
    AffineSet,
    Box,
    EuclideanBall,
    L1Norm,
    LinearMonotone,
    MonotoneOp,
    ProxOperator,
    Quadratic,
    SubspaceProjectorPair,
    ZeroFunction,
    inverse,
    partial_inverse,
    product,
    shift_graph,
    shift_input,
)
from .pinv import ErrorSchedule, RelaxationSchedule, SolverConfig, ppa_step, spingarn_run
from .solvers import (
    CompositeProblem,
    CoupledBlock,
    CoupledProblem,
    MultiPrimalProblem,
    PrimalBlock,
    PrimalDualSolution,
    solve_coupled,
    solve_multi_min,
    solve_multi_primal,
    solve_q_form,
    solve_r_form,
)

__version__ = "0.1.0"
