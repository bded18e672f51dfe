"""Randomized invariant suites (also exposed through ``partinv check``)."""
from __future__ import annotations

import numpy as np

from .linops import DenseMap, GraphProjector
from .monotone import (
    AffineSet,
    Box,
    EuclideanBall,
    L1Norm,
    LinearMonotone,
    MonotoneOp,
    Quadratic,
    SubspaceProjectorPair,
    ZeroFunction,
    inverse,
    partial_inverse,
    product,
    shift_graph,
    shift_input,
)
from .oracles import LinearOperatorOracle, partial_inverse_matrix

__all__ = [
    "projection_deviation",
    "partial_inverse_deviation",
    "firm_nonexpansive_deviation",
    "random_catalog",
]


def _projection_trial(L: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    Lmap = DenseMap(L)
    via_q = GraphProjector(Lmap, side="primal")
    via_r = GraphProjector(Lmap, side="dual")
    pv_q = np.concatenate(via_q.project((x, y), "V"))
    pv_r = np.concatenate(via_r.project((x, y), "V"))
    pp_q = np.concatenate(via_q.project((x, y), "V_perp"))
    pp_r = np.concatenate(via_r.project((x, y), "V_perp"))
    z = np.concatenate([x, y])
    n = L.shape[1]
    devs = [
        np.abs(pv_q - pv_r).max(),
        np.abs(pp_q - pp_r).max(),
        np.abs(pv_q + pp_q - z).max(),
        np.abs(via_q.project_flat(pv_q, "V") - pv_q).max(),
        np.abs(L @ pv_q[:n] - pv_q[n:]).max(),
        np.abs(pp_q[:n] + L.T @ pp_q[n:]).max(),
    ]
    # self-adjointness <P a, b> = <a, P b> on an independent probe
    b = np.roll(z, 1) - 0.5
    devs.append(abs(pv_q @ b - z @ via_q.project_flat(b, "V")))
    return float(max(devs))


def projection_deviation(m: int, n: int, trials: int, seed: int = 0) -> float:
    """Worst violation of the graph-projector identities over random ``m x n`` maps."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        L = rng.standard_normal((m, n))
        x = rng.standard_normal(n)
        y = rng.standard_normal(m)
        worst = max(worst, _projection_trial(L, x, y))
    return worst


def partial_inverse_deviation(n: int, trials: int, seed: int = 0, probes: int = 5) -> float:
    """Worst gap between the resolvent formula for ``A_V`` and the graph-built matrix."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        orc = LinearOperatorOracle.random(rng, n)
        J = partial_inverse_matrix(orc)
        op = partial_inverse(LinearMonotone(orc.A_matrix), SubspaceProjectorPair.from_basis(orc.V_basis, n))
        for _ in range(probes):
            z = rng.standard_normal(n)
            worst = max(worst, float(np.abs(op.resolve(z) - J @ z).max()))
    return worst


def random_catalog(rng: np.random.Generator, n: int) -> dict[str, MonotoneOp]:
    """One random instance of every catalog operator and transform on ``R^n``."""
    G = rng.standard_normal((n, n))
    S = rng.standard_normal((n, n))
    lo = rng.uniform(-1, 0, n)
    E = rng.standard_normal((max(1, n // 2), n))
    ops: dict[str, MonotoneOp] = {
        "zero": ZeroFunction(n),
        "l1_norm": L1Norm(n, scale=rng.uniform(0.1, 3)),
        "quadratic": Quadratic(G.T @ G, rng.standard_normal(n), scale=rng.uniform(0.1, 3)),
        "box": Box(lo, lo + rng.uniform(0, 2, n)),
        "euclidean_ball": EuclideanBall(rng.standard_normal(n), rng.uniform(0.1, 2)),
        "affine_set": AffineSet(E, E @ rng.standard_normal(n)),
        "linear": LinearMonotone(G.T @ G / n + (S - S.T), rng.standard_normal(n)),
    }
    base = ops["l1_norm"]
    ops["shift_input"] = shift_input(ops["quadratic"], rng.standard_normal(n))
    ops["shift_graph"] = shift_graph(base, rng.standard_normal(n))
    ops["inverse"] = inverse(ops["linear"])
    if n == 1:
        ops["product"] = product([base])
    else:
        blocks = [L1Norm(1), Box([-1.0], [1.0])]
        if n > 2:
            blocks.append(ZeroFunction(n - 2))
        ops["product"] = product(blocks)
    k = int(rng.integers(0, n + 1))
    ops["partial_inverse"] = partial_inverse(
        ops["euclidean_ball"], SubspaceProjectorPair.from_basis(rng.standard_normal((n, k)), n)
    )
    return ops


def firm_nonexpansive_margin(op: MonotoneOp, z: np.ndarray, zp: np.ndarray) -> float:
    """``<z - z', Jz - Jz'> - ||Jz - Jz'||^2``, nonnegative for a firmly nonexpansive ``J``."""
    d = op.resolve(z) - op.resolve(zp)
    return float((z - zp) @ d - d @ d)


def firm_nonexpansive_deviation(n: int, trials: int, seed: int = 0) -> float:
    """Largest negative margin (reported as a positive number) over the random catalog."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    ops = random_catalog(rng, n)
    for op in ops.values():
        for _ in range(trials):
            z = 3 * rng.standard_normal(n)
            zp = 3 * rng.standard_normal(n)
            worst = max(worst, -firm_nonexpansive_margin(op, z, zp))
    return worst
