"""Maximally monotone operators, represented through their resolvents.

Every operator here exposes ``resolve(z) = (Id + A)^-1 z`` at unit step.
Proximable convex functions form a small catalog (``prox_f = J_{df}``);
the remaining classes build new operators from old ones: input shifts,
graph shifts, inverses, blockwise products and partial inverses with
respect to a subspace.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError
from .linops import GraphProjector, as_vector

__all__ = [
    "MonotoneOp",
    "ProxOperator",
    "ZeroFunction",
    "L1Norm",
    "Quadratic",
    "Box",
    "EuclideanBall",
    "AffineSet",
    "LinearMonotone",
    "SubspaceProjectorPair",
    "resolve",
    "shift_input",
    "shift_graph",
    "inverse",
    "product",
    "partial_inverse",
]

_INDICATOR_SLACK = 1e-9


class MonotoneOp:
    """Base class: an operator on ``R^dim`` known through its resolvent."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("operator dimension must be positive")
        self.dim = int(dim)

    def resolve(self, z) -> np.ndarray:
        return self._resolve(as_vector(z, self.dim, "resolvent input"))

    def _resolve(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


def resolve(op: MonotoneOp, z) -> np.ndarray:
    return op.resolve(z)


class ProxOperator(MonotoneOp):
    """Subdifferential of a proper lsc convex function; the resolvent is its prox."""

    kind = "abstract"

    def __init__(self, dim: int, scale: float = 1.0):
        super().__init__(dim)
        scale = float(scale)
        if not (np.isfinite(scale) and scale > 0):
            raise ValueError(f"scale must be positive and finite, got {scale}")
        self.scale = scale

    def prox(self, z) -> np.ndarray:
        return self.resolve(z)

    def value(self, x) -> float:
        """Function value, ``inf`` outside the domain."""
        raise NotImplementedError


class ZeroFunction(ProxOperator):
    kind = "zero"

    def _resolve(self, z):
        return z.copy()

    def value(self, x):
        return 0.0


class L1Norm(ProxOperator):
    """``w * ||x||_1``; the prox is soft thresholding at level ``w``."""

    kind = "l1_norm"

    def _resolve(self, z):
        return np.sign(z) * np.maximum(np.abs(z) - self.scale, 0.0)

    def value(self, x):
        return self.scale * float(np.abs(np.asarray(x, dtype=float)).sum())


class Quadratic(ProxOperator):
    """``w * (x.M x / 2 - c.x)`` for symmetric PSD ``M``.

    Its subdifferential is ``x -> w (M x - c)``.
    """

    kind = "quadratic"

    def __init__(self, M, c=None, scale: float = 1.0):
        M = np.array(M, dtype=float, ndmin=2)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"quadratic M must be square, got shape {M.shape}")
        super().__init__(M.shape[0], scale)
        if not np.all(np.isfinite(M)):
            raise ValueError("quadratic M contains NaN or Inf")
        if not np.allclose(M, M.T, rtol=0, atol=1e-12 * (1 + np.abs(M).max())):
            raise ValueError("quadratic M must be symmetric")
        M = 0.5 * (M + M.T)
        if np.linalg.eigvalsh(M).min() < -1e-12:
            raise ValueError("quadratic M must be positive semidefinite")
        self.M = M
        self.c = np.zeros(self.dim) if c is None else as_vector(c, self.dim, "quadratic c")
        self._factor = scipy.linalg.cho_factor(np.eye(self.dim) + self.scale * M)

    def _resolve(self, z):
        return scipy.linalg.cho_solve(self._factor, z + self.scale * self.c, check_finite=False)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * float(0.5 * x @ self.M @ x - self.c @ x)


class Box(ProxOperator):
    """Indicator of ``[lo, hi]`` (coordinatewise); scale has no effect."""

    kind = "box"

    def __init__(self, lo, hi, scale: float = 1.0):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-D arrays of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds contain NaN")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi coordinatewise")
        super().__init__(lo.shape[0], scale)
        self.lo, self.hi = lo, hi

    def _resolve(self, z):
        return np.clip(z, self.lo, self.hi)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.all(x >= self.lo - _INDICATOR_SLACK) and np.all(x <= self.hi + _INDICATOR_SLACK)
        return 0.0 if inside else np.inf


class EuclideanBall(ProxOperator):
    """Indicator of the closed ball ``||x - center|| <= radius``."""

    kind = "euclidean_ball"

    def __init__(self, center, radius: float, scale: float = 1.0):
        center = as_vector(center, name="ball center")
        super().__init__(center.shape[0], scale)
        radius = float(radius)
        if not (np.isfinite(radius) and radius > 0):
            raise ValueError("ball radius must be positive")
        self.center, self.radius = center, radius

    def _resolve(self, z):
        d = z - self.center
        nd = np.linalg.norm(d)
        if nd <= self.radius:
            return z.copy()
        return self.center + (self.radius / nd) * d

    def value(self, x):
        nd = np.linalg.norm(np.asarray(x, dtype=float) - self.center)
        return 0.0 if nd <= self.radius * (1 + _INDICATOR_SLACK) + _INDICATOR_SLACK else np.inf


class AffineSet(ProxOperator):
    """Indicator of ``{x : E x = d}``; the prox is the orthogonal projection."""

    kind = "affine_set"

    def __init__(self, E, d, scale: float = 1.0):
        E = np.array(E, dtype=float, ndmin=2)
        if E.ndim != 2:
            raise ValueError("affine_set E must be a matrix")
        super().__init__(E.shape[1], scale)
        d = as_vector(d, E.shape[0], "affine_set d")
        pinv = np.linalg.pinv(E)
        x0 = pinv @ d
        resid = np.linalg.norm(E @ x0 - d)
        if resid > 1e-8 * (1 + np.linalg.norm(d)):
            raise ValueError(f"affine_set is empty: d is not in the range of E (residual {resid:.3e})")
        self.E, self.d = E, d
        self._pinv = pinv
        self._x0 = x0

    def _resolve(self, z):
        w = z - self._x0
        return z - self._pinv @ (self.E @ w)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        resid = np.linalg.norm(self.E @ x - self.d)
        return 0.0 if resid <= 1e-8 * (1 + np.linalg.norm(self.d)) else np.inf


class LinearMonotone(MonotoneOp):
    """Affine monotone operator ``x -> M x - c`` (``M + M^T`` PSD, ``M`` need not be symmetric)."""

    kind = "linear"

    def __init__(self, M, c=None):
        M = np.array(M, dtype=float, ndmin=2)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"linear operator matrix must be square, got shape {M.shape}")
        super().__init__(M.shape[0])
        if not np.all(np.isfinite(M)):
            raise ValueError("linear operator matrix contains NaN or Inf")
        if np.linalg.eigvalsh(0.5 * (M + M.T)).min() < -1e-10 * (1 + np.abs(M).max()):
            raise ValueError("linear operator is not monotone (M + M^T has a negative eigenvalue)")
        self.M = M
        self.c = np.zeros(self.dim) if c is None else as_vector(c, self.dim, "linear c")
        self._factor = scipy.linalg.lu_factor(np.eye(self.dim) + M)

    def _resolve(self, z):
        return scipy.linalg.lu_solve(self._factor, z + self.c, check_finite=False)


class _ShiftInput(MonotoneOp):
    # x -> -z + C x  has resolvent  x -> J_C(x + z)
    def __init__(self, op: MonotoneOp, z):
        super().__init__(op.dim)
        self.op = op
        self.z = as_vector(z, op.dim, "shift z")

    def _resolve(self, x):
        return self.op._resolve(x + self.z)


class _ShiftGraph(MonotoneOp):
    # y -> D(y - o)  has resolvent  y -> o + J_D(y - o)
    def __init__(self, op: MonotoneOp, o):
        super().__init__(op.dim)
        self.op = op
        self.o = as_vector(o, op.dim, "shift o")

    def _resolve(self, y):
        return self.o + self.op._resolve(y - self.o)


class _Inverse(MonotoneOp):
    def __init__(self, op: MonotoneOp):
        super().__init__(op.dim)
        self.op = op

    def _resolve(self, z):
        return z - self.op._resolve(z)


class ProductOp(MonotoneOp):
    """Blockwise operator ``(x_1, ..., x_m) -> A_1 x_1 x ... x A_m x_m``."""

    def __init__(self, ops: Sequence[MonotoneOp]):
        ops = tuple(ops)
        if not ops:
            raise ValueError("product needs at least one operator")
        self.ops = ops
        self.block_dims = tuple(op.dim for op in ops)
        self._offsets = np.cumsum((0,) + self.block_dims)
        super().__init__(int(self._offsets[-1]))

    def split(self, z: np.ndarray) -> list[np.ndarray]:
        return [z[a:b] for a, b in zip(self._offsets[:-1], self._offsets[1:])]

    def _resolve(self, z):
        if len(self.ops) == 1:
            return self.ops[0]._resolve(z)
        return np.concatenate([op._resolve(part) for op, part in zip(self.ops, self.split(z))])


class SubspaceProjectorPair:
    """Orthogonal projectors onto a subspace ``V`` of ``R^dim`` and onto ``V^perp``."""

    def __init__(self, dim: int, project_V: Callable, project_Vperp: Callable):
        self.dim = int(dim)
        self._pv = project_V
        self._pvp = project_Vperp

    def project_V(self, z) -> np.ndarray:
        return self._pv(z)

    def project_Vperp(self, z) -> np.ndarray:
        return self._pvp(z)

    @classmethod
    def from_basis(cls, basis, dim: int | None = None) -> "SubspaceProjectorPair":
        """Subspace spanned by the columns of ``basis`` (orthonormalized here)."""
        B = np.asarray(basis, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if dim is None:
            dim = B.shape[0]
        if B.shape[0] != dim:
            raise DimensionError("subspace basis rows", dim, B.shape[0])
        if B.shape[1] == 0:
            return cls.trivial(dim)
        U, s, _ = np.linalg.svd(B, full_matrices=False)
        U = U[:, s > 1e-12 * max(1.0, s.max())]
        P = U @ U.T
        proj_v = lambda z: P @ z
        proj_vp = lambda z: z - P @ z
        return cls(dim, proj_v, proj_vp)

    @classmethod
    def whole(cls, dim: int) -> "SubspaceProjectorPair":
        return cls(dim, lambda z: z.copy(), lambda z: np.zeros_like(z))

    @classmethod
    def trivial(cls, dim: int) -> "SubspaceProjectorPair":
        return cls(dim, lambda z: np.zeros_like(z), lambda z: z.copy())

    @classmethod
    def from_graph(cls, gp: GraphProjector) -> "SubspaceProjectorPair":
        """Graph subspace ``{(x, Lx)}`` acting on concatenated vectors ``(x, y)``."""
        return cls(gp.dim, lambda z: gp.project_flat(z, "V"), lambda z: gp.project_flat(z, "V_perp"))


class _PartialInverse(MonotoneOp):
    # J_{A_V} z = P_V(J_A z) + P_Vperp(z - J_A z)
    def __init__(self, op: MonotoneOp, proj: SubspaceProjectorPair):
        if proj.dim != op.dim:
            raise DimensionError("partial inverse subspace", op.dim, proj.dim)
        super().__init__(op.dim)
        self.op = op
        self.proj = proj

    def _resolve(self, z):
        p = self.op._resolve(z)
        return self.proj.project_V(p) + self.proj.project_Vperp(z - p)


def shift_input(op: MonotoneOp, z) -> MonotoneOp:
    """Operator ``x -> -z + op(x)``."""
    return _ShiftInput(op, z)


def shift_graph(op: MonotoneOp, o) -> MonotoneOp:
    """Operator ``y -> op(y - o)``."""
    return _ShiftGraph(op, o)


def inverse(op: MonotoneOp) -> MonotoneOp:
    """Inverse operator; its resolvent follows from Moreau's decomposition."""
    if isinstance(op, _Inverse):
        return op.op
    return _Inverse(op)


def product(ops: Sequence[MonotoneOp]) -> ProductOp:
    return ProductOp(ops)


def partial_inverse(op: MonotoneOp, proj: SubspaceProjectorPair) -> MonotoneOp:
    """Spingarn's partial inverse of ``op`` with respect to the subspace of ``proj``."""
    return _PartialInverse(op, proj)
