"""Linear maps with adjoints, Gram solvers and graph-subspace projectors.

Vectors are plain 1-D ``float64`` numpy arrays. A point of a product space
``H + G`` is passed around as a tuple of such arrays.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError, InvariantViolation, NonFiniteError

__all__ = [
    "as_vector",
    "LinearMap",
    "DenseMap",
    "IdentityMap",
    "ScaledIdentityMap",
    "RowStackMap",
    "ColumnSumMap",
    "GramSolver",
    "GraphProjector",
    "compose_blocks",
    "adjoint_consistency_check",
]


def as_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce ``v`` to a finite 1-D float array, optionally checking its length."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(name, dim, arr.shape[0])
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return arr


class LinearMap:
    """Bounded linear operator ``R^n -> R^m`` together with its adjoint.

    Subclasses implement ``matvec`` and ``rmatvec`` without input checks;
    :meth:`apply` is the validated entry point.
    """

    kind = "abstract"

    def __init__(self, domain_dim: int, codomain_dim: int):
        if domain_dim < 1 or codomain_dim < 1:
            raise ValueError("map dimensions must be positive")
        self.domain_dim = int(domain_dim)
        self.codomain_dim = int(codomain_dim)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply(self, v, adjoint: bool = False) -> np.ndarray:
        """Return ``L v``, or ``L* v`` when ``adjoint`` is set."""
        if adjoint:
            return self.rmatvec(as_vector(v, self.codomain_dim, "adjoint input"))
        return self.matvec(as_vector(v, self.domain_dim, "input"))

    def normal_matrix(self, side: str) -> np.ndarray:
        """Dense ``L* L`` (side ``"primal"``) or ``L L*`` (side ``"dual"``).

        The default probes the composition column by column, so the map itself
        is never materialized.
        """
        if side == "primal":
            n = self.domain_dim
            cols = [self.rmatvec(self.matvec(e)) for e in np.eye(n)]
        elif side == "dual":
            n = self.codomain_dim
            cols = [self.matvec(self.rmatvec(e)) for e in np.eye(n)]
        else:
            raise ValueError(f"side must be 'primal' or 'dual', got {side!r}")
        return np.column_stack(cols)

    def __repr__(self):
        return f"{type(self).__name__}({self.domain_dim} -> {self.codomain_dim})"


class DenseMap(LinearMap):
    kind = "dense-matrix"

    def __init__(self, matrix):
        mat = np.array(matrix, dtype=float, ndmin=2)
        if mat.ndim != 2:
            raise ValueError(f"matrix must be two-dimensional, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise NonFiniteError("matrix contains NaN or Inf")
        super().__init__(mat.shape[1], mat.shape[0])
        mat.setflags(write=False)
        self.matrix = mat

    def matvec(self, v):
        return self.matrix @ v

    def rmatvec(self, v):
        return self.matrix.T @ v

    def normal_matrix(self, side):
        if side == "primal":
            return self.matrix.T @ self.matrix
        if side == "dual":
            return self.matrix @ self.matrix.T
        return super().normal_matrix(side)


class ScaledIdentityMap(LinearMap):
    kind = "scaled-identity"

    def __init__(self, dim: int, scale: float):
        super().__init__(dim, dim)
        scale = float(scale)
        if not np.isfinite(scale):
            raise NonFiniteError("scale must be finite")
        self.scale = scale

    def matvec(self, v):
        return self.scale * v

    rmatvec = matvec

    def normal_matrix(self, side):
        if side not in ("primal", "dual"):
            return super().normal_matrix(side)
        return self.scale**2 * np.eye(self.domain_dim)


class IdentityMap(ScaledIdentityMap):
    kind = "identity"

    def __init__(self, dim: int):
        super().__init__(dim, 1.0)

    def matvec(self, v):
        return v.copy()

    rmatvec = matvec


class RowStackMap(LinearMap):
    """``x -> (L_1 x, ..., L_m x)``; the adjoint sums ``L_i* y_i``."""

    kind = "row-stack"

    def __init__(self, children: Sequence[LinearMap]):
        children = tuple(children)
        if not children:
            raise ValueError("row_stack needs at least one map")
        n = children[0].domain_dim
        for i, c in enumerate(children):
            if c.domain_dim != n:
                raise DimensionError(f"row_stack map {i} domain", n, c.domain_dim)
        self.children = children
        self.block_dims = tuple(c.codomain_dim for c in children)
        self._offsets = np.cumsum((0,) + self.block_dims)
        super().__init__(n, int(self._offsets[-1]))

    def split(self, y: np.ndarray) -> list[np.ndarray]:
        return [y[a:b] for a, b in zip(self._offsets[:-1], self._offsets[1:])]

    def matvec(self, v):
        if len(self.children) == 1:
            return self.children[0].matvec(v)
        return np.concatenate([c.matvec(v) for c in self.children])

    def rmatvec(self, v):
        if len(self.children) == 1:
            return self.children[0].rmatvec(v)
        parts = self.split(v)
        out = self.children[0].rmatvec(parts[0])
        for c, p in zip(self.children[1:], parts[1:]):
            out = out + c.rmatvec(p)
        return out

    def normal_matrix(self, side):
        if side == "primal":
            return sum(c.normal_matrix("primal") for c in self.children)
        if len(self.children) == 1:
            return self.children[0].normal_matrix(side)
        return super().normal_matrix(side)


class ColumnSumMap(LinearMap):
    """``(x_1, ..., x_m) -> sum_i L_i x_i``; the adjoint is ``y -> (L_i* y)``."""

    kind = "column-sum"

    def __init__(self, children: Sequence[LinearMap]):
        children = tuple(children)
        if not children:
            raise ValueError("column_sum needs at least one map")
        m = children[0].codomain_dim
        for i, c in enumerate(children):
            if c.codomain_dim != m:
                raise DimensionError(f"column_sum map {i} codomain", m, c.codomain_dim)
        self.children = children
        self.block_dims = tuple(c.domain_dim for c in children)
        self._offsets = np.cumsum((0,) + self.block_dims)
        super().__init__(int(self._offsets[-1]), m)

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        return [x[a:b] for a, b in zip(self._offsets[:-1], self._offsets[1:])]

    def matvec(self, v):
        if len(self.children) == 1:
            return self.children[0].matvec(v)
        parts = self.split(v)
        out = self.children[0].matvec(parts[0])
        for c, p in zip(self.children[1:], parts[1:]):
            out = out + c.matvec(p)
        return out

    def rmatvec(self, v):
        if len(self.children) == 1:
            return self.children[0].rmatvec(v)
        return np.concatenate([c.rmatvec(v) for c in self.children])

    def normal_matrix(self, side):
        if side == "dual":
            return sum(c.normal_matrix("dual") for c in self.children)
        if len(self.children) == 1:
            return self.children[0].normal_matrix(side)
        return super().normal_matrix(side)


def compose_blocks(maps: Sequence[LinearMap], mode: str) -> LinearMap:
    """Stack maps sharing a domain (``"row_stack"``) or sum maps sharing a codomain (``"column_sum"``)."""
    if mode == "row_stack":
        return RowStackMap(maps)
    if mode == "column_sum":
        return ColumnSumMap(maps)
    raise ValueError(f"unknown block mode {mode!r}")


class GramSolver:
    """Cached Cholesky solve of ``(Id + L*L) z = w`` or ``(Id + LL*) z = w``.

    The Gram matrix has all eigenvalues >= 1, so the factorization exists for
    every finite map.
    """

    def __init__(self, map: LinearMap, side: str = "primal"):
        if side not in ("primal", "dual"):
            raise ValueError(f"side must be 'primal' or 'dual', got {side!r}")
        self.map = map
        self.side = side
        self.dim = map.domain_dim if side == "primal" else map.codomain_dim
        gram = np.eye(self.dim) + map.normal_matrix(side)
        try:
            self._factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise InvariantViolation(f"Gram factorization failed: {exc}") from exc

    def solve(self, w) -> np.ndarray:
        return self._solve(as_vector(w, self.dim, "Gram right-hand side"))

    def _solve(self, w: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self._factor, w, check_finite=False)

    def gram_apply(self, z: np.ndarray) -> np.ndarray:
        """Multiply by the (unfactored) Gram operator, for residual checks."""
        L = self.map
        if self.side == "primal":
            return z + L.rmatvec(L.matvec(z))
        return z + L.matvec(L.rmatvec(z))


class GraphProjector:
    """Projectors onto ``V = {(x, y): Lx = y}`` and ``V^perp = {(u, v): u = -L*v}``.

    With ``side="primal"`` the projections go through ``Q = (Id + L*L)^-1``,
    with ``side="dual"`` through ``R = (Id + LL*)^-1``. By default the side
    with the smaller Gram matrix is used.
    """

    def __init__(self, map: LinearMap, side: str | None = None):
        if side is None:
            side = "primal" if map.domain_dim <= map.codomain_dim else "dual"
        self.map = map
        self.gram = GramSolver(map, side)
        self.side = side
        self.dim = map.domain_dim + map.codomain_dim

    def project(self, point, onto: str = "V"):
        x, y = point
        L = self.map
        x = as_vector(x, L.domain_dim, "x block")
        y = as_vector(y, L.codomain_dim, "y block")
        if onto not in ("V", "V_perp"):
            raise ValueError(f"onto must be 'V' or 'V_perp', got {onto!r}")
        if self.side == "primal":
            a = self.gram._solve(x + L.rmatvec(y))
            La = L.matvec(a)
            if onto == "V":
                return a, La
            return x - a, y - La
        b = self.gram._solve(L.matvec(x) - y)
        Lb = L.rmatvec(b)
        if onto == "V":
            return x - Lb, y + b
        return Lb, -b

    def project_flat(self, z: np.ndarray, onto: str = "V") -> np.ndarray:
        n = self.map.domain_dim
        return np.concatenate(self.project((z[:n], z[n:]), onto))


def adjoint_consistency_check(map: LinearMap, trials: int = 10, seed: int = 0) -> float:
    """Largest relative gap between ``<Lx, y>`` and ``<x, L*y>`` over random probes."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(map.domain_dim)
        y = rng.standard_normal(map.codomain_dim)
        Lx = map.matvec(x)
        Lty = map.rmatvec(y)
        scale = np.linalg.norm(Lx) * np.linalg.norm(y) + np.linalg.norm(x) * np.linalg.norm(Lty)
        gap = abs(Lx @ y - x @ Lty)
        if scale > 0:
            worst = max(worst, gap / scale)
        else:
            worst = max(worst, gap)
    return worst
