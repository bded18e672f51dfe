"""JSON problem files: schema, validation and construction of solver inputs.

A problem file is a JSON object whose ``kind`` is one of ``composite``,
``multi_primal``, ``multi_min`` or ``coupled``. Operators and linear maps
are tagged objects (``{"kind": "l1_norm", "dim": 3}``,
``{"kind": "dense", "matrix": [[1, 0], [0, 2]]}``); matrices are arrays of
rows. See README.md for complete examples.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator

from . import linops, monotone
from .pinv import ErrorSchedule, RelaxationSchedule, SolverConfig
from .solvers import CompositeProblem, CoupledBlock, CoupledProblem, MultiPrimalProblem, PrimalBlock

__all__ = ["SpecError", "ProblemSpec", "load_spec", "parse_spec", "dump_spec", "build_config", "build_problem"]

Vec = list[float]
Matrix = list[list[float]]


class SpecError(ValueError):
    """Problem file could not be read, parsed or validated."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True, allow_inf_nan=False)


def _rectangular(m: Matrix) -> Matrix:
    if not m or not m[0]:
        raise ValueError("matrix must have at least one row and one column")
    width = len(m[0])
    for i, row in enumerate(m):
        if len(row) != width:
            raise ValueError(f"matrix row {i} has {len(row)} entries, expected {width}")
    return m


def _square(m: Matrix) -> Matrix:
    _rectangular(m)
    if len(m) != len(m[0]):
        raise ValueError(f"matrix must be square, got {len(m)}x{len(m[0])}")
    return m


# ---- operators -------------------------------------------------------------

class ZeroSpec(_Model):
    kind: Literal["zero"]
    dim: int = Field(gt=0)
    scale: float = Field(1.0, gt=0)

    @property
    def size(self):
        return self.dim


class L1Spec(_Model):
    kind: Literal["l1_norm"]
    dim: int = Field(gt=0)
    scale: float = Field(1.0, gt=0)

    @property
    def size(self):
        return self.dim


class QuadraticSpec(_Model):
    kind: Literal["quadratic"]
    M: Matrix
    c: Optional[Vec] = None
    scale: float = Field(1.0, gt=0)
    _check_M = field_validator("M")(_square)

    @model_validator(mode="after")
    def _c_len(self):
        if self.c is not None and len(self.c) != len(self.M):
            raise ValueError(f"c has length {len(self.c)}, expected {len(self.M)}")
        return self

    @property
    def size(self):
        return len(self.M)


class BoxSpec(_Model):
    kind: Literal["box"]
    lo: Vec = Field(min_length=1)
    hi: Vec = Field(min_length=1)
    scale: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _bounds(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have the same length")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box requires lo <= hi")
        return self

    @property
    def size(self):
        return len(self.lo)


class BallSpec(_Model):
    kind: Literal["euclidean_ball"]
    center: Vec = Field(min_length=1)
    radius: float = Field(gt=0)
    scale: float = Field(1.0, gt=0)

    @property
    def size(self):
        return len(self.center)


class AffineSpec(_Model):
    kind: Literal["affine_set"]
    E: Matrix
    d: Vec
    scale: float = Field(1.0, gt=0)
    _check_E = field_validator("E")(_rectangular)

    @model_validator(mode="after")
    def _d_len(self):
        if len(self.d) != len(self.E):
            raise ValueError(f"d has length {len(self.d)}, expected {len(self.E)}")
        return self

    @property
    def size(self):
        return len(self.E[0])


class LinearSpec(_Model):
    kind: Literal["linear"]
    M: Matrix
    c: Optional[Vec] = None
    _check_M = field_validator("M")(_square)

    @model_validator(mode="after")
    def _c_len(self):
        if self.c is not None and len(self.c) != len(self.M):
            raise ValueError(f"c has length {len(self.c)}, expected {len(self.M)}")
        return self

    @property
    def size(self):
        return len(self.M)


ProxSpec = Annotated[
    Union[ZeroSpec, L1Spec, QuadraticSpec, BoxSpec, BallSpec, AffineSpec], Field(discriminator="kind")
]
OperatorSpec = Annotated[
    Union[ZeroSpec, L1Spec, QuadraticSpec, BoxSpec, BallSpec, AffineSpec, LinearSpec], Field(discriminator="kind")
]


# ---- linear maps -----------------------------------------------------------

class DenseSpec(_Model):
    kind: Literal["dense"]
    matrix: Matrix
    _check = field_validator("matrix")(_rectangular)

    @property
    def shape(self):  # (codomain, domain)
        return len(self.matrix), len(self.matrix[0])


class IdentitySpec(_Model):
    kind: Literal["identity"]
    dim: int = Field(gt=0)

    @property
    def shape(self):
        return self.dim, self.dim


class ScaledIdentitySpec(_Model):
    kind: Literal["scaled_identity"]
    dim: int = Field(gt=0)
    scale: float

    @property
    def shape(self):
        return self.dim, self.dim


MapSpec = Annotated[Union[DenseSpec, IdentitySpec, ScaledIdentitySpec], Field(discriminator="kind")]


# ---- configuration ---------------------------------------------------------

class ErrorsSpec(_Model):
    kind: Literal["zero", "summable"] = "zero"
    scale: float = Field(0.1, ge=0)
    power: float = Field(2.0, gt=1)


class ConfigSpec(_Model):
    lambda_: float = Field(1.0, alias="lambda", gt=0, lt=2)
    tol: float = Field(1e-8, gt=0)
    max_iter: int = Field(100_000, ge=1)
    seed: int = 0
    history_stride: int = Field(1, ge=1)
    errors: ErrorsSpec = ErrorsSpec()
    x0: Optional[Union[Vec, list[Vec]]] = None
    v0: Optional[Union[Vec, list[Vec]]] = None


Solver = Literal["q_form", "r_form", "auto"]


def _mismatch(field: str, expected: int, actual: int, source: str = "") -> ValueError:
    suffix = f" ({source})" if source else ""
    return ValueError(f"{field}: dimension {actual} does not match expected {expected}{suffix}")


def _check_init(vec, dim: int, field: str):
    if vec is None:
        return
    if not isinstance(vec, list) or any(isinstance(t, list) for t in vec):
        raise ValueError(f"{field}: expected a flat vector")
    if len(vec) != dim:
        raise _mismatch(field, dim, len(vec))


def _check_init_blocks(vecs, dims: list[int], field: str):
    if vecs is None:
        return
    if len(vecs) != len(dims) or any(not isinstance(v, list) for v in vecs):
        raise ValueError(f"{field}: expected a list of {len(dims)} vectors")
    for i, (v, d) in enumerate(zip(vecs, dims)):
        _check_init(v, d, f"{field}[{i}]")


# ---- problems --------------------------------------------------------------

class CompositeSpec(_Model):
    kind: Literal["composite"]
    A: OperatorSpec
    B: OperatorSpec
    L: MapSpec
    solver: Solver = "auto"
    config: ConfigSpec = ConfigSpec()

    @model_validator(mode="after")
    def _dims(self):
        m, n = self.L.shape
        if self.A.size != n:
            raise _mismatch("A", n, self.A.size, "columns of L")
        if self.B.size != m:
            raise _mismatch("B", m, self.B.size, "rows of L")
        _check_init(self.config.x0, n, "config.x0")
        _check_init(self.config.v0, m, "config.v0")
        return self


class PrimalBlockSpec(_Model):
    B: OperatorSpec
    o: Vec
    L: MapSpec


class MultiPrimalSpec(_Model):
    kind: Literal["multi_primal"]
    C: OperatorSpec
    z: Vec
    blocks: list[PrimalBlockSpec] = Field(min_length=1)
    solver: Solver = "q_form"
    config: ConfigSpec = ConfigSpec()

    @model_validator(mode="after")
    def _dims(self):
        n = self.C.size
        if len(self.z) != n:
            raise _mismatch("z", n, len(self.z))
        for i, blk in enumerate(self.blocks):
            m, nd = blk.L.shape
            if nd != n:
                raise _mismatch(f"blocks[{i}].L", n, nd)
            if blk.B.size != m:
                raise _mismatch(f"blocks[{i}].B", m, blk.B.size)
            if len(blk.o) != m:
                raise _mismatch(f"blocks[{i}].o", m, len(blk.o))
        _check_init(self.config.x0, n, "config.x0")
        _check_init_blocks(self.config.v0, [b.L.shape[0] for b in self.blocks], "config.v0")
        return self


class MinBlockSpec(_Model):
    g: ProxSpec
    o: Vec
    L: MapSpec


class MultiMinSpec(_Model):
    kind: Literal["multi_min"]
    f: ProxSpec
    z: Vec
    blocks: list[MinBlockSpec] = Field(min_length=1)
    solver: Solver = "q_form"
    config: ConfigSpec = ConfigSpec()

    @model_validator(mode="after")
    def _dims(self):
        n = self.f.size
        if len(self.z) != n:
            raise _mismatch("z", n, len(self.z))
        for i, blk in enumerate(self.blocks):
            m, nd = blk.L.shape
            if nd != n:
                raise _mismatch(f"blocks[{i}].L", n, nd)
            if blk.g.size != m:
                raise _mismatch(f"blocks[{i}].g", m, blk.g.size)
            if len(blk.o) != m:
                raise _mismatch(f"blocks[{i}].o", m, len(blk.o))
        _check_init(self.config.x0, n, "config.x0")
        _check_init_blocks(self.config.v0, [b.L.shape[0] for b in self.blocks], "config.v0")
        return self


class CoupledBlockSpec(_Model):
    A: OperatorSpec
    z: Vec
    L: MapSpec


class CoupledSpec(_Model):
    kind: Literal["coupled"]
    D: OperatorSpec
    o: Vec
    blocks: list[CoupledBlockSpec] = Field(min_length=1)
    solver: Solver = "r_form"
    config: ConfigSpec = ConfigSpec()

    @model_validator(mode="after")
    def _dims(self):
        m = self.D.size
        if len(self.o) != m:
            raise _mismatch("o", m, len(self.o))
        for i, blk in enumerate(self.blocks):
            mc, n = blk.L.shape
            if mc != m:
                raise _mismatch(f"blocks[{i}].L", m, mc)
            if blk.A.size != n:
                raise _mismatch(f"blocks[{i}].A", n, blk.A.size)
            if len(blk.z) != n:
                raise _mismatch(f"blocks[{i}].z", n, len(blk.z))
        _check_init_blocks(self.config.x0, [b.L.shape[1] for b in self.blocks], "config.x0")
        _check_init(self.config.v0, m, "config.v0")
        return self


ProblemSpec = Annotated[Union[CompositeSpec, MultiPrimalSpec, MultiMinSpec, CoupledSpec], Field(discriminator="kind")]
_adapter = TypeAdapter(ProblemSpec)


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_spec(data) -> ProblemSpec:
    """Validate a decoded JSON object (or a JSON string)."""
    try:
        if isinstance(data, (str, bytes)):
            return _adapter.validate_json(data)
        return _adapter.validate_python(data)
    except ValidationError as exc:
        raise SpecError(_format_validation(exc)) from None


def load_spec(path) -> ProblemSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read problem file {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from None
    return parse_spec(data)


def dump_spec(spec: ProblemSpec) -> str:
    return _adapter.dump_json(spec, by_alias=True, exclude_none=True).decode()


# ---- construction ----------------------------------------------------------

def build_operator(spec, field: str) -> monotone.MonotoneOp:
    try:
        if spec.kind == "zero":
            return monotone.ZeroFunction(spec.dim, spec.scale)
        if spec.kind == "l1_norm":
            return monotone.L1Norm(spec.dim, spec.scale)
        if spec.kind == "quadratic":
            return monotone.Quadratic(spec.M, spec.c, spec.scale)
        if spec.kind == "box":
            return monotone.Box(spec.lo, spec.hi, spec.scale)
        if spec.kind == "euclidean_ball":
            return monotone.EuclideanBall(spec.center, spec.radius, spec.scale)
        if spec.kind == "affine_set":
            return monotone.AffineSet(spec.E, spec.d, spec.scale)
        if spec.kind == "linear":
            return monotone.LinearMonotone(spec.M, spec.c)
    except ValueError as exc:
        raise SpecError(f"{field}: {exc}") from None
    raise SpecError(f"{field}: unknown operator kind {spec.kind!r}")


def build_map(spec, field: str) -> linops.LinearMap:
    if spec.kind == "dense":
        return linops.DenseMap(spec.matrix)
    if spec.kind == "identity":
        return linops.IdentityMap(spec.dim)
    if spec.kind == "scaled_identity":
        return linops.ScaledIdentityMap(spec.dim, spec.scale)
    raise SpecError(f"{field}: unknown map kind {spec.kind!r}")


def build_config(spec: ProblemSpec) -> SolverConfig:
    cfg = spec.config
    if cfg.errors.kind == "summable":
        errors = ErrorSchedule.summable(cfg.errors.scale, cfg.errors.power, cfg.seed)
    else:
        errors = ErrorSchedule.zero()
    return SolverConfig(
        max_iter=cfg.max_iter,
        tol=cfg.tol,
        relaxation=RelaxationSchedule.constant(cfg.lambda_),
        errors=errors,
        history_stride=cfg.history_stride,
    )


def _arr(v):
    return None if v is None else np.asarray(v, dtype=float)


def build_problem(spec: ProblemSpec):
    """Return ``(problem, x0, v0)`` ready for the matching solver.

    For ``multi_min`` the ``problem`` is a ``(f, z, blocks)`` tuple.
    """
    x0, v0 = spec.config.x0, spec.config.v0
    if spec.kind == "composite":
        prob = CompositeProblem(build_operator(spec.A, "A"), build_operator(spec.B, "B"), build_map(spec.L, "L"))
        return prob, _arr(x0), _arr(v0)
    if spec.kind == "multi_primal":
        blocks = [
            PrimalBlock(build_operator(b.B, f"blocks[{i}].B"), np.asarray(b.o, float), build_map(b.L, f"blocks[{i}].L"))
            for i, b in enumerate(spec.blocks)
        ]
        prob = MultiPrimalProblem(build_operator(spec.C, "C"), np.asarray(spec.z, float), blocks)
        return prob, _arr(x0), None if v0 is None else [_arr(v) for v in v0]
    if spec.kind == "multi_min":
        blocks = [
            (build_operator(b.g, f"blocks[{i}].g"), np.asarray(b.o, float), build_map(b.L, f"blocks[{i}].L"))
            for i, b in enumerate(spec.blocks)
        ]
        prob = (build_operator(spec.f, "f"), np.asarray(spec.z, float), blocks)
        return prob, _arr(x0), None if v0 is None else [_arr(v) for v in v0]
    if spec.kind == "coupled":
        blocks = [
            CoupledBlock(build_operator(b.A, f"blocks[{i}].A"), np.asarray(b.z, float), build_map(b.L, f"blocks[{i}].L"))
            for i, b in enumerate(spec.blocks)
        ]
        prob = CoupledProblem(build_operator(spec.D, "D"), np.asarray(spec.o, float), blocks)
        return prob, None if x0 is None else [_arr(x) for x in x0], _arr(v0)
    raise SpecError(f"unknown problem kind {spec.kind!r}")
