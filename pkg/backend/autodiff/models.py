"""
DAG-WGAN Studio - Autodiff Data Models
======================================
Dense 2-D tensors and immutable expression nodes.

An Expression is a node in an acyclic computation graph. Nodes never change
after construction, so graphs can be shared freely between threads; values
only exist inside an evaluation (see engine.py).
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Any, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from backend.errors import NonFiniteError, ShapeMismatchError

Tensor = npt.NDArray[np.float64]
Shape = Tuple[int, int]

_node_ids = itertools.count(1)


def as_tensor(value: Any, name: str = "tensor") -> Tensor:
    """Coerce to a finite, C-contiguous 2-D float64 array"""
    arr = np.array(value, dtype=np.float64, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeMismatchError(f"{name} must be at most 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(
            f"{name} contains NaN or Inf",
            ["Check the input data for missing values", "Lower the learning rate"],
        )
    return np.ascontiguousarray(arr)


# =============================================================================
# OPERATION KINDS
# =============================================================================

class OpKind(str, Enum):
    CONSTANT = "constant"
    VARIABLE = "variable"
    ADD = "add"
    SUBTRACT = "subtract"
    MATMUL = "matmul"
    HADAMARD = "hadamard"
    SCALE = "scalar-multiply"
    TRANSPOSE = "transpose"
    MATRIX_POWER = "matrix-power"
    LINEAR_SOLVE = "linear-solve"
    TRACE = "trace"
    SUM = "sum"
    MEAN = "mean"
    LEAKY_RELU = "leaky-relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    SIN = "sin"
    COS = "cos"
    LOG = "log"
    SOFTMAX_ROWS = "softmax-rows"
    SQUARE = "elementwise-square"
    L2_NORM_ROWS = "l2-norm-rows"
    CONCAT_COLS = "concat-cols"
    DROPOUT_APPLY = "dropout-apply"
    RESHAPE = "reshape"
    # helper kinds produced while differentiating
    SAFE_RECIPROCAL = "safe-reciprocal"
    LEAKY_RELU_SLOPE = "leaky-relu-slope"
    MATRIX_POWER_VJP = "matrix-power-vjp"
    LOG_VJP = "log-vjp"


# VJP nodes computed numerically; differentiating them again raises SecondOrderError
FIRST_ORDER_ONLY_KINDS = frozenset({OpKind.MATRIX_POWER_VJP, OpKind.LOG_VJP})


# =============================================================================
# EXPRESSION
# =============================================================================

@dataclass(frozen=True, eq=False)
class Expression:
    """Immutable computation-graph node"""
    kind: OpKind
    parents: Tuple["Expression", ...]
    shape: Shape
    attrs: Mapping[str, Any] = field(default_factory=dict)
    node_id: int = field(default_factory=lambda: next(_node_ids))

    def __post_init__(self):
        object.__setattr__(self, "attrs", MappingProxyType(dict(self.attrs)))

    @property
    def parent_ids(self) -> Tuple[int, ...]:
        return tuple(p.node_id for p in self.parents)

    @property
    def name(self) -> Optional[str]:
        return self.attrs.get("name")

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def T(self) -> "Expression":
        return transpose(self)

    def __add__(self, other: "Expression") -> "Expression":
        return add(self, other)

    def __sub__(self, other: "Expression") -> "Expression":
        return subtract(self, other)

    def __matmul__(self, other: "Expression") -> "Expression":
        return matmul(self, other)

    def __mul__(self, other: Union["Expression", float]) -> "Expression":
        if isinstance(other, Expression):
            return hadamard(self, other)
        return scale(self, float(other))

    def __rmul__(self, other: float) -> "Expression":
        return scale(self, float(other))

    def __truediv__(self, other: float) -> "Expression":
        return scale(self, 1.0 / float(other))

    def __neg__(self) -> "Expression":
        return scale(self, -1.0)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Expression#{self.node_id}({self.kind.value}{label}, shape={self.shape})"


def _node(kind: OpKind, parents: Iterable[Expression], shape: Shape, **attrs) -> Expression:
    return Expression(kind=kind, parents=tuple(parents), shape=(int(shape[0]), int(shape[1])),
                      attrs=attrs)


def _require_same(op: str, a: Expression, b: Expression):
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{op}: shapes {a.shape} and {b.shape} differ")


def _require_square(op: str, a: Expression):
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatchError(f"{op}: expected a square matrix, got {a.shape}")


# =============================================================================
# LEAVES
# =============================================================================

def constant(value: Any) -> Expression:
    arr = as_tensor(value, "constant")
    arr.setflags(write=False)
    return _node(OpKind.CONSTANT, (), arr.shape, value=arr, zero=not np.any(arr))


def zeros(shape: Shape) -> Expression:
    return constant(np.zeros(shape))


def ones(shape: Shape) -> Expression:
    return constant(np.ones(shape))


def identity(m: int) -> Expression:
    return constant(np.eye(m))


def variable(name: str, shape: Shape) -> Expression:
    return _node(OpKind.VARIABLE, (), shape, name=name)


def is_zero_constant(expr: Expression) -> bool:
    return expr.kind is OpKind.CONSTANT and bool(expr.attrs.get("zero"))


# =============================================================================
# ARITHMETIC
# =============================================================================

def add(a: Expression, b: Expression) -> Expression:
    _require_same("add", a, b)
    return _node(OpKind.ADD, (a, b), a.shape)


def subtract(a: Expression, b: Expression) -> Expression:
    _require_same("subtract", a, b)
    return _node(OpKind.SUBTRACT, (a, b), a.shape)


def matmul(a: Expression, b: Expression) -> Expression:
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul: inner dimensions {a.shape} @ {b.shape} differ")
    return _node(OpKind.MATMUL, (a, b), (a.shape[0], b.shape[1]))


def hadamard(a: Expression, b: Expression) -> Expression:
    _require_same("hadamard", a, b)
    return _node(OpKind.HADAMARD, (a, b), a.shape)


def scale(a: Expression, factor: float) -> Expression:
    return _node(OpKind.SCALE, (a,), a.shape, factor=float(factor))


def transpose(a: Expression) -> Expression:
    return _node(OpKind.TRANSPOSE, (a,), (a.shape[1], a.shape[0]))


def matrix_power(a: Expression, k: int) -> Expression:
    _require_square("matrix-power", a)
    if k < 0:
        raise ShapeMismatchError(f"matrix-power: exponent must be >= 0, got {k}")
    return _node(OpKind.MATRIX_POWER, (a,), a.shape, k=int(k))


def linear_solve(m: Expression, b: Expression, max_condition: float = 1e8) -> Expression:
    """X with m @ X = b (LU with partial pivoting, no explicit inverse)"""
    _require_square("linear-solve", m)
    if m.shape[0] != b.shape[0]:
        raise ShapeMismatchError(f"linear-solve: system {m.shape} incompatible with rhs {b.shape}")
    return _node(OpKind.LINEAR_SOLVE, (m, b), b.shape, max_condition=float(max_condition))


def trace(a: Expression) -> Expression:
    _require_square("trace", a)
    return _node(OpKind.TRACE, (a,), (1, 1))


def sum_all(a: Expression) -> Expression:
    return _node(OpKind.SUM, (a,), (1, 1))


def mean(a: Expression) -> Expression:
    return _node(OpKind.MEAN, (a,), (1, 1))


def reshape(a: Expression, shape: Shape) -> Expression:
    if shape[0] * shape[1] != a.size:
        raise ShapeMismatchError(f"reshape: cannot reshape {a.shape} into {shape}")
    return _node(OpKind.RESHAPE, (a,), shape)


def concat_cols(*parts: Expression) -> Expression:
    if not parts:
        raise ShapeMismatchError("concat-cols: nothing to concatenate")
    rows = parts[0].shape[0]
    for p in parts:
        if p.shape[0] != rows:
            raise ShapeMismatchError(f"concat-cols: row counts differ ({p.shape[0]} vs {rows})")
    return _node(OpKind.CONCAT_COLS, parts, (rows, sum(p.shape[1] for p in parts)))


# =============================================================================
# ELEMENTWISE
# =============================================================================

def leaky_relu(a: Expression, slope: float = 0.2) -> Expression:
    return _node(OpKind.LEAKY_RELU, (a,), a.shape, slope=float(slope))


def sigmoid(a: Expression) -> Expression:
    return _node(OpKind.SIGMOID, (a,), a.shape)


def tanh(a: Expression) -> Expression:
    return _node(OpKind.TANH, (a,), a.shape)


def sin(a: Expression) -> Expression:
    return _node(OpKind.SIN, (a,), a.shape)


def cos(a: Expression) -> Expression:
    return _node(OpKind.COS, (a,), a.shape)


def log(a: Expression, floor: float = 1e-12) -> Expression:
    """Natural log with the argument clamped at ``floor``"""
    return _node(OpKind.LOG, (a,), a.shape, floor=float(floor))


def square(a: Expression) -> Expression:
    return _node(OpKind.SQUARE, (a,), a.shape)


def softmax_rows(a: Expression) -> Expression:
    return _node(OpKind.SOFTMAX_ROWS, (a,), a.shape)


def l2_norm_rows(a: Expression) -> Expression:
    return _node(OpKind.L2_NORM_ROWS, (a,), (a.shape[0], 1))


def dropout_apply(a: Expression, mask: Any, p: float) -> Expression:
    """Multiply by a fixed Bernoulli keep-mask scaled by 1/(1-p)"""
    if not 0.0 <= p < 1.0:
        raise ShapeMismatchError(f"dropout-apply: p must be in [0, 1), got {p}")
    scaled = as_tensor(mask, "dropout mask") / (1.0 - p)
    if scaled.shape != a.shape:
        raise ShapeMismatchError(f"dropout-apply: mask {scaled.shape} vs input {a.shape}")
    scaled.setflags(write=False)
    return _node(OpKind.DROPOUT_APPLY, (a,), a.shape, mask=scaled)


def reapply_dropout(a: Expression, like: Expression) -> Expression:
    """Apply the already-scaled mask of another dropout node"""
    return _node(OpKind.DROPOUT_APPLY, (a,), a.shape, mask=like.attrs["mask"])


def safe_reciprocal(a: Expression) -> Expression:
    """1/x with 1/0 defined as 0 (subgradient of the norm at the origin)"""
    return _node(OpKind.SAFE_RECIPROCAL, (a,), a.shape)


def leaky_relu_slope(a: Expression, slope: float) -> Expression:
    return _node(OpKind.LEAKY_RELU_SLOPE, (a,), a.shape, slope=float(slope))


def matrix_power_vjp(a: Expression, upstream: Expression, k: int) -> Expression:
    return _node(OpKind.MATRIX_POWER_VJP, (a, upstream), a.shape, k=int(k),
                 origin=OpKind.MATRIX_POWER.value)


def log_vjp(a: Expression, upstream: Expression, floor: float) -> Expression:
    return _node(OpKind.LOG_VJP, (a, upstream), a.shape, floor=float(floor),
                 origin=OpKind.LOG.value)


# =============================================================================
# COMPOSITES (no new kinds: built from matmul with constant ones)
# =============================================================================

def expand(scalar: Expression, shape: Shape) -> Expression:
    """Broadcast a 1x1 expression to ``shape``"""
    if scalar.shape != (1, 1):
        raise ShapeMismatchError(f"expand: expected 1x1, got {scalar.shape}")
    return ones((shape[0], 1)) @ scalar @ ones((1, shape[1]))


def repeat_rows(row: Expression, n: int) -> Expression:
    if row.shape[0] != 1:
        raise ShapeMismatchError(f"repeat_rows: expected a row vector, got {row.shape}")
    return ones((n, 1)) @ row


def row_sums(a: Expression) -> Expression:
    return a @ ones((a.shape[1], 1))


def repeat_cols(col: Expression, n: int) -> Expression:
    if col.shape[1] != 1:
        raise ShapeMismatchError(f"repeat_cols: expected a column vector, got {col.shape}")
    return col @ ones((1, n))


def column_selector(total: int, start: int, width: int) -> Expression:
    sel = np.zeros((total, width))
    sel[start:start + width, :] = np.eye(width)
    return constant(sel)


def permute_columns(a: Expression, order: Sequence[int]) -> Expression:
    """Columns reordered so that column j of the result is column order[j] of ``a``"""
    perm = np.zeros((a.shape[1], len(order)))
    perm[list(order), np.arange(len(order))] = 1.0
    return a @ constant(perm)
