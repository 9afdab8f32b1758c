"""
DAG-WGAN Studio - Autodiff Engine
=================================
Evaluation and reverse-mode differentiation of expression graphs.

Features:
- evaluate / evaluate_many with a per-call forward cache (pure, thread-safe)
- grad: symbolic reverse mode; gradients are Expressions, so they can be
  differentiated again (double backward for the gradient penalty)
- gradient_penalty and its weight gradient for Wasserstein critics
- finite-difference gradient checks
"""

import logging
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import linalg as sla

from backend.autodiff import models as ops
from backend.autodiff.models import (
    FIRST_ORDER_ONLY_KINDS,
    Expression,
    OpKind,
    Tensor,
    is_zero_constant,
)
from backend.errors import (
    NonFiniteError,
    SecondOrderError,
    ShapeMismatchError,
    SingularSystemError,
    UnboundVariableError,
)

logger = logging.getLogger("autodiff-engine")

Bindings = Mapping[Union[str, Expression], Tensor]
VariableRef = Union[str, Expression]


# =============================================================================
# GRAPH TRAVERSAL
# =============================================================================

def topological_nodes(outputs: Sequence[Expression]) -> List[Expression]:
    """Post-order over all ancestors; parents always precede children"""
    order: List[Expression] = []
    seen = set()
    stack = [(out, False) for out in reversed(outputs)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node.node_id in seen:
            continue
        seen.add(node.node_id)
        stack.append((node, True))
        for parent in reversed(node.parents):
            if parent.node_id not in seen:
                stack.append((parent, False))
    return order


def _variable_name(ref: VariableRef) -> str:
    if isinstance(ref, Expression):
        if ref.kind is not OpKind.VARIABLE:
            raise ShapeMismatchError(f"{ref!r} is not a variable")
        return ref.name
    return ref


def _normalize_bindings(bindings: Bindings) -> Dict[str, Tensor]:
    return {_variable_name(k): v for k, v in bindings.items()}


# =============================================================================
# FORWARD RULES
# =============================================================================

def _solve(node: Expression, m: Tensor, b: Tensor) -> Tensor:
    limit = node.attrs["max_condition"]
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > limit:
        raise SingularSystemError(
            f"linear-solve: system matrix is singular or ill-conditioned "
            f"(condition estimate {cond:.3e} > {limit:.1e}); the weighted adjacency "
            f"A makes (I - A^T) non-invertible",
            ["Lower the learning rate", "Increase the acyclicity penalty",
             "Initialise A at zero"],
        )
    return sla.lu_solve(sla.lu_factor(m, check_finite=False), b, check_finite=False)


def _matrix_power(m: Tensor, k: int) -> Tensor:
    result = np.eye(m.shape[0])
    for _ in range(k):
        result = result @ m
    return result


def _matrix_power_vjp(m: Tensor, g: Tensor, k: int) -> Tensor:
    if k == 0:
        return np.zeros_like(m)
    powers = [np.eye(m.shape[0])]
    mt = m.T
    for _ in range(k - 1):
        powers.append(powers[-1] @ mt)
    out = np.zeros_like(m)
    for i in range(k):
        out += powers[i] @ g @ powers[k - 1 - i]
    return out


def _softmax_rows(a: Tensor) -> Tensor:
    shifted = a - a.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _safe_reciprocal(a: Tensor) -> Tensor:
    out = np.zeros_like(a)
    np.divide(1.0, a, out=out, where=a != 0)
    return out


def _log_vjp(a: Tensor, g: Tensor, floor: float) -> Tensor:
    out = np.zeros_like(a)
    np.divide(g, a, out=out, where=a > floor)
    return out


def _concat(*parts: Tensor) -> Tensor:
    return np.hstack(parts)


_FORWARD: Dict[OpKind, Callable[..., Tensor]] = {
    OpKind.ADD: lambda n, a, b: a + b,
    OpKind.SUBTRACT: lambda n, a, b: a - b,
    OpKind.MATMUL: lambda n, a, b: a @ b,
    OpKind.HADAMARD: lambda n, a, b: a * b,
    OpKind.SCALE: lambda n, a: n.attrs["factor"] * a,
    OpKind.TRANSPOSE: lambda n, a: np.ascontiguousarray(a.T),
    OpKind.MATRIX_POWER: lambda n, a: _matrix_power(a, n.attrs["k"]),
    OpKind.LINEAR_SOLVE: _solve,
    OpKind.TRACE: lambda n, a: np.array([[np.trace(a)]]),
    OpKind.SUM: lambda n, a: np.array([[a.sum()]]),
    OpKind.MEAN: lambda n, a: np.array([[a.mean()]]),
    OpKind.LEAKY_RELU: lambda n, a: np.where(a > 0, a, n.attrs["slope"] * a),
    OpKind.SIGMOID: lambda n, a: 0.5 * (1.0 + np.tanh(0.5 * a)),
    OpKind.TANH: lambda n, a: np.tanh(a),
    OpKind.SIN: lambda n, a: np.sin(a),
    OpKind.COS: lambda n, a: np.cos(a),
    OpKind.LOG: lambda n, a: np.log(np.maximum(a, n.attrs["floor"])),
    OpKind.SOFTMAX_ROWS: lambda n, a: _softmax_rows(a),
    OpKind.SQUARE: lambda n, a: a * a,
    OpKind.L2_NORM_ROWS: lambda n, a: np.sqrt((a * a).sum(axis=1, keepdims=True)),
    OpKind.CONCAT_COLS: lambda n, *parts: _concat(*parts),
    OpKind.DROPOUT_APPLY: lambda n, a: a * n.attrs["mask"],
    OpKind.RESHAPE: lambda n, a: a.reshape(n.shape),
    OpKind.SAFE_RECIPROCAL: lambda n, a: _safe_reciprocal(a),
    OpKind.LEAKY_RELU_SLOPE: lambda n, a: np.where(a > 0, 1.0, n.attrs["slope"]),
    OpKind.MATRIX_POWER_VJP: lambda n, a, g: _matrix_power_vjp(a, g, n.attrs["k"]),
    OpKind.LOG_VJP: lambda n, a, g: _log_vjp(a, g, n.attrs["floor"]),
}


# =============================================================================
# EVALUATION
# =============================================================================

def evaluate_many(exprs: Sequence[Expression], bindings: Bindings) -> List[Tensor]:
    """Evaluate several expressions sharing one forward cache"""
    values = _normalize_bindings(bindings)
    cache: Dict[int, Tensor] = {}
    for node in topological_nodes(exprs):
        if node.kind is OpKind.CONSTANT:
            cache[node.node_id] = node.attrs["value"]
            continue
        if node.kind is OpKind.VARIABLE:
            if node.name not in values:
                raise UnboundVariableError(
                    f"variable {node.name!r} is not bound",
                    [f"Pass a value for {node.name!r} in the bindings"],
                )
            value = np.asarray(values[node.name], dtype=np.float64)
            if value.shape != node.shape:
                raise ShapeMismatchError(
                    f"variable {node.name!r} bound to shape {value.shape}, expected {node.shape}"
                )
            if not np.all(np.isfinite(value)):
                raise NonFiniteError(f"variable {node.name!r} is bound to non-finite values")
            cache[node.node_id] = value
            continue
        args = [cache[p.node_id] for p in node.parents]
        with np.errstate(over="ignore", invalid="ignore"):
            out = _FORWARD[node.kind](node, *args)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError(
                f"{node.kind.value} produced non-finite values",
                ["Lower the learning rate", "Standardize the input data"],
            )
        cache[node.node_id] = out
    return [cache[e.node_id] for e in exprs]


def evaluate(expr: Expression, bindings: Bindings) -> Tensor:
    return evaluate_many([expr], bindings)[0]


# =============================================================================
# REVERSE MODE
# =============================================================================

def _vjp(node: Expression, g: Expression) -> List[Optional[Expression]]:
    """Vector-Jacobian products for each parent, as expressions"""
    kind = node.kind
    p = node.parents

    if kind in FIRST_ORDER_ONLY_KINDS:
        raise SecondOrderError(
            f"second-order derivative through {node.attrs['origin']} is not supported",
            ["Keep matrix-power and log out of the critic graph"],
        )
    if kind is OpKind.ADD:
        return [g, g]
    if kind is OpKind.SUBTRACT:
        return [g, -g]
    if kind is OpKind.MATMUL:
        a, b = p
        return [g @ b.T, a.T @ g]
    if kind is OpKind.HADAMARD:
        a, b = p
        return [g * b, g * a]
    if kind is OpKind.SCALE:
        return [ops.scale(g, node.attrs["factor"])]
    if kind is OpKind.TRANSPOSE:
        return [g.T]
    if kind is OpKind.MATRIX_POWER:
        k = node.attrs["k"]
        return [None] if k == 0 else [ops.matrix_power_vjp(p[0], g, k)]
    if kind is OpKind.LINEAR_SOLVE:
        m, _ = p
        g_rhs = ops.linear_solve(m.T, g, node.attrs["max_condition"])
        return [-(g_rhs @ node.T), g_rhs]
    if kind is OpKind.TRACE:
        size = p[0].shape[0]
        return [ops.expand(g, (size, size)) * ops.identity(size)]
    if kind is OpKind.SUM:
        return [ops.expand(g, p[0].shape)]
    if kind is OpKind.MEAN:
        return [ops.expand(g, p[0].shape) / p[0].size]
    if kind is OpKind.LEAKY_RELU:
        return [g * ops.leaky_relu_slope(p[0], node.attrs["slope"])]
    if kind is OpKind.SIGMOID:
        return [g * (node * (ops.ones(node.shape) - node))]
    if kind is OpKind.TANH:
        return [g * (ops.ones(node.shape) - ops.square(node))]
    if kind is OpKind.SIN:
        return [g * ops.cos(p[0])]
    if kind is OpKind.COS:
        return [-(g * ops.sin(p[0]))]
    if kind is OpKind.LOG:
        return [ops.log_vjp(p[0], g, node.attrs["floor"])]
    if kind is OpKind.SOFTMAX_ROWS:
        inner = ops.repeat_cols(ops.row_sums(g * node), node.shape[1])
        return [node * (g - inner)]
    if kind is OpKind.SQUARE:
        return [ops.scale(g * p[0], 2.0)]
    if kind is OpKind.L2_NORM_ROWS:
        a = p[0]
        weights = ops.repeat_cols(g * ops.safe_reciprocal(node), a.shape[1])
        return [weights * a]
    if kind is OpKind.SAFE_RECIPROCAL:
        return [-(g * ops.square(node))]
    if kind is OpKind.LEAKY_RELU_SLOPE:
        return [None]
    if kind is OpKind.CONCAT_COLS:
        total = node.shape[1]
        grads, start = [], 0
        for part in p:
            width = part.shape[1]
            grads.append(g @ ops.column_selector(total, start, width))
            start += width
        return grads
    if kind is OpKind.DROPOUT_APPLY:
        return [ops.reapply_dropout(g, node)]
    if kind is OpKind.RESHAPE:
        return [ops.reshape(g, p[0].shape)]
    raise SecondOrderError(f"no derivative rule for {kind.value}")


def grad(output: Expression, wrt: Sequence[VariableRef]) -> List[Expression]:
    """Symbolic gradients of a 1x1 expression with respect to named variables"""
    if output.shape != (1, 1):
        raise ShapeMismatchError(f"gradient requires a 1x1 expression, got {output.shape}")
    names = [_variable_name(v) for v in wrt]
    wanted = set(names)
    order = topological_nodes([output])

    depends: Dict[int, bool] = {}
    shapes: Dict[str, tuple] = {}
    for node in order:
        if node.kind is OpKind.VARIABLE:
            depends[node.node_id] = node.name in wanted
            if node.name in wanted:
                shapes[node.name] = node.shape
        else:
            depends[node.node_id] = any(depends[p.node_id] for p in node.parents)

    results: Dict[str, Expression] = {}
    if depends[output.node_id]:
        adjoint: Dict[int, Expression] = {output.node_id: ops.ones((1, 1))}
        for node in reversed(order):
            g = adjoint.pop(node.node_id, None)
            if g is None or not depends[node.node_id]:
                continue
            if node.kind is OpKind.VARIABLE:
                results[node.name] = g if node.name not in results else results[node.name] + g
                continue
            for parent, contrib in zip(node.parents, _vjp(node, g)):
                if contrib is None or not depends[parent.node_id] or is_zero_constant(contrib):
                    continue
                prev = adjoint.get(parent.node_id)
                adjoint[parent.node_id] = contrib if prev is None else prev + contrib

    out = []
    for name, ref in zip(names, wrt):
        if name in results:
            out.append(results[name])
        else:
            shape = shapes.get(name) or (ref.shape if isinstance(ref, Expression) else None)
            if shape is None:
                raise UnboundVariableError(
                    f"variable {name!r} does not appear in the expression; pass the "
                    f"variable Expression so its shape is known"
                )
            out.append(ops.zeros(shape))
    return out


def gradient(output: Expression, wrt: Sequence[VariableRef], bindings: Bindings) -> List[Tensor]:
    """Numeric gradients of a 1x1 expression at ``bindings``"""
    return evaluate_many(grad(output, wrt), bindings)


def value_and_gradient(output: Expression, wrt: Sequence[VariableRef],
                       bindings: Bindings) -> tuple:
    values = evaluate_many([output, *grad(output, wrt)], bindings)
    return float(values[0][0, 0]), values[1:]


# =============================================================================
# GRADIENT PENALTY
# =============================================================================

def gradient_penalty(critic_expr: Expression, input_var: Expression) -> Expression:
    """mean over rows of (||d critic / d input_row||_2 - 1)^2"""
    if critic_expr.shape[1] != 1:
        raise ShapeMismatchError(f"critic must give one score per row, got {critic_expr.shape}")
    (input_grad,) = grad(ops.sum_all(critic_expr), [input_var])
    norms = ops.l2_norm_rows(input_grad)
    return ops.mean(ops.square(norms - ops.ones(norms.shape)))


def gradient_norm_penalty_grad(critic_expr: Expression, input_var: Expression,
                               weight_vars: Sequence[VariableRef],
                               bindings: Bindings) -> List[Tensor]:
    """d/d weights of the gradient penalty via double backward"""
    penalty = gradient_penalty(critic_expr, input_var)
    return gradient(penalty, weight_vars, bindings)


# =============================================================================
# FINITE-DIFFERENCE CHECKS
# =============================================================================

def finite_difference(output: Expression, name: str, bindings: Bindings,
                      step: float = 1e-5) -> Tensor:
    values = {k: np.array(v, dtype=np.float64) for k, v in _normalize_bindings(bindings).items()}
    base = values[name]
    out = np.zeros_like(base)
    for idx in np.ndindex(*base.shape):
        orig = base[idx]
        base[idx] = orig + step
        plus = evaluate(output, values)[0, 0]
        base[idx] = orig - step
        minus = evaluate(output, values)[0, 0]
        base[idx] = orig
        out[idx] = (plus - minus) / (2.0 * step)
    return out


def relative_error(analytic: Tensor, numeric: Tensor, floor: float = 1e-6) -> float:
    denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(np.linalg.norm(analytic - numeric) / denom)


def check_gradients(output: Expression, wrt: Sequence[VariableRef], bindings: Bindings,
                    step: float = 1e-5) -> Dict[str, float]:
    """Relative error between reverse-mode and central differences, per variable"""
    names = [_variable_name(v) for v in wrt]
    analytic = gradient(output, wrt, bindings)
    report = {}
    for name, g in zip(names, analytic):
        report[name] = relative_error(g, finite_difference(output, name, bindings, step))
        logger.debug(f"gradcheck {name}: rel. error {report[name]:.2e}")
    return report
