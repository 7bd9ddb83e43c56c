"""
Reverse-mode differentiation over dense float64 arrays.

Operations record themselves onto the innermost active Tape when at least
one input requires gradients. Tape.backward() replays the recorded nodes in
reverse order of evaluation, so the forward order defines the backward order.

Usage:
    w = Tensor(np.ones((3, 2)), requires_grad=True, name="w")
    with Tape() as tape:
        loss = sum_all(matmul(x, w))
    tape.backward(loss, params=[w])
    w.grad  # d loss / d w
"""

from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import config
from src.core.errors import ArgumentError, NumericError, ShapeError, BoundsError

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]
Backward = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_TAPE_STACK: List["Tape"] = []


class Tensor:
    """
    Dense float64 array with a gradient slot.

    Attributes:
        value: the array (always float64)
        grad: accumulated gradient of the same shape, or None
        requires_grad: whether operations on this tensor are recorded
        name: optional parameter name
    """

    __slots__ = ("value", "grad", "requires_grad", "name")

    def __init__(self, value: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        if isinstance(value, Tensor):
            value = value.value
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def numpy(self) -> np.ndarray:
        return self.value

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return mul(other, self)

    def __matmul__(self, other: ArrayLike) -> "Tensor":
        return matmul(self, other)

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


class _Node:
    __slots__ = ("output", "inputs", "backward")

    def __init__(self, output: Tensor, inputs: Sequence[Tensor], backward: Backward):
        self.output = output
        self.inputs = tuple(inputs)
        self.backward = backward


class Tape:
    """
    Computation tape recording differentiable operations.

    Tapes nest; operations record onto the innermost one. Outside any tape
    nothing is recorded, which is how inference runs.
    """

    def __init__(self) -> None:
        self.nodes: List[_Node] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc_info) -> bool:
        _TAPE_STACK.remove(self)
        return False

    def record(self, output: Tensor, inputs: Sequence[Tensor], backward: Backward) -> None:
        self.nodes.append(_Node(output, inputs, backward))

    def backward(self, loss: Tensor, params: Sequence[Tensor] = ()) -> None:
        """
        Accumulate d loss / d leaf into every leaf tensor's .grad.

        Args:
            loss: scalar tensor produced under this tape
            params: leaves whose .grad is initialised to zero when unset, so
                parameters the loss does not reach still end with a gradient
        """
        if loss.value.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        if not np.all(np.isfinite(loss.value)):
            raise NumericError(f"non-finite loss {loss.value}")

        for p in params:
            if p.grad is None:
                p.zero_grad()

        produced = {id(node.output) for node in self.nodes}
        pending: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
        if id(loss) not in produced and loss.requires_grad:
            loss.grad = np.ones_like(loss.value) if loss.grad is None else loss.grad + 1.0

        for node in reversed(self.nodes):
            g_out = pending.pop(id(node.output), None)
            if g_out is None:
                continue
            for inp, g_in in zip(node.inputs, node.backward(g_out)):
                if g_in is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in produced:
                    pending[key] = pending[key] + g_in if key in pending else g_in
                elif inp.grad is None:
                    inp.grad = np.array(g_in, dtype=np.float64, copy=True)
                else:
                    inp.grad = inp.grad + g_in


def _lift(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(value: np.ndarray, inputs: Sequence[Tensor], backward: Backward) -> Tensor:
    requires = any(t.requires_grad for t in inputs)
    out = Tensor(value, requires_grad=requires)
    if requires and _TAPE_STACK:
        _TAPE_STACK[-1].record(out, inputs, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _require_matrix(t: Tensor, what: str) -> None:
    if t.ndim != 2:
        raise ShapeError(f"{what} must be a matrix, got shape {t.shape}")


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from e


# ========== Elementwise ==========

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _lift(a), _lift(b)
    _check_broadcast(a, b, "add")
    return _make(
        a.value + b.value,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _lift(a), _lift(b)
    _check_broadcast(a, b, "sub")
    return _make(
        a.value - b.value,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Elementwise (Hadamard) product with broadcasting"""
    a, b = _lift(a), _lift(b)
    _check_broadcast(a, b, "mul")
    return _make(
        a.value * b.value,
        (a, b),
        lambda g: (_unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)),
    )


def scale(a: ArrayLike, c: float) -> Tensor:
    a = _lift(a)
    return _make(a.value * c, (a,), lambda g: (g * c,))


def relu(a: ArrayLike) -> Tensor:
    a = _lift(a)
    mask = a.value > 0.0
    return _make(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def sigmoid(a: ArrayLike) -> Tensor:
    a = _lift(a)
    y = 0.5 * (1.0 + np.tanh(0.5 * a.value))
    return _make(y, (a,), lambda g: (g * y * (1.0 - y),))


# ========== Linear algebra ==========

def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """
    Matrix product A[m×k] · B[k×n].

    Raises:
        ShapeError: if either operand is not a matrix or inner dims differ
    """
    a, b = _lift(a), _lift(b)
    _require_matrix(a, "matmul lhs")
    _require_matrix(b, "matmul rhs")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    return _make(
        a.value @ b.value,
        (a, b),
        lambda g: (g @ b.value.T, a.value.T @ g),
    )


def transpose(a: ArrayLike) -> Tensor:
    a = _lift(a)
    _require_matrix(a, "transpose")
    return _make(a.value.T.copy(), (a,), lambda g: (g.T,))


def reshape(a: ArrayLike, shape: Tuple[int, ...]) -> Tensor:
    a = _lift(a)
    try:
        out = a.value.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"cannot reshape {a.shape} to {shape}") from e
    return _make(out, (a,), lambda g: (g.reshape(a.shape),))


# ========== Reductions and layout ==========

def sum_all(a: ArrayLike) -> Tensor:
    a = _lift(a)
    return _make(np.asarray(a.value.sum()), (a,), lambda g: (np.full(a.shape, float(g)),))


def mean_all(a: ArrayLike) -> Tensor:
    a = _lift(a)
    n = max(a.value.size, 1)
    return _make(np.asarray(a.value.mean()), (a,), lambda g: (np.full(a.shape, float(g) / n),))


def mean_rows(a: ArrayLike) -> Tensor:
    """Column-wise mean over rows: N×F -> 1×F"""
    a = _lift(a)
    _require_matrix(a, "mean_rows")
    n = a.shape[0]
    if n == 0:
        raise ShapeError("mean_rows of an empty matrix")
    return _make(
        a.value.mean(axis=0, keepdims=True),
        (a,),
        lambda g: (np.broadcast_to(g / n, a.shape).copy(),),
    )


def repeat_rows(a: ArrayLike, n: int) -> Tensor:
    """Tile a 1×F row n times: 1×F -> n×F"""
    a = _lift(a)
    if a.ndim != 2 or a.shape[0] != 1:
        raise ShapeError(f"repeat_rows needs a 1×F row, got {a.shape}")
    return _make(
        np.repeat(a.value, n, axis=0),
        (a,),
        lambda g: (g.sum(axis=0, keepdims=True),),
    )


def concat_cols(a: ArrayLike, b: ArrayLike) -> Tensor:
    """[A | B]: N×Fa, N×Fb -> N×(Fa+Fb)"""
    a, b = _lift(a), _lift(b)
    _require_matrix(a, "concat lhs")
    _require_matrix(b, "concat rhs")
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"concat_cols: row counts differ, {a.shape} vs {b.shape}")
    fa = a.shape[1]
    return _make(
        np.concatenate([a.value, b.value], axis=1),
        (a, b),
        lambda g: (g[:, :fa], g[:, fa:]),
    )


def gather_rows(a: ArrayLike, index: np.ndarray) -> Tensor:
    """Select rows a[index]; gradients scatter-add back"""
    a = _lift(a)
    index = np.asarray(index, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= a.shape[0]):
        raise BoundsError(f"gather_rows index out of range for {a.shape[0]} rows")

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        out = np.zeros_like(a.value)
        np.add.at(out, index, g)
        return (out,)

    return _make(a.value[index], (a,), backward)


def patches3x3(fmap: ArrayLike, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    """
    Extract zero-padded 3×3 neighbourhoods of an H×W×C map at given pixels.

    Output row i holds the 9·C values around (rows[i], cols[i]) ordered by
    (ky, kx, channel), which is the im2col layout conv weights are stored in.
    """
    fmap = _lift(fmap)
    if fmap.ndim != 3:
        raise ShapeError(f"patches3x3 needs an H×W×C map, got {fmap.shape}")
    h, w, c = fmap.shape
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if rows.shape != cols.shape:
        raise ShapeError("patches3x3: rows and cols differ in length")
    if rows.size and (rows.min() < 0 or rows.max() >= h or cols.min() < 0 or cols.max() >= w):
        raise BoundsError(f"pixel outside {h}×{w} image")

    padded = np.pad(fmap.value, ((1, 1), (1, 1), (0, 0)))
    stacked = np.stack(
        [padded[rows + ky, cols + kx, :] for ky in range(3) for kx in range(3)],
        axis=1,
    )

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        g = g.reshape(rows.size, 9, c)
        gpad = np.zeros_like(padded)
        k = 0
        for ky in range(3):
            for kx in range(3):
                np.add.at(gpad, (rows + ky, cols + kx), g[:, k, :])
                k += 1
        return (gpad[1:-1, 1:-1, :],)

    return _make(stacked.reshape(rows.size, 9 * c), (fmap,), backward)


# ========== Normalisation and probabilities ==========

def softmax_rows(m: ArrayLike, scale: float = 1.0) -> Tensor:
    """
    Row-wise softmax of M / scale.

    Every output row sums to 1. The per-row maximum is subtracted before
    exponentiation.

    Raises:
        ArgumentError: if scale is not positive
    """
    if not scale > 0.0:
        raise ArgumentError(f"softmax scale must be positive, got {scale}")
    m = _lift(m)
    _require_matrix(m, "softmax_rows")
    z = m.value / scale
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        dot = (g * y).sum(axis=1, keepdims=True)
        return ((y * (g - dot)) / scale,)

    return _make(y, (m,), backward)


def layer_norm_rows(
    x: ArrayLike,
    gamma: Optional[ArrayLike] = None,
    beta: Optional[ArrayLike] = None,
    eps: float = config.NORM_EPS,
) -> Tensor:
    """
    Per-row normalisation over the feature axis, then per-feature affine.

    y = gamma * (x - mean) / sqrt(var + eps) + beta, with population variance.
    """
    x = _lift(x)
    _require_matrix(x, "layer_norm_rows")
    f = x.shape[1]
    gamma = _lift(np.ones(f) if gamma is None else gamma)
    beta = _lift(np.zeros(f) if beta is None else beta)
    if gamma.shape != (f,) or beta.shape != (f,):
        raise ShapeError(f"norm affine must have shape ({f},), got {gamma.shape}/{beta.shape}")

    mu = x.value.mean(axis=1, keepdims=True)
    inv_sigma = 1.0 / np.sqrt(x.value.var(axis=1, keepdims=True) + eps)
    x_hat = (x.value - mu) * inv_sigma

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        d_hat = g * gamma.value
        dx = inv_sigma * (
            d_hat
            - d_hat.mean(axis=1, keepdims=True)
            - x_hat * (d_hat * x_hat).mean(axis=1, keepdims=True)
        )
        return dx, (g * x_hat).sum(axis=0), g.sum(axis=0)

    return _make(x_hat * gamma.value + beta.value, (x, gamma, beta), backward)


def feature_norm(
    v: ArrayLike,
    gamma: Optional[ArrayLike] = None,
    beta: Optional[ArrayLike] = None,
    eps: float = config.NORM_EPS,
) -> Tensor:
    """Normalise a single length-F vector (zero mean, unit variance, then affine)"""
    v = _lift(v)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ShapeError(f"feature_norm needs a non-empty vector, got {v.shape}")
    row = reshape(v, (1, v.shape[0]))
    return reshape(layer_norm_rows(row, gamma, beta, eps), (v.shape[0],))


def cross_entropy(logits: ArrayLike, labels: np.ndarray, ignore_label: int = -1) -> Tensor:
    """
    Mean over non-ignored rows of -log softmax(logits)[label].

    Raises:
        ShapeError: if labels do not match the logits rows
        BoundsError: if a label is outside [0, C)
    """
    logits = _lift(logits)
    _require_matrix(logits, "cross_entropy logits")
    labels = np.asarray(labels, dtype=np.int64)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"labels shape {labels.shape} does not match {n} logit rows")
    valid = labels != ignore_label
    n_valid = int(valid.sum())
    if n_valid == 0:
        # Caller decides whether this is an error
        return _make(np.asarray(0.0), (logits,), lambda g: (np.zeros_like(logits.value),))
    if labels[valid].min() < 0 or labels[valid].max() >= c:
        raise BoundsError(f"label outside [0, {c})")

    z = logits.value - logits.value.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_p = z - log_z
    rows = np.nonzero(valid)[0]
    loss = -log_p[rows, labels[rows]].sum() / n_valid

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        d = np.exp(log_p)
        d[rows, labels[rows]] -= 1.0
        d[~valid] = 0.0
        return (d * (float(g) / n_valid),)

    return _make(np.asarray(loss), (logits,), backward)


def binary_cross_entropy(probs: ArrayLike, label: int, clamp: float = 1e-7) -> Tensor:
    """
    Mean over entries of -[y ln p + (1 - y) ln(1 - p)] with p clamped to
    [clamp, 1 - clamp]. Clamped entries pass no gradient.

    Raises:
        NumericError: if any probability is not finite
    """
    probs = _lift(probs)
    p_raw = probs.value
    if not np.all(np.isfinite(p_raw)):
        raise NumericError("non-finite probability in binary cross entropy")
    y = float(label)
    p = np.clip(p_raw, clamp, 1.0 - clamp)
    n = max(p.size, 1)
    loss = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).sum() / n
    inside = (p_raw >= clamp) & (p_raw <= 1.0 - clamp)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        d = -(y / p - (1.0 - y) / (1.0 - p)) / n
        return (np.where(inside, d, 0.0) * float(g),)

    return _make(np.asarray(loss), (probs,), backward)


def affine(x: ArrayLike, weight: Tensor, bias: Tensor) -> Tensor:
    """Row-wise x·W + b"""
    return add(matmul(x, weight), bias)
