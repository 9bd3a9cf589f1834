"""Dense float64 tensors with reverse-mode automatic differentiation.

Every differentiable building block the summarizers need lives here: the
arithmetic primitives, GRU step, multiplicative and multi-head attention,
sinusoidal position table, inverted dropout, and a finite-difference
gradient checker. Graphs are taped per forward pass; backward() walks the
tape once in reverse topological order.
"""

import numpy as np

from .errors import ConfigurationError, NumericError
from .rng import Rng  # noqa: F401  (re-exported: the deterministic generator)

_NEG_INF = -1e30


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = tuple(parents) if self.requires_grad else ()
        self._backward_fn = backward_fn if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _coerce(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(tensor: Tensor, grad: np.ndarray) -> None:
    if not tensor.requires_grad:
        return
    if tensor.grad is None:
        tensor.grad = np.zeros_like(tensor.data)
    tensor.grad += grad


def _reduce_to(grad: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# primitives


def add(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    out = Tensor(a.data + b.data, parents=(a, b))

    def bw(g):
        _accumulate(a, _reduce_to(g, a.data.shape))
        _accumulate(b, _reduce_to(g, b.data.shape))

    out._backward_fn = bw if out.requires_grad else None
    return out


def sub(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    out = Tensor(a.data - b.data, parents=(a, b))

    def bw(g):
        _accumulate(a, _reduce_to(g, a.data.shape))
        _accumulate(b, _reduce_to(-g, b.data.shape))

    out._backward_fn = bw if out.requires_grad else None
    return out


def mul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    out = Tensor(a.data * b.data, parents=(a, b))

    def bw(g):
        _accumulate(a, _reduce_to(g * b.data, a.data.shape))
        _accumulate(b, _reduce_to(g * a.data, b.data.shape))

    out._backward_fn = bw if out.requires_grad else None
    return out


def matmul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ConfigurationError("matmul operands must have ndim >= 2")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ConfigurationError(
            f"matmul shape mismatch {a.data.shape} @ {b.data.shape}")
    out = Tensor(np.matmul(a.data, b.data), parents=(a, b))

    def bw(g):
        _accumulate(a, _reduce_to(np.matmul(g, b.data.swapaxes(-1, -2)),
                                  a.data.shape))
        _accumulate(b, _reduce_to(np.matmul(a.data.swapaxes(-1, -2), g),
                                  b.data.shape))

    out._backward_fn = bw if out.requires_grad else None
    return out


def tensor_sum(a, axis=None, keepdims=False) -> Tensor:
    a = _coerce(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims), parents=(a,))

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.data.shape).copy())

    out._backward_fn = bw if out.requires_grad else None
    return out


def tensor_mean(a, axis=None, keepdims=False) -> Tensor:
    a = _coerce(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(tensor_sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a, shape) -> Tensor:
    a = _coerce(a)
    out = Tensor(a.data.reshape(shape), parents=(a,))

    def bw(g):
        _accumulate(a, g.reshape(a.data.shape))

    out._backward_fn = bw if out.requires_grad else None
    return out


def transpose(a, axes) -> Tensor:
    a = _coerce(a)
    out = Tensor(a.data.transpose(axes), parents=(a,))
    inverse = np.argsort(axes)

    def bw(g):
        _accumulate(a, g.transpose(inverse))

    out._backward_fn = bw if out.requires_grad else None
    return out


def concat(tensors, axis=-1) -> Tensor:
    tensors = [_coerce(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                 parents=tuple(tensors))
    sizes = [t.data.shape[axis] for t in tensors]

    def bw(g):
        offsets = np.cumsum([0] + sizes)
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            index = [slice(None)] * g.ndim
            index[axis if axis >= 0 else g.ndim + axis] = slice(start, stop)
            _accumulate(t, g[tuple(index)])

    out._backward_fn = bw if out.requires_grad else None
    return out


def stack(tensors, axis=0) -> Tensor:
    tensors = [_coerce(t) for t in tensors]
    out = Tensor(np.stack([t.data for t in tensors], axis=axis),
                 parents=tuple(tensors))

    def bw(g):
        for i, t in enumerate(tensors):
            _accumulate(t, np.take(g, i, axis=axis))

    out._backward_fn = bw if out.requires_grad else None
    return out


def tanh(a) -> Tensor:
    a = _coerce(a)
    y = np.tanh(a.data)
    out = Tensor(y, parents=(a,))

    def bw(g):
        _accumulate(a, g * (1.0 - y * y))

    out._backward_fn = bw if out.requires_grad else None
    return out


def sigmoid(a) -> Tensor:
    a = _coerce(a)
    x = a.data
    y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                 np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = Tensor(y, parents=(a,))

    def bw(g):
        _accumulate(a, g * y * (1.0 - y))

    out._backward_fn = bw if out.requires_grad else None
    return out


def relu(a) -> Tensor:
    a = _coerce(a)
    out = Tensor(np.maximum(a.data, 0.0), parents=(a,))

    def bw(g):
        _accumulate(a, g * (a.data > 0))

    out._backward_fn = bw if out.requires_grad else None
    return out


def softmax(a, axis=-1) -> Tensor:
    """Max-subtracted exponentiation; rows sum to 1 and order is preserved."""
    a = _coerce(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(p, parents=(a,))

    def bw(g):
        dot = (g * p).sum(axis=axis, keepdims=True)
        _accumulate(a, p * (g - dot))

    out._backward_fn = bw if out.requires_grad else None
    return out


def log_softmax(a, axis=-1) -> Tensor:
    a = _coerce(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    y = shifted - lse
    p = np.exp(y)
    out = Tensor(y, parents=(a,))

    def bw(g):
        _accumulate(a, g - p * g.sum(axis=axis, keepdims=True))

    out._backward_fn = bw if out.requires_grad else None
    return out


def embedding(table: Tensor, ids) -> Tensor:
    """Row gather; gradients scatter-add back into the table."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise ConfigurationError(
            f"embedding id outside table of {table.data.shape[0]} rows")
    out = Tensor(table.data[ids], parents=(table,))

    def bw(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, ids, g)

    out._backward_fn = bw if out.requires_grad else None
    return out


def layer_norm(x, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalization over the last axis with learned gain and bias."""
    x = _coerce(x)
    mean = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv
    out = Tensor(xhat * gain.data + bias.data, parents=(x, gain, bias))

    def bw(g):
        reduce_axes = tuple(range(g.ndim - 1))
        _accumulate(gain, (g * xhat).sum(axis=reduce_axes))
        _accumulate(bias, g.sum(axis=reduce_axes))
        gx = g * gain.data
        term = gx - gx.mean(axis=-1, keepdims=True) \
            - xhat * (gx * xhat).mean(axis=-1, keepdims=True)
        _accumulate(x, term * inv)

    out._backward_fn = bw if out.requires_grad else None
    return out


def apply_dropout(x, rate: float, rng: Rng, training: bool) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-rate); identity when not
    training or rate is 0."""
    if not 0.0 <= rate < 1.0:
        raise ConfigurationError(f"dropout rate {rate} outside [0, 1)")
    x = _coerce(x)
    if not training or rate == 0.0:
        return x
    keep = rng.uniform_array(x.data.shape) >= rate
    return mul(x, keep.astype(np.float64) / (1.0 - rate))


# ---------------------------------------------------------------------------
# recurrent and attention blocks


def gru_step(x, h, params) -> Tensor:
    """One GRU update: h' = (1 - z) * h + z * h_tilde with

        z = sigma(x Wz + h Uz + bz)
        r = sigma(x Wr + h Ur + br)
        h_tilde = tanh(x Wh + (r * h) Uh + bh)

    Accepts single vectors or (batch, dim) matrices.
    """
    x, h = _coerce(x), _coerce(h)
    squeeze = x.data.ndim == 1
    if squeeze:
        x = reshape(x, (1, -1))
        h = reshape(h, (1, -1))
    wz, uz = params["wz"], params["uz"]
    if x.data.shape[-1] != wz.data.shape[0] or h.data.shape[-1] != uz.data.shape[0]:
        raise ConfigurationError(
            f"gru_step dims {x.data.shape}/{h.data.shape} do not match params")
    z = sigmoid(add(add(matmul(x, params["wz"]), matmul(h, params["uz"])),
                    params["bz"]))
    r = sigmoid(add(add(matmul(x, params["wr"]), matmul(h, params["ur"])),
                    params["br"]))
    cand = tanh(add(add(matmul(x, params["wh"]), matmul(mul(r, h), params["uh"])),
                    params["bh"]))
    new_h = add(mul(sub(1.0, z), h), mul(z, cand))
    return reshape(new_h, (-1,)) if squeeze else new_h


def _check_attention_mask(mask: np.ndarray) -> np.ndarray:
    """Boolean attend-mask -> additive mask; reject fully masked rows."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise NumericError("attention mask leaves a position with no "
                           "unmasked targets")
    return np.where(mask, 0.0, _NEG_INF)


def dot_attention(decoder_state, encoder_states, mask=None):
    """Multiplicative attention: scores are dot products of the decoder
    state against each encoder state; masked positions get -inf before the
    softmax. Returns (context, weights)."""
    dec, enc = _coerce(decoder_state), _coerce(encoder_states)
    squeeze = dec.data.ndim == 1
    if squeeze:
        dec = reshape(dec, (1, -1))
        enc = reshape(enc, (1,) + enc.data.shape)
        if mask is not None:
            mask = np.asarray(mask)[None, :]
    if dec.data.shape[-1] != enc.data.shape[-1]:
        raise ConfigurationError(
            f"attention dims {dec.data.shape} vs {enc.data.shape}")
    scores = reshape(matmul(enc, reshape(dec, dec.data.shape + (1,))),
                     enc.data.shape[:-1])           # (B, T)
    if mask is not None:
        scores = add(scores, _check_attention_mask(mask))
    weights = softmax(scores, axis=-1)
    context = reshape(matmul(reshape(weights, (weights.data.shape[0], 1, -1)),
                             enc),
                      (enc.data.shape[0], enc.data.shape[-1]))
    if squeeze:
        return reshape(context, (-1,)), reshape(weights, (-1,))
    return context, weights


def multi_head_attention(queries, keys, values, heads: int,
                         wq: Tensor, wk: Tensor, wv: Tensor, wo: Tensor,
                         mask=None) -> Tensor:
    """Scaled dot-product attention per head (scale 1/sqrt(d/heads)), heads
    concatenated and linearly projected. mask is boolean (attend = True),
    broadcastable to (queries, keys) and applied before the softmax."""
    q, k, v = _coerce(queries), _coerce(keys), _coerce(values)
    d_model = q.data.shape[-1]
    if d_model % heads != 0:
        raise ConfigurationError(
            f"model dim {d_model} not divisible by {heads} heads")
    d_head = d_model // heads

    def split_heads(t, length):
        t = reshape(t, t.data.shape[:-1] + (heads, d_head))
        axes = tuple(range(t.data.ndim - 3)) + (t.data.ndim - 2,
                                                t.data.ndim - 3,
                                                t.data.ndim - 1)
        return transpose(t, axes)  # (..., heads, length, d_head)

    qh = split_heads(matmul(q, wq), q.data.shape[-2])
    kh = split_heads(matmul(k, wk), k.data.shape[-2])
    vh = split_heads(matmul(v, wv), v.data.shape[-2])

    kt = transpose(kh, tuple(range(kh.data.ndim - 2)) + (kh.data.ndim - 1,
                                                         kh.data.ndim - 2))
    scores = mul(matmul(qh, kt), 1.0 / np.sqrt(d_head))
    if mask is not None:
        additive = _check_attention_mask(mask)
        scores = add(scores, np.expand_dims(additive, axis=-3))
    weights = softmax(scores, axis=-1)
    ctx = matmul(weights, vh)  # (..., heads, Tq, d_head)
    axes = tuple(range(ctx.data.ndim - 3)) + (ctx.data.ndim - 2,
                                              ctx.data.ndim - 3,
                                              ctx.data.ndim - 1)
    ctx = transpose(ctx, axes)
    ctx = reshape(ctx, ctx.data.shape[:-2] + (d_model,))
    return matmul(ctx, wo)


def causal_mask(length: int) -> np.ndarray:
    """Lower-triangular attend-mask: position t sees positions <= t."""
    return np.tril(np.ones((length, length), dtype=bool))


def positional_encoding(max_len: int, d_model: int) -> np.ndarray:
    """Sinusoidal table: PE[pos, 2i] = sin(pos / 10000^(2i/d)), cos at odd
    columns. Returned as a plain array; added to embeddings as a constant."""
    if d_model % 2 != 0:
        raise ConfigurationError(f"d_model {d_model} must be even")
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    i = np.arange(d_model // 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, 2.0 * i / d_model)
    table = np.zeros((max_len, d_model), dtype=np.float64)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return table


# ---------------------------------------------------------------------------
# parameters, backward pass, gradient checking


class ParamStore:
    """Named parameter tensors plus their gradient accumulators."""

    def __init__(self):
        self._params = {}

    def add(self, name: str, data) -> Tensor:
        if name in self._params:
            raise ConfigurationError(f"duplicate parameter name {name!r}")
        tensor = Tensor(np.array(data, dtype=np.float64), requires_grad=True)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list:
        return sorted(self._params)

    def items(self):
        return [(n, self._params[n]) for n in self.names()]

    def total_size(self) -> int:
        return sum(t.data.size for _, t in self.items())

    def zero_grads(self) -> None:
        for _, t in self.items():
            t.grad = np.zeros_like(t.data)

    def global_grad_norm(self) -> float:
        total = 0.0
        for _, t in self.items():
            if t.grad is not None:
                total += float((t.grad * t.grad).sum())
        return float(np.sqrt(total))

    def scale_grads(self, factor: float) -> None:
        for _, t in self.items():
            if t.grad is not None:
                t.grad *= factor

    def copy_values(self) -> dict:
        return {n: t.data.copy() for n, t in self.items()}

    def load_values(self, values: dict) -> None:
        if sorted(values) != self.names():
            raise ConfigurationError("parameter names do not match the store")
        for name, data in values.items():
            data = np.asarray(data, dtype=np.float64)
            if data.shape != self._params[name].data.shape:
                raise ConfigurationError(
                    f"shape mismatch for {name!r}: "
                    f"{data.shape} vs {self._params[name].data.shape}")
            self._params[name].data = data.copy()


def backward(loss: Tensor, params: ParamStore | None = None) -> None:
    """Reverse-mode accumulation from a scalar loss. When a ParamStore is
    given, every parameter ends with a gradient of its own shape and
    non-finite gradients raise NumericError naming the parameter."""
    if loss.data.size != 1:
        raise ConfigurationError("backward expects a scalar loss")
    order = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        tensor, expanded = stack.pop()
        if expanded:
            order.append(tensor)
            continue
        if id(tensor) in visited:
            continue
        visited.add(id(tensor))
        stack.append((tensor, True))
        for parent in tensor._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    loss.grad = np.ones_like(loss.data)
    for tensor in reversed(order):
        if tensor._backward_fn is not None and tensor.grad is not None:
            tensor._backward_fn(tensor.grad)
    if params is not None:
        for name, t in params.items():
            if t.grad is None:
                t.grad = np.zeros_like(t.data)
            elif not np.isfinite(t.grad).all():
                raise NumericError(f"non-finite gradient for parameter {name!r}")


def grad_check(loss_fn, params: ParamStore, step: float = 1e-5) -> float:
    """Central finite differences against analytic gradients over every
    parameter element; returns the max relative error
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|)."""
    params.zero_grads()
    backward(loss_fn(), params)
    analytic = {name: t.grad.copy() for name, t in params.items()}
    worst = 0.0
    for name, t in params.items():
        flat = t.data.reshape(-1)
        ana = analytic[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            plus = float(loss_fn().data)
            flat[i] = original - step
            minus = float(loss_fn().data)
            flat[i] = original
            numeric = (plus - minus) / (2.0 * step)
            rel = abs(ana[i] - numeric) / max(1e-8, abs(ana[i]) + abs(numeric))
            worst = max(worst, rel)
    return worst


def glorot_uniform(rng: Rng, shape) -> np.ndarray:
    """Xavier/Glorot uniform initialization for 2-D weights."""
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return (rng.uniform_array(shape) * 2.0 - 1.0) * limit
