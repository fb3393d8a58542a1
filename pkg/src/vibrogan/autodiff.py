"""Reverse-mode automatic differentiation on numpy arrays.

The engine is tape-free: every operation records its parents and a vjp
(vector-Jacobian product) closure. The vjp closures are themselves written
in terms of Tensor operations, so a backward pass with ``create_graph=True``
yields gradients that are again differentiable. This is what makes the
WGAN-GP gradient penalty trainable: the penalty is an expression in the
input gradient of the critic, and its parameter gradient needs a second
backward pass through the first one.

All data is 64-bit float. Shapes follow numpy broadcasting; reductions
over broadcast dimensions in the backward pass go through ``sum_to``.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


class Tensor:
    """A node in the computation graph wrapping a float64 ndarray."""

    __slots__ = ("data", "requires_grad", "parents", "vjp", "grad")

    def __init__(self, data, requires_grad=False, parents=(), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self.parents = tuple(parents) if self.requires_grad else ()
        self.vjp = vjp if self.requires_grad else None
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def detach(self):
        return Tensor(self.data)

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, as_tensor(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __truediv__(self, other):
        other = as_tensor(other)
        return mul(self, power(other, -1.0))

    def __rtruediv__(self, other):
        return mul(as_tensor(other), power(self, -1.0))

    def __pow__(self, p):
        return power(self, p)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _sum_to_shape(t, shape):
    """Reduce ``t`` back to ``shape`` after numpy broadcasting."""
    if t.shape == tuple(shape):
        return t
    return sum_to(t, shape)


# -- elementwise primitives ---------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data + b.data

    def vjp(g):
        return [(a, _sum_to_shape(g, a.shape)), (b, _sum_to_shape(g, b.shape))]

    return Tensor(out_data, parents=(a, b), vjp=vjp)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data * b.data

    def vjp(g):
        return [(a, _sum_to_shape(mul(g, b), a.shape)),
                (b, _sum_to_shape(mul(g, a), b.shape))]

    return Tensor(out_data, parents=(a, b), vjp=vjp)


def neg(a):
    a = as_tensor(a)

    def vjp(g):
        return [(a, neg(g))]

    return Tensor(-a.data, parents=(a,), vjp=vjp)


def power(a, p):
    """Elementwise a**p for a constant exponent p."""
    a = as_tensor(a)
    p = float(p)
    out_data = a.data ** p

    def vjp(g):
        return [(a, mul(g, mul(Tensor(p), power(a, p - 1.0))))]

    return Tensor(out_data, parents=(a,), vjp=vjp)


def log(a):
    a = as_tensor(a)

    def vjp(g):
        return [(a, mul(g, power(a, -1.0)))]

    return Tensor(np.log(a.data), parents=(a,), vjp=vjp)


def sqrt(a):
    """Elementwise square root; gradient is 0 where the input is exactly 0."""
    a = as_tensor(a)
    out_data = np.sqrt(a.data)

    def vjp(g):
        nonzero = a.data > 0.0
        safe = np.where(nonzero, out_data, 1.0)
        scale = Tensor(np.where(nonzero, 0.5, 0.0))
        # d sqrt = 0.5 / sqrt(a); recompute from `a` so the chain stays
        # differentiable for second-order passes.
        return [(a, mul(g, mul(scale, power(_where_const(nonzero, a, safe), -0.5))))]

    return Tensor(out_data, parents=(a,), vjp=vjp)


def _where_const(mask, a, fallback_data):
    """a where mask, constant fallback elsewhere (keeps graph through a)."""
    m = Tensor(mask.astype(np.float64))
    return add(mul(a, m), Tensor(np.where(mask, 0.0, fallback_data)))


def tanh(a):
    a = as_tensor(a)
    out_data = np.tanh(a.data)

    def vjp(g):
        # 1 - tanh(a)^2, expressed through the graph for higher-order support
        t = tanh(a)
        return [(a, mul(g, add(Tensor(1.0), neg(mul(t, t)))))]

    return Tensor(out_data, parents=(a,), vjp=vjp)


def sigmoid(a):
    a = as_tensor(a)
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def vjp(g):
        s = sigmoid(a)
        return [(a, mul(g, mul(s, add(Tensor(1.0), neg(s)))))]

    return Tensor(out_data, parents=(a,), vjp=vjp)


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0.0

    def vjp(g):
        return [(a, mul(g, Tensor(mask.astype(np.float64))))]

    return Tensor(np.where(mask, a.data, 0.0), parents=(a,), vjp=vjp)


def leaky_relu(a, slope=0.2):
    a = as_tensor(a)
    factor = np.where(a.data > 0.0, 1.0, slope)

    def vjp(g):
        return [(a, mul(g, Tensor(factor)))]

    return Tensor(a.data * factor, parents=(a,), vjp=vjp)


# -- shape primitives ----------------------------------------------------

def reshape(a, shape):
    a = as_tensor(a)
    orig = a.shape

    def vjp(g):
        return [(a, reshape(g, orig))]

    return Tensor(a.data.reshape(shape), parents=(a,), vjp=vjp)


def broadcast_to(a, shape):
    a = as_tensor(a)
    shape = tuple(shape)

    def vjp(g):
        return [(a, sum_to(g, a.shape))]

    return Tensor(np.broadcast_to(a.data, shape).copy(), parents=(a,), vjp=vjp)


def sum_to(a, shape):
    """Sum over dimensions so the result has the given (broadcastable) shape."""
    a = as_tensor(a)
    shape = tuple(shape)
    lead = a.ndim - len(shape)
    if lead < 0:
        raise ShapeError(f"cannot sum {a.shape} down to {shape}")
    axes = tuple(range(lead)) + tuple(
        lead + i for i, d in enumerate(shape) if d == 1 and a.shape[lead + i] != 1
    )
    out_data = a.data.sum(axis=axes, keepdims=True) if axes else a.data
    out_data = out_data.reshape(shape)

    def vjp(g):
        return [(a, broadcast_to(reshape(g, (1,) * lead + shape), a.shape))]

    return Tensor(out_data, parents=(a,), vjp=vjp)


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    if axis is None:
        axes = tuple(range(a.ndim))
    elif isinstance(axis, int):
        axes = (axis % a.ndim,)
    else:
        axes = tuple(ax % a.ndim for ax in axis)
    kept = tuple(1 if i in axes else d for i, d in enumerate(a.shape))
    orig = a.shape

    def vjp(g):
        return [(a, broadcast_to(reshape(g, kept), orig))]

    out_data = a.data.sum(axis=axes, keepdims=keepdims)
    if keepdims:
        def vjp_kd(g):
            return [(a, broadcast_to(g, orig))]
        return Tensor(out_data, parents=(a,), vjp=vjp_kd)
    return Tensor(out_data, parents=(a,), vjp=vjp)


def tmean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    if axis is None:
        n = a.size
    elif isinstance(axis, int):
        n = a.shape[axis % a.ndim]
    else:
        n = 1
        for ax in axis:
            n *= a.shape[ax % a.ndim]
    return mul(tsum(a, axis=axis, keepdims=keepdims), Tensor(1.0 / n))


# -- 1-D convolution primitives -----------------------------------------
#
# Three bilinear primitives that are closed under differentiation:
#   conv1d(x, w)            forward cross-correlation
#   conv1d_transpose(y, w)  adjoint of conv1d in x (scatter-add)
#   conv1d_wgrad(x, y)      adjoint of conv1d in w
# Each vjp is expressed with the other two, so gradients of gradients
# (needed by the gradient penalty) come for free.

def _im2col(x, kernel, stride, padding):
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding)))
    B, C, Lp = x.shape
    if Lp < kernel:
        raise ShapeError(f"padded length {Lp} shorter than kernel {kernel}")
    n_out = (Lp - kernel) // stride + 1
    idx = stride * np.arange(n_out)[None, :] + np.arange(kernel)[:, None]
    return x[:, :, idx]  # (B, C, K, n_out)


def conv_output_length(length, kernel, stride, padding):
    """Output length of conv1d; requires exact divisibility."""
    span = length + 2 * padding - kernel
    if span < 0 or span % stride != 0:
        raise ShapeError(
            f"conv1d: length {length} with kernel {kernel}, stride {stride}, "
            f"padding {padding} does not produce an integral output length"
        )
    out = span // stride + 1
    if out < 1:
        raise ShapeError("conv1d: non-positive output length")
    return out


def tconv_output_length(length, kernel, stride, padding):
    out = (length - 1) * stride - 2 * padding + kernel
    if out < 1:
        raise ShapeError("conv1d_transpose: non-positive output length")
    return out


def _conv1d_raw(x, w, stride, padding):
    cols = _im2col(x, w.shape[2], stride, padding)
    return np.einsum("bckj,ock->boj", cols, w, optimize=True)


def _wgrad_raw(x, y, kernel, stride, padding):
    cols = _im2col(x, kernel, stride, padding)
    return np.einsum("bckj,boj->ock", cols, y, optimize=True)


def _tconv_raw(y, w, stride, padding):
    # y: (B, O, J), w: (O, C, K) -> (B, C, (J-1)*stride + K - 2*padding)
    B, O, J = y.shape
    _, C, K = w.shape
    contrib = np.einsum("boj,ock->bckj", y, w, optimize=True)
    full = np.zeros((B, C, (J - 1) * stride + K))
    for k in range(K):
        full[:, :, k : k + stride * J : stride] += contrib[:, :, k, :]
    if padding:
        full = full[:, :, padding : full.shape[2] - padding]
    return full


def conv1d(x, w, stride=1, padding=0):
    """Batched 1-D cross-correlation: x (B,C,L), w (O,C,K) -> (B,O,L_out)."""
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv1d: incompatible shapes {x.shape} and {w.shape}")
    conv_output_length(x.shape[2], w.shape[2], stride, padding)
    out_data = _conv1d_raw(x.data, w.data, stride, padding)

    def vjp(g):
        return [(x, conv1d_transpose(g, w, stride, padding)),
                (w, conv1d_wgrad(x, g, w.shape[2], stride, padding))]

    return Tensor(out_data, parents=(x, w), vjp=vjp)


def conv1d_transpose(y, w, stride=1, padding=0):
    """Adjoint of conv1d in its input: y (B,O,J), w (O,C,K) -> (B,C,L)."""
    y, w = as_tensor(y), as_tensor(w)
    if y.ndim != 3 or w.ndim != 3 or y.shape[1] != w.shape[0]:
        raise ShapeError(f"conv1d_transpose: incompatible shapes {y.shape} and {w.shape}")
    tconv_output_length(y.shape[2], w.shape[2], stride, padding)
    out_data = _tconv_raw(y.data, w.data, stride, padding)

    def vjp(g):
        return [(y, conv1d(g, w, stride, padding)),
                (w, conv1d_wgrad(g, y, w.shape[2], stride, padding))]

    return Tensor(out_data, parents=(y, w), vjp=vjp)


def conv1d_wgrad(x, y, kernel, stride=1, padding=0):
    """Adjoint of conv1d in its weights: x (B,C,L), y (B,O,J) -> (O,C,K)."""
    x, y = as_tensor(x), as_tensor(y)
    out_data = _wgrad_raw(x.data, y.data, kernel, stride, padding)

    def vjp(g):
        return [(x, conv1d_transpose(y, g, stride, padding)),
                (y, conv1d(x, g, stride, padding))]

    return Tensor(out_data, parents=(x, y), vjp=vjp)


# -- backward engine -----------------------------------------------------

def _toposort(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def grad(root, wrt, create_graph=False):
    """Gradients of a scalar ``root`` with respect to the tensors in ``wrt``.

    Returns a list of Tensors aligned with ``wrt``; missing dependencies
    yield zeros. With ``create_graph=True`` the returned tensors stay
    connected to the graph so they can be differentiated again.
    """
    if root.data.size != 1:
        raise ValueError("grad root must be a scalar")
    order = _toposort(root)
    grads = {id(root): Tensor(np.ones_like(root.data))}
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None or node.vjp is None:
            continue
        for parent, pg in node.vjp(g):
            if not parent.requires_grad:
                continue
            cur = grads.get(id(parent))
            grads[id(parent)] = pg if cur is None else add(cur, pg)
    out = []
    for w in wrt:
        g = grads.get(id(w))
        if g is None:
            g = Tensor(np.zeros_like(w.data))
        if not create_graph:
            g = g.detach()
        out.append(g)
    return out


def backward(root):
    """Populate ``.grad`` on every leaf tensor reachable from a scalar root."""
    if root.data.size != 1:
        raise ValueError("backward root must be a scalar")
    order = _toposort(root)
    leaves = [n for n in order if not n.parents and n.requires_grad]
    for leaf, g in zip(leaves, grad(root, leaves)):
        leaf.grad = g.data
    return leaves
