import contextlib
import itertools
import threading

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from pyGOAT.exceptions import IndexOutOfRangeError, ShapeMismatchError
from pyGOAT.Stereo_Matching.constants import DEFAULT_DTYPE

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

# Creation order of nodes; any input node always has a smaller id than the
# node consuming it, so sorting reachable nodes by id is a topological order.
_node_ids = itertools.count()

_grad_mode = threading.local()


def is_grad_enabled():
    return getattr(_grad_mode, 'enabled', True)


@contextlib.contextmanager
def no_grad():
    """Stop recording nodes in this thread; restores the previous mode on exit."""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


class Node(object):
    """One recorded primitive application: inputs, output shape and backward rule."""

    def __init__(self, op, inputs, out_shape, backward):
        self.id = next(_node_ids)
        self.op = op
        self.inputs = inputs
        self.out_shape = out_shape
        self.backward = backward

    def __repr__(self):
        return "<Node {} op={} out_shape={}>".format(self.id, self.op,
                                                    self.out_shape)


class Tape(object):
    """
    Ordered list of the nodes that contributed to an output tensor.

    The tape is assembled from the output by walking node inputs, then
    sorted into creation (topological) order.  `backward` visits every node
    exactly once, in reverse.
    """

    def __init__(self, nodes):
        self.nodes = nodes

    @classmethod
    def record_from(cls, output):
        seen = set()
        nodes = []
        stack = [output.node] if output.node is not None else []
        while stack:
            node = stack.pop()
            if node.id in seen:
                continue
            seen.add(node.id)
            nodes.append(node)
            for tensor in node.inputs:
                if tensor.node is not None and tensor.node.id not in seen:
                    stack.append(tensor.node)
        nodes.sort(key=lambda n: n.id)
        return cls(nodes)

    def backward(self, output, grad):
        if output.node is None:
            if output.requires_grad:
                output._accumulate(grad)
            return

        pending = {output.node.id: grad}
        for node in reversed(self.nodes):
            node_grad = pending.pop(node.id, None)
            if node_grad is None:
                continue
            input_grads = node.backward(node_grad)
            for tensor, input_grad in zip(node.inputs, input_grads):
                if input_grad is None or not tensor.requires_grad:
                    continue
                if tensor.node is None:  # leaf
                    tensor._accumulate(input_grad)
                elif tensor.node.id in pending:
                    pending[tensor.node.id] = pending[tensor.node.id] + input_grad
                else:
                    pending[tensor.node.id] = input_grad


class Tensor(object):
    """
    Dense float array that records differentiable operations.

    Parameters
    ----------
    data : array_like
        Values.  Float32 and float64 numpy arrays keep their precision;
        Python scalars, lists and every other dtype become 32-bit.
    requires_grad : bool
        Leaves with `requires_grad=True` receive `.grad` after `backward()`.
    dtype : numpy dtype, optional
        Force a precision.
    """

    __array_priority__ = 100  # keeps numpy from hijacking `ndarray * Tensor`

    def __init__(self, data, requires_grad=False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        explicit = isinstance(data, (np.ndarray, np.generic))
        array = np.asarray(data)
        if dtype is None:
            dtype = array.dtype if explicit and array.dtype in _FLOAT_DTYPES \
                else DEFAULT_DTYPE
        array = np.asarray(array, dtype=dtype)
        if not array.flags.c_contiguous:
            array = array.copy(order='C')
        self.data = array
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.node = None

    # -- basic properties -------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        return self.data.item()

    def numpy(self):
        return self.data.copy()

    def __repr__(self):
        return "Tensor(shape={}, dtype={}, requires_grad={})".format(
            self.shape, self.dtype, self.requires_grad)

    # -- autodiff ---------------------------------------------------------
    def _accumulate(self, grad):
        grad = np.array(grad, dtype=self.data.dtype).reshape(self.shape)
        if self.grad is None:
            self.grad = grad
        else:
            self.grad = self.grad + grad

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if grad is None:
            if self.size != 1:
                raise ShapeMismatchError(
                    'backward', [self.shape],
                    'backward() without an explicit gradient needs a scalar '
                    'output')
            grad = np.ones(self.shape, dtype=self.dtype)
        else:
            grad = np.asarray(grad, dtype=self.dtype)
            if grad.shape != self.shape:
                raise ShapeMismatchError('backward', [self.shape, grad.shape])
        Tape.record_from(self).backward(self, grad)

    def detach(self):
        return Tensor(self.data)

    # -- operator sugar ---------------------------------------------------
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

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return slice_(self, key)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)


def as_tensor(value, like=None):
    """Wrap constants as non-differentiable tensors matching `like`'s dtype."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype))


def _make(data, inputs, op, backward):
    requires_grad = is_grad_enabled() and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires_grad)
    if requires_grad:
        out.node = Node(op, inputs, out.shape, backward)
    return out


def _broadcast_shape(op, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatchError(op, [a.shape, b.shape])


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape` along broadcast (size-1 or missing) axes."""
    if grad.shape == tuple(shape):
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _binary_operands(a, b):
    if not isinstance(a, Tensor):
        a = as_tensor(a, like=b)
    if not isinstance(b, Tensor):
        b = as_tensor(b, like=a)
    return a, b


def _normalize_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    normalized = []
    for ax in axis:
        if not -ndim <= ax < ndim:
            raise IndexOutOfRangeError('axis', 'axis {}'.format(ax), (ndim,))
        normalized.append(ax % ndim)
    return tuple(sorted(normalized))


# ---------------------------------------------------------------------------
# Elementwise
# ---------------------------------------------------------------------------
def add(a, b):
    a, b = _binary_operands(a, b)
    _broadcast_shape('add', a, b)

    def backward(g):
        return [_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)]
    return _make(a.data + b.data, [a, b], 'add', backward)


def sub(a, b):
    a, b = _binary_operands(a, b)
    _broadcast_shape('sub', a, b)

    def backward(g):
        return [_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)]
    return _make(a.data - b.data, [a, b], 'sub', backward)


def mul(a, b):
    a, b = _binary_operands(a, b)
    _broadcast_shape('mul', a, b)

    def backward(g):
        return [_unbroadcast(g * b.data, a.shape),
                _unbroadcast(g * a.data, b.shape)]
    return _make(a.data * b.data, [a, b], 'mul', backward)


def div(a, b):
    a, b = _binary_operands(a, b)
    _broadcast_shape('div', a, b)

    def backward(g):
        return [_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.shape)]
    return _make(a.data / b.data, [a, b], 'div', backward)


def scalar_mul(a, s):
    s = float(s)

    def backward(g):
        return [g * s]
    return _make(a.data * a.dtype.type(s), [a], 'scalar_mul', backward)


def neg(a):
    return scalar_mul(a, -1.0)


def relu(a):
    mask = a.data > 0

    def backward(g):
        return [g * mask]
    return _make(np.where(mask, a.data, 0).astype(a.dtype), [a], 'relu',
                 backward)


def sigmoid(a):
    y = expit(a.data)

    def backward(g):
        return [g * y * (1 - y)]
    return _make(y, [a], 'sigmoid', backward)


def tanh(a):
    y = np.tanh(a.data)

    def backward(g):
        return [g * (1 - y * y)]
    return _make(y, [a], 'tanh', backward)


def exp(a):
    y = np.exp(a.data)

    def backward(g):
        return [g * y]
    return _make(y, [a], 'exp', backward)


def log(a):
    def backward(g):
        return [g / a.data]
    return _make(np.log(a.data), [a], 'log', backward)


def abs_(a):
    def backward(g):
        return [g * np.sign(a.data)]
    return _make(np.abs(a.data), [a], 'abs', backward)


def pow_(a, exponent):
    exponent = float(exponent)

    def backward(g):
        return [g * exponent * a.data ** (exponent - 1)]
    return _make(a.data ** exponent, [a], 'pow', backward)


def clamp_min(a, lower):
    mask = a.data > lower

    def backward(g):
        return [g * mask]
    return _make(np.maximum(a.data, a.dtype.type(lower)), [a], 'clamp_min',
                 backward)


def clamp_max(a, upper):
    mask = a.data < upper

    def backward(g):
        return [g * mask]
    return _make(np.minimum(a.data, a.dtype.type(upper)), [a], 'clamp_max',
                 backward)


def clip(a, lower, upper):
    return clamp_max(clamp_min(a, lower), upper)


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------
def sum_(a, axis=None, keepdims=False):
    axes = _normalize_axes(axis, a.ndim)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return [np.broadcast_to(g, a.shape)]
    return _make(a.data.sum(axis=axes, keepdims=keepdims), [a], 'sum',
                 backward)


def mean(a, axis=None, keepdims=False):
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return scalar_mul(sum_(a, axes, keepdims), 1.0 / count)


def softmax(a, axis=-1):
    """Numerically stable softmax; slices along `axis` sum to one."""
    axis = _normalize_axes(axis, a.ndim)[0]
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return [y * (g - (g * y).sum(axis=axis, keepdims=True))]
    return _make(y, [a], 'softmax', backward)


# ---------------------------------------------------------------------------
# Contractions
# ---------------------------------------------------------------------------
def matmul(a, b):
    a, b = _binary_operands(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError('matmul', [a.shape, b.shape],
                                 'inner dimensions must agree')
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeMismatchError('matmul', [a.shape, b.shape],
                                 'batch dimensions must agree or broadcast')

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return [_unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)]
    return _make(np.matmul(a.data, b.data), [a, b], 'matmul', backward)


def _im2col(xp, kh, kw, stride, out_h, out_w):
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride][:, :, :out_h, :out_w]
    batch, channels = xp.shape[:2]
    cols = windows.transpose(0, 2, 3, 1, 4, 5)
    return cols.reshape(batch * out_h * out_w, channels * kh * kw)


def conv2d(x, w, b=None, stride=1, padding=0):
    """
    2-D cross-correlation by explicit im2col followed by a matrix product.

    Parameters
    ----------
    x : Tensor
        Input of shape [B, C, H, W].
    w : Tensor
        Kernels of shape [O, C, kh, kw] with odd kh and kw.
    b : Tensor, optional
        Bias of shape [O].
    stride, padding : int

    Returns
    -------
    Tensor
        Output of shape [B, O, H', W'], H' = (H + 2*padding - kh) // stride + 1.
    """
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeMismatchError('conv2d', [x.shape, w.shape],
                                 'expected [B,C,H,W] input and [O,C,kh,kw] '
                                 'kernels')
    batch, channels, height, width = x.shape
    out_channels, in_channels, kh, kw = w.shape
    if channels != in_channels:
        raise ShapeMismatchError('conv2d', [x.shape, w.shape],
                                 'input has {} channels, kernels expect {}'
                                 .format(channels, in_channels))
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeMismatchError('conv2d', [w.shape], 'kernel sizes must be odd')
    if b is not None and b.shape != (out_channels,):
        raise ShapeMismatchError('conv2d', [w.shape, b.shape], 'bias shape')

    out_h = (height + 2 * padding - kh) // stride + 1
    out_w = (width + 2 * padding - kw) // stride + 1
    pads = ((0, 0), (0, 0), (padding, padding), (padding, padding))
    xp = np.pad(x.data, pads)
    cols = _im2col(xp, kh, kw, stride, out_h, out_w)
    wmat = w.data.reshape(out_channels, -1)

    out = cols @ wmat.T
    out = out.reshape(batch, out_h, out_w, out_channels).transpose(0, 3, 1, 2)
    if b is not None:
        out = out + b.data.reshape(1, -1, 1, 1)

    def backward(g):
        gmat = g.transpose(0, 2, 3, 1).reshape(-1, out_channels)
        gw = (gmat.T @ cols).reshape(w.shape)
        gcols = (gmat @ wmat).reshape(batch, out_h, out_w, channels, kh, kw)
        gxp = np.zeros(xp.shape, dtype=np.result_type(g, wmat))
        for i in range(kh):
            for j in range(kw):
                gxp[:, :,
                    i:i + stride * out_h:stride,
                    j:j + stride * out_w:stride] += \
                    gcols[..., i, j].transpose(0, 3, 1, 2)
        gx = gxp[:, :, padding:padding + height, padding:padding + width]
        grads = [gx, gw]
        if b is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    inputs = [x, w] + ([b] if b is not None else [])
    return _make(np.ascontiguousarray(out), inputs, 'conv2d', backward)


# ---------------------------------------------------------------------------
# Shape manipulation
# ---------------------------------------------------------------------------
def reshape(a, shape):
    shape = tuple(shape)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeMismatchError('reshape', [a.shape, shape])

    def backward(g):
        return [g.reshape(a.shape)]
    return _make(data, [a], 'reshape', backward)


def transpose(a, axes=None):
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    if sorted(ax % a.ndim for ax in axes) != list(range(a.ndim)):
        raise ShapeMismatchError('transpose', [a.shape, axes],
                                 'axes must be a permutation')
    inverse = tuple(np.argsort([ax % a.ndim for ax in axes]))

    def backward(g):
        return [np.transpose(g, inverse)]
    return _make(np.transpose(a.data, axes), [a], 'transpose', backward)


def concat(tensors, axis=0):
    tensors = list(tensors)
    first = tensors[0]
    axis = axis % first.ndim
    for t in tensors[1:]:
        if t.ndim != first.ndim or any(
                t.shape[d] != first.shape[d]
                for d in range(first.ndim) if d != axis):
            raise ShapeMismatchError('concat', [s.shape for s in tensors])
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return np.split(g, splits, axis=axis)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    return _make(data, tensors, 'concat', backward)


def slice_(a, key):
    try:
        data = a.data[key]
    except IndexError as e:
        raise IndexOutOfRangeError('slice', str(e), a.shape)

    def backward(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        full[key] = g
        return [full]
    return _make(np.array(data), [a], 'slice', backward)


def gather_axis(a, indices, axis):
    """
    Read `a` at integer `indices` along `axis` (take-along-axis semantics).

    `indices` has the rank of `a` and matches it on every other axis.  The
    backward pass scatters gradient only to the gathered positions, summing
    repeats.
    """
    indices = np.asarray(indices)
    axis = axis % a.ndim
    if indices.ndim != a.ndim or any(
            indices.shape[d] != a.shape[d] for d in range(a.ndim) if d != axis):
        raise ShapeMismatchError('gather_axis', [a.shape, indices.shape])
    if indices.size and (indices.min() < 0 or indices.max() >= a.shape[axis]):
        raise IndexOutOfRangeError(
            'gather_axis',
            'indices span [{}, {}] on axis {}'.format(indices.min(),
                                                       indices.max(), axis),
            a.shape)

    def backward(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        index = list(np.indices(indices.shape, sparse=True))
        index[axis] = indices
        np.add.at(full, tuple(index), g)
        return [full]
    return _make(np.take_along_axis(a.data, indices, axis=axis), [a],
                 'gather_axis', backward)


def _unpad_edge(g, pad_width):
    for axis, (before, after) in enumerate(pad_width):
        if before == 0 and after == 0:
            continue
        n = g.shape[axis] - before - after
        core = np.take(g, np.arange(before, before + n), axis=axis)
        index = [slice(None)] * g.ndim
        if before:
            index[axis] = slice(0, 1)
            core[tuple(index)] += np.take(
                g, np.arange(0, before), axis=axis).sum(axis=axis,
                                                        keepdims=True)
        if after:
            index[axis] = slice(n - 1, n)
            core[tuple(index)] += np.take(
                g, np.arange(before + n, g.shape[axis]), axis=axis).sum(
                    axis=axis, keepdims=True)
        g = core
    return g


def pad(a, pad_width, mode='constant'):
    """Pad with zeros (`constant`) or by replicating borders (`edge`)."""
    pad_width = [tuple(p) for p in pad_width]
    if len(pad_width) != a.ndim:
        raise ShapeMismatchError('pad', [a.shape, pad_width])
    if mode not in ('constant', 'edge'):
        raise ValueError("pad mode must be 'constant' or 'edge'")

    def backward(g):
        if mode == 'edge':
            return [_unpad_edge(g, pad_width)]
        index = tuple(slice(before, before + n)
                      for (before, _), n in zip(pad_width, a.shape))
        return [g[index]]
    return _make(np.pad(a.data, pad_width, mode=mode), [a], 'pad', backward)


# ---------------------------------------------------------------------------
# Composites
# ---------------------------------------------------------------------------
def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalise over the last axis, then scale by `gamma` and shift by `beta`."""
    centered = x - mean(x, axis=-1, keepdims=True)
    variance = mean(centered * centered, axis=-1, keepdims=True)
    normalized = centered * pow_(variance + eps, -0.5)
    return normalized * gamma + beta
