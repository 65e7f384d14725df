"""
Windowed self/cross attention over the feature maps of both views.

Both views are processed with the same weights.  A layer is a self sublayer
(each view attends to itself) followed by a cross sublayer (left queries
attend right keys/values and vice versa).  Attention is restricted to the
cells of a non-shifted `window_grid` partition, identical for both views.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from pyGOAT.exceptions import ConfigError, ShapeMismatchError
from pyGOAT.Stereo_Matching import tensor as T
from pyGOAT.Stereo_Matching.layers import (init_layer_norm, init_linear, init_mlp,
                                           layer_norm, linear, mlp)


@dataclass
class AttentionConfig:
    channels: int
    num_self_cross_layers: int = 2
    window_grid: Tuple[int, int] = (2, 2)
    pe_kind: str = 'sinusoidal-2d'

    def __post_init__(self):
        self.window_grid = tuple(int(n) for n in self.window_grid)
        if self.channels <= 0 or self.channels % 4:
            raise ConfigError(f"attention channels must be a positive multiple of 4, "
                              f"got {self.channels}")
        if self.num_self_cross_layers < 1:
            raise ConfigError("num_self_cross_layers must be at least 1")
        if len(self.window_grid) != 2 or min(self.window_grid) < 1:
            raise ConfigError(f"window_grid must be two positive ints, got {self.window_grid}")
        if self.pe_kind != 'sinusoidal-2d':
            raise ConfigError(f"unsupported positional encoding '{self.pe_kind}'")

    def check_feature_shape(self, height, width):
        rows, cols = self.window_grid
        if height % rows or width % cols:
            raise ShapeMismatchError(
                'window_partition', [(height, width), self.window_grid],
                'feature height/width must be divisible by the window grid')


@dataclass
class FeaturePair:
    left: T.Tensor
    right: T.Tensor

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ShapeMismatchError('FeaturePair', [self.left.shape, self.right.shape])


def positional_encoding(height, width, channels):
    """
    Absolute 2-D sinusoidal encoding of shape [H, W, C].

    Channels [0, C/4) hold sin(x f_k), [C/4, C/2) cos(x f_k); the second half
    repeats the pattern for y.  f_k = 10000^(-k / (C/4)).
    """
    if channels % 4:
        raise ConfigError(f"positional encoding needs channels divisible by 4, got {channels}")
    quarter = channels // 4
    freqs = np.power(10000.0, -np.arange(quarter) / quarter)
    xs = np.arange(width)[:, None] * freqs[None, :]
    ys = np.arange(height)[:, None] * freqs[None, :]
    x_code = np.concatenate([np.sin(xs), np.cos(xs)], axis=1)  # [W, C/2]
    y_code = np.concatenate([np.sin(ys), np.cos(ys)], axis=1)  # [H, C/2]
    code = np.concatenate([
        np.broadcast_to(x_code[None, :, :], (height, width, channels // 2)),
        np.broadcast_to(y_code[:, None, :], (height, width, channels // 2)),
    ], axis=2)
    return T.Tensor(code.astype(np.float32))


def scaled_dot_attention(q, k, v, return_weights=False):
    """
    softmax(Q K^T / sqrt(C)) V over the last two axes; leading axes batch.

    Parameters
    ----------
    q : Tensor[..., N, C]
    k, v : Tensor[..., M, C]
    return_weights : bool
        Also return the [..., N, M] attention weights.
    """
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise ShapeMismatchError('scaled_dot_attention', [q.shape, k.shape, v.shape],
                                 'query/key channels and key/value counts must agree')
    axes = tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2)
    scores = T.scalar_mul(T.matmul(q, T.transpose(k, axes)), 1.0 / np.sqrt(q.shape[-1]))
    weights = T.softmax(scores, axis=-1)
    out = T.matmul(weights, v)
    return (out, weights) if return_weights else out


def window_partition(x, window_grid):
    """[H, W, C] -> [rows*cols, h*w, C] with h = H/rows, w = W/cols."""
    height, width, channels = x.shape
    rows, cols = window_grid
    h, w = height // rows, width // cols
    parts = x.reshape(rows, h, cols, w, channels)
    return T.transpose(parts, (0, 2, 1, 3, 4)).reshape(rows * cols, h * w, channels)


def window_reverse(windows, window_grid, height, width):
    rows, cols = window_grid
    h, w = height // rows, width // cols
    channels = windows.shape[-1]
    parts = windows.reshape(rows, cols, h, w, channels)
    return T.transpose(parts, (0, 2, 1, 3, 4)).reshape(height, width, channels)


def init_self_cross_weights(params, cfg, projection_init='uniform'):
    """
    Register every layer's weights.  `projection_init='zeros'` starts the
    attention output projections at zero, so the attention branches add
    nothing until trained.
    """
    c = cfg.channels
    for layer in range(cfg.num_self_cross_layers):
        for kind in ('self', 'cross'):
            name = f'layer{layer}.{kind}'
            init_layer_norm(params, name + '.norm1', c)
            init_linear(params, name + '.qkv', c, 3 * c)
            init_linear(params, name + '.proj', c, c, projection_init)
            init_layer_norm(params, name + '.norm2', c)
            init_mlp(params, name + '.mlp', c, 2 * c)


def _qkv(params, name, x, pe):
    c = x.shape[-1]
    projected = linear(params, name + '.qkv', layer_norm(params, name + '.norm1', x) + pe)
    return (projected[..., 0:c], projected[..., c:2 * c], projected[..., 2 * c:3 * c])


def _attend(params, name, grid, x, q, k, v):
    height, width, _ = x.shape
    out = scaled_dot_attention(window_partition(q, grid), window_partition(k, grid),
                               window_partition(v, grid))
    x = x + linear(params, name + '.proj', window_reverse(out, grid, height, width))
    return x + mlp(params, name + '.mlp', layer_norm(params, name + '.norm2', x))


def self_cross_block(pair, cfg, params):
    """
    Run `cfg.num_self_cross_layers` alternating self/cross layers.

    Parameters
    ----------
    pair : FeaturePair
        [H, W, C] features of both views.
    cfg : AttentionConfig
    params : ParameterView
        Weights registered by `init_self_cross_weights`.

    Returns
    -------
    FeaturePair
    """
    height, width, channels = pair.left.shape
    if channels != cfg.channels:
        raise ShapeMismatchError('self_cross_block', [pair.left.shape, (cfg.channels,)],
                                 'feature channels differ from the configured width')
    cfg.check_feature_shape(height, width)
    pe = positional_encoding(height, width, channels)
    grid = cfg.window_grid
    left, right = pair.left, pair.right

    for layer in range(cfg.num_self_cross_layers):
        name = f'layer{layer}.self'
        ql, kl, vl = _qkv(params, name, left, pe)
        qr, kr, vr = _qkv(params, name, right, pe)
        left = _attend(params, name, grid, left, ql, kl, vl)
        right = _attend(params, name, grid, right, qr, kr, vr)

        name = f'layer{layer}.cross'
        ql, kl, vl = _qkv(params, name, left, pe)
        qr, kr, vr = _qkv(params, name, right, pe)
        left, right = (_attend(params, name, grid, left, ql, kr, vr),
                       _attend(params, name, grid, right, qr, kl, vl))

    return FeaturePair(left, right)
