"""
Iterative occlusion-aware refinement of the initial disparity.

Each iteration samples the first cross-attention volume around the current
match, encodes it together with the disparity, blends local and globally
aggregated features according to the predicted occlusion, and lets a
convolutional GRU regress a disparity residual plus a convex upsampling
mask.  A residual context network adjusts the last full-resolution map.
"""
import logging
from dataclasses import dataclass

import numpy as np

from pyGOAT.exceptions import AttentionCapError, ConfigError, ShapeMismatchError
from pyGOAT.Stereo_Matching import tensor as T
from pyGOAT.Stereo_Matching.attention import positional_encoding
from pyGOAT.Stereo_Matching.layers import conv, init_conv, init_linear, linear

logger = logging.getLogger(__name__)

AGGREGATION_MODES = ('occlusion_aware', 'printed', 'local_only', 'global_only')
CONTEXT_HIDDEN = 16
CONTEXT_RESBLOCKS = 4
MASK_SCALE = 0.25
NEIGHBOURS = 9


@dataclass
class OGAConfig:
    radius: int = 4
    scale: int = 4
    hidden_channels: int = 32
    matching_channels: int = 32
    context_channels: int = 32
    global_attention_cap: int = 4096
    aggregation_mode: str = 'occlusion_aware'
    context_adjustment: bool = True

    def __post_init__(self):
        if self.radius < 1:
            raise ConfigError(f"lookup radius must be at least 1, got {self.radius}")
        if self.aggregation_mode not in AGGREGATION_MODES:
            raise ConfigError(f"unknown aggregation_mode '{self.aggregation_mode}'",
                              f"valid modes: {', '.join(AGGREGATION_MODES)}")


@dataclass
class IterState:
    d: T.Tensor  # [H, W]
    hidden: T.Tensor  # [H, W, Ch]
    t: int = 0


@dataclass
class GlobalAttnMatrix:
    A: T.Tensor  # [H*W, H*W], row-stochastic


@dataclass
class UpsampleMask:
    mask: T.Tensor  # [H, W, 9, S, S], softmax over the neighbour axis
    scale: int


def init_oga_weights(params, cfg):
    c_corr = 2 * cfg.radius + 1
    c_ctx = cfg.context_channels
    c_feat = cfg.matching_channels + c_ctx
    ch = cfg.hidden_channels
    s2 = cfg.scale * cfg.scale

    init_linear(params, 'global.q', c_ctx, c_ctx)
    init_linear(params, 'global.k', c_ctx, c_ctx)
    init_conv(params, 'enc.conv1', 1 + c_corr, cfg.matching_channels)
    init_conv(params, 'enc.conv2', cfg.matching_channels, cfg.matching_channels)
    init_conv(params, 'hidden_init', c_ctx, ch)
    for gate in ('convz', 'convr', 'convq'):
        init_conv(params, 'gru.' + gate, ch + c_feat, ch)
    init_conv(params, 'head.disp1', ch, ch)
    init_conv(params, 'head.disp2', ch, 1)
    init_conv(params, 'head.mask1', ch, ch)
    init_conv(params, 'head.mask2', ch, NEIGHBOURS * s2, kernel=1)
    init_context_weights(params)


def init_context_weights(params):
    init_conv(params, 'ctx.in', 4, CONTEXT_HIDDEN)
    for block in range(CONTEXT_RESBLOCKS):
        init_conv(params, f'ctx.res{block}.conv1', CONTEXT_HIDDEN, CONTEXT_HIDDEN)
        init_conv(params, f'ctx.res{block}.conv2', CONTEXT_HIDDEN, CONTEXT_HIDDEN)
    init_conv(params, 'ctx.out', CONTEXT_HIDDEN, 1, init='zeros')


def lookup_local_corr(cattn1, d, radius):
    """
    Sample cattn1[i, j, j - d(i, j) + o] for o in [-r, r].

    Linear interpolation along the right-pixel axis; positions outside the
    row read zero.  Differentiable in both `cattn1` and `d`.

    Returns
    -------
    Tensor[H, W, 2r+1]
    """
    height, width, width_r = cattn1.shape
    if d.shape != (height, width):
        raise ShapeMismatchError('lookup_local_corr', [cattn1.shape, d.shape])
    offsets = np.arange(-radius, radius + 1, dtype=d.dtype)
    columns = np.arange(width, dtype=d.dtype).reshape(1, width, 1)
    centre = T.Tensor(columns) - d.reshape(height, width, 1)
    positions = centre + T.Tensor(offsets)  # [H, W, 2r+1]

    base = np.floor(positions.data)
    frac = positions - T.Tensor(base.astype(positions.dtype))
    samples = []
    for shift, weight in ((0, 1 - frac), (1, frac)):
        index = base + shift
        inside = ((index >= 0) & (index <= width_r - 1)).astype(cattn1.dtype)
        gathered = T.gather_axis(cattn1, np.clip(index, 0, width_r - 1).astype(np.int64),
                                 axis=2)
        samples.append(gathered * weight * inside)
    return samples[0] + samples[1]


def global_attention_matrix(F1p, params, cap=4096, use_positional_encoding=True):
    """
    Row-stochastic spatial self-attention of the left context features.

    Parameters
    ----------
    F1p : Tensor[H, W, Cc]
    params : ParameterView
        Holds the 'global.q' and 'global.k' projections.
    cap : int
        Largest H*W accepted.
    use_positional_encoding : bool
        Add the 2-D sinusoidal encoding before projecting.

    Returns
    -------
    GlobalAttnMatrix
    """
    height, width, channels = F1p.shape
    num_pixels = height * width
    if num_pixels > cap:
        raise AttentionCapError(num_pixels, cap)
    x = F1p + positional_encoding(height, width, channels) if use_positional_encoding \
        else F1p
    flat = x.reshape(num_pixels, channels)
    q = linear(params, 'global.q', flat)
    k = linear(params, 'global.k', flat)
    scores = T.scalar_mul(T.matmul(q, T.transpose(k)), 1.0 / np.sqrt(channels))
    return GlobalAttnMatrix(T.softmax(scores, axis=-1))


def aggregate(F_local, A, M_occ, mode='occlusion_aware'):
    """
    Blend local and globally aggregated features by the occlusion probability.

    With the default mode, non-occluded pixels keep `F_local` and occluded
    pixels take `F_global = A @ F_local`:

        F_ada = F_local * (1 - M) + F_global * M

    `printed` swaps the two gates; `local_only` and `global_only` return one
    side unconditionally.
    """
    if mode not in AGGREGATION_MODES:
        raise ConfigError(f"unknown aggregation_mode '{mode}'")
    if mode == 'local_only':
        return F_local
    height, width, channels = F_local.shape
    F_global = T.matmul(A.A, F_local.reshape(height * width, channels))
    F_global = F_global.reshape(height, width, channels)
    if mode == 'global_only':
        return F_global

    M_occ = T.as_tensor(M_occ, like=F_local)
    if M_occ.shape != (height, width):
        raise ShapeMismatchError('aggregate', [F_local.shape, M_occ.shape])
    gate = M_occ.reshape(height, width, 1)
    keep = 1.0 - gate
    if mode == 'printed':
        gate, keep = keep, gate
    return F_local * keep + F_global * gate


def disparity_encoder(d, corr, params):
    height, width = d.shape
    x = T.concat([d.reshape(height, width, 1), corr], axis=2)
    x = T.relu(conv(params, 'enc.conv1', x))
    return T.relu(conv(params, 'enc.conv2', x))


def initial_hidden(F1p, params):
    return T.tanh(conv(params, 'hidden_init', F1p))


def gru_update(state, F_ada, params, scale):
    """
    One convolutional GRU step followed by the disparity and mask heads.

    h' = z * h + (1 - z) * q, so a saturated update gate keeps the state.

    Returns
    -------
    tuple of (IterState, UpsampleMask)
    """
    h = state.hidden
    height, width, _ = h.shape
    hx = T.concat([h, F_ada], axis=2)
    z = T.sigmoid(conv(params, 'gru.convz', hx))
    r = T.sigmoid(conv(params, 'gru.convr', hx))
    q = T.tanh(conv(params, 'gru.convq', T.concat([r * h, F_ada], axis=2)))
    h = z * h + (1.0 - z) * q

    d_res = conv(params, 'head.disp2', T.relu(conv(params, 'head.disp1', h)))
    d = T.clamp_min(state.d + d_res.reshape(height, width), 0.0)

    logits = conv(params, 'head.mask2', T.relu(conv(params, 'head.mask1', h)))
    logits = T.scalar_mul(logits, MASK_SCALE).reshape(height, width, NEIGHBOURS, scale, scale)
    mask = UpsampleMask(T.softmax(logits, axis=2), scale)
    return IterState(d, h, state.t + 1), mask


def convex_upsample(d, mask):
    """
    Upsample [H, W] to [H*S, W*S] with a learned convex 3x3 combination.

    Borders replicate the edge values.  Values are multiplied by S so they
    are expressed in fine-grid pixels.
    """
    height, width = d.shape
    s = mask.scale
    if mask.mask.shape != (height, width, NEIGHBOURS, s, s):
        raise ShapeMismatchError('convex_upsample', [d.shape, mask.mask.shape])
    padded = T.pad(d, ((1, 1), (1, 1)), mode='edge')
    neighbours = T.concat([
        padded[dy:dy + height, dx:dx + width].reshape(height, width, 1)
        for dy in range(3) for dx in range(3)
    ], axis=2).reshape(height, width, NEIGHBOURS, 1, 1)
    fine = T.sum_(mask.mask * neighbours, axis=2)  # [H, W, S, S]
    fine = T.transpose(T.scalar_mul(fine, s), (0, 2, 1, 3))
    return fine.reshape(height * s, width * s)


def context_adjust(d_up, left_image, params):
    """
    d_final = max(0, d_up + residual(left_image, d_up)) through residual blocks.
    """
    if left_image.shape[:2] != d_up.shape:
        raise ShapeMismatchError('context_adjust', [d_up.shape, left_image.shape])
    height, width = d_up.shape
    x = T.concat([T.as_tensor(left_image, like=d_up), d_up.reshape(height, width, 1)], axis=2)
    x = T.relu(conv(params, 'ctx.in', x))
    for block in range(CONTEXT_RESBLOCKS):
        name = f'ctx.res{block}'
        branch = conv(params, name + '.conv2', T.relu(conv(params, name + '.conv1', x)))
        x = T.relu(x + branch)
    residual = conv(params, 'ctx.out', x).reshape(height, width)
    return T.clamp_min(d_up + residual, 0.0)


def oga_run(init, cattn1, F1p, left_image, iterations, params, cfg):
    """
    Run the refinement loop.

    Parameters
    ----------
    init : DispOccEstimate
        Initial disparity and occlusion gate, both at feature resolution.
    cattn1 : Tensor[H, W, W]
    F1p : Tensor[H, W, Cc]
        Left context features.
    left_image : Tensor[H*S, W*S, 3]
    iterations : int
    params : ParameterView
    cfg : OGAConfig

    Returns
    -------
    tuple of (list of Tensor, Tensor)
        One upsampled disparity per iteration and the context-adjusted map.
    """
    if iterations < 1:
        raise ConfigError(f"iterations must be at least 1, got {iterations}")
    A = None
    if cfg.aggregation_mode != 'local_only':
        A = global_attention_matrix(F1p, params, cfg.global_attention_cap)

    state = IterState(init.disparity, initial_hidden(F1p, params), 0)
    d_ups = []
    for _ in range(iterations):
        corr = lookup_local_corr(cattn1, state.d, cfg.radius)
        F_local = T.concat([disparity_encoder(state.d, corr, params), F1p], axis=2)
        F_ada = aggregate(F_local, A, init.occlusion, cfg.aggregation_mode)
        state, mask = gru_update(state, F_ada, params, cfg.scale)
        d_ups.append(convex_upsample(state.d, mask))
        logger.debug("iteration %d: mean disparity %.4f", state.t, float(state.d.data.mean()))

    d_final = context_adjust(d_ups[-1], left_image, params) if cfg.context_adjustment \
        else d_ups[-1]
    return d_ups, d_final
