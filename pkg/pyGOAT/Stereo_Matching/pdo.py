"""
Parallel disparity and occlusion estimation from row-wise cross-attention.

Two independent projection heads score every left pixel against every right
pixel of the same image row.  The first volume is normalised over right
pixels and regresses disparity as the column offset to the attended match;
the second is normalised over left pixels, so the mass a left pixel receives
from the right view is evidence of visibility.

Disparity follows x_right = x_left - d with d >= 0, so left column j may
only match right columns k <= j; the other scores are masked before the
softmax.  The `shared` mode scores both volumes with one head pair, as a
single shared cross-attention would.
"""
from dataclasses import dataclass

import numpy as np

from pyGOAT.exceptions import ConfigError
from pyGOAT.Stereo_Matching import tensor as T
from pyGOAT.Stereo_Matching.layers import (conv, init_conv, init_layer_norm, init_linear,
                                           layer_norm, linear)

OCCLUSION_HIDDEN = 16
PDO_MODES = ('parallel', 'shared')
MASKED_SCORE = -1e9


@dataclass
class CrossAttnPair:
    cattn1: T.Tensor  # [H, W_left, W_right], softmax over right pixels
    cattn2: T.Tensor  # [H, W_right, W_left], softmax over left pixels


@dataclass
class DispOccEstimate:
    disparity: T.Tensor  # [H, W], feature-resolution pixels
    occlusion: T.Tensor  # [H, W] in (0, 1), 1 = occluded


def _check_mode(mode):
    if mode not in PDO_MODES:
        raise ConfigError(f"unknown pdo_mode '{mode}'", f"valid modes: {', '.join(PDO_MODES)}")


def init_pdo_weights(params, channels, mode='parallel'):
    """
    Match heads start as the identity on layer-normalised features, so the
    initial scores are feature correlations.
    """
    _check_mode(mode)
    init_layer_norm(params, 'norm', channels)
    heads = ('q1', 'k1', 'q2', 'k2') if mode == 'parallel' else ('q1', 'k1')
    for head in heads:
        init_linear(params, head, channels, channels, init='identity')
    init_conv(params, 'occ.conv1', 1, OCCLUSION_HIDDEN)
    init_conv(params, 'occ.conv2', OCCLUSION_HIDDEN, 1)


def match_mask(width, dtype=np.float32):
    """[W_left, W_right] additive mask: 0 where k <= j, MASKED_SCORE where k > j."""
    return T.Tensor(np.triu(np.full((width, width), MASKED_SCORE), k=1).astype(dtype))


def _row_scores(queries, keys):
    # rows are the batch axis: [H, Wq, C] x [H, C, Wk] -> [H, Wq, Wk]
    scores = T.matmul(queries, T.transpose(keys, (0, 2, 1)))
    return T.scalar_mul(scores, 1.0 / np.sqrt(queries.shape[-1]))


def parallel_cross_attention(pair, params, mode='parallel'):
    """
    Build both cross-attention volumes from aggregated features.

    Parameters
    ----------
    pair : FeaturePair
        [H, W, C] features from the self/cross stack.
    params : ParameterView
        Weights registered by `init_pdo_weights`.
    mode : {'parallel', 'shared'}
        'shared' normalises the q1/k1 scores along both axes instead of
        scoring the second volume with its own heads.

    Returns
    -------
    CrossAttnPair
    """
    _check_mode(mode)
    left = layer_norm(params, 'norm', pair.left)
    right = layer_norm(params, 'norm', pair.right)
    width = left.shape[1]
    mask = match_mask(width, left.dtype)

    s1 = _row_scores(linear(params, 'q1', left), linear(params, 'k1', right)) + mask
    if mode == 'shared':
        s2 = T.transpose(s1, (0, 2, 1))
    else:
        s2 = _row_scores(linear(params, 'q2', right), linear(params, 'k2', left)) \
            + T.transpose(mask)
    return CrossAttnPair(T.softmax(s1, axis=-1), T.softmax(s2, axis=-1))


def regress_disparity(cattn1, raw=False):
    """
    disp(i, j) = j - sum_k cattn1[i, j, k] * k, clamped at zero unless `raw`.
    """
    width = cattn1.shape[-1]
    right_coords = T.Tensor(np.arange(width, dtype=cattn1.dtype).reshape(width, 1))
    expected = T.matmul(cattn1, right_coords).reshape(cattn1.shape[0], cattn1.shape[1])
    left_coords = T.Tensor(np.arange(cattn1.shape[1], dtype=cattn1.dtype))
    disparity = left_coords - expected
    return disparity if raw else T.clamp_min(disparity, 0.0)


def occlusion_evidence(cattn2):
    """e(i, j) = sum_k cattn2[i, k, j]; each row sums to the row width."""
    return T.sum_(cattn2, axis=1)


def regress_occlusion(cattn2, params):
    evidence = occlusion_evidence(cattn2)
    height, width = evidence.shape
    x = evidence.reshape(height, width, 1)
    x = T.relu(conv(params, 'occ.conv1', x))
    logits = conv(params, 'occ.conv2', x)
    return T.sigmoid(logits).reshape(height, width)


def pdo_forward(pair, params, mode='parallel'):
    """
    Initial disparity and occlusion estimate.

    Returns
    -------
    tuple of (DispOccEstimate, CrossAttnPair)
        The volumes are passed on to the refinement loop.
    """
    volumes = parallel_cross_attention(pair, params, mode)
    estimate = DispOccEstimate(regress_disparity(volumes.cattn1),
                               regress_occlusion(volumes.cattn2, params))
    return estimate, volumes
