"""
Full stereo network: shared feature extractor, self/cross attention, parallel
disparity/occlusion estimation and the iterative refinement loop.

The encoders convolve at image resolution and average-pool to the feature
stride, so a fractional feature-grid shift between the views blends two
neighbouring feature pixels instead of decorrelating them.
"""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from pyGOAT.exceptions import ShapeMismatchError
from pyGOAT.Stereo_Matching import tensor as T
from pyGOAT.Stereo_Matching.attention import (AttentionConfig, FeaturePair,
                                              init_self_cross_weights, self_cross_block)
from pyGOAT.Stereo_Matching.layers import avg_pool, conv, init_conv
from pyGOAT.Stereo_Matching.oga import OGAConfig, init_oga_weights, oga_run
from pyGOAT.Stereo_Matching.parameters import ParameterStore
from pyGOAT.Stereo_Matching.pdo import CrossAttnPair, DispOccEstimate, init_pdo_weights, pdo_forward

logger = logging.getLogger(__name__)

STEM_CHANNELS = 16


@dataclass
class GOATOutput:
    d_ups: List[T.Tensor]  # index 0: initial disparity, nearest-upsampled
    d_final: T.Tensor
    occlusion: T.Tensor  # feature resolution
    occlusion_full: T.Tensor  # nearest-upsampled to image resolution
    initial: DispOccEstimate
    volumes: CrossAttnPair


def init_encoder(params, out_channels):
    init_conv(params, 'stem', 3, STEM_CHANNELS)
    init_conv(params, 'mid', STEM_CHANNELS, out_channels)
    init_conv(params, 'out', out_channels, out_channels)


def encode(params, image, scale):
    """[H, W, 3] image in [0, 1] -> [H/S, W/S, C] features."""
    x = T.relu(conv(params, 'stem', T.scalar_mul(image, 2.0) - 1.0))
    x = T.relu(conv(params, 'mid', x))
    return conv(params, 'out', avg_pool(x, scale))


def upsample_nearest(x, scale, factor=1.0):
    """Replicate each pixel of an [H, W] map into an S x S block, times `factor`."""
    height, width = x.shape
    block = T.Tensor(np.full((1, scale, 1, scale), factor, dtype=x.dtype))
    return (x.reshape(height, 1, width, 1) * block).reshape(height * scale, width * scale)


class GOATModel(object):
    """
    Stereo matching network with its parameters.

    Parameters
    ----------
    config : ModelConfig
    seed : int
        Initialisation seed.
    """

    def __init__(self, config, seed=0):
        self.config = config
        self.params = ParameterStore(seed)
        self.attention_config = AttentionConfig(config.channels, config.num_self_cross_layers,
                                                config.window_grid)
        self.oga_config = OGAConfig(
            radius=config.radius, scale=config.scale, hidden_channels=config.hidden_channels,
            matching_channels=config.matching_channels, context_channels=config.context_channels,
            global_attention_cap=config.global_attention_cap,
            aggregation_mode=config.aggregation_mode,
            context_adjustment=config.context_adjustment)

        init_encoder(self.params.view('features'), config.channels)
        init_encoder(self.params.view('context'), config.context_channels)
        init_self_cross_weights(self.params.view('attention'), self.attention_config,
                                projection_init='zeros')
        init_pdo_weights(self.params.view('pdo'), config.channels, config.pdo_mode)
        init_oga_weights(self.params.view('oga'), self.oga_config)
        logger.debug("initialised %d parameter tensors (%d values)",
                     len(self.params), self.params.num_values())

    def check_image_shape(self, shape):
        rows, cols = self.config.window_grid
        s = self.config.scale
        height, width = shape[:2]
        if height % (s * rows) or width % (s * cols):
            raise ShapeMismatchError(
                'GOATModel', [shape],
                f"image height must be a multiple of {s * rows} and width a multiple of "
                f"{s * cols} (feature stride {s} times the {rows}x{cols} window grid)")

    def forward(self, left, right, iterations=None):
        """
        Run the network on one image pair.

        Parameters
        ----------
        left, right : ndarray or Tensor
            [H, W, 3] images in [0, 1].
        iterations : int, optional
            Refinement iterations; defaults to the configured number.

        Returns
        -------
        GOATOutput
        """
        left, right = T.as_tensor(left), T.as_tensor(right)
        if left.shape != right.shape:
            raise ShapeMismatchError('GOATModel', [left.shape, right.shape],
                                     'left and right images must have the same size')
        self.check_image_shape(left.shape)
        s = self.config.scale
        if iterations is None:
            iterations = self.config.iterations

        features = self.params.view('features')
        pair = FeaturePair(encode(features, left, s), encode(features, right, s))
        pair = self_cross_block(pair, self.attention_config, self.params.view('attention'))
        initial, volumes = pdo_forward(pair, self.params.view('pdo'), self.config.pdo_mode)

        context = encode(self.params.view('context'), left, s)
        d_ups, d_final = oga_run(initial, volumes.cattn1, context, left, iterations,
                                 self.params.view('oga'), self.oga_config)
        return GOATOutput(
            d_ups=[upsample_nearest(initial.disparity, s, factor=s)] + d_ups,
            d_final=d_final,
            occlusion=initial.occlusion,
            occlusion_full=upsample_nearest(initial.occlusion, s),
            initial=initial,
            volumes=volumes)

    def predict(self, left, right):
        """Disparity and occlusion probability at image resolution as numpy arrays."""
        with T.no_grad():
            output = self.forward(left, right)
        return output.d_final.numpy(), output.occlusion_full.numpy()

    def estimate(self, left, right):
        """Left-view disparity as a numpy array."""
        return self.predict(left, right)[0]
