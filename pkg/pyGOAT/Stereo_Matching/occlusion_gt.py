"""
Occlusion masks from a pair of left/right disparity maps.

A left pixel (x, y) with disparity d matches the right pixel (x - d, y).  It
is marked occluded (1) when that position falls outside the right image or
when the right disparity found there differs from d by at least the
threshold.
"""
import logging

import numpy as np
from scipy.ndimage import map_coordinates

from pyGOAT.exceptions import ShapeMismatchError
from pyGOAT.Stereo_Matching.constants import LR_CONSISTENCY_THRESHOLD

logger = logging.getLogger(__name__)


def _as_map(disparity):
    return np.asarray(getattr(disparity, 'data', disparity), dtype=np.float64)


def _consistency(source, target, direction, threshold):
    if source.shape != target.shape or source.ndim != 2:
        raise ShapeMismatchError('consistency check', [source.shape, target.shape])
    height, width = source.shape
    rows, cols = np.mgrid[0:height, 0:width].astype(np.float64)
    sample_x = cols + direction * source

    with np.errstate(invalid='ignore'):
        inside = (sample_x >= 0) & (sample_x <= width - 1)
    coords = np.where(np.isfinite(sample_x), np.clip(sample_x, 0, width - 1), 0.0)
    sampled = map_coordinates(target, [rows, coords], order=1, mode='nearest')
    gap = np.abs(source - sampled)
    with np.errstate(invalid='ignore'):
        occluded = ~inside | ~(gap < threshold)
    return occluded.astype(np.uint8)


def lr_consistency(D_L, D_R, threshold=LR_CONSISTENCY_THRESHOLD):
    """
    Occlusion mask of the left view.

    Parameters
    ----------
    D_L, D_R : ndarray or Tensor
        Dense [H, W] left and right disparities.
    threshold : float
        Gap (px) at or above which a pixel is occluded.

    Returns
    -------
    ndarray of uint8
        1 = occluded.  Non-finite gaps count as occluded.
    """
    return _consistency(_as_map(D_L), _as_map(D_R), -1.0, threshold)


def rl_consistency(D_R, D_L, threshold=LR_CONSISTENCY_THRESHOLD):
    """Occlusion mask of the right view: D_L is sampled at x + D_R."""
    return _consistency(_as_map(D_R), _as_map(D_L), 1.0, threshold)


def hflip(array):
    return np.ascontiguousarray(np.asarray(array)[:, ::-1])


def flipped_inference(estimate, left, right, threshold=LR_CONSISTENCY_THRESHOLD):
    """
    Pseudo right-view disparity from a left-view estimator, then an LR check.

    Parameters
    ----------
    estimate : callable
        (left, right) -> [H, W] left-view disparity.
    left, right : ndarray
        [H, W, 3] images.

    Returns
    -------
    tuple of (ndarray, ndarray, ndarray)
        D_L, D_R and the uint8 occlusion mask.
    """
    D_L = _as_map(estimate(left, right))
    D_R = hflip(_as_map(estimate(hflip(right), hflip(left))))
    mask = lr_consistency(D_L, D_R, threshold)
    logger.debug("flipped inference marked %d of %d pixels occluded",
                 int(mask.sum()), mask.size)
    return D_L, D_R, mask
