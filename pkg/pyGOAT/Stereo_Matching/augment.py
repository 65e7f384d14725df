"""
Photometric and geometric augmentations of a StereoSample.

Every augmentation is deterministic given its seed and returns a new sample;
the input is left untouched.  Factors drawn from the seed can be pinned with
keyword arguments (brightness, contrast, gamma, offset, box).
"""
import numpy as np

from pyGOAT.exceptions import UnknownAugmentationError
from pyGOAT.Stereo_Matching.constants import (CHROMATIC_RANGE, MASK_PATCH_MAX, MASK_PATCH_MIN,
                                              Y_OFFSET_RANGE)


def _chromatic(image, brightness, contrast, gamma):
    mean = image.mean()
    adjusted = image * (brightness * contrast) + mean * (1 - contrast) * brightness
    adjusted = np.clip(adjusted, 0.0, 1.0)
    if gamma != 1:
        adjusted = np.power(adjusted, gamma)
    return adjusted.astype(np.float32)


def _draw_factors(rng, params):
    low, high = CHROMATIC_RANGE
    drawn = rng.uniform(low, high, size=3)
    return (params.get('brightness', drawn[0]), params.get('contrast', drawn[1]),
            params.get('gamma', drawn[2]))


def chromatic(sample, rng, symmetric=True, **params):
    left_factors = _draw_factors(rng, params)
    right_factors = left_factors if symmetric else _draw_factors(rng, params)
    return sample.copy(left=_chromatic(sample.left, *left_factors),
                       right=_chromatic(sample.right, *right_factors))


def _shift_rows(array, offset):
    if array is None or offset == 0:
        return None if array is None else array.copy()
    rows = np.clip(np.arange(array.shape[0]) - offset, 0, array.shape[0] - 1)
    return array[rows]


def y_offset(sample, rng, offset=None):
    """Shift the right view (image and disparity) down by `offset` rows, replicating edges."""
    if offset is None:
        offset = int(rng.integers(Y_OFFSET_RANGE[0], Y_OFFSET_RANGE[1] + 1))
    return sample.copy(right=_shift_rows(sample.right, offset),
                       gt_disp_right=_shift_rows(sample.gt_disp_right, offset))


def _flip(array):
    return None if array is None else np.ascontiguousarray(array[::-1])


def vertical_flip(sample, rng=None):
    return sample.copy(left=_flip(sample.left), right=_flip(sample.right),
                       gt_disp_left=_flip(sample.gt_disp_left),
                       gt_disp_right=_flip(sample.gt_disp_right),
                       gt_occlusion=_flip(sample.gt_occlusion), valid=_flip(sample.valid))


def asymmetric_mask_box(shape, rng):
    """(y0, x0, h, w) of a patch between MASK_PATCH_MIN and MASK_PATCH_MAX, clipped to `shape`."""
    height, width = shape
    h = min(int(rng.integers(MASK_PATCH_MIN[0], MASK_PATCH_MAX[0] + 1)), height)
    w = min(int(rng.integers(MASK_PATCH_MIN[1], MASK_PATCH_MAX[1] + 1)), width)
    y0 = int(rng.integers(0, height - h + 1))
    x0 = int(rng.integers(0, width - w + 1))
    return y0, x0, h, w


def asymmetric_mask(sample, rng, box=None):
    """Fill one rectangle of the right image with its per-channel mean colour."""
    y0, x0, h, w = box if box is not None else asymmetric_mask_box(sample.shape, rng)
    right = sample.right.copy()
    right[y0:y0 + h, x0:x0 + w] = sample.right.reshape(-1, sample.right.shape[-1]).mean(axis=0)
    return sample.copy(right=right)


AUGMENTATIONS = {
    'chromatic_symmetric': lambda s, rng, **p: chromatic(s, rng, True, **p),
    'chromatic_asymmetric': lambda s, rng, **p: chromatic(s, rng, False, **p),
    'y_offset': y_offset,
    'vertical_flip': lambda s, rng, **p: vertical_flip(s),
    'asymmetric_mask': asymmetric_mask,
}


def augment(sample, kind, seed, **params):
    """
    Apply augmentation `kind` to `sample`.

    Parameters
    ----------
    sample : StereoSample
    kind : str
        One of `AUGMENTATIONS`.
    seed : int
    **params
        Pin individual random factors.

    Returns
    -------
    StereoSample
    """
    try:
        function = AUGMENTATIONS[kind]
    except KeyError:
        raise UnknownAugmentationError(kind, AUGMENTATIONS)
    return function(sample, np.random.default_rng(seed), **params)
