from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from pyGOAT.exceptions import ShapeMismatchError


@dataclass
class StereoSample:
    """
    Rectified image pair with optional ground truth.

    Images are float32 [H, W, 3] in [0, 1].  Disparities are float32 [H, W]
    in pixels; `gt_occlusion` is uint8 with 1 = occluded; `valid` marks
    pixels with usable left-view ground truth.
    """

    left: np.ndarray
    right: np.ndarray
    gt_disp_left: Optional[np.ndarray] = None
    gt_disp_right: Optional[np.ndarray] = None
    gt_occlusion: Optional[np.ndarray] = None
    valid: Optional[np.ndarray] = None
    sample_id: str = ''
    seed: Optional[int] = None

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ShapeMismatchError('StereoSample', [self.left.shape, self.right.shape],
                                     'left and right images must share a shape')
        if self.valid is None and self.gt_disp_left is not None:
            self.valid = valid_mask(self.gt_disp_left)

    @property
    def shape(self):
        return self.left.shape[:2]

    def copy(self, **changes):
        return replace(self, **changes)


def valid_mask(disparity):
    """Pixels whose disparity is finite and nonnegative."""
    disparity = np.asarray(disparity)
    with np.errstate(invalid='ignore'):
        return np.isfinite(disparity) & (disparity >= 0)
