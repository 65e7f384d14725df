"""
Synthetic stereo scenes made of fronto-parallel textured rectangles.

Every layer carries its texture in object coordinates, so the left view
reads texel u = x - x0 and the right view reads u = x_r + d - x0.  Nearer
layers (larger disparity) win the z-buffer in both views, which makes
ground-truth disparities and occlusion exact.
"""
import logging
from dataclasses import dataclass

import numpy as np

from pyGOAT.exceptions import SceneSpecError
from pyGOAT.Stereo_Matching.stereo_sample import StereoSample

logger = logging.getLogger(__name__)

TEXTURE_KINDS = ('noise', 'gradient', 'checker')
MAX_LAYERS = 6


@dataclass
class SceneSpec:
    seed: int = 0
    height: int = 64
    width: int = 128
    num_layers: int = 3
    d_max: float = 24
    texture: str = 'noise'
    integer_disparity: bool = True

    def __post_init__(self):
        if self.height < 4 or self.width < 4:
            raise SceneSpecError(f"image size {self.height}x{self.width} is too small")
        if not 1 <= self.num_layers <= MAX_LAYERS:
            raise SceneSpecError(f"num_layers must be between 1 and {MAX_LAYERS}, "
                                 f"got {self.num_layers}")
        if not 0 <= self.d_max < self.width / 4:
            raise SceneSpecError(f"d_max={self.d_max} must be nonnegative and below "
                                 f"width/4 = {self.width / 4}")
        if self.texture not in TEXTURE_KINDS:
            raise SceneSpecError(f"unknown texture kind '{self.texture}'")
        if self.integer_disparity and int(np.floor(self.d_max)) + 1 < self.num_layers:
            raise SceneSpecError(
                f"{self.num_layers} layers need {self.num_layers} distinct integer "
                f"disparities in [0, {self.d_max}]")


@dataclass
class Layer:
    """Textured rectangle whose top-left texel sits at left-view pixel (x0, y0)."""

    x0: int
    y0: int
    disparity: float
    texture: np.ndarray  # [h, w, 3] in [0, 1]

    @property
    def height(self):
        return self.texture.shape[0]

    @property
    def width(self):
        return self.texture.shape[1]

    def covers(self, y, u):
        """Whether object coordinates (row y, continuous column u) lie on the layer."""
        row = y - self.y0
        return (row >= 0) & (row < self.height) & (u >= 0) & (u <= self.width - 1)


def make_texture(rng, kind, height, width):
    if kind == 'noise':
        return rng.uniform(0.0, 1.0, size=(height, width, 3))
    if kind == 'gradient':
        start, stop = rng.uniform(0.0, 1.0, size=(2, 3))
        angle = rng.uniform(0, 2 * np.pi)
        ys, xs = np.mgrid[0:height, 0:width]
        ramp = np.cos(angle) * xs / max(width - 1, 1) + np.sin(angle) * ys / max(height - 1, 1)
        ramp = (ramp - ramp.min()) / max(ramp.max() - ramp.min(), 1e-12)
        # faint noise keeps every texel distinguishable for matching
        texture = start + ramp[..., None] * (stop - start)
        return np.clip(texture + rng.uniform(-0.05, 0.05, size=(height, width, 3)), 0, 1)
    if kind == 'checker':
        cell = int(rng.integers(4, 9))
        colours = rng.uniform(0.0, 1.0, size=(2, 3))
        ys, xs = np.mgrid[0:height, 0:width]
        return colours[((ys // cell) + (xs // cell)) % 2]
    raise SceneSpecError(f"unknown texture kind '{kind}'")


def _sample_row(texture_row, u):
    """Linear interpolation of a [w, 3] texel row at continuous columns u."""
    u0 = np.clip(np.floor(u).astype(int), 0, texture_row.shape[0] - 1)
    u1 = np.clip(u0 + 1, 0, texture_row.shape[0] - 1)
    frac = (u - np.floor(u))[:, None]
    return texture_row[u0] * (1 - frac) + texture_row[u1] * frac


def render_layers(layers, height, width):
    """
    Z-buffer render of both views.

    Parameters
    ----------
    layers : list of Layer
        Disparities must be distinct.  The first layer is drawn first, but
        visibility is decided by disparity only.
    height, width : int

    Returns
    -------
    StereoSample
        Images, dense disparities of both views and the left-view occlusion
        mask.  Pixels no layer covers keep disparity NaN and are invalid.
    """
    disparities = [layer.disparity for layer in layers]
    if len(set(disparities)) != len(disparities):
        raise SceneSpecError("layer disparities must be distinct",
                             f"got {sorted(disparities)}")
    ordered = sorted(layers, key=lambda layer: layer.disparity)

    left = np.zeros((height, width, 3))
    right = np.zeros((height, width, 3))
    disp_left = np.full((height, width), np.nan)
    disp_right = np.full((height, width), np.nan)
    columns = np.arange(width, dtype=np.float64)

    for layer in ordered:  # far to near, so nearer layers overwrite
        for y in range(max(layer.y0, 0), min(layer.y0 + layer.height, height)):
            row = layer.texture[y - layer.y0]
            for view, disp, u in ((left, disp_left, columns - layer.x0),
                                  (right, disp_right, columns + layer.disparity - layer.x0)):
                hit = (u >= 0) & (u <= layer.width - 1)
                if hit.any():
                    view[y, hit] = _sample_row(row, u[hit])
                    disp[y, hit] = layer.disparity

    occlusion = np.zeros((height, width), dtype=np.uint8)
    rows = np.arange(height)[:, None]
    match_x = columns[None, :] - disp_left
    with np.errstate(invalid='ignore'):
        occlusion[match_x < 0] = 1
        for layer in ordered:
            u = match_x + layer.disparity - layer.x0
            covered = layer.covers(rows, u) & (layer.disparity > disp_left)
            occlusion[covered] = 1

    return StereoSample(
        left=left.astype(np.float32), right=right.astype(np.float32),
        gt_disp_left=disp_left.astype(np.float32), gt_disp_right=disp_right.astype(np.float32),
        gt_occlusion=occlusion)


def _draw_disparities(rng, spec):
    if spec.integer_disparity:
        values = rng.choice(int(np.floor(spec.d_max)) + 1, size=spec.num_layers, replace=False)
        return np.sort(values).astype(np.float64)
    values = np.sort(rng.uniform(0, spec.d_max, size=spec.num_layers))
    while len(np.unique(values)) < spec.num_layers:
        values = np.sort(rng.uniform(0, spec.d_max, size=spec.num_layers))
    return values


def synth_scene(spec):
    """
    Render a random scene: a background plane plus num_layers - 1 rectangles.

    Deterministic for a given SceneSpec.
    """
    rng = np.random.default_rng(spec.seed)
    disparities = _draw_disparities(rng, spec)
    h, w = spec.height, spec.width

    # background spans the right view too, whose texels reach u = W - 1 + d
    background_width = w + int(np.ceil(disparities[0])) + 1
    layers = [Layer(0, 0, disparities[0], make_texture(rng, spec.texture, h, background_width))]
    for d in disparities[1:]:
        rect_h = int(rng.integers(max(h // 4, 2), max(h // 2, 3)))
        rect_w = int(rng.integers(max(w // 6, 2), max(w // 3, 3)))
        x0 = int(rng.integers(0, w - rect_w + 1))
        y0 = int(rng.integers(0, h - rect_h + 1))
        layers.append(Layer(x0, y0, d, make_texture(rng, spec.texture, rect_h, rect_w)))

    sample = render_layers(layers, h, w)
    sample.seed = spec.seed
    logger.debug("rendered scene seed=%d with disparities %s", spec.seed, disparities.tolist())
    return sample
