"""
Binary PGM (P5) and PPM (P6) images with maxval 255, plus disparity colouring.
"""
from pathlib import Path

import matplotlib
import numpy as np

from pyGOAT.exceptions import DataFormatError
from pyGOAT.Stereo_Matching.constants import DISPARITY_COLORMAP


def _normalise(array, value_range):
    array = np.asarray(array, dtype=np.float64)
    finite = np.isfinite(array)
    if value_range is None:
        if not finite.any():
            return np.zeros_like(array)
        low, high = array[finite].min(), array[finite].max()
    else:
        low, high = value_range
    span = high - low
    scaled = (array - low) / span if span > 0 else np.zeros_like(array)
    return np.where(finite, np.clip(scaled, 0.0, 1.0), 0.0)


def quantize(array, value_range=(0.0, 1.0)):
    """Map `value_range` linearly to 0..255 with rounding; None means min-max."""
    return np.round(_normalise(array, value_range) * 255).astype(np.uint8)


def image_write(path, image, kind=None, value_range=(0.0, 1.0)):
    """
    Write a binary PGM or PPM.

    Parameters
    ----------
    path : str or Path
    image : ndarray
        [H, W] map or [H, W, 3] colour image.
    kind : {'PGM', 'PPM'}, optional
        Defaults to PPM for three channels and PGM otherwise.
    value_range : tuple of float or None
        Values mapped to 0 and 255.  None normalises by the finite min and
        max, which is how disparity maps are visualised.
    """
    image = np.asarray(image)
    if kind is None:
        kind = 'PPM' if image.ndim == 3 else 'PGM'
    if kind == 'PGM' and image.ndim != 2:
        raise DataFormatError(str(path), f"PGM needs a 2-D array, got shape {image.shape}")
    if kind == 'PPM' and (image.ndim != 3 or image.shape[2] != 3):
        raise DataFormatError(str(path), f"PPM needs an [H, W, 3] array, got {image.shape}")
    if kind not in ('PGM', 'PPM'):
        raise DataFormatError(str(path), f"unsupported image kind '{kind}'")

    pixels = quantize(image, value_range)
    height, width = image.shape[:2]
    magic = 'P5' if kind == 'PGM' else 'P6'
    header = f"{magic}\n{width} {height}\n255\n".encode('ascii')
    try:
        Path(path).write_bytes(header + np.ascontiguousarray(pixels).tobytes())
    except OSError as e:
        raise DataFormatError(str(path), "cannot be written", str(e))


def _tokens(buffer, count, filename):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(buffer) and buffer[pos:pos + 1].isspace():
            pos += 1
        if buffer[pos:pos + 1] == b'#':
            while pos < len(buffer) and buffer[pos:pos + 1] != b'\n':
                pos += 1
            continue
        start = pos
        while pos < len(buffer) and not buffer[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataFormatError(filename, "header ends early")
        tokens.append(buffer[start:pos].decode('latin-1'))
    return tokens, pos + 1  # exactly one whitespace byte precedes the raster


def image_read(path):
    """
    Read a binary PGM/PPM into float32 values in [0, 1].

    Returns
    -------
    ndarray
        [H, W] for P5, [H, W, 3] for P6.
    """
    filename = str(path)
    try:
        buffer = Path(path).read_bytes()
    except OSError as e:
        raise DataFormatError(filename, "cannot be read", str(e))
    (magic, width, height, maxval), offset = _tokens(buffer, 4, filename)
    if magic not in ('P5', 'P6'):
        raise DataFormatError(filename, f"unsupported magic '{magic}'")
    if maxval != '255':
        raise DataFormatError(filename, f"maxval must be 255, got {maxval}")
    if offset > len(buffer):
        raise DataFormatError(filename, "has no raster after the header")
    width, height = int(width), int(height)
    channels = 3 if magic == 'P6' else 1
    raster = np.frombuffer(buffer, dtype=np.uint8, offset=offset)
    if raster.size != width * height * channels:
        raise DataFormatError(filename, "raster has the wrong size",
                              f"expected {width * height * channels} bytes, found {raster.size}")
    shape = (height, width, 3) if channels == 3 else (height, width)
    return (raster.reshape(shape) / 255.0).astype(np.float32)


def disparity_to_color(disparity, value_range=None, cmap=DISPARITY_COLORMAP):
    """[H, W] disparity -> [H, W, 3] colours in [0, 1] through a matplotlib colour map."""
    colormap = matplotlib.colormaps[cmap]
    return colormap(_normalise(disparity, value_range))[..., :3].astype(np.float32)
