from pathlib import Path

import numpy as np

from pyGOAT.exceptions import DataFormatError


def _header_lines(handle, count, filename):
    lines = []
    while len(lines) < count:
        line = handle.readline()
        if not line:
            raise DataFormatError(filename, "header ends early")
        line = line.decode('latin-1').strip()
        if line and not line.startswith('#'):
            lines.append(line)
    return lines


def pfm_read(path):
    """
    Read a Portable Float Map.

    Rows are stored bottom-to-top and returned top-to-bottom.  A negative
    scale marks a little-endian payload.  NaN and inf values are preserved.

    Returns
    -------
    ndarray
        float32, [H, W] for 'Pf' files and [H, W, 3] for 'PF' files.
    """
    path = Path(path)
    filename = str(path)
    try:
        handle = path.open('rb')
    except OSError as e:
        raise DataFormatError(filename, "cannot be opened", str(e))
    with handle:
        magic, dims, scale = _header_lines(handle, 3, filename)
        if magic not in ('Pf', 'PF'):
            raise DataFormatError(filename, f"bad PFM magic '{magic}'",
                                  "expected 'Pf' (one channel) or 'PF' (three channels)")
        try:
            width, height = (int(v) for v in dims.split())
            scale = float(scale)
        except ValueError:
            raise DataFormatError(filename, "malformed PFM header",
                                  f"dimensions '{dims}', scale '{scale}'")
        if scale == 0:
            raise DataFormatError(filename, "PFM scale must be nonzero")
        channels = 3 if magic == 'PF' else 1
        dtype = np.dtype('<f4') if scale < 0 else np.dtype('>f4')
        data = np.frombuffer(handle.read(), dtype=dtype)

    expected = width * height * channels
    if data.size != expected:
        raise DataFormatError(filename, "PFM payload has the wrong size",
                              f"expected {expected} values, found {data.size}")
    shape = (height, width, 3) if channels == 3 else (height, width)
    return np.flipud(data.reshape(shape)).astype(np.float32)


def pfm_write(path, disparity, little_endian=True):
    """
    Write a [H, W] (or [H, W, 3]) float map; scale -1 (little-endian) by default.
    """
    disparity = np.asarray(disparity, dtype=np.float32)
    if disparity.ndim not in (2, 3) or (disparity.ndim == 3 and disparity.shape[2] != 3):
        raise DataFormatError(str(path), f"cannot store an array of shape {disparity.shape}")
    height, width = disparity.shape[:2]
    magic = 'PF' if disparity.ndim == 3 else 'Pf'
    scale = -1.0 if little_endian else 1.0
    header = f"{magic}\n{width} {height}\n{scale}\n".encode('ascii')
    payload = np.flipud(disparity).astype('<f4' if little_endian else '>f4').tobytes()
    Path(path).write_bytes(header + payload)
