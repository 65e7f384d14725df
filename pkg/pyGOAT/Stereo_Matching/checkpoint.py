"""
GOATCKPT checkpoints: a flat little-endian container of named float32 tensors.

    magic "GOATCKPT" | u32 version | u32 count
    per tensor: u16 name length | UTF-8 name | u8 rank | u32 dims[rank] | f32 data
"""
import logging
import struct
from collections import OrderedDict
from pathlib import Path

import numpy as np

from pyGOAT.exceptions import CheckpointError
from pyGOAT.Stereo_Matching.constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION

logger = logging.getLogger(__name__)


def save_checkpoint(path, store):
    """
    Write every tensor of `store` (a ParameterStore or a name -> array
    mapping) in registration order.
    """
    path = Path(path)
    arrays = store.state_dict() if hasattr(store, 'state_dict') else store
    chunks = [CHECKPOINT_MAGIC, struct.pack('<II', CHECKPOINT_VERSION, len(arrays))]
    for name, array in arrays.items():
        encoded = name.encode('utf-8')
        array = np.asarray(array)
        chunks.append(struct.pack('<H', len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack('<B', array.ndim))
        chunks.append(struct.pack('<{}I'.format(array.ndim), *array.shape))
        chunks.append(np.ascontiguousarray(array, dtype='<f4').tobytes())
    path.write_bytes(b''.join(chunks))
    logger.info("Saved %d tensors to %s", len(arrays), path)
    return path


def _read(buffer, offset, fmt, path):
    size = struct.calcsize(fmt)
    if offset + size > len(buffer):
        raise CheckpointError(str(path), "is truncated",
                              f"needed {size} bytes at offset {offset}")
    return struct.unpack_from(fmt, buffer, offset), offset + size


def load_checkpoint(path):
    """
    Read a checkpoint into an ordered name -> float32 array mapping.

    Raises
    ------
    CheckpointError
        On a wrong magic string, unsupported version or truncated payload.
    """
    path = Path(path)
    try:
        buffer = path.read_bytes()
    except OSError as e:
        raise CheckpointError(str(path), "cannot be read", str(e))

    if buffer[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError(str(path), "has a bad magic string",
                              f"expected {CHECKPOINT_MAGIC!r}, got "
                              f"{buffer[:len(CHECKPOINT_MAGIC)]!r}")
    offset = len(CHECKPOINT_MAGIC)
    (version, count), offset = _read(buffer, offset, '<II', path)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(str(path), f"has unsupported version {version}",
                              f"this build reads version {CHECKPOINT_VERSION}")

    arrays = OrderedDict()
    for _ in range(count):
        (name_len,), offset = _read(buffer, offset, '<H', path)
        if offset + name_len > len(buffer):
            raise CheckpointError(str(path), "is truncated", "inside a tensor name")
        name = buffer[offset:offset + name_len].decode('utf-8')
        offset += name_len
        (rank,), offset = _read(buffer, offset, '<B', path)
        dims, offset = _read(buffer, offset, '<{}I'.format(rank), path)
        nbytes = 4 * int(np.prod(dims, dtype=np.int64))
        if offset + nbytes > len(buffer):
            raise CheckpointError(str(path), "is truncated",
                                  f"payload of '{name}' needs {nbytes} bytes")
        data = np.frombuffer(buffer, dtype='<f4', count=nbytes // 4, offset=offset)
        arrays[name] = data.reshape(dims).astype(np.float32)
        offset += nbytes
    if offset != len(buffer):
        raise CheckpointError(str(path), "has trailing bytes",
                              f"{len(buffer) - offset} bytes after the last tensor")
    return arrays


def load_into(store, path):
    """Load a checkpoint into an existing ParameterStore, checking names and shapes."""
    store.load_state_dict(load_checkpoint(path), source=str(path))
    return store
