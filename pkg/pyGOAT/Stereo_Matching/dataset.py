"""
On-disk dataset layout.

    <root>/manifest.csv                       split,id,seed
    <root>/<split>/<id>_left.ppm, <id>_right.ppm
    <root>/<split>/<id>_dispL.pfm, <id>_dispR.pfm
    <root>/<split>/<id>_occ.pgm               255 = occluded
"""
import csv
import logging
from pathlib import Path

import numpy as np

from pyGOAT.exceptions import DataFormatError
from pyGOAT.Stereo_Matching.constants import (LEFT_DISP_SUFFIX, LEFT_IMAGE_SUFFIX,
                                              MANIFEST_FILENAME, OCCLUSION_SUFFIX,
                                              RIGHT_DISP_SUFFIX, RIGHT_IMAGE_SUFFIX)
from pyGOAT.Stereo_Matching.image_io import image_read, image_write
from pyGOAT.Stereo_Matching.pfm_io import pfm_read, pfm_write
from pyGOAT.Stereo_Matching.stereo_sample import StereoSample

logger = logging.getLogger(__name__)

MANIFEST_FIELDS = ('split', 'id', 'seed')


def sample_paths(root, split, sample_id):
    base = Path(root) / split
    return {
        'left': base / (sample_id + LEFT_IMAGE_SUFFIX),
        'right': base / (sample_id + RIGHT_IMAGE_SUFFIX),
        'disp_left': base / (sample_id + LEFT_DISP_SUFFIX),
        'disp_right': base / (sample_id + RIGHT_DISP_SUFFIX),
        'occlusion': base / (sample_id + OCCLUSION_SUFFIX),
    }


def save_sample(root, split, sample):
    """Write the images and whichever ground-truth maps the sample carries."""
    paths = sample_paths(root, split, sample.sample_id)
    paths['left'].parent.mkdir(parents=True, exist_ok=True)
    image_write(paths['left'], sample.left)
    image_write(paths['right'], sample.right)
    if sample.gt_disp_left is not None:
        pfm_write(paths['disp_left'], sample.gt_disp_left)
    if sample.gt_disp_right is not None:
        pfm_write(paths['disp_right'], sample.gt_disp_right)
    if sample.gt_occlusion is not None:
        image_write(paths['occlusion'], sample.gt_occlusion, value_range=(0, 1))
    return paths


def load_sample(root, split, sample_id):
    """
    Read one sample; missing ground-truth files leave the field as None.

    Raises
    ------
    DataFormatError
        When an image is missing or any file is malformed.
    """
    paths = sample_paths(root, split, sample_id)
    for key in ('left', 'right'):
        if not paths[key].exists():
            raise DataFormatError(str(paths[key]), "File not found")
    sample = StereoSample(
        left=image_read(paths['left']), right=image_read(paths['right']),
        gt_disp_left=pfm_read(paths['disp_left']) if paths['disp_left'].exists() else None,
        gt_disp_right=pfm_read(paths['disp_right']) if paths['disp_right'].exists() else None,
        gt_occlusion=(image_read(paths['occlusion']) > 0.5).astype(np.uint8)
        if paths['occlusion'].exists() else None,
        sample_id=sample_id)
    if sample.left.ndim != 3:
        raise DataFormatError(str(paths['left']), "expected a colour (P6) image")
    return sample


def write_manifest(root, rows):
    """Write (split, id, seed) rows sorted by split then id."""
    path = Path(root) / MANIFEST_FILENAME
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(MANIFEST_FIELDS)
        for split, sample_id, seed in sorted(rows, key=lambda row: (row[0], row[1])):
            writer.writerow((split, sample_id, '' if seed is None else seed))
    return path


def read_manifest(root):
    path = Path(root) / MANIFEST_FILENAME
    if not path.exists():
        return []
    with path.open(newline='') as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != MANIFEST_FIELDS:
            raise DataFormatError(str(path), "unexpected manifest columns",
                                  f"expected {','.join(MANIFEST_FIELDS)}")
        return [(row['split'], row['id'], int(row['seed']) if row['seed'] else None)
                for row in reader]


def list_sample_ids(root, split):
    """Sample ids of one split, from the manifest when present, else from the files."""
    rows = [sample_id for row_split, sample_id, _ in read_manifest(root) if row_split == split]
    if rows:
        return sorted(rows)
    directory = Path(root) / split
    if not directory.is_dir():
        raise DataFormatError(str(directory), "dataset split directory not found")
    return sorted(p.name[:-len(LEFT_IMAGE_SUFFIX)]
                  for p in directory.glob('*' + LEFT_IMAGE_SUFFIX))
