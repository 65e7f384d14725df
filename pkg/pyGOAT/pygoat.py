"""
pyGOAT - occlusion-aware stereo matching with attention

This module provides the direct interface: synthetic dataset generation,
training, evaluation, single-pair inference and occlusion ground-truth
generation.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from pyGOAT.Stereo_Matching.checkpoint import load_into
from pyGOAT.Stereo_Matching.config import RunConfig, build_config, read_config, write_config
from pyGOAT.Stereo_Matching.constants import EFFECTIVE_CONFIG_FILENAME, LR_CONSISTENCY_THRESHOLD
from pyGOAT.Stereo_Matching.dataset import (list_sample_ids, load_sample, read_manifest,
                                            save_sample, write_manifest)
from pyGOAT.Stereo_Matching.goat_model import GOATModel
from pyGOAT.Stereo_Matching.image_io import disparity_to_color, image_read, image_write
from pyGOAT.Stereo_Matching.metrics import (RegionReport, aggregate_reports, region_report,
                                            write_reports_csv)
from pyGOAT.Stereo_Matching.occlusion_gt import flipped_inference, lr_consistency
from pyGOAT.Stereo_Matching.pfm_io import pfm_read, pfm_write
from pyGOAT.Stereo_Matching.synth_scene import synth_scene
from pyGOAT.Stereo_Matching.train import TrainResult, occlusion_target, train_model
from pyGOAT.Stereo_Matching.util import parallel_map
from pyGOAT.exceptions import (ConfigError, DataFormatError, MissingGroundTruthError,
                               validate_input_file, validate_output_directory)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class DatasetResult:
    """Container for a generated dataset split."""

    def __init__(self, root: PathLike, split: str, sample_ids: List[str]):
        self.root = Path(root)
        self.split = split
        self.sample_ids = sample_ids

    @property
    def manifest_file(self) -> Path:
        return self.root / 'manifest.csv'

    @property
    def split_dir(self) -> Path:
        return self.root / self.split


class EvaluationResult:
    """Per-sample reports, their aggregate and the files they were written to."""

    def __init__(self, report_dir: PathLike, reports: List[RegionReport],
                 aggregate: RegionReport):
        self.report_dir = Path(report_dir)
        self.reports = reports
        self.aggregate = aggregate

    @property
    def csv_file(self) -> Path:
        """Per-sample rows followed by the aggregate row."""
        return self.report_dir / 'report.csv'

    @property
    def aggregate_file(self) -> Path:
        return self.report_dir / 'aggregate.json'

    def json_file(self, sample_id: str) -> Path:
        return self.report_dir / f'{sample_id}.json'


class InferenceResult:
    """Output files of one inference run."""

    def __init__(self, output_dir: PathLike, name: str):
        self.output_dir = Path(output_dir)
        self.name = name

    @property
    def disparity_file(self) -> Path:
        """Full-resolution disparity as PFM."""
        return self.output_dir / f'{self.name}.pfm'

    @property
    def occlusion_file(self) -> Path:
        """Occlusion probability as PGM (255 = occluded)."""
        return self.output_dir / f'{self.name}_occ.pgm'

    @property
    def visualization_file(self) -> Path:
        """Colour-mapped disparity as PPM."""
        return self.output_dir / f'{self.name}_color.ppm'


def generate_dataset(
    output_dir: PathLike,
    count: int,
    seed: int = 0,
    split: str = 'train',
    height: int = 64,
    width: int = 128,
    num_layers: int = 3,
    d_max: float = 24,
    texture: str = 'noise',
    integer_disparity: bool = True,
    threads: Optional[int] = None,
    print_output: bool = True
) -> DatasetResult:
    """
    Render `count` synthetic scenes into `<output_dir>/<split>/`.

    Parameters
    ----------
    output_dir : str or Path
        Dataset root; `manifest.csv` there lists every split.
    count : int
        Number of samples.
    seed : int
        Master seed; per-sample seeds are drawn from it.
    split : str
        Sub-directory name, e.g. 'train' or 'val'.
    height, width, num_layers, d_max, texture, integer_disparity
        Scene parameters, see SceneSpec.
    threads : int, optional
        Worker threads; defaults to GOAT_THREADS or the CPU count.
    print_output : bool, default True
        Whether to show progress.

    Returns
    -------
    DatasetResult

    Examples
    --------
    >>> result = generate_dataset("data", count=200, seed=0)
    >>> print(result.manifest_file)
    """
    if count < 0:
        raise ConfigError(f"count must be nonnegative, got {count}")
    cfg = build_config(overrides={
        'data': dict(height=height, width=width, num_layers=num_layers, d_max=d_max,
                     texture=texture, integer_disparity=integer_disparity),
        'run': dict(seed=seed, threads=threads)})
    cfg.data.scene_spec(seed)  # validates the scene parameters before any work
    root = validate_output_directory(output_dir)

    seeds = [int(s) for s in np.random.default_rng(seed).integers(0, 2 ** 31, size=count)]
    sample_ids = [f'{index:06d}' for index in range(count)]

    def render(job):
        sample_id, sample_seed = job
        sample = synth_scene(cfg.data.scene_spec(sample_seed))
        sample.sample_id = sample_id
        save_sample(root, split, sample)
        return sample_id

    parallel_map(render, zip(sample_ids, seeds), threads,
                 desc=f"Rendering {split}" if print_output else None)

    rows = [row for row in read_manifest(root) if row[0] != split]
    rows += [(split, sample_id, sample_seed) for sample_id, sample_seed in zip(sample_ids, seeds)]
    write_manifest(root, rows)
    write_config(root / EFFECTIVE_CONFIG_FILENAME, cfg)
    logger.info("Wrote %d samples to %s", count, root / split)
    return DatasetResult(root, split, sample_ids)


def load_split(data_root: PathLike, split: str, threads: Optional[int] = None) -> list:
    ids = list_sample_ids(data_root, split)
    return parallel_map(lambda sample_id: load_sample(data_root, split, sample_id), ids, threads)


def train_goat(
    data_root: PathLike,
    output_dir: PathLike,
    config_file: Optional[PathLike] = None,
    steps: Optional[int] = None,
    seed: Optional[int] = None,
    overrides: Optional[Dict[str, dict]] = None,
    print_output: bool = True,
    plot: bool = True
) -> TrainResult:
    """
    Train a model on the training split of a dataset.

    Parameters
    ----------
    data_root : str or Path
        Dataset root as written by `generate_dataset`.
    output_dir : str or Path
        Receives checkpoints, `loss_log.csv` and `effective_config.ini`.
    config_file : str or Path, optional
        INI file; flags given here override its values.
    steps, seed : int, optional
        Override [run] steps and seed.
    overrides : dict, optional
        Further section -> {key: value} overrides.
    print_output : bool, default True
    plot : bool, default True
        Save `loss_curve.png`.

    Returns
    -------
    TrainResult
    """
    overrides = {name: dict(values) for name, values in (overrides or {}).items()}
    overrides.setdefault('run', {}).update({'steps': steps, 'seed': seed})
    cfg = read_config(config_file, overrides)
    out = validate_output_directory(output_dir)
    samples = load_split(data_root, cfg.data.train_split, cfg.run.threads)
    logger.info("Training on %d samples from %s", len(samples), data_root)
    return train_model(cfg, samples, out, print_output=print_output, plot=plot)


def checkpoint_config(checkpoint: PathLike) -> RunConfig:
    """The effective config saved beside a checkpoint, or the defaults."""
    checkpoint = Path(checkpoint)
    validate_input_file(checkpoint, ['.goat'])
    config_path = checkpoint.parent / EFFECTIVE_CONFIG_FILENAME
    if not config_path.exists():
        logger.warning("No %s next to %s; assuming default model settings",
                       EFFECTIVE_CONFIG_FILENAME, checkpoint)
        return RunConfig()
    return read_config(config_path)


def load_model(checkpoint: PathLike, cfg: Optional[RunConfig] = None) -> GOATModel:
    """
    Rebuild a model from a checkpoint and the effective config beside it.
    """
    cfg = cfg or checkpoint_config(checkpoint)
    model = GOATModel(cfg.model, seed=cfg.run.seed)
    load_into(model.params, checkpoint)
    return model


def evaluate_goat(
    data_root: PathLike,
    report_dir: PathLike,
    checkpoint: Optional[PathLike] = None,
    split: str = 'val',
    oracle: bool = False,
    threads: Optional[int] = None,
    print_output: bool = True
) -> EvaluationResult:
    """
    Evaluate a checkpoint (or the ground truth itself with `oracle`) on a split.

    Samples without ground truth get a row of nulls instead of failing the run.

    Returns
    -------
    EvaluationResult
    """
    if checkpoint is None and not oracle:
        raise ConfigError("evaluation needs a checkpoint unless the oracle mode is used")
    cfg = RunConfig() if oracle else checkpoint_config(checkpoint)
    model = None if oracle else load_model(checkpoint, cfg)
    out = validate_output_directory(report_dir)
    write_config(out / EFFECTIVE_CONFIG_FILENAME, cfg)
    sample_ids = list_sample_ids(data_root, split)

    def evaluate(sample_id):
        sample = load_sample(data_root, split, sample_id)
        try:
            if oracle:
                if sample.gt_disp_left is None:
                    raise MissingGroundTruthError(sample_id, "left ground-truth disparity")
                pred_disp, pred_occ = sample.gt_disp_left, occlusion_target(sample)
            else:
                pred_disp, pred_occ = model.predict(sample.left, sample.right)
            return region_report(pred_disp, pred_occ, sample)
        except MissingGroundTruthError as e:
            logger.warning("%s", e.message)
            return RegionReport.empty(sample_id)

    reports = parallel_map(evaluate, sample_ids, threads,
                           desc="Evaluating" if print_output else None)
    aggregate = aggregate_reports(reports)

    result = EvaluationResult(out, reports, aggregate)
    for report in reports:
        result.json_file(report.sample_id).write_text(report.to_json())
    result.aggregate_file.write_text(json.dumps(aggregate.to_dict(), indent=2))
    write_reports_csv(result.csv_file, reports + [aggregate])
    logger.info("Evaluated %d samples: EPE all %s", len(reports), aggregate.epe_all)
    return result


def _check_same_size(left_path: PathLike, left: np.ndarray, right_path: PathLike,
                     right: np.ndarray):
    if left.shape[:2] != right.shape[:2]:
        raise DataFormatError(
            str(right_path), f"size {right.shape[1]}x{right.shape[0]} differs from "
            f"{left.shape[1]}x{left.shape[0]} of '{left_path}'",
            "both views must have the same height and width")


def _read_pair(left_image: PathLike, right_image: PathLike):
    for path in (left_image, right_image):
        validate_input_file(Path(path), ['.ppm'])
    left, right = image_read(left_image), image_read(right_image)
    if left.ndim != 3 or right.ndim != 3:
        raise DataFormatError(str(left_image), "expected colour (P6) images")
    _check_same_size(left_image, left, right_image, right)
    return left, right


def estimate_disparity(
    checkpoint: PathLike,
    left_image: PathLike,
    right_image: PathLike,
    output_dir: Optional[PathLike] = None,
    name: str = 'disparity'
) -> InferenceResult:
    """
    Estimate the disparity of one rectified PPM pair.

    Writes the disparity (PFM), the occlusion probability (PGM), a
    colour-mapped disparity (PPM) and the effective config.

    Returns
    -------
    InferenceResult

    Raises
    ------
    DataFormatError
        The two images differ in size.
    """
    left, right = _read_pair(left_image, right_image)
    cfg = checkpoint_config(checkpoint)
    model = load_model(checkpoint, cfg)
    disparity, occlusion = model.predict(left, right)
    result = InferenceResult(validate_output_directory(output_dir), name)
    write_config(result.output_dir / EFFECTIVE_CONFIG_FILENAME, cfg)
    pfm_write(result.disparity_file, disparity)
    image_write(result.occlusion_file, occlusion, value_range=(0, 1))
    image_write(result.visualization_file, disparity_to_color(disparity))
    logger.info("Wrote %s", result.disparity_file)
    return result


def generate_occlusion_gt(
    output_file: PathLike,
    disp_left: Optional[PathLike] = None,
    disp_right: Optional[PathLike] = None,
    checkpoint: Optional[PathLike] = None,
    left_image: Optional[PathLike] = None,
    right_image: Optional[PathLike] = None,
    threshold: float = LR_CONSISTENCY_THRESHOLD
) -> Path:
    """
    Write an occlusion mask (PGM, 255 = occluded).

    Exactly one input mode must be complete: both disparity maps (direct
    left-right check) or a checkpoint with an image pair (flipped inference).
    The checkpoint's effective config is written beside the mask; the direct
    mode writes the defaults unless the directory already holds one.

    Raises
    ------
    ConfigError
        Mixed or incomplete input modes.
    DataFormatError
        The two inputs differ in size.
    """
    direct = [disp_left, disp_right]
    flipped = [checkpoint, left_image, right_image]
    direct_given = any(v is not None for v in direct)
    flipped_given = any(v is not None for v in flipped)
    if direct_given == flipped_given:
        raise ConfigError("give either both disparity maps or a checkpoint with both images",
                          "the two occlusion input modes cannot be mixed")
    if direct_given and not all(v is not None for v in direct):
        raise ConfigError("the direct mode needs both the left and the right disparity")
    if flipped_given and not all(v is not None for v in flipped):
        raise ConfigError("the flipped-inference mode needs a checkpoint, a left and a right image")

    if direct_given:
        for path in direct:
            validate_input_file(Path(path), ['.pfm'])
        left, right = pfm_read(disp_left), pfm_read(disp_right)
        _check_same_size(disp_left, left, disp_right, right)
        mask = lr_consistency(left, right, threshold)
        cfg = None
    else:
        left, right = _read_pair(left_image, right_image)
        cfg = checkpoint_config(checkpoint)
        model = load_model(checkpoint, cfg)
        _, _, mask = flipped_inference(model.estimate, left, right, threshold)

    output_file = Path(output_file)
    out = validate_output_directory(output_file.parent)
    config_file = out / EFFECTIVE_CONFIG_FILENAME
    if cfg is not None or not config_file.exists():
        write_config(config_file, cfg or RunConfig())
    image_write(output_file, mask, value_range=(0, 1))
    logger.info("Wrote occlusion mask %s (%d occluded pixels)", output_file, int(mask.sum()))
    return output_file
