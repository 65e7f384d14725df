import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

import numpy as np
from tqdm import tqdm

from pyGOAT.exceptions import EmptyRegionError, MissingGroundTruthError, NumericalFailureError
from pyGOAT.Stereo_Matching.augment import augment
from pyGOAT.Stereo_Matching.checkpoint import save_checkpoint
from pyGOAT.Stereo_Matching.constants import EFFECTIVE_CONFIG_FILENAME, LOSS_COLOR, SMOOTH_COLOR
from pyGOAT.Stereo_Matching.config import write_config
from pyGOAT.Stereo_Matching.goat_model import GOATModel
from pyGOAT.Stereo_Matching.occlusion_gt import lr_consistency
from pyGOAT.Stereo_Matching.supervision import Adam, occlusion_bce, sequence_loss, total_loss

logger = logging.getLogger(__name__)

LOSS_LOG_FILENAME = 'loss_log.csv'
LOSS_LOG_FIELDS = ('step', 'loss', 'disp_loss', 'occ_loss', 'grad_norm', 'lr')
FINAL_CHECKPOINT = 'model.goat'


@dataclass
class TrainResult:
    model: GOATModel
    losses: List[float] = field(default_factory=list)
    checkpoints: List[Path] = field(default_factory=list)
    loss_log: Path = None


def occlusion_target(sample):
    """Ground-truth occlusion of a sample, derived from both disparities if not stored."""
    if sample.gt_occlusion is not None:
        return sample.gt_occlusion
    if sample.gt_disp_left is not None and sample.gt_disp_right is not None:
        return lr_consistency(sample.gt_disp_left, sample.gt_disp_right)
    raise MissingGroundTruthError(sample.sample_id, "occlusion mask or right disparity")


def compute_loss(model, sample, cfg):
    """Forward one sample and return (total, disparity, occlusion) loss tensors."""
    if sample.gt_disp_left is None:
        raise MissingGroundTruthError(sample.sample_id, "left ground-truth disparity")
    output = model.forward(sample.left, sample.right)
    disp_loss = sequence_loss(output.d_ups, output.d_final, sample.gt_disp_left,
                              sample.valid, cfg.loss.gamma)
    occ_loss = occlusion_bce([output.occlusion_full], occlusion_target(sample))
    return total_loss(disp_loss, occ_loss, cfg.loss), disp_loss, occ_loss


def _augmented(sample, kinds, probability, rng):
    for kind in kinds:
        if rng.random() < probability:
            sample = augment(sample, kind, int(rng.integers(2 ** 31)))
    return sample


def train_model(cfg, samples, out_dir, steps=None, model=None, print_output=True,
                plot=False):
    """
    Train on in-memory samples with Adam, one sample per step.

    Parameters
    ----------
    cfg : RunConfig
    samples : list of StereoSample
    out_dir : Path
        Receives the loss log, the checkpoints and the effective config.
    steps : int, optional
        Defaults to cfg.run.steps.  Zero writes the initial weights only.
    model : GOATModel, optional
        Continue training an existing model.
    print_output : bool
        Show a progress bar.
    plot : bool
        Also save a loss-curve figure.

    Returns
    -------
    TrainResult

    Raises
    ------
    NumericalFailureError
        When the loss or gradient norm stops being finite.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    steps = cfg.run.steps if steps is None else steps
    if not samples and steps > 0:
        raise EmptyRegionError("the training set")
    model = model or GOATModel(cfg.model, seed=cfg.run.seed)
    optimizer = Adam(model.params, cfg.optimizer)
    rng = np.random.default_rng(cfg.run.seed)
    write_config(out_dir / EFFECTIVE_CONFIG_FILENAME, cfg)

    result = TrainResult(model=model, loss_log=out_dir / LOSS_LOG_FILENAME)
    with result.loss_log.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(LOSS_LOG_FIELDS)
        for step in tqdm(range(1, steps + 1), desc='Training', disable=not print_output):
            sample = samples[int(rng.integers(len(samples)))]
            sample = _augmented(sample, cfg.data.augmentations,
                                cfg.data.augment_probability, rng)

            optimizer.zero_grad()
            loss, disp_loss, occ_loss = compute_loss(model, sample, cfg)
            value = loss.item()
            if not np.isfinite(value):
                raise NumericalFailureError(step, 'loss', value)
            loss.backward()
            grad_norm = optimizer.step()
            if not np.isfinite(grad_norm):
                raise NumericalFailureError(step, 'gradient norm', grad_norm)

            result.losses.append(value)
            writer.writerow((step, repr(value), repr(disp_loss.item()), repr(occ_loss.item()),
                             repr(grad_norm), repr(cfg.optimizer.learning_rate(step - 1))))
            logger.debug("step %d loss %.5f", step, value)
            every = cfg.run.checkpoint_every
            if every > 0 and step % every == 0 and step != steps:
                result.checkpoints.append(
                    save_checkpoint(out_dir / f'checkpoint_{step:06d}.goat', model.params))

    result.checkpoints.append(save_checkpoint(out_dir / FINAL_CHECKPOINT, model.params))
    logger.info("Training finished after %d steps; final checkpoint %s",
                steps, result.checkpoints[-1])
    if plot and result.losses:
        plot_loss_curve(result.losses, out_dir / 'loss_curve.png')
    return result


def plot_loss_curve(losses, path, window=10):  # pragma: no cover
    import matplotlib
    matplotlib.use('Agg')
    from matplotlib import pyplot as plt

    losses = np.asarray(losses)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(1, len(losses) + 1), losses, color=LOSS_COLOR, lw=0.8, label='loss')
    if len(losses) >= window:
        smooth = np.convolve(losses, np.ones(window) / window, mode='valid')
        ax.plot(np.arange(window, len(losses) + 1), smooth, color=SMOOTH_COLOR,
                label=f'{window}-step mean')
    ax.set_xlabel('step')
    ax.set_ylabel('total loss')
    ax.set_yscale('log')
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
