import csv

import mock
import numpy as np
import pytest

from pyGOAT.exceptions import EmptyRegionError, MissingGroundTruthError, NumericalFailureError
from pyGOAT.Stereo_Matching import tensor as T
from pyGOAT.Stereo_Matching.checkpoint import load_checkpoint
from pyGOAT.Stereo_Matching.config import RunConfig, read_config
from pyGOAT.Stereo_Matching.goat_model import GOATModel
from pyGOAT.Stereo_Matching.metrics import epe, occ_miou
from pyGOAT.Stereo_Matching.occlusion_gt import lr_consistency
from pyGOAT.Stereo_Matching.synth_scene import synth_scene
from pyGOAT.Stereo_Matching.train import (LOSS_LOG_FIELDS, compute_loss, occlusion_target,
                                          train_model)


def _rows(path):
    with path.open(newline='') as handle:
        return list(csv.reader(handle))


def test_zero_steps_saves_the_initial_weights(tiny_run_config, small_sample, tmp_path):
    result = train_model(tiny_run_config, [small_sample], tmp_path, steps=0, print_output=False)
    assert [p.name for p in result.checkpoints] == ['model.goat']
    expected = GOATModel(tiny_run_config.model, seed=tiny_run_config.run.seed).params
    saved = load_checkpoint(result.checkpoints[0])
    assert list(saved) == expected.names()
    for name, array in expected.state_dict().items():
        np.testing.assert_array_equal(saved[name], array)
    assert _rows(result.loss_log) == [list(LOSS_LOG_FIELDS)]


def test_short_run_writes_its_artifacts(tiny_run_config, small_sample, tmp_path):
    result = train_model(tiny_run_config, [small_sample], tmp_path, print_output=False)
    assert len(result.losses) == 3
    assert all(np.isfinite(result.losses))
    assert [p.name for p in result.checkpoints] == ['checkpoint_000002.goat', 'model.goat']

    rows = _rows(result.loss_log)
    assert rows[0] == list(LOSS_LOG_FIELDS)
    assert [int(row[0]) for row in rows[1:]] == [1, 2, 3]
    assert [float(row[1]) for row in rows[1:]] == result.losses
    assert read_config(tmp_path / 'effective_config.ini') == tiny_run_config


def test_same_seed_same_loss_log(tiny_run_config, small_sample, tmp_path):
    tiny_run_config.data.augmentations = ('chromatic_asymmetric', 'y_offset')
    first = train_model(tiny_run_config, [small_sample], tmp_path / 'a', print_output=False)
    second = train_model(tiny_run_config, [small_sample], tmp_path / 'b', print_output=False)
    assert first.loss_log.read_text() == second.loss_log.read_text()
    assert first.checkpoints[-1].read_bytes() == second.checkpoints[-1].read_bytes()


def test_non_finite_loss_stops_training(tiny_run_config, small_sample, tmp_path):
    nan = T.Tensor(np.array(np.nan))
    with mock.patch('pyGOAT.Stereo_Matching.train.compute_loss', return_value=(nan, nan, nan)):
        with pytest.raises(NumericalFailureError) as info:
            train_model(tiny_run_config, [small_sample], tmp_path, print_output=False)
    assert info.value.exit_code == 4


def test_empty_training_set(tiny_run_config, tmp_path):
    with pytest.raises(EmptyRegionError):
        train_model(tiny_run_config, [], tmp_path, print_output=False)


def test_occlusion_target_falls_back_to_consistency(small_sample):
    np.testing.assert_array_equal(occlusion_target(small_sample), small_sample.gt_occlusion)
    derived = occlusion_target(small_sample.copy(gt_occlusion=None))
    np.testing.assert_array_equal(
        derived, lr_consistency(small_sample.gt_disp_left, small_sample.gt_disp_right))
    with pytest.raises(MissingGroundTruthError):
        occlusion_target(small_sample.copy(gt_occlusion=None, gt_disp_right=None))


def test_loss_needs_left_ground_truth(tiny_run_config, small_sample):
    model = GOATModel(tiny_run_config.model)
    total, disp_loss, occ_loss = compute_loss(model, small_sample, tiny_run_config)
    assert total.item() == pytest.approx(disp_loss.item() + occ_loss.item(), rel=1e-5)
    with pytest.raises(MissingGroundTruthError):
        compute_loss(model, small_sample.copy(gt_disp_left=None), tiny_run_config)


@pytest.mark.slow
def test_default_model_learns_synthetic_scenes(tmp_path):
    cfg = RunConfig()
    cfg.model.iterations = 4
    cfg.optimizer.lr = 4e-4
    cfg.run.checkpoint_every = 0
    train = [synth_scene(cfg.data.scene_spec(seed)) for seed in range(200)]
    held_out = [synth_scene(cfg.data.scene_spec(seed)) for seed in range(1000, 1010)]

    result = train_model(cfg, train, tmp_path, steps=500, print_output=False)
    losses = np.array(result.losses)
    assert losses[-10:].mean() < 0.5 * losses[:10].mean()

    errors, ious = [], []
    for sample in held_out:
        disparity, occlusion = result.model.predict(sample.left, sample.right)
        errors.append(epe(disparity, sample.gt_disp_left))
        ious.append(occ_miou(occlusion, sample.gt_occlusion))
    assert np.mean(errors) < 1.5
    assert np.mean(ious) > 0.6
