import numpy as np
import pytest

from pyGOAT.exceptions import ShapeMismatchError
from pyGOAT.Stereo_Matching.occlusion_gt import (flipped_inference, hflip, lr_consistency,
                                                 rl_consistency)
from pyGOAT.Stereo_Matching.synth_scene import SceneSpec, synth_scene


def test_zero_disparities_are_fully_visible():
    zeros = np.zeros((4, 6))
    mask = lr_consistency(zeros, zeros)
    assert mask.dtype == np.uint8
    assert not mask.any()


def test_constant_disparity_masks_the_left_border():
    d = np.full((3, 10), 3.0)
    mask = lr_consistency(d, d)
    np.testing.assert_array_equal(mask[:, :3], 1)
    np.testing.assert_array_equal(mask[:, 3:], 0)


def test_threshold_is_exclusive():
    left = np.full((1, 6), 1.0)
    right = np.full((1, 6), 2.0)
    assert lr_consistency(left, right, threshold=1.0)[0, 3] == 1
    assert lr_consistency(left, right, threshold=1.01)[0, 3] == 0


def test_non_finite_disparity_is_occluded():
    d = np.zeros((2, 4))
    d[1, 2] = np.nan
    mask = lr_consistency(d, np.zeros((2, 4)))
    assert mask[1, 2] == 1
    assert mask.sum() == 1


def test_matches_the_renderer_occlusion():
    for seed in range(3):
        sample = synth_scene(SceneSpec(seed=seed))
        mask = lr_consistency(sample.gt_disp_left, sample.gt_disp_right)
        assert np.mean(mask == sample.gt_occlusion) >= 0.99


@pytest.mark.slow
def test_matches_the_renderer_occlusion_on_many_scenes():
    agreement = []
    for seed in range(50):
        sample = synth_scene(SceneSpec(seed=seed, num_layers=4))
        mask = lr_consistency(sample.gt_disp_left, sample.gt_disp_right)
        agreement.append(np.mean(mask == sample.gt_occlusion))
    assert min(agreement) >= 0.99


def test_right_view_check_is_the_mirror_of_the_left_view_check(rng):
    D_L = rng.integers(0, 4, size=(5, 12)).astype(np.float64)
    D_R = rng.integers(0, 4, size=(5, 12)).astype(np.float64)
    np.testing.assert_array_equal(rl_consistency(D_R, D_L),
                                  hflip(lr_consistency(hflip(D_R), hflip(D_L))))


def test_flipped_inference_with_a_zero_estimator():
    image = np.zeros((4, 6, 3))
    D_L, D_R, mask = flipped_inference(lambda left, right: np.zeros(left.shape[:2]),
                                       image, image)
    assert not mask.any()
    assert D_R.shape == (4, 6)


def test_flipped_inference_recovers_the_right_disparity():
    sample = synth_scene(SceneSpec(seed=3, height=32, width=64, num_layers=3, d_max=12))

    def oracle(left, right):
        if left is sample.left:
            return sample.gt_disp_left
        np.testing.assert_array_equal(left, hflip(sample.right))
        return hflip(sample.gt_disp_right)

    D_L, D_R, mask = flipped_inference(oracle, sample.left, sample.right)
    np.testing.assert_array_equal(D_R, sample.gt_disp_right)
    np.testing.assert_array_equal(mask, lr_consistency(sample.gt_disp_left,
                                                       sample.gt_disp_right))


def test_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        lr_consistency(np.zeros((2, 3)), np.zeros((2, 4)))


def test_lower_threshold_never_unmasks_a_pixel(rng):
    D_L = rng.uniform(0, 6, size=(5, 12))
    D_R = rng.uniform(0, 6, size=(5, 12))
    masks = [lr_consistency(D_L, D_R, threshold) for threshold in (4.0, 2.0, 1.0, 0.5, 0.1)]
    for looser, stricter in zip(masks, masks[1:]):
        assert np.all(stricter[looser.astype(bool)])
    assert masks[-1].sum() > masks[0].sum()
