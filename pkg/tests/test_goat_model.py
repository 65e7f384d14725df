import mock
import numpy as np
import pytest

from pyGOAT.exceptions import ConfigError, ShapeMismatchError
from pyGOAT.Stereo_Matching import tensor as T
from pyGOAT.Stereo_Matching.goat_model import GOATModel, upsample_nearest


@pytest.fixture
def model(tiny_model_config):
    return GOATModel(tiny_model_config, seed=3)


def test_output_shapes(model, small_sample):
    output = model.forward(small_sample.left, small_sample.right)
    assert len(output.d_ups) == model.config.iterations + 1
    assert all(d.shape == (16, 32) for d in output.d_ups)
    assert output.d_final.shape == (16, 32)
    assert output.occlusion.shape == (8, 16)
    assert output.occlusion_full.shape == (16, 32)
    occlusion = output.occlusion_full.numpy()
    assert np.all((occlusion > 0) & (occlusion < 1))


def test_fewer_iterations_on_request(model, small_sample):
    output = model.forward(small_sample.left, small_sample.right, iterations=1)
    assert len(output.d_ups) == 2


def test_zero_iterations_are_rejected(model, small_sample):
    with pytest.raises(ConfigError):
        model.forward(small_sample.left, small_sample.right, iterations=0)


def test_prediction_records_no_tape(model, small_sample):
    modes = []
    forward = model.forward

    def recording_forward(*args, **kwargs):
        modes.append(T.is_grad_enabled())
        output = forward(*args, **kwargs)
        assert not output.d_final.requires_grad
        return output

    with mock.patch.object(model, 'forward', side_effect=recording_forward):
        disparity = model.estimate(small_sample.left, small_sample.right)
    assert modes == [False]
    assert T.is_grad_enabled()
    assert disparity.shape == (16, 32)


def test_attention_output_projections_start_at_zero(model):
    for name in model.params.names():
        if name.startswith('attention.') and '.proj.' in name:
            np.testing.assert_array_equal(model.params[name].data, 0.0)


def test_shared_match_heads(tiny_model_config, small_sample):
    tiny_model_config.pdo_mode = 'shared'
    model = GOATModel(tiny_model_config)
    assert 'pdo.q2.w' not in model.params.names()
    disparity, occlusion = model.predict(small_sample.left, small_sample.right)
    assert disparity.shape == occlusion.shape == (16, 32)


def test_image_size_must_fit_the_window_grid(model):
    with pytest.raises(ShapeMismatchError):
        model.forward(np.zeros((14, 32, 3)), np.zeros((14, 32, 3)))
    with pytest.raises(ShapeMismatchError):
        model.forward(np.zeros((16, 32, 3)), np.zeros((16, 28, 3)))


def test_same_seed_same_prediction(tiny_model_config, small_sample):
    first = GOATModel(tiny_model_config, seed=5).predict(small_sample.left, small_sample.right)
    second = GOATModel(tiny_model_config, seed=5).predict(small_sample.left, small_sample.right)
    np.testing.assert_array_equal(first[0], second[0])
    np.testing.assert_array_equal(first[1], second[1])


def test_gradients_reach_every_stage(model, small_sample):
    output = model.forward(small_sample.left, small_sample.right)
    loss = T.sum_(output.d_final) + T.sum_(output.d_ups[0]) + T.sum_(output.occlusion_full)
    loss.backward()
    for name in ('features.stem.w', 'pdo.q1.w', 'pdo.occ.conv2.w', 'context.stem.w'):
        grad = model.params[name].grad
        assert grad is not None, name
        assert np.all(np.isfinite(grad)), name


def test_upsample_nearest_scales_values():
    x = T.Tensor(np.array([[1.0, 2.0]]))
    np.testing.assert_array_equal(upsample_nearest(x, 2, factor=2.0).numpy(),
                                  [[2, 2, 4, 4], [2, 2, 4, 4]])
