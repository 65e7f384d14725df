import numpy as np
import pytest

from pyGOAT.exceptions import ConfigError, ShapeMismatchError
from pyGOAT.Stereo_Matching import tensor as T
from pyGOAT.Stereo_Matching.attention import (AttentionConfig, FeaturePair,
                                              init_self_cross_weights, positional_encoding,
                                              scaled_dot_attention, self_cross_block,
                                              window_partition, window_reverse)
from pyGOAT.Stereo_Matching.grad_check import grad_check
from pyGOAT.Stereo_Matching.parameters import ParameterStore


def build(channels=8, layers=1, grid=(2, 2), seed=0, dtype=np.float32,
          projection_init='uniform'):
    cfg = AttentionConfig(channels, layers, grid)
    store = ParameterStore(seed, dtype=dtype)
    init_self_cross_weights(store, cfg, projection_init)
    return cfg, store


def test_positional_encoding_layout():
    pe = positional_encoding(3, 5, 8).data
    assert pe.shape == (3, 5, 8)
    np.testing.assert_allclose(pe[0, 0], [0, 0, 1, 1, 0, 0, 1, 1])
    np.testing.assert_allclose(pe[2, 4, 0], np.sin(4.0), rtol=1e-6)
    np.testing.assert_allclose(pe[2, 4, 4], np.sin(2.0), rtol=1e-6)
    with pytest.raises(ConfigError):
        positional_encoding(2, 2, 6)


def test_attention_saturates_on_a_huge_match():
    k = np.eye(4) * 1.0
    k[2] *= 1000.0
    q = np.ones((1, 4))
    v = np.arange(16.0).reshape(4, 4)
    out, weights = scaled_dot_attention(T.Tensor(q), T.Tensor(k), T.Tensor(v),
                                        return_weights=True)
    np.testing.assert_allclose(out.data[0], v[2], atol=1e-6)
    np.testing.assert_allclose(weights.data.sum(axis=-1), 1.0)


def test_window_partition_round_trip(rng):
    x = T.Tensor(rng.normal(size=(4, 6, 3)))
    windows = window_partition(x, (2, 3))
    assert windows.shape == (6, 4, 3)
    np.testing.assert_array_equal(windows.data[0], x.data[:2, :2].reshape(4, 3))
    np.testing.assert_array_equal(window_reverse(windows, (2, 3), 4, 6).data, x.data)


def test_identical_views_stay_identical(rng):
    cfg, store = build()
    features = rng.normal(size=(4, 8, 8)).astype(np.float32)
    pair = self_cross_block(FeaturePair(T.Tensor(features), T.Tensor(features)), cfg, store)
    np.testing.assert_allclose(pair.left.data, pair.right.data, atol=1e-6)


def test_zero_projections_give_identity(rng):
    cfg, store = build(layers=2)
    for layer in range(2):
        for kind in ('self', 'cross'):
            store.fill(f'layer{layer}.{kind}.proj', 0.0)
            store.fill(f'layer{layer}.{kind}.mlp.fc2', 0.0)
    left = rng.normal(size=(4, 4, 8)).astype(np.float32)
    right = rng.normal(size=(4, 4, 8)).astype(np.float32)
    pair = self_cross_block(FeaturePair(T.Tensor(left), T.Tensor(right)), cfg, store)
    np.testing.assert_array_equal(pair.left.data, left)
    np.testing.assert_array_equal(pair.right.data, right)


def test_attention_stays_inside_windows(rng):
    cfg, store = build()
    left = rng.normal(size=(4, 4, 8)).astype(np.float32)
    right = rng.normal(size=(4, 4, 8)).astype(np.float32)
    base = self_cross_block(FeaturePair(T.Tensor(left), T.Tensor(right)), cfg, store)
    changed = left.copy()
    changed[0, 0] += 5.0  # top-left window
    moved = self_cross_block(FeaturePair(T.Tensor(changed), T.Tensor(right)), cfg, store)
    np.testing.assert_allclose(moved.left.data[2:, 2:], base.left.data[2:, 2:], atol=1e-6)
    np.testing.assert_allclose(moved.right.data[2:, 2:], base.right.data[2:, 2:], atol=1e-6)
    assert not np.array_equal(moved.right.data[:2, :2], base.right.data[:2, :2])


def test_shape_checks(rng):
    cfg, store = build()
    odd = T.Tensor(rng.normal(size=(3, 4, 8)))
    with pytest.raises(ShapeMismatchError):
        self_cross_block(FeaturePair(odd, odd), cfg, store)
    with pytest.raises(ShapeMismatchError):
        FeaturePair(T.Tensor(np.zeros((4, 4, 8))), T.Tensor(np.zeros((4, 2, 8))))
    with pytest.raises(ConfigError):
        AttentionConfig(6)


def test_gradient_reaches_both_inputs(rng):
    cfg, store = build()
    left = T.Tensor(rng.normal(size=(2, 4, 8)), requires_grad=True)
    right = T.Tensor(rng.normal(size=(2, 4, 8)), requires_grad=True)
    pair = self_cross_block(FeaturePair(left, right), cfg, store)
    T.sum_(pair.left * pair.left).backward()
    assert np.abs(left.grad).sum() > 0
    assert np.abs(right.grad).sum() > 0
    assert store['layer0.cross.qkv.w'].grad is not None


def test_one_window_is_full_attention(rng):
    q, k, v = (T.Tensor(rng.normal(size=(4, 6, 8))) for _ in range(3))
    windowed = window_reverse(
        scaled_dot_attention(window_partition(q, (1, 1)), window_partition(k, (1, 1)),
                             window_partition(v, (1, 1))), (1, 1), 4, 6)
    full = scaled_dot_attention(q.reshape(24, 8), k.reshape(24, 8), v.reshape(24, 8))
    np.testing.assert_allclose(windowed.data, full.data.reshape(4, 6, 8), rtol=1e-12,
                               atol=1e-12)


def test_one_window_lets_every_pixel_interact(rng):
    cfg, store = build(grid=(1, 1))
    left = rng.normal(size=(4, 4, 8))
    right = rng.normal(size=(4, 4, 8))
    base = self_cross_block(FeaturePair(T.Tensor(left), T.Tensor(right)), cfg, store)
    changed = left.copy()
    changed[0, 0] += 5.0
    moved = self_cross_block(FeaturePair(T.Tensor(changed), T.Tensor(right)), cfg, store)
    assert not np.allclose(moved.left.data[3, 3], base.left.data[3, 3])
    assert not np.allclose(moved.right.data[3, 3], base.right.data[3, 3])


def test_permuting_keys_with_their_values_keeps_the_output(rng):
    q = T.Tensor(rng.normal(size=(2, 5, 8)))
    k = rng.normal(size=(2, 7, 8))
    v = rng.normal(size=(2, 7, 3))
    order = rng.permutation(7)
    out = scaled_dot_attention(q, T.Tensor(k), T.Tensor(v))
    permuted = scaled_dot_attention(q, T.Tensor(k[:, order]), T.Tensor(v[:, order]))
    np.testing.assert_allclose(permuted.data, out.data, rtol=1e-12, atol=1e-12)


def test_zero_projection_init(rng):
    cfg, store = build(layers=2, projection_init='zeros')
    for layer in range(2):
        for kind in ('self', 'cross'):
            np.testing.assert_array_equal(store[f'layer{layer}.{kind}.proj.w'].data, 0.0)
            np.testing.assert_array_equal(store[f'layer{layer}.{kind}.proj.b'].data, 0.0)
    assert np.abs(store['layer0.self.qkv.w'].data).max() > 0


@pytest.mark.parametrize('seed', range(5))
def test_self_cross_block_gradient(seed):
    rng = np.random.default_rng(seed)
    cfg, store = build(seed=seed, dtype=np.float64)
    right = T.Tensor(rng.normal(size=(4, 4, 8)))
    left_weights = T.Tensor(rng.normal(size=(4, 4, 8)))
    right_weights = T.Tensor(rng.normal(size=(4, 4, 8)))

    def loss(left):
        pair = self_cross_block(FeaturePair(left, right), cfg, store)
        return T.sum_(pair.left * left_weights) + T.sum_(pair.right * right_weights)

    assert grad_check(loss, T.Tensor(rng.normal(size=(4, 4, 8)))) < 1e-4
