import numpy as np
import pytest

from pyGOAT.exceptions import ConfigError
from pyGOAT.Stereo_Matching import tensor as T
from pyGOAT.Stereo_Matching.attention import FeaturePair
from pyGOAT.Stereo_Matching.grad_check import grad_check
from pyGOAT.Stereo_Matching.parameters import ParameterStore
from pyGOAT.Stereo_Matching.pdo import (init_pdo_weights, match_mask, occlusion_evidence,
                                        parallel_cross_attention, pdo_forward,
                                        regress_disparity, regress_occlusion)


def build(channels=8, seed=0, mode='parallel', dtype=np.float32):
    store = ParameterStore(seed, dtype=dtype)
    init_pdo_weights(store, channels, mode)
    return store


def random_pair(rng, shape=(3, 6, 8), dtype=np.float32):
    return FeaturePair(T.Tensor(rng.normal(size=shape).astype(dtype)),
                       T.Tensor(rng.normal(size=shape).astype(dtype)))


def one_hot_volume(width, offset):
    volume = np.zeros((2, width, width), dtype=np.float32)
    for j in range(width):
        volume[:, j, max(j - offset, 0)] = 1.0
    return T.Tensor(volume)


def test_identity_match_gives_zero_disparity():
    np.testing.assert_array_equal(regress_disparity(one_hot_volume(6, 0)).data, 0.0)


@pytest.mark.parametrize('offset', [0, 1, 2, 5])
def test_shifted_match_gives_its_offset(offset):
    disparity = regress_disparity(one_hot_volume(8, offset)).data
    np.testing.assert_array_equal(disparity[:, offset:], float(offset))


def test_uniform_row_regresses_the_mean_column():
    uniform = T.Tensor(np.full((1, 4, 4), 0.25, dtype=np.float32))
    assert regress_disparity(uniform, raw=True).data[0, 3] == 1.5
    assert regress_disparity(uniform, raw=True).data[0, 0] == -1.5
    assert regress_disparity(uniform).data[0, 0] == 0.0


def test_distinct_columns_attend_to_themselves():
    width = channels = 8
    store = build(channels)
    for head in ('q1', 'k1', 'q2', 'k2'):
        store[head + '.w'].data = (10 * np.eye(channels)).astype(np.float32)
        store.fill(head + '.b', 0.0)
    features = np.tile(np.eye(width, channels, dtype=np.float32), (3, 1, 1))
    volumes = parallel_cross_attention(FeaturePair(T.Tensor(features), T.Tensor(features)),
                                       store)
    assert volumes.cattn1.shape == (3, width, width)
    np.testing.assert_array_equal(volumes.cattn1.data.argmax(axis=-1),
                                  np.tile(np.arange(width), (3, 1)))
    np.testing.assert_allclose(volumes.cattn1.data.sum(axis=-1), 1.0, rtol=1e-6)
    np.testing.assert_allclose(volumes.cattn2.data.sum(axis=-1), 1.0, rtol=1e-6)


def test_occlusion_evidence_counts_received_mass():
    cattn2 = np.zeros((1, 4, 4), dtype=np.float32)
    cattn2[0, :, 1] = 1.0  # every right pixel sends its mass to left column 1
    evidence = occlusion_evidence(T.Tensor(cattn2)).data
    np.testing.assert_array_equal(evidence, [[0, 4, 0, 0]])
    assert evidence[0, 1] >= 1


def test_occlusion_probabilities_are_open_interval(rng):
    store = build()
    cattn2 = T.softmax(T.Tensor(rng.normal(size=(4, 8, 8))), axis=-1)
    occlusion = regress_occlusion(cattn2, store).data
    assert occlusion.shape == (4, 8)
    assert np.all((occlusion > 0) & (occlusion < 1))


def test_pdo_scalar_loss_gradient(rng):
    store = build()
    right = T.Tensor(rng.normal(size=(1, 8, 8)).astype(np.float32))
    target = T.Tensor(rng.uniform(size=(1, 8)).astype(np.float32))

    def loss(left):
        pair = FeaturePair(left, right)
        volumes = parallel_cross_attention(pair, store)
        disparity = regress_disparity(volumes.cattn1, raw=True)
        return T.mean(T.pow_(disparity - target, 2.0)) + \
            T.mean(regress_occlusion(volumes.cattn2, store))

    left = T.Tensor(rng.normal(size=(1, 8, 8)).astype(np.float32))
    assert grad_check(loss, left) < 1e-3


def test_forward_shapes(rng):
    store = build()
    pair = FeaturePair(T.Tensor(rng.normal(size=(2, 6, 8))), T.Tensor(rng.normal(size=(2, 6, 8))))
    estimate, volumes = pdo_forward(pair, store)
    assert estimate.disparity.shape == (2, 6)
    assert estimate.occlusion.shape == (2, 6)
    assert volumes.cattn2.shape == (2, 6, 6)
    assert np.all(estimate.disparity.data >= 0)


def test_occlusion_evidence_sums_to_the_row_width(rng):
    store = build()
    pair = FeaturePair(T.Tensor(rng.normal(size=(3, 16, 8)).astype(np.float32)),
                       T.Tensor(rng.normal(size=(3, 16, 8)).astype(np.float32)))
    volumes = parallel_cross_attention(pair, store)
    evidence = occlusion_evidence(volumes.cattn2).data
    np.testing.assert_allclose(evidence.sum(axis=-1), 16.0, atol=1e-4)


def test_match_heads_start_as_the_identity():
    store = build()
    for head in ('q1', 'k1', 'q2', 'k2'):
        np.testing.assert_array_equal(store[head + '.w'].data, np.eye(8))
        np.testing.assert_array_equal(store[head + '.b'].data, 0.0)


def test_right_columns_beyond_the_left_column_get_no_mass(rng):
    volumes = parallel_cross_attention(random_pair(rng), build())
    beyond = np.triu(np.ones((6, 6), dtype=bool), k=1)
    np.testing.assert_array_equal(volumes.cattn1.data[:, beyond], 0.0)
    np.testing.assert_array_equal(volumes.cattn2.data[:, beyond.T], 0.0)
    np.testing.assert_array_equal(match_mask(3).data, [[0, -1e9, -1e9], [0, 0, -1e9], [0, 0, 0]])


def test_shared_mode_transposes_the_first_scores(rng):
    pair = random_pair(rng)
    store = build(mode='shared')
    assert 'q2.w' not in store.names()
    volumes = parallel_cross_attention(pair, store, mode='shared')
    estimate, _ = pdo_forward(pair, store, mode='shared')
    assert estimate.occlusion.shape == (3, 6)
    np.testing.assert_allclose(volumes.cattn2.data.sum(axis=-1), 1.0, rtol=1e-6)

    parallel = build()
    parallel['q2.w'].data = rng.normal(size=(8, 8)).astype(np.float32)
    separate = parallel_cross_attention(pair, parallel)
    np.testing.assert_allclose(separate.cattn1.data, volumes.cattn1.data, rtol=1e-6)
    assert not np.allclose(separate.cattn2.data, volumes.cattn2.data)


def test_unknown_mode():
    with pytest.raises(ConfigError):
        build(mode='joint')
    with pytest.raises(ConfigError):
        parallel_cross_attention(random_pair(np.random.default_rng(0)), build(), mode='joint')


def test_disparity_depends_only_on_the_expected_match():
    spread = np.zeros((1, 5, 5), dtype=np.float32)
    spread[0, 4, [1, 3]] = 0.5
    spread[0, :4, 0] = 1.0
    peaked = np.zeros((1, 5, 5), dtype=np.float32)
    peaked[0, 4, 2] = 1.0
    peaked[0, :4, 0] = 1.0
    np.testing.assert_array_equal(regress_disparity(T.Tensor(spread)).data,
                                  regress_disparity(T.Tensor(peaked)).data)
    assert regress_disparity(T.Tensor(spread)).data[0, 4] == 2.0


@pytest.mark.parametrize('seed', range(5))
def test_pdo_forward_gradient(seed):
    rng = np.random.default_rng(seed)
    store = build(seed=seed, dtype=np.float64)
    right = T.Tensor(rng.normal(size=(2, 6, 8)))
    disp_weights = T.Tensor(rng.normal(size=(2, 6)))
    occ_weights = T.Tensor(rng.normal(size=(2, 6)))

    def loss(left):
        estimate, _ = pdo_forward(FeaturePair(left, right), store)
        return T.sum_(estimate.disparity * disp_weights) + \
            T.sum_(estimate.occlusion * occ_weights)

    assert grad_check(loss, T.Tensor(rng.normal(size=(2, 6, 8)))) < 1e-4
