import numpy as np
import pytest

from pyGOAT.exceptions import ConfigError
from pyGOAT.Stereo_Matching import tensor as T
from pyGOAT.Stereo_Matching.grad_check import grad_check
from pyGOAT.Stereo_Matching.layers import avg_pool, conv, init_conv, init_linear, linear
from pyGOAT.Stereo_Matching.parameters import ParameterStore


def test_avg_pool_means_each_block():
    x = np.arange(4 * 6 * 2, dtype=np.float64).reshape(4, 6, 2)
    pooled = avg_pool(T.Tensor(x), 2).data
    assert pooled.shape == (2, 3, 2)
    np.testing.assert_allclose(pooled[1, 2], x[2:4, 4:6].mean(axis=(0, 1)))


def test_avg_pool_gradient(rng):
    weights = T.Tensor(rng.normal(size=(2, 2, 3)))
    x = T.Tensor(rng.normal(size=(4, 4, 3)))
    assert grad_check(lambda t: T.sum_(avg_pool(t, 2) * weights), x) < 1e-6


def test_zero_convolution(rng):
    store = ParameterStore(0)
    init_conv(store, 'out', 4, 1, init='zeros')
    x = T.Tensor(rng.normal(size=(3, 5, 4)).astype(np.float32))
    np.testing.assert_array_equal(conv(store, 'out', x).data, 0.0)


def test_identity_linear_passes_features_through(rng):
    store = ParameterStore(0)
    init_linear(store, 'head', 6, 6, init='identity')
    x = rng.normal(size=(2, 3, 6)).astype(np.float32)
    np.testing.assert_array_equal(linear(store, 'head', T.Tensor(x)).data, x)


def test_identity_needs_a_square_weight():
    with pytest.raises(ConfigError):
        init_linear(ParameterStore(0), 'head', 6, 4, init='identity')
