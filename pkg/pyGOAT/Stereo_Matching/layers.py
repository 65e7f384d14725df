"""
Parameterised building blocks shared by the network modules.

Every block comes as an `init_*` function that registers its weights in a
ParameterStore view and an apply function that reads them back by name.
Feature maps travel between blocks as [H, W, C] tensors; convolutions work
on [1, C, H, W] internally.
"""
from pyGOAT.Stereo_Matching import tensor as T


def init_conv(params, name, in_channels, out_channels, kernel=3, init='uniform'):
    """`init='zeros'` registers an all-zero kernel and bias."""
    fan_in = in_channels * kernel * kernel
    params.add(name + '.w', (out_channels, in_channels, kernel, kernel), fan_in, init)
    params.add(name + '.b', (out_channels,), fan_in, init)


def conv(params, name, x, stride=1):
    """3x3 (or 1x1) 'same'-padded convolution of an [H, W, C] map."""
    w = params[name + '.w']
    out = T.conv2d(hwc_to_bchw(x), w, params[name + '.b'], stride=stride,
                   padding=w.shape[-1] // 2)
    return bchw_to_hwc(out)


def init_linear(params, name, in_features, out_features, init='uniform'):
    """`init` applies to the weight; 'zeros' and 'identity' also zero the bias."""
    params.add(name + '.w', (in_features, out_features), in_features, init)
    params.add(name + '.b', (out_features,), in_features,
               'uniform' if init == 'uniform' else 'zeros')


def linear(params, name, x):
    return T.matmul(x, params[name + '.w']) + params[name + '.b']


def init_layer_norm(params, name, features):
    params.add(name + '.gamma', (features,), init='ones')
    params.add(name + '.beta', (features,), init='zeros')


def layer_norm(params, name, x):
    return T.layer_norm(x, params[name + '.gamma'], params[name + '.beta'])


def init_mlp(params, name, features, hidden):
    init_linear(params, name + '.fc1', features, hidden)
    init_linear(params, name + '.fc2', hidden, features)


def mlp(params, name, x):
    return linear(params, name + '.fc2', T.relu(linear(params, name + '.fc1', x)))


def avg_pool(x, size):
    """Mean over non-overlapping size x size blocks of an [H, W, C] map."""
    height, width, channels = x.shape
    blocks = x.reshape(height // size, size, width // size, size, channels)
    return T.mean(blocks, axis=(1, 3))


def hwc_to_bchw(x):
    return T.transpose(x, (2, 0, 1)).reshape(1, x.shape[2], x.shape[0], x.shape[1])


def bchw_to_hwc(x):
    return T.transpose(x.reshape(x.shape[1:]), (1, 2, 0))
