from collections import OrderedDict

import numpy as np

from pyGOAT.exceptions import CheckpointError, ConfigError
from pyGOAT.Stereo_Matching.constants import DEFAULT_DTYPE
from pyGOAT.Stereo_Matching.tensor import Tensor


class ParameterStore(object):
    """
    Ordered registry of trainable leaf tensors, addressed by dotted names.

    Parameters
    ----------
    seed : int
        Seeds the initialisation generator; registering the same names in the
        same order with the same seed gives bit-identical weights.
    dtype : numpy dtype
        Precision of every registered tensor.
    """

    def __init__(self, seed=0, dtype=DEFAULT_DTYPE):
        self._params = OrderedDict()
        self.rng = np.random.default_rng(seed)
        self.dtype = np.dtype(dtype)

    def add(self, name, shape, fan_in=None, init='uniform'):
        if name in self._params:
            raise ConfigError(f"parameter '{name}' registered twice")
        shape = tuple(int(n) for n in shape)
        if init == 'uniform':
            if fan_in is None:
                fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else shape[0]
            bound = 1.0 / np.sqrt(max(fan_in, 1))
            data = self.rng.uniform(-bound, bound, size=shape)
        elif init == 'zeros':
            data = np.zeros(shape)
        elif init == 'ones':
            data = np.ones(shape)
        elif init == 'identity':
            if len(shape) != 2 or shape[0] != shape[1]:
                raise ConfigError(f"identity initialisation of '{name}' needs a square matrix, "
                                  f"got shape {shape}")
            data = np.eye(shape[0])
        else:
            raise ConfigError(f"unknown initialisation '{init}'")
        tensor = Tensor(data.astype(self.dtype), requires_grad=True)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name):
        try:
            return self._params[name]
        except KeyError:
            raise ConfigError(f"no parameter named '{name}'")

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self):
        return list(self._params)

    def view(self, prefix):
        return ParameterView(self, prefix)

    def num_values(self):
        return int(sum(t.size for t in self._params.values()))

    def zero_grad(self):
        for tensor in self._params.values():
            tensor.grad = None

    def fill(self, prefix, value):
        """Overwrite every parameter whose name starts with `prefix`."""
        for name, tensor in self._params.items():
            if name.startswith(prefix):
                tensor.data = np.full(tensor.shape, value, dtype=tensor.dtype)

    def state_dict(self):
        return OrderedDict((name, t.data.copy()) for name, t in self._params.items())

    def load_state_dict(self, state, source='<memory>'):
        missing = [n for n in self._params if n not in state]
        unexpected = [n for n in state if n not in self._params]
        if missing or unexpected:
            raise CheckpointError(
                source, "does not match the model parameters",
                f"missing: {missing[:5]}\nunexpected: {unexpected[:5]}")
        for name, tensor in self._params.items():
            value = np.asarray(state[name])
            if value.shape != tensor.shape:
                raise CheckpointError(
                    source, f"has the wrong shape for '{name}'",
                    f"stored {value.shape}, model expects {tensor.shape}")
            tensor.data = value.astype(tensor.dtype)
            tensor.grad = None


class ParameterView(object):
    """Prefix-scoped window onto a ParameterStore."""

    def __init__(self, store, prefix):
        self.store = store
        self.prefix = prefix if prefix.endswith('.') or not prefix else prefix + '.'

    def add(self, name, shape, fan_in=None, init='uniform'):
        return self.store.add(self.prefix + name, shape, fan_in, init)

    def __getitem__(self, name):
        return self.store[self.prefix + name]

    def __contains__(self, name):
        return (self.prefix + name) in self.store

    def view(self, prefix):
        return ParameterView(self.store, self.prefix + prefix)
