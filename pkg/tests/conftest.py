import numpy as np
import pytest

from pyGOAT.Stereo_Matching.config import ModelConfig, RunConfig
from pyGOAT.Stereo_Matching.synth_scene import SceneSpec, synth_scene

TINY_MODEL = dict(channels=8, hidden_channels=8, matching_channels=8, context_channels=8,
                  radius=2, iterations=2, window_grid=(2, 2), scale=2,
                  num_self_cross_layers=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_model_config():
    return ModelConfig(**TINY_MODEL)


@pytest.fixture
def tiny_run_config():
    cfg = RunConfig(model=ModelConfig(**TINY_MODEL))
    cfg.data.height, cfg.data.width, cfg.data.d_max, cfg.data.num_layers = 16, 32, 6, 2
    cfg.run.steps = 3
    cfg.run.checkpoint_every = 2
    return cfg


@pytest.fixture
def small_sample():
    return synth_scene(SceneSpec(seed=1, height=16, width=32, num_layers=2, d_max=6))
