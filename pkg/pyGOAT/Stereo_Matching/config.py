"""
Run configuration: dataclass sections read from and written to INI files.

    [model]      network sizes, iterations, ablation switches (aggregation_mode,
                 context_adjustment, pdo_mode)
    [loss]       gamma, lambda1, lambda2
    [optimizer]  Adam settings, clipping and step decay
    [data]       synthetic scene parameters and training augmentations
    [run]        seed, steps, checkpoint interval, threads

Unknown sections and keys are rejected.  The number of refinement
iterations lives in [model] and is mirrored into the loss section.
"""
import configparser
import logging
import typing
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Tuple

from pyGOAT.exceptions import ConfigError
from pyGOAT.Stereo_Matching.augment import AUGMENTATIONS
from pyGOAT.Stereo_Matching.oga import AGGREGATION_MODES
from pyGOAT.Stereo_Matching.pdo import PDO_MODES
from pyGOAT.Stereo_Matching.supervision import LossConfig, OptimizerConfig
from pyGOAT.Stereo_Matching.synth_scene import SceneSpec

logger = logging.getLogger(__name__)


@dataclass
class ModelConfig:
    channels: int = 32
    hidden_channels: int = 32
    matching_channels: int = 32
    context_channels: int = 32
    radius: int = 4
    iterations: int = 12
    window_grid: Tuple[int, int] = (2, 2)
    scale: int = 4
    num_self_cross_layers: int = 2
    global_attention_cap: int = 4096
    aggregation_mode: str = 'occlusion_aware'
    context_adjustment: bool = True
    pdo_mode: str = 'parallel'

    def __post_init__(self):
        self.window_grid = tuple(int(n) for n in self.window_grid)
        for name in ('channels', 'hidden_channels', 'matching_channels', 'context_channels',
                     'radius', 'iterations', 'scale', 'num_self_cross_layers',
                     'global_attention_cap'):
            if getattr(self, name) <= 0:
                raise ConfigError(f"[model] {name} must be positive, got {getattr(self, name)}")
        if self.channels % 4 or self.context_channels % 4:
            raise ConfigError("[model] channels and context_channels must be multiples of 4")
        if self.scale & (self.scale - 1):
            raise ConfigError(f"[model] scale must be a power of two, got {self.scale}")
        if self.aggregation_mode not in AGGREGATION_MODES:
            raise ConfigError(f"[model] unknown aggregation_mode '{self.aggregation_mode}'",
                              f"valid modes: {', '.join(AGGREGATION_MODES)}")
        if self.pdo_mode not in PDO_MODES:
            raise ConfigError(f"[model] unknown pdo_mode '{self.pdo_mode}'",
                              f"valid modes: {', '.join(PDO_MODES)}")


@dataclass
class DataConfig:
    height: int = 64
    width: int = 128
    num_layers: int = 3
    d_max: float = 24
    texture: str = 'noise'
    integer_disparity: bool = True
    train_split: str = 'train'
    val_split: str = 'val'
    augmentations: Tuple[str, ...] = ()
    augment_probability: float = 0.5

    def __post_init__(self):
        self.augmentations = tuple(self.augmentations)
        unknown = [kind for kind in self.augmentations if kind not in AUGMENTATIONS]
        if unknown:
            raise ConfigError(f"[data] unknown augmentations {unknown}",
                              f"valid kinds: {', '.join(sorted(AUGMENTATIONS))}")

    def scene_spec(self, seed):
        return SceneSpec(seed=seed, height=self.height, width=self.width,
                         num_layers=self.num_layers, d_max=self.d_max, texture=self.texture,
                         integer_disparity=self.integer_disparity)


@dataclass
class RunSection:
    seed: int = 0
    steps: int = 500
    checkpoint_every: int = 100
    threads: Optional[int] = None


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    data: DataConfig = field(default_factory=DataConfig)
    run: RunSection = field(default_factory=RunSection)

    def __post_init__(self):
        self.loss.iterations = self.model.iterations

    def sections(self):
        return {'model': self.model, 'loss': self.loss, 'optimizer': self.optimizer,
                'data': self.data, 'run': self.run}


# keys mirrored from another section and never read from files
_DERIVED_KEYS = {('loss', 'iterations')}


def _parse_value(raw, field_type, where):
    raw = raw.strip()
    if typing.get_origin(field_type) is typing.Union:
        if raw.lower() in ('', 'none'):
            return None
        field_type = next(a for a in typing.get_args(field_type) if a is not type(None))
    try:
        if field_type is bool:
            lowered = raw.lower()
            if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ValueError(raw)
            return configparser.ConfigParser.BOOLEAN_STATES[lowered]
        if typing.get_origin(field_type) is tuple:
            element = typing.get_args(field_type)[0]
            return tuple(element(item.strip()) for item in raw.split(',') if item.strip())
        return field_type(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {where} = '{raw}'",
                          f"expected a value of type {getattr(field_type, '__name__', field_type)}")


def _format_value(value):
    if value is None:
        return 'none'
    if isinstance(value, tuple):
        return ', '.join(str(v) for v in value)
    return str(value)


def _section_values(section_obj, section_name, items):
    types = {f.name: f.type for f in fields(section_obj)}
    values = {}
    for key, raw in items:
        if key not in types or (section_name, key) in _DERIVED_KEYS:
            raise ConfigError(f"unknown key '{key}' in section [{section_name}]",
                              f"accepted keys: {', '.join(sorted(types))}")
        values[key] = _parse_value(raw, types[key], f"[{section_name}] {key}")
    return values


def build_config(file_values=None, overrides=None):
    """
    Assemble a RunConfig from parsed file values and CLI overrides.

    Both arguments map section name -> {key: typed value}; overrides win
    over file values and None overrides are ignored.
    """
    defaults = RunConfig()
    merged = {}
    for name, section in defaults.sections().items():
        values = {f.name: getattr(section, f.name) for f in fields(section)}
        values.update((file_values or {}).get(name, {}))
        values.update({k: v for k, v in (overrides or {}).get(name, {}).items()
                       if v is not None})
        merged[name] = type(section)(**values)
    unknown = set(file_values or {}) - set(merged)
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}",
                          f"accepted sections: {', '.join(merged)}")
    return RunConfig(**merged)


def read_config(path=None, overrides=None):
    """
    Parse an INI file (optional) and apply overrides.

    Raises
    ------
    ConfigError
        Unreadable file, unknown section or key, or a value that does not parse.
    """
    file_values = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as handle:
                parser.read_file(handle)
        except (OSError, configparser.Error) as e:
            raise ConfigError(f"cannot read config file '{path}'", str(e))
        defaults = RunConfig().sections()
        for name in parser.sections():
            if name not in defaults:
                raise ConfigError(f"unknown section [{name}] in '{path}'",
                                  f"accepted sections: {', '.join(defaults)}")
            file_values[name] = _section_values(defaults[name], name, parser.items(name))
    return build_config(file_values, overrides)


def write_config(path, cfg):
    parser = configparser.ConfigParser(interpolation=None)
    for name, section in cfg.sections().items():
        parser[name] = {f.name: _format_value(getattr(section, f.name))
                        for f in fields(section) if (name, f.name) not in _DERIVED_KEYS}
    with open(path, 'w') as handle:
        parser.write(handle)
    logger.debug("wrote effective configuration to %s", path)
    return Path(path)

