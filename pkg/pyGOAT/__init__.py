"""
pyGOAT - occlusion-aware stereo matching with attention

A Python package for estimating disparity and occlusion from rectified
stereo pairs, with a synthetic dataset generator, training loop,
evaluation metrics and occlusion ground-truth tooling.
"""

from .pygoat import (generate_dataset, train_goat, evaluate_goat, estimate_disparity,
                     generate_occlusion_gt, load_model, DatasetResult, EvaluationResult,
                     InferenceResult)
from .exceptions import (
    PyGOATError, ShapeMismatchError, IndexOutOfRangeError, ConfigError, SceneSpecError,
    UnknownAugmentationError, AttentionCapError, DataFormatError, CheckpointError,
    MissingGroundTruthError, EmptyRegionError, NumericalFailureError, OutputDirectoryError
)

__version__ = "0.1.0"

__all__ = [
    "generate_dataset",
    "train_goat",
    "evaluate_goat",
    "estimate_disparity",
    "generate_occlusion_gt",
    "load_model",
    "DatasetResult",
    "EvaluationResult",
    "InferenceResult",
    # Exception classes for advanced error handling
    "PyGOATError",
    "ShapeMismatchError",
    "IndexOutOfRangeError",
    "ConfigError",
    "SceneSpecError",
    "UnknownAugmentationError",
    "AttentionCapError",
    "DataFormatError",
    "CheckpointError",
    "MissingGroundTruthError",
    "EmptyRegionError",
    "NumericalFailureError",
    "OutputDirectoryError"
]
