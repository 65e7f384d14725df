"""
Custom exceptions for pyGOAT with detailed error messages and troubleshooting guidance.
"""

from pathlib import Path
from typing import Iterable, List, Optional, Sequence


class PyGOATError(Exception):
    """Base exception class for pyGOAT with enhanced error reporting."""

    # process exit status used by the command-line interface
    exit_code = 1

    def __init__(self, message: str, technical_details: str = "", suggestions: List[str] = None):
        self.message = message
        self.technical_details = technical_details
        self.suggestions = suggestions or []

        # Build comprehensive error message
        full_message = f"{message}"

        if technical_details:
            full_message += f"\n\nTechnical Details:\n{technical_details}"

        if self.suggestions:
            full_message += "\n\nSuggestions to fix this:"
            for i, suggestion in enumerate(self.suggestions, 1):
                full_message += f"\n  {i}. {suggestion}"

        super().__init__(full_message)


class ShapeMismatchError(PyGOATError, ValueError):
    """Raised when tensor shapes are incompatible for an operation."""

    exit_code = 4

    def __init__(self, operation: str, shapes: Sequence, technical_details: str = ""):
        self.operation = operation
        self.shapes = [tuple(s) for s in shapes]
        rendered = " and ".join(str(s) for s in self.shapes)
        suggestions = [
            "Check that feature maps of both views were produced at the same resolution",
            "Image height and width must be divisible by the feature stride times the window grid",
        ]
        message = f"Shape mismatch in {operation}: {rendered}"
        super().__init__(message, technical_details, suggestions)


class IndexOutOfRangeError(PyGOATError, IndexError):
    """Raised when a gather or slice reads outside a tensor."""

    exit_code = 4

    def __init__(self, operation: str, index_info: str, shape: Sequence):
        message = f"Index out of range in {operation}: {index_info} for shape {tuple(shape)}"
        super().__init__(message)


class ConfigError(PyGOATError):
    """Raised when a configuration file or option is invalid."""

    exit_code = 2

    def __init__(self, issue: str, technical_details: str = "", suggestions: List[str] = None):
        default_suggestions = [
            "Run the command with --help to list every accepted option",
            "Compare your config file against the effective_config.ini written by a previous run",
        ]
        message = f"Configuration problem: {issue}"
        super().__init__(message, technical_details, suggestions or default_suggestions)


class SceneSpecError(ConfigError):
    """Raised when a synthetic scene description violates its invariants."""

    def __init__(self, issue: str, technical_details: str = ""):
        suggestions = [
            "Keep the maximum disparity below a quarter of the image width",
            "Use between 1 and 6 layers (the background counts as one layer)",
            "Texture kind must be one of: noise, gradient, checker",
        ]
        super().__init__(f"invalid synthetic scene: {issue}", technical_details, suggestions)


class UnknownAugmentationError(ConfigError):
    """Raised when an augmentation kind is not recognised."""

    def __init__(self, kind: str, valid_kinds: Iterable[str]):
        valid = ", ".join(sorted(valid_kinds))
        super().__init__(
            f"unknown augmentation '{kind}'",
            f"Valid augmentation kinds are: {valid}",
            [f"Use one of: {valid}"],
        )


class AttentionCapError(ConfigError):
    """Raised when the global attention matrix would exceed the configured size cap."""

    def __init__(self, num_pixels: int, cap: int):
        super().__init__(
            f"global attention over {num_pixels} feature pixels exceeds the cap of {cap}",
            f"The global attention matrix holds {num_pixels}x{num_pixels} entries.",
            [
                "Use smaller input images or a larger feature stride (scale)",
                "Raise global_attention_cap in the [model] section if memory allows",
            ],
        )


class DataFormatError(PyGOATError):
    """Raised when an input file is malformed or inconsistent."""

    exit_code = 3

    def __init__(self, filename: str, issue: str, technical_details: str = ""):
        suggestions = [
            f"Check that the file '{filename}' exists and is readable",
            "Disparity maps must be single-channel PFM files ('Pf' header)",
            "Images must be binary PPM (P6) or PGM (P5) files with maxval 255",
        ]
        message = f"Problem with data file '{filename}': {issue}"
        super().__init__(message, technical_details, suggestions)


class CheckpointError(DataFormatError):
    """Raised when a GOATCKPT checkpoint cannot be read or does not fit the model."""

    def __init__(self, filename: str, issue: str, technical_details: str = ""):
        super().__init__(filename, f"checkpoint {issue}", technical_details)


class MissingGroundTruthError(PyGOATError):
    """Raised when an evaluation needs ground truth that the sample lacks."""

    exit_code = 3

    def __init__(self, sample_id: str, missing: str):
        suggestions = [
            "Generate the dataset with gen-data, which writes dense left and right disparities",
            "Use occ-gt to derive an occlusion mask from left/right disparities",
        ]
        super().__init__(f"Sample '{sample_id}' has no {missing}", "", suggestions)


class EmptyRegionError(PyGOATError):
    """Raised when a loss or metric is asked to average over zero pixels."""

    exit_code = 3

    def __init__(self, what: str):
        super().__init__(f"Empty region: {what} contains no valid pixels")


class NumericalFailureError(PyGOATError):
    """Raised when training produces a non-finite loss or gradient."""

    exit_code = 4

    def __init__(self, step: int, quantity: str, value: float):
        suggestions = [
            "Lower the learning rate in the [optimizer] section",
            "Enable gradient clipping with clip_norm",
            "Check the dataset for NaN pixels outside the valid mask",
        ]
        message = f"Non-finite {quantity} at step {step}: {value}"
        super().__init__(message, "", suggestions)


class OutputDirectoryError(PyGOATError):
    """Raised when output directory cannot be created or accessed."""

    exit_code = 3

    def __init__(self, directory: str, issue: str):
        suggestions = [
            f"Check that you have write permissions for '{directory}'",
            "Verify the parent directory exists",
            "Try using a different output directory",
            "Check available disk space",
        ]

        message = f"Output directory problem: {issue}"
        technical_details = f"Cannot access or create directory: {directory}"
        super().__init__(message, technical_details, suggestions)


def validate_input_file(input_file: Path, suffixes: Sequence[str]) -> None:
    """Validate an input file with detailed error reporting."""
    input_file = Path(input_file)
    if not input_file.exists():
        # Check for common mistakes
        potential_files = []
        parent_dir = input_file.parent
        if parent_dir.exists():
            for f in parent_dir.iterdir():
                if f.suffix.lower() in suffixes:
                    potential_files.append(f.name)

        technical_details = f"File path: {input_file.absolute()}"
        if potential_files:
            technical_details += f"\n\nFound these files in {parent_dir}:\n" + "\n".join(
                f"  - {f}" for f in sorted(potential_files))

        raise DataFormatError(
            filename=str(input_file),
            issue="File not found",
            technical_details=technical_details
        )

    if input_file.suffix.lower() not in suffixes:
        raise DataFormatError(
            filename=str(input_file),
            issue=f"Expected one of {', '.join(suffixes)}, got '{input_file.suffix}' file",
        )

    if input_file.stat().st_size == 0:
        raise DataFormatError(filename=str(input_file), issue="File is empty")


def validate_output_directory(output_dir: Optional[Path],
                              project_name: Optional[str] = None) -> Path:
    """Validate and create output directory with helpful error messages."""
    if output_dir is None:
        output_dir = Path.cwd()

    project_dir = Path(output_dir) / project_name if project_name else Path(output_dir)

    try:
        project_dir.mkdir(parents=True, exist_ok=True)
    except PermissionError:
        raise OutputDirectoryError(
            directory=str(project_dir),
            issue="Permission denied - cannot create directory"
        )
    except OSError as e:
        if "No space left on device" in str(e):
            raise OutputDirectoryError(
                directory=str(project_dir),
                issue="No space left on device"
            )
        else:
            raise OutputDirectoryError(
                directory=str(project_dir),
                issue=f"Cannot create directory: {str(e)}"
            )

    # Test write permissions
    test_file = project_dir / ".write_test"
    try:
        test_file.touch()
        test_file.unlink()
    except PermissionError:
        raise OutputDirectoryError(
            directory=str(project_dir),
            issue="Directory exists but is not writable"
        )

    return project_dir
