"""Automated modal parameter estimation from frequency response functions."""

__version__ = "0.1.0"

from .errors import AutomodalError, StageError  # noqa: E402
from .frf import FrfDataset, read_frf, write_frf  # noqa: E402
from .model_core import Mode, ObsVectorConfig, StateSpaceModel  # noqa: E402
from .pipeline import ModalReport, PipelineConfig, read_report, run_pipeline, write_report  # noqa: E402
from .synthetic import generate_synthetic  # noqa: E402

__all__ = [
    "AutomodalError", "StageError", "FrfDataset", "read_frf", "write_frf", "Mode",
    "ObsVectorConfig", "StateSpaceModel", "ModalReport", "PipelineConfig", "read_report",
    "run_pipeline", "write_report", "generate_synthetic",
]
