"""Parsers the pipeline can drive: the built-in baseline or an external command."""

from .baseline import BaselineModel, TrainingError, parse_baseline, projectivize, train_baseline
from .external import BridgeError, ExternalParserSpec, check_alignment, run_external

__all__ = [
    "BaselineModel",
    "BridgeError",
    "ExternalParserSpec",
    "TrainingError",
    "check_alignment",
    "parse_baseline",
    "projectivize",
    "run_external",
    "train_baseline",
]
