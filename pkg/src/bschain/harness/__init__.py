"""Config-driven experiment harness with reproducible reports."""

from .config import ExperimentSpec, load_spec, validate_spec
from .report import Check, RunReport
from .runner import run

__all__ = ["ExperimentSpec", "load_spec", "validate_spec", "Check", "RunReport", "run"]
