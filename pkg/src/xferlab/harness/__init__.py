"""Experiment harness: config, sweep pipeline, verification suites, SVG output and CLI."""

from .config import ConfigError, SweepConfig, derive_seed, load_config
from .sweep import COLUMNS, SweepResult, run_pipeline, sweep
from .verify import SUITES, run_verify

__all__ = [
    "COLUMNS",
    "ConfigError",
    "SUITES",
    "SweepConfig",
    "SweepResult",
    "derive_seed",
    "load_config",
    "run_pipeline",
    "run_verify",
    "sweep",
]
