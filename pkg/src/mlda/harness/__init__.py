"""Experiment harness: configs, runners, aggregation, CLI."""

from .aggregate import aggregate, slope_fit
from .config import (
    DEFAULT_SEED,
    DEFAULTS,
    EXPERIMENTS,
    ExperimentConfig,
    build_config,
    load_config_file,
    scheme_from_dict,
    validate_options,
)
from .experiments import (
    ExperimentReport,
    run,
    run_all,
    write_csv,
    write_report,
    write_summary,
)

__all__ = [
    "DEFAULT_SEED",
    "DEFAULTS",
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentReport",
    "aggregate",
    "build_config",
    "load_config_file",
    "run",
    "run_all",
    "scheme_from_dict",
    "slope_fit",
    "validate_options",
    "write_csv",
    "write_report",
    "write_summary",
]
