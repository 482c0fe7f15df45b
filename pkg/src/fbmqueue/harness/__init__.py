"""Experiment harness: configuration, Monte Carlo drivers, presets and the CLI."""

from .config import ExperimentConfig, load_config, parse_config
from .drivers import (
    ResultRecord,
    estimate_conditional_bm,
    estimate_conditional_fbm,
    estimate_piterbarg,
    records_to_csv,
    run_experiment,
)
from .presets import PRESETS, load_preset

__all__ = [
    "ExperimentConfig",
    "PRESETS",
    "ResultRecord",
    "estimate_conditional_bm",
    "estimate_conditional_fbm",
    "estimate_piterbarg",
    "load_config",
    "load_preset",
    "parse_config",
    "records_to_csv",
    "run_experiment",
]
