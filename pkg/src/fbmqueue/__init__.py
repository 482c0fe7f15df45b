"""Simulation and asymptotics for the fluid queue fed by fractional Brownian motion."""

from .estimate import MonteCarloEstimate
from .gaussian_paths import GaussianPath, PathKind, TimeGrid, fbm_covariance, sample_fbm, sample_w_path
from .workload import (
    NEG_INFINITY,
    QueueParams,
    WorkloadPath,
    simulate_forward,
    simulate_stationary_window,
    sojourn_level,
    sojourn_time,
)

__version__ = "0.1.0"

__all__ = [
    "MonteCarloEstimate",
    "GaussianPath",
    "PathKind",
    "TimeGrid",
    "fbm_covariance",
    "sample_fbm",
    "sample_w_path",
    "NEG_INFINITY",
    "QueueParams",
    "WorkloadPath",
    "simulate_forward",
    "simulate_stationary_window",
    "sojourn_level",
    "sojourn_time",
]
