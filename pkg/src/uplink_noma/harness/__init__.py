"""Experiment orchestration: configuration, Monte Carlo studies, CSV output and CLI."""
from .config import ConfigError, ExperimentConfig, EXPERIMENTS, default_config, load_config
from .experiments import run_experiment, trial_rng
from .results import ResultRow, read_csv, write_csv

__all__ = [
    "ConfigError", "ExperimentConfig", "EXPERIMENTS", "default_config", "load_config",
    "run_experiment", "trial_rng", "ResultRow", "read_csv", "write_csv",
]
