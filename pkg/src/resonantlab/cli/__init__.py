"""Experiment orchestration: configs, manifests, subcommands and reports."""
from .config import ConfigError, ExperimentConfig, resolve
from .main import build_parser, main, parse_config, run
