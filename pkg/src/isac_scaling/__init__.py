"""Scaling-law simulator for integrated sensing and communication in
extended random networks."""
from .config import ConfigError, ExperimentConfig, load_config
from .experiment import run_instance, run_sweep
from .metrics import ScalingReport, fit_scaling_slope
from .netgen import NetworkInstance, generate_network

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "NetworkInstance",
    "ScalingReport",
    "fit_scaling_slope",
    "generate_network",
    "load_config",
    "run_instance",
    "run_sweep",
]
