from .config import ExperimentConfig, load_config
from .data import generate_data, load_observations
from .experiment import run_experiment
from .reference import ReferenceResult, build_model, reference_posterior

__all__ = [
    "ExperimentConfig",
    "load_config",
    "generate_data",
    "load_observations",
    "run_experiment",
    "ReferenceResult",
    "build_model",
    "reference_posterior",
]
