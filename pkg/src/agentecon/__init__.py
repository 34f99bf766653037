"""Seedable agent-based city economy with pluggable decision backends."""
from .config import RunConfig, Scenario, desk_config, load_config
from .engine import Engine, StepError, apply_shock, checkpoint_load, checkpoint_save, resume, run

__version__ = "0.1.0"

__all__ = ["Engine", "RunConfig", "Scenario", "StepError", "apply_shock", "checkpoint_load", "checkpoint_save",
           "desk_config", "load_config", "resume", "run", "__version__"]
