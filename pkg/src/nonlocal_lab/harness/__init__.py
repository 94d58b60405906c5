from .config import ConfigError, ExperimentSpec, ValidationError, emit_config, parse_config
from .runner import RunManifest, run

__all__ = ["ConfigError", "ExperimentSpec", "RunManifest", "ValidationError", "emit_config", "parse_config", "run"]
