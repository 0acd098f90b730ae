from .config import ConfigError, ExperimentConfig, config_from_mapping, load_config
from .experiments import Report, run
from .traces import RegretTrace, read_trace, write_trace

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RegretTrace",
    "Report",
    "config_from_mapping",
    "load_config",
    "read_trace",
    "run",
    "write_trace",
]
