# Utils package

from utils.config import AppConfig, build_config, load_config, setup_logging
from utils.error_handler import (ConfigurationError, DataIOError, ErrorHandler, LiftPoolError, NumericalError,
                                 ShapeError, UsageError)
from utils.performance import PerformanceMonitor, measure_time

__all__ = [
    "AppConfig", "build_config", "load_config", "setup_logging",
    "ConfigurationError", "DataIOError", "ErrorHandler", "LiftPoolError", "NumericalError", "ShapeError",
    "UsageError",
    "PerformanceMonitor", "measure_time",
]
