"""
Runtime Factory
Creates and configures a toolkit runtime for the CLI and for scripts.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Type

from bicwave.core.cache import ScatteringCache, scattering_cache
from bicwave.core.config import Config, get_config
from bicwave.core.logging import setup_logging

__version__ = "0.1.0"

# Logger
logger = logging.getLogger(__name__)


@dataclass
class Runtime:
    """Resolved configuration plus the shared services a run uses."""

    config: Type[Config]
    cache: ScatteringCache
    logger: logging.Logger

    @property
    def workers(self) -> int:
        return self.config.WORKERS


def create_runtime(config_name: Optional[str] = None) -> Runtime:
    """
    Create and configure a runtime.

    Args:
        config_name: Configuration environment name

    Returns:
        Runtime with logging set up and the scattering cache configured
    """
    # Load configuration
    config = get_config(config_name)

    # Setup logging
    package_logger = setup_logging(config)

    # The services share one cache instance; point it at this config's backend
    cache = scattering_cache.configure(config)

    logger.info(f"{config.APP_NAME} {__version__} initialized in {config.APP_ENV} mode")

    return Runtime(config=config, cache=cache, logger=package_logger)
