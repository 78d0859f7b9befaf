"""
Configuration Management
Handles toolkit defaults from environment variables.

Run configs (JSON files read by the CLI) override these per run; the
values here are what a run falls back to when a knob is omitted.
"""

import os
from typing import Dict, Type

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == "true"


class Config:
    """Base configuration class with common settings."""

    # =====================================================
    # Application Settings
    # =====================================================
    APP_NAME: str = os.getenv("APP_NAME", "bicwave")
    APP_ENV: str = os.getenv("APP_ENV", "development")
    DEBUG: bool = _env_bool("DEBUG", "False")
    TESTING: bool = _env_bool("TESTING", "False")

    # =====================================================
    # Parallelism
    # =====================================================
    WORKERS: int = int(os.getenv("WORKERS", os.cpu_count() or 1))

    # =====================================================
    # Multipole Truncation
    # =====================================================
    N_TR: int = int(os.getenv("N_TR", 20))

    # =====================================================
    # Boundary Element Quadrature
    # =====================================================
    BEM_FAR_POINTS: int = int(os.getenv("BEM_FAR_POINTS", 4))
    BEM_NEAR_POINTS: int = int(os.getenv("BEM_NEAR_POINTS", 32))
    BEM_NEAR_FACTOR: float = float(os.getenv("BEM_NEAR_FACTOR", 2.0))
    BEM_SELF_POINTS: int = int(os.getenv("BEM_SELF_POINTS", 16))
    BEM_RESIDUAL_TOL: float = float(os.getenv("BEM_RESIDUAL_TOL", 1e-10))
    BEM_RCOND_MIN: float = float(os.getenv("BEM_RCOND_MIN", 1e-14))
    BEM_ROW_CHUNK: int = int(os.getenv("BEM_ROW_CHUNK", 128))
    # Concurrent BEM scattering-matrix builds in omega eigensolves
    BEM_WORKERS: int = int(os.getenv("BEM_WORKERS", 1))

    # =====================================================
    # Lattice Sums
    # =====================================================
    LATTICE_SPLIT: int = int(os.getenv("LATTICE_SPLIT", 2))
    LATTICE_TAU_MAX: float = float(os.getenv("LATTICE_TAU_MAX", 4.0))
    LATTICE_QUAD_TOL: float = float(os.getenv("LATTICE_QUAD_TOL", 1e-12))
    LATTICE_FLOOR_TOL: float = float(os.getenv("LATTICE_FLOOR_TOL", 1e-10))
    LATTICE_MAX_HALVINGS: int = int(os.getenv("LATTICE_MAX_HALVINGS", 12))
    BRANCH_EXCLUSION: float = float(os.getenv("BRANCH_EXCLUSION", 1e-8))
    DIRECT_SUM_TERMS: int = int(os.getenv("DIRECT_SUM_TERMS", 1_000_000))

    # =====================================================
    # Contour Eigensolver (SSM)
    # =====================================================
    SSM_QUAD_POINTS: int = int(os.getenv("SSM_QUAD_POINTS", 32))
    SSM_MOMENTS: int = int(os.getenv("SSM_MOMENTS", 8))
    SSM_PROBES: int = int(os.getenv("SSM_PROBES", 8))
    SSM_RANK_TOL: float = float(os.getenv("SSM_RANK_TOL", 1e-10))
    SSM_RESIDUAL_TOL: float = float(os.getenv("SSM_RESIDUAL_TOL", 1e-6))
    SSM_SEED: int = int(os.getenv("SSM_SEED", 0))

    # =====================================================
    # Band Sweeps & Mode Classification
    # =====================================================
    BAND_RADIUS: float = float(os.getenv("BAND_RADIUS", 0.45))
    BAND_MARGIN: float = float(os.getenv("BAND_MARGIN", 0.01))
    BAND_IM_MAX: float = float(os.getenv("BAND_IM_MAX", 1.2))
    MODE_TOL_IM: float = float(os.getenv("MODE_TOL_IM", 1e-4))

    # =====================================================
    # Topology Optimization
    # =====================================================
    OPT_DELTA: float = float(os.getenv("OPT_DELTA", 0.05))
    OPT_DELTA_MIN: float = float(os.getenv("OPT_DELTA_MIN", 1e-4))
    OPT_DELTA_MAX: float = float(os.getenv("OPT_DELTA_MAX", 1.0))
    OPT_J_TOL: float = float(os.getenv("OPT_J_TOL", 1e-10))
    OPT_MAX_ITER: int = int(os.getenv("OPT_MAX_ITER", 200))
    OPT_ELEMENTS: int = int(os.getenv("OPT_ELEMENTS", 800))
    OPT_VERIFY_ELEMENTS: int = int(os.getenv("OPT_VERIFY_ELEMENTS", 3200))
    OPT_GRID: int = int(os.getenv("OPT_GRID", 64))
    OPT_CELLS: int = int(os.getenv("OPT_CELLS", 128))
    OPT_SAMPLES: int = int(os.getenv("OPT_SAMPLES", 48))
    DESIGN_HALF_WIDTH: float = float(os.getenv("DESIGN_HALF_WIDTH", 0.354))

    # =====================================================
    # Scattering-Matrix Cache
    # =====================================================
    CACHE_TYPE: str = os.getenv("CACHE_TYPE", "simple")  # 'simple' or 'null'
    CACHE_THRESHOLD: int = int(os.getenv("CACHE_THRESHOLD", 64))
    CACHE_DEFAULT_TIMEOUT: int = int(os.getenv("CACHE_DEFAULT_TIMEOUT", 0))

    # =====================================================
    # Logging Configuration
    # =====================================================
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE: str = os.getenv("LOG_FILE", "")
    LOG_MAX_BYTES: int = int(os.getenv("LOG_MAX_BYTES", 10485760))  # 10MB
    LOG_BACKUP_COUNT: int = int(os.getenv("LOG_BACKUP_COUNT", 5))
    LOG_FORMAT: str = os.getenv("LOG_FORMAT", "text")  # 'json' or 'text'

    @classmethod
    def as_dict(cls) -> Dict[str, object]:
        """Return all upper-case settings, for run metadata."""
        return {
            name: getattr(cls, name)
            for name in dir(cls)
            if name.isupper() and not name.startswith("_")
        }


class DevelopmentConfig(Config):
    """Development configuration."""

    DEBUG = True
    LOG_LEVEL = os.getenv("LOG_LEVEL", "DEBUG")


class TestingConfig(Config):
    """Testing configuration."""

    TESTING = True
    WORKERS = int(os.getenv("WORKERS", 2))
    LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING")
    LOG_FILE = ""
    LOG_FORMAT = "text"
    CACHE_THRESHOLD = 8
    DIRECT_SUM_TERMS = 200_000


class ProductionConfig(Config):
    """Full resolution for long reference runs."""

    LOG_FORMAT = os.getenv("LOG_FORMAT", "json")
    LOG_FILE = os.getenv("LOG_FILE", "logs/bicwave.log")
    OPT_VERIFY_ELEMENTS = int(os.getenv("OPT_VERIFY_ELEMENTS", 12800))
    DIRECT_SUM_TERMS = int(os.getenv("DIRECT_SUM_TERMS", 100_000_000))


# Configuration dictionary
config: Dict[str, Type[Config]] = {
    "development": DevelopmentConfig,
    "testing": TestingConfig,
    "production": ProductionConfig,
    "default": DevelopmentConfig,
}


def get_config(env: str = None) -> Type[Config]:
    """
    Get configuration class based on environment.

    Args:
        env: Environment name (development, testing, production)

    Returns:
        Configuration class
    """
    if env is None:
        env = os.getenv("APP_ENV", "development")

    return config.get(env, config["default"])


# Export settings
settings = get_config()
