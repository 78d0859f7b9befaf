"""
Tests for configuration, errors, logging and the scattering cache.
"""

import concurrent.futures as futures
import logging

import pytest

from bicwave import create_runtime
from bicwave.core.cache import ScatteringCache
from bicwave.core.config import (
    DevelopmentConfig,
    ProductionConfig,
    TestingConfig,
    get_config,
)
from bicwave.core.errors import (
    BicwaveError,
    BranchCutError,
    ConfigError,
    StationaryPoint,
    TrackingError,
    WellSeparationError,
)
from bicwave.core.logging import WarningCollector


@pytest.mark.unit
class TestConfig:
    """Test cases for configuration loading."""

    def test_get_config_by_name(self):
        """Test environment lookup."""
        assert get_config("testing") is TestingConfig
        assert get_config("production") is ProductionConfig

    def test_unknown_environment_falls_back(self):
        """Test that unknown names give the development config."""
        assert get_config("staging") is DevelopmentConfig

    def test_testing_overrides(self):
        """Test the testing configuration values."""
        assert TestingConfig.TESTING is True
        assert TestingConfig.CACHE_THRESHOLD == 8
        assert TestingConfig.LOG_FILE == ""

    def test_as_dict_has_only_settings(self):
        """Test that as_dict exports upper-case settings."""
        settings = TestingConfig.as_dict()
        assert settings["N_TR"] == TestingConfig.N_TR
        assert all(key.isupper() for key in settings)


@pytest.mark.unit
class TestErrors:
    """Test cases for the error hierarchy."""

    def test_validation_family_exit_code(self):
        """Test that input errors exit with code 2."""
        assert ConfigError("x").exit_code == 2
        assert WellSeparationError("x").exit_code == 2
        assert BranchCutError("x").exit_code == 2

    def test_numerical_family_exit_code(self):
        """Test that numerical failures exit with code 3."""
        assert TrackingError("x").exit_code == 3

    def test_stationary_point_is_not_a_failure(self):
        """Test that a stationary point exits cleanly."""
        assert StationaryPoint("x").exit_code == 0

    def test_to_dict(self):
        """Test the serialized error body."""
        body = WellSeparationError("overlap", {"L": 1.0}).to_dict()
        assert body == {
            "status": "error",
            "error": {"code": "WELL_SEPARATION", "message": "overlap", "details": {"L": 1.0}},
        }

    def test_base_error_defaults(self):
        """Test the base error code."""
        error = BicwaveError("boom")
        assert error.code == "INTERNAL_ERROR"
        assert error.details == {}


@pytest.mark.unit
class TestScatteringCache:
    """Test cases for the cachelib-backed scattering cache."""

    def test_hits_and_misses(self):
        """Test that a second lookup is served from the cache."""
        cache = ScatteringCache.from_config(TestingConfig)
        calls = []

        def build():
            calls.append(1)
            return "value"

        key = ScatteringCache.make_key("abc", 1.5 + 0j, 100, 10, "1/1:2/1")
        assert cache.get_or_build(key, build) == "value"
        assert cache.get_or_build(key, build) == "value"
        assert len(calls) == 1
        assert (cache.hits, cache.misses) == (1, 1)

    def test_key_distinguishes_frequency(self):
        """Test that keys differ by complex frequency."""
        a = ScatteringCache.make_key("abc", 1.0 + 0j, 100, 10, "m")
        b = ScatteringCache.make_key("abc", 1.0 + 1e-12j, 100, 10, "m")
        assert a != b

    def test_null_backend_never_hits(self):
        """Test that the null backend always rebuilds."""

        class NullConfig(TestingConfig):
            CACHE_TYPE = "null"

        cache = ScatteringCache.from_config(NullConfig)
        cache.get_or_build("k", lambda: 1)
        cache.get_or_build("k", lambda: 1)
        assert cache.hits == 0
        assert cache.misses == 2

    def test_configure_resets_counters(self):
        """Test that reconfiguring swaps the backend and resets counters."""
        cache = ScatteringCache.from_config(TestingConfig)
        cache.get_or_build("k", lambda: 1)
        cache.configure(TestingConfig)
        assert (cache.hits, cache.misses) == (0, 0)
        assert cache.backend.get("k") is None

    def test_counters_under_threads(self):
        """Test that concurrent lookups account for every call."""
        cache = ScatteringCache.from_config(TestingConfig)
        keys = [f"k{i % 4}" for i in range(200)]
        with futures.ThreadPoolExecutor(max_workers=8) as pool:
            values = list(pool.map(lambda key: cache.get_or_build(key, lambda: key), keys))
        assert values == keys
        assert cache.hits + cache.misses == len(keys)
        assert cache.misses >= 4


@pytest.mark.unit
class TestRuntime:
    """Test cases for runtime creation and logging."""

    def test_create_runtime(self, runtime):
        """Test that the runtime carries the testing config."""
        assert runtime.config is TestingConfig
        assert runtime.workers == TestingConfig.WORKERS
        assert runtime.logger.name == "bicwave"

    def test_repeated_setup_does_not_stack_handlers(self):
        """Test that handlers are replaced on repeated setup."""
        create_runtime("testing")
        first = len(logging.getLogger("bicwave").handlers)
        create_runtime("testing")
        assert len(logging.getLogger("bicwave").handlers) == first

    def test_warning_collector(self):
        """Test that warnings from package loggers are collected."""
        create_runtime("testing")
        with WarningCollector() as collected:
            logging.getLogger("bicwave.services.physics").warning("near a cut")
            logging.getLogger("bicwave.services.physics").info("ignored")
        assert collected.messages == ["bicwave.services.physics: near a cut"]
