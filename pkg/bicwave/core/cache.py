"""
Scattering-matrix cache.

Building S is the dominant cost of every periodic eigensolve, and the
same (shape, ω) pair recurs across contour nodes and sweep contours.
"""

import logging
import threading
from typing import Callable, Optional, TypeVar

from cachelib import BaseCache, NullCache, SimpleCache

from bicwave.core.config import Config, settings

logger = logging.getLogger(__name__)

T = TypeVar("T")


class ScatteringCache:
    """Thin keyed wrapper around a cachelib backend; counters are updated under a lock."""

    def __init__(self, backend: BaseCache):
        self.backend = backend
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    @classmethod
    def from_config(cls, config: Config = settings) -> "ScatteringCache":
        if config.CACHE_TYPE == "null":
            return cls(NullCache())
        return cls(
            SimpleCache(
                threshold=config.CACHE_THRESHOLD,
                default_timeout=config.CACHE_DEFAULT_TIMEOUT,
            )
        )

    @staticmethod
    def make_key(geometry_hash: str, omega: complex, n_elements: int, n_tr: int,
                 media_key: str) -> str:
        omega = complex(omega)
        return (
            f"smat:{geometry_hash}:{omega.real:.17g}:{omega.imag:.17g}:"
            f"{n_elements}:{n_tr}:{media_key}"
        )

    def configure(self, config: Config) -> "ScatteringCache":
        """Swap in the backend described by ``config`` and reset counters."""
        self.backend = ScatteringCache.from_config(config).backend
        with self._lock:
            self.hits = 0
            self.misses = 0
        return self

    def get_or_build(self, key: str, builder: Callable[[], T]) -> T:
        value: Optional[T] = self.backend.get(key)
        if value is not None:
            with self._lock:
                self.hits += 1
            logger.debug(f"Cache hit {key}")
            return value
        with self._lock:
            self.misses += 1
        value = builder()
        self.backend.set(key, value)
        return value

    def clear(self) -> None:
        self.backend.clear()
        with self._lock:
            self.hits = 0
            self.misses = 0


# Shared default instance
scattering_cache = ScatteringCache.from_config()
