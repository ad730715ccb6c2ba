"""
Caching service for sftkit
Memoizes expensive deterministic results such as compiled rule sets and supertiles
"""

import hashlib
import json
import functools
import logging
from collections import OrderedDict
from typing import Any, Optional, Dict, Callable

logger = logging.getLogger(__name__)


class InMemoryCache:
    """Least-recently-used cache bounded by entry count"""

    def __init__(self, max_entries: int = 4096):
        self._cache: "OrderedDict[str, Any]" = OrderedDict()
        self.max_entries = max_entries
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Optional[Any]:
        if key not in self._cache:
            self.misses += 1
            return None
        self._cache.move_to_end(key)
        self.hits += 1
        return self._cache[key]

    def set(self, key: str, value: Any) -> None:
        self._cache[key] = value
        self._cache.move_to_end(key)
        while len(self._cache) > self.max_entries:
            evicted, _ = self._cache.popitem(last=False)
            logger.debug(f"Cache evicted {evicted[:24]}")

    def clear(self) -> None:
        self._cache.clear()
        self.hits = self.misses = 0

    def __len__(self) -> int:
        return len(self._cache)


# Global cache instance
memory_cache = InMemoryCache()


def cache_key_from_params(**kwargs) -> str:
    """Generate a cache key from parameters"""
    params_str = json.dumps(kwargs, sort_keys=True, default=str)
    return hashlib.sha256(params_str.encode()).hexdigest()


def cached_result(namespace: str, key_func: Optional[Callable[..., Dict[str, Any]]] = None):
    """Decorator memoizing a pure function in the global cache.

    key_func maps the call arguments to the JSON-able parameters identifying the
    result; by default the positional and keyword arguments are used as given.
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            params = key_func(*args, **kwargs) if key_func else {"args": args, "kwargs": kwargs}
            key = f"{namespace}:{cache_key_from_params(**params)}"
            result = memory_cache.get(key)
            if result is not None:
                return result
            result = func(*args, **kwargs)
            memory_cache.set(key, result)
            return result

        return wrapper

    return decorator
