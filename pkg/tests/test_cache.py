"""
Unit tests for the in-memory cache
"""

import pytest

from app.services.cache_service import InMemoryCache, cache_key_from_params, cached_result


class TestInMemoryCache:
    def test_get_and_stats(self):
        """Misses and hits are counted"""
        cache = InMemoryCache()
        assert cache.get("a") is None
        cache.set("a", 1)
        assert cache.get("a") == 1
        assert (cache.hits, cache.misses) == (1, 1)

    def test_least_recent_evicted(self):
        """The entry read longest ago goes first"""
        cache = InMemoryCache(max_entries=2)
        cache.set("a", 1)
        cache.set("b", 2)
        cache.get("a")
        cache.set("c", 3)
        assert len(cache) == 2
        assert cache.get("b") is None
        assert cache.get("a") == 1

    def test_key_order_independent(self):
        """Keyword order does not change the key"""
        assert cache_key_from_params(n=2, o="sw") == cache_key_from_params(o="sw", n=2)


class TestCachedResult:
    def test_memoized(self):
        """The wrapped function runs once per key"""
        calls = []

        @cached_result("test_square", key_func=lambda n: {"n": n})
        def square(n):
            calls.append(n)
            return n * n

        assert square(3) == 9
        assert square(3) == 9
        assert square(4) == 16
        assert calls == [3, 4]


if __name__ == "__main__":
    pytest.main([__file__])
