"""Behavior and invariant tests for the cache simulator."""

import numpy as np
import pytest
from scipy import stats

from miragesim.cache import (CacheConfig, CapacityError, MirageCache,
                             OutcomeKind)
from miragesim.ciphers import BlockCipherKind


def small(**kw):
    defaults = dict(sets_per_skew=256, cipher=BlockCipherKind.AES128,
                    rng_seed=1)
    defaults.update(kw)
    return CacheConfig(**defaults)


def test_config_validation():
    with pytest.raises(ValueError):
        CacheConfig(sets_per_skew=1000)
    with pytest.raises(ValueError):
        CacheConfig(cipher=BlockCipherKind.BUGGY_PRESENT80)
    CacheConfig(cipher=BlockCipherKind.BUGGY_PRESENT80,
                buggy_cipher_enabled=True)
    with pytest.raises(ValueError):
        # data store must be smaller than the tag store
        CacheConfig(sets_per_skew=256, data_store_capacity=256 * 2 * 14)


def test_install_hits_on_reinstall():
    cache = MirageCache(small())
    assert cache.install(42).kind is OutcomeKind.MISS_INSTALLED
    assert cache.install(42).kind is OutcomeKind.HIT
    assert cache.data_occupancy == 1


def test_global_eviction_engages_at_capacity():
    cache = MirageCache(small())
    log = cache.run_references(3 * cache.config.data_store_capacity)
    assert log.miss_with_global_eviction > 0
    assert cache.data_occupancy == cache.config.data_store_capacity
    assert log.sae_count == 0
    assert not log.capacity_violation
    cache.check_pointer_bijection()


def test_global_evict_returns_resident_address():
    cache = MirageCache(small())
    cache.install(777)
    assert cache.global_evict() == 777
    assert cache.data_occupancy == 0
    assert cache.install(777).kind is OutcomeKind.MISS_INSTALLED


def test_global_eviction_uniformity_chi_square():
    """Evicted tags must be uniform over occupied sets (proportional to
    per-set occupancy at eviction time)."""
    cache = MirageCache(small(sets_per_skew=1024, rng_seed=7))
    cache.init_valid(cache.config.data_store_capacity)
    n = 100_000
    rounds = 25
    # evict/refill in rounds; expectation tracks the per-round profile since
    # p2c refills rebalance occupancy between rounds
    tallies = np.zeros(cache.config.num_sets, dtype=np.int64)
    expected = np.zeros(cache.config.num_sets, dtype=float)
    for _ in range(rounds):
        hist0 = cache.occupancy_histogram()
        expected += (n // rounds) * hist0 / hist0.sum()
        cache.global_evict_many(n // rounds)
        tallies += hist0 - cache.occupancy_histogram()
        fresh = cache.random_addresses(n // rounds)
        cache.install_batch(fresh)
    keep = expected >= 5
    chi2 = float((((tallies - expected) ** 2) / expected)[keep].sum())
    p = stats.chi2.sf(chi2, int(keep.sum()) - 1)
    assert p > 1e-4, f"global evictions non-uniform: p={p:.2e}"


def test_bug_compat_capacity_error_without_overflow():
    cache = MirageCache(small(global_evictions_enabled=False))
    with pytest.raises(CapacityError):
        cache.run_references(10**6, allow_overflow=False)
    assert cache.data_occupancy == cache.config.data_store_capacity


def test_bug_compat_overflow_records_violation_and_saes():
    cache = MirageCache(small(global_evictions_enabled=False, rng_seed=3))
    log = cache.run_references(10**6)
    assert log.capacity_violation
    assert log.sae_count > 0
    assert log.first_sae_index is not None
    assert cache.data_occupancy > cache.config.data_store_capacity


def test_init_valid_distribution_matches_bnb_fill():
    """Cache initialization is the same stochastic process as the
    buckets-and-balls fill; per-set occupancy histograms must agree."""
    from miragesim.bnb import BnbConfig, bnb_fill
    cfg = small(sets_per_skew=1024, rng_seed=11)
    cache = MirageCache(cfg)
    cache.init_valid(cfg.data_store_capacity)
    cache_hist = np.bincount(cache.occupancy_histogram(), minlength=15)
    state, spill = bnb_fill(BnbConfig(buckets_per_skew=1024, rng_seed=11))
    assert spill == -1
    bnb_hist = np.bincount(state.counts, minlength=15)
    keep = (cache_hist + bnb_hist) >= 10
    total = cache_hist[keep] + bnb_hist[keep]
    chi2 = ((cache_hist[keep] - bnb_hist[keep]) ** 2 / total).sum()
    p = stats.chi2.sf(float(chi2), int(keep.sum()) - 1)
    assert p > 1e-4, f"init profiles differ: p={p:.2e}"


def test_bernoulli_init_statistics():
    cfg = small(sets_per_skew=1024, global_evictions_enabled=False,
                rng_seed=9)
    cache = MirageCache(cfg)
    cache.init_buggy_bernoulli(0.5)
    hist = cache.occupancy_histogram()
    assert abs(hist.mean() - 7.0) < 0.2   # 14 ways * p=0.5
    assert hist.max() <= 14
    # full sets appear at rate 2^-14 per set
    assert (hist == 14).sum() <= 5


def test_bernoulli_init_requires_fresh_cache():
    cache = MirageCache(small(global_evictions_enabled=False))
    cache.install(1)
    with pytest.raises(ValueError):
        cache.init_buggy_bernoulli(0.5)


def test_recycled_mix_produces_hits():
    cache = MirageCache(small())
    log = cache.run_references(50_000, address_source="recycled-mix")
    assert log.hits > 0
    cache.check_pointer_bijection()


def test_run_determinism():
    logs, hists = [], []
    for _ in range(2):
        cache = MirageCache(small(rng_seed=21))
        logs.append(cache.run_references(50_000))
        hists.append(cache.occupancy_histogram())
    assert logs[0] == logs[1]
    assert np.array_equal(hists[0], hists[1])


def test_occupancy_histogram_accounting():
    cache = MirageCache(small())
    cache.init_valid(1000)
    hist = cache.occupancy_histogram()
    assert hist.sum() == cache.data_occupancy == 1000
    assert len(hist) == cache.config.num_sets


@pytest.mark.slow
def test_pointer_bijection_randomized_trace():
    """Bijection holds after every mutation in a 10^5-operation trace of
    mixed installs and global evictions."""
    cfg = small(sets_per_skew=32, rng_seed=17)
    cache = MirageCache(cfg)
    rng = np.random.default_rng(17)
    for i in range(100_000):
        if cache.data_occupancy and rng.random() < 0.4:
            cache.global_evict()
        else:
            cache.install(int(rng.integers(0, 1 << 64, dtype=np.uint64)))
        cache.check_pointer_bijection()
