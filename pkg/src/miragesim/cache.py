"""MIRAGE cache simulator: two-skew tag store, pointer-linked data store,
cipher-indexed installs with power-of-2-choices load balancing, global
evictions, and set-associative-eviction (SAE) detection.

Bug-compat modes re-create the defects of the original simulator:
  - global_evictions_enabled=False : no global evictions; the data store
    fills up and, if allowed to continue, overflows its logical capacity
    (recorded as a capacity violation, mirroring the original code which
    did not model the data store at all).
  - init_buggy_bernoulli            : tag store initialized by a coin flip
    per tag instead of installing lines through the cache interface.
  - cipher=BUGGY_PRESENT80          : skewed set-index derivation.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from numba import njit, uint64

from .ciphers import BlockCipherKind, IndexDerivation, derive_set_indices
from .rng import derive_seed, splitmix64, xoshiro_below, xoshiro_init

logger = logging.getLogger(__name__)

# counters layout for the install kernel
_HITS, _MISS_INST, _MISS_GE, _SAE, _FIRST_SAE, _OCC, _VIOLATION, _REFS = range(8)

_OUT_HIT, _OUT_MISS, _OUT_MISS_GE, _OUT_SAE = 0, 1, 2, 3


class CapacityError(RuntimeError):
    """Data store exhausted with global evictions disabled (bug-compat)."""


class OutcomeKind(enum.Enum):
    HIT = "hit"
    MISS_INSTALLED = "miss-installed"
    MISS_WITH_GLOBAL_EVICTION = "miss-with-global-eviction"
    SET_ASSOCIATIVE_EVICTION = "set-associative-eviction"


_OUTCOME_BY_CODE = {
    _OUT_HIT: OutcomeKind.HIT,
    _OUT_MISS: OutcomeKind.MISS_INSTALLED,
    _OUT_MISS_GE: OutcomeKind.MISS_WITH_GLOBAL_EVICTION,
    _OUT_SAE: OutcomeKind.SET_ASSOCIATIVE_EVICTION,
}


@dataclass(frozen=True)
class InstallOutcome:
    kind: OutcomeKind
    evicted_address: int | None = None


@dataclass(frozen=True)
class RunLog:
    """Aggregate of a run_references call."""

    refs: int
    hits: int
    miss_installed: int
    miss_with_global_eviction: int
    sae_count: int
    first_sae_index: int | None
    capacity_violation: bool
    outcome_kinds: np.ndarray | None = None  # per-ref codes when logging


@dataclass(frozen=True)
class CacheConfig:
    sets_per_skew: int = 16384
    base_ways_per_skew: int = 8
    extra_ways_per_skew: int = 6
    data_store_capacity: int | None = None   # default: sets * 2 * base ways
    cipher: BlockCipherKind = BlockCipherKind.PRINCE64
    global_evictions_enabled: bool = True
    buggy_cipher_enabled: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        s = self.sets_per_skew
        if s < 1 or s & (s - 1):
            raise ValueError("sets_per_skew must be a power of two")
        if self.base_ways_per_skew < 1 or self.extra_ways_per_skew < 0:
            raise ValueError("invalid way counts")
        if self.data_store_capacity is None:
            object.__setattr__(self, "data_store_capacity",
                               s * 2 * self.base_ways_per_skew)
        if self.total_tag_slots <= self.data_store_capacity:
            raise ValueError("tag store must be over-provisioned relative to "
                             "the data store")
        if self.cipher.is_bug_compat and not self.buggy_cipher_enabled:
            raise ValueError("buggy cipher requires buggy_cipher_enabled")

    @property
    def ways_per_skew(self) -> int:
        return self.base_ways_per_skew + self.extra_ways_per_skew

    @property
    def num_sets(self) -> int:
        return 2 * self.sets_per_skew

    @property
    def total_tag_slots(self) -> int:
        return self.num_sets * self.ways_per_skew


@njit(cache=True, nogil=True)
def _install_batch(addrs, idx0, idx1, tag_valid, tag_addr, tag_fptr,
                   data_rptr, slots, slot_pos, set_valid,
                   capacity, alloc_capacity, ways, sets_per_skew,
                   global_evict, allow_overflow, rng, counters, outcomes,
                   log_outcomes):
    occ = counters[_OCC]
    for i in range(addrs.shape[0]):
        addr = addrs[i]
        s0 = idx0[i]
        s1 = sets_per_skew + idx1[i]
        # probe both candidate sets for a valid matching tag
        hit = False
        base0 = s0 * ways
        base1 = s1 * ways
        for w in range(ways):
            t = base0 + w
            if tag_valid[t] == 1 and tag_addr[t] == addr:
                hit = True
                break
        if not hit:
            for w in range(ways):
                t = base1 + w
                if tag_valid[t] == 1 and tag_addr[t] == addr:
                    hit = True
                    break
        if hit:
            counters[_HITS] += 1
            if log_outcomes:
                outcomes[i] = _OUT_HIT
            counters[_REFS] += 1
            continue

        # miss: global eviction first when the data store is full
        did_ge = False
        if occ >= capacity and global_evict:
            r = int(xoshiro_below(rng, uint64(occ)))
            victim = slots[r]
            vt = data_rptr[victim]
            tag_valid[vt] = 0
            tag_fptr[vt] = -1
            set_valid[vt // ways] -= 1
            data_rptr[victim] = -1
            # swap-remove victim from the occupied prefix
            last = slots[occ - 1]
            slots[r] = last
            slot_pos[last] = r
            slots[occ - 1] = victim
            slot_pos[victim] = occ - 1
            occ -= 1
            did_ge = True

        # power-of-2-choices on invalid-way count
        v0 = set_valid[s0]
        v1 = set_valid[s1]
        if v0 < v1:
            chosen = s0
        elif v1 < v0:
            chosen = s1
        else:
            chosen = s0 if (xoshiro_below(rng, uint64(2)) == uint64(0)) else s1

        base = chosen * ways
        if set_valid[chosen] >= ways:
            # both candidates full: set-associative eviction
            counters[_SAE] += 1
            if counters[_FIRST_SAE] < 0:
                counters[_FIRST_SAE] = counters[_REFS]
            w = int(xoshiro_below(rng, uint64(ways)))
            t = base + w
            d = tag_fptr[t]
            # reuse the victim's data entry for the incoming line
            tag_addr[t] = addr
            data_rptr[d] = t
            if log_outcomes:
                outcomes[i] = _OUT_SAE
            counters[_REFS] += 1
            continue

        # claim an invalid way and link a free data entry; with global
        # evictions disabled the allocation may exceed the logical capacity
        if occ >= capacity and (not allow_overflow or occ >= alloc_capacity):
            counters[_OCC] = occ
            return 3  # capacity assertion (bug-compat)
        t = -1
        for w in range(ways):
            if tag_valid[base + w] == 0:
                t = base + w
                break
        d = slots[occ]
        occ += 1
        if occ > capacity:
            counters[_VIOLATION] = 1
        tag_valid[t] = 1
        tag_addr[t] = addr
        tag_fptr[t] = d
        data_rptr[d] = t
        set_valid[chosen] += 1
        if did_ge:
            counters[_MISS_GE] += 1
            if log_outcomes:
                outcomes[i] = _OUT_MISS_GE
        else:
            counters[_MISS_INST] += 1
            if log_outcomes:
                outcomes[i] = _OUT_MISS
        counters[_REFS] += 1
    counters[_OCC] = occ
    return 0


@njit(cache=True, nogil=True)
def _global_evict_many(n, tag_valid, tag_addr, tag_fptr, data_rptr, slots,
                       slot_pos, set_valid, ways, rng, counters, out_addrs):
    occ = counters[_OCC]
    for i in range(n):
        if occ == 0:
            counters[_OCC] = occ
            return 1
        r = int(xoshiro_below(rng, uint64(occ)))
        victim = slots[r]
        vt = data_rptr[victim]
        out_addrs[i] = tag_addr[vt]
        tag_valid[vt] = 0
        tag_fptr[vt] = -1
        set_valid[vt // ways] -= 1
        data_rptr[victim] = -1
        last = slots[occ - 1]
        slots[r] = last
        slot_pos[last] = r
        slots[occ - 1] = victim
        slot_pos[victim] = occ - 1
        occ -= 1
    counters[_OCC] = occ
    return 0


@njit(cache=True, nogil=True)
def _mix_recycled(fresh, flags, pool, rng):
    """Replace flagged entries with a uniform draw over all earlier
    addresses (pool window plus the chunk prefix), in place."""
    npool = pool.shape[0]
    for k in range(fresh.shape[0]):
        if flags[k]:
            total = npool + k
            if total == 0:
                continue
            u = int(xoshiro_below(rng, uint64(total)))
            fresh[k] = pool[u] if u < npool else fresh[u - npool]
    return fresh


class MirageCache:
    """One simulated cache instance (single-threaded by design)."""

    def __init__(self, config: CacheConfig):
        self.config = config
        if config.global_evictions_enabled:
            alloc = config.data_store_capacity
        else:
            # bug-compat may overflow the logical capacity; tags bound growth
            alloc = config.total_tag_slots
        self._alloc_capacity = alloc
        t = config.total_tag_slots
        self.tag_valid = np.zeros(t, dtype=np.uint8)
        self.tag_addr = np.zeros(t, dtype=np.uint64)
        self.tag_fptr = np.full(t, -1, dtype=np.int64)
        self.data_rptr = np.full(alloc, -1, dtype=np.int64)
        self._slots = np.arange(alloc, dtype=np.int64)
        self._slot_pos = np.arange(alloc, dtype=np.int64)
        self.set_valid = np.zeros(config.num_sets, dtype=np.int64)
        self._counters = np.zeros(8, dtype=np.int64)
        self._counters[_FIRST_SAE] = -1
        self._rng = xoshiro_init(derive_seed(config.rng_seed, 0x5EED))
        self._addr_rng = np.random.default_rng(derive_seed(config.rng_seed,
                                                           0xADD2))
        self._index = IndexDerivation.from_seed(
            config.cipher, config.sets_per_skew,
            derive_seed(config.rng_seed, 0xC1F),
            allow_buggy=config.buggy_cipher_enabled)

    # -- accounting ------------------------------------------------------

    @property
    def data_occupancy(self) -> int:
        return int(self._counters[_OCC])

    @property
    def sae_count(self) -> int:
        return int(self._counters[_SAE])

    @property
    def capacity_violation(self) -> bool:
        return bool(self._counters[_VIOLATION])

    def occupancy_histogram(self) -> np.ndarray:
        """Valid tags per set, both skews concatenated."""
        return self.set_valid.copy()

    # -- operations ------------------------------------------------------

    def _indices_for(self, addrs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (derive_set_indices(self._index, 0, addrs),
                derive_set_indices(self._index, 1, addrs))

    def install_batch(self, addrs: np.ndarray, *, log_outcomes: bool = False,
                      allow_overflow: bool = False) -> np.ndarray | None:
        addrs = np.ascontiguousarray(addrs, dtype=np.uint64)
        idx0, idx1 = self._indices_for(addrs)
        outcomes = (np.zeros(len(addrs), dtype=np.int8) if log_outcomes
                    else np.zeros(0, dtype=np.int8))
        status = _install_batch(
            addrs, idx0, idx1, self.tag_valid, self.tag_addr, self.tag_fptr,
            self.data_rptr, self._slots, self._slot_pos, self.set_valid,
            self.config.data_store_capacity, self._alloc_capacity,
            self.config.ways_per_skew, self.config.sets_per_skew,
            self.config.global_evictions_enabled, allow_overflow,
            self._rng, self._counters, outcomes, log_outcomes)
        if status == 3:
            raise CapacityError(
                f"data store exhausted at occupancy {self.data_occupancy} "
                "with global evictions disabled")
        return outcomes if log_outcomes else None

    def install(self, address: int) -> InstallOutcome:
        """Install one line; returns the outcome kind."""
        outcomes = self.install_batch(np.array([address], dtype=np.uint64),
                                      log_outcomes=True)
        return InstallOutcome(kind=_OUTCOME_BY_CODE[int(outcomes[0])])

    def global_evict(self) -> int:
        """Evict one uniformly random occupied data entry; returns its
        address."""
        return int(self.global_evict_many(1)[0])

    def global_evict_many(self, n: int) -> np.ndarray:
        if self.data_occupancy < n:
            raise ValueError("not enough occupied data entries to evict")
        out = np.empty(n, dtype=np.uint64)
        _global_evict_many(n, self.tag_valid, self.tag_addr, self.tag_fptr,
                           self.data_rptr, self._slots, self._slot_pos,
                           self.set_valid, self.config.ways_per_skew,
                           self._rng, self._counters, out)
        return out

    def random_addresses(self, n: int) -> np.ndarray:
        return self._addr_rng.integers(0, 1 << 64, n, dtype=np.uint64)

    def init_valid(self, k: int, chunk: int = 1 << 18) -> None:
        """Install k distinct random addresses through the normal path."""
        if k > self.config.data_store_capacity:
            raise ValueError("k exceeds data-store capacity")
        seen: set[int] = set()
        remaining = k
        while remaining > 0:
            n = min(chunk, remaining)
            addrs = self.random_addresses(n)
            # re-draw the (astronomically rare) duplicates
            fresh = [a for a in addrs.tolist() if a not in seen]
            seen.update(fresh)
            batch = np.array(fresh[:remaining], dtype=np.uint64)
            self.install_batch(batch)
            remaining -= len(batch)

    def init_buggy_bernoulli(self, p: float = 0.5) -> None:
        """Bug-compat init: each tag valid with probability p.

        Valid tags get fabricated distinct addresses and data links up to
        the data-store capacity; any surplus tags keep fptr unset and count
        only toward tag occupancy.
        """
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        if self.data_occupancy or self.tag_valid.any():
            raise ValueError("bernoulli init requires a fresh cache")
        mask = self._addr_rng.random(self.config.total_tag_slots) < p
        valid_idx = np.flatnonzero(mask)
        # fabricated distinct addresses, disjoint from random traffic whp
        fab = np.array([splitmix64(0xB00 + 2 * int(i) + 1) for i in valid_idx],
                       dtype=np.uint64)
        self.tag_valid[valid_idx] = 1
        self.tag_addr[valid_idx] = fab
        ways = self.config.ways_per_skew
        np.add.at(self.set_valid, valid_idx // ways, 1)
        n_link = min(len(valid_idx), self._alloc_capacity,
                     self.config.data_store_capacity)
        linked = valid_idx[:n_link]
        self.tag_fptr[linked] = np.arange(n_link)
        self.data_rptr[:n_link] = linked
        self._counters[_OCC] = n_link
        if len(valid_idx) > n_link:
            logger.warning(
                "bernoulli init produced %d valid tags for capacity %d; "
                "%d tags left without data links",
                len(valid_idx), self.config.data_store_capacity,
                len(valid_idx) - n_link)

    def run_references(self, n: int, address_source: str = "random",
                       recycle_fraction: float = 0.5,
                       chunk: int = 1 << 20,
                       allow_overflow: bool | None = None,
                       log_outcomes: bool = False) -> RunLog:
        """Install n references; outcome tallies plus first-SAE index."""
        if address_source not in ("random", "recycled-mix"):
            raise ValueError("address_source must be 'random' or "
                             "'recycled-mix'")
        if allow_overflow is None:
            allow_overflow = not self.config.global_evictions_enabled
        start = self._counters.copy()
        pool = np.zeros(0, dtype=np.uint64)
        logs = [] if log_outcomes else None
        remaining = n
        while remaining > 0:
            m = min(chunk, remaining)
            addrs = self.random_addresses(m)
            if address_source == "recycled-mix":
                flags = (self._addr_rng.random(m)
                         < recycle_fraction).astype(np.uint8)
                _mix_recycled(addrs, flags, pool, self._rng)
            out = self.install_batch(addrs, log_outcomes=log_outcomes,
                                     allow_overflow=allow_overflow)
            if log_outcomes:
                logs.append(out)
            if address_source == "recycled-mix":
                # sliding window keeps memory bounded on long runs
                pool = np.concatenate([pool, addrs])[-(1 << 22):]
            remaining -= m
        c = self._counters
        first = int(c[_FIRST_SAE])
        if first >= 0 and first < start[_REFS]:
            first = -1  # SAE happened before this run
        return RunLog(
            refs=int(c[_REFS] - start[_REFS]),
            hits=int(c[_HITS] - start[_HITS]),
            miss_installed=int(c[_MISS_INST] - start[_MISS_INST]),
            miss_with_global_eviction=int(c[_MISS_GE] - start[_MISS_GE]),
            sae_count=int(c[_SAE] - start[_SAE]),
            first_sae_index=(first - int(start[_REFS])) if first >= 0 else None,
            capacity_violation=bool(c[_VIOLATION]),
            outcome_kinds=np.concatenate(logs) if log_outcomes else None)

    # -- invariants ------------------------------------------------------

    def check_pointer_bijection(self) -> None:
        """Full-scan verification of the fptr/rptr bijection; raises on any
        inconsistency."""
        occ = self.data_occupancy
        occupied = self._slots[:occ]
        if len(np.unique(occupied)) != occ:
            raise AssertionError("occupied slot list has duplicates")
        valid_tags = np.flatnonzero(self.tag_valid)
        linked_tags = valid_tags[self.tag_fptr[valid_tags] >= 0]
        if not self.config.global_evictions_enabled:
            pass  # bernoulli surplus tags may be unlinked by design
        elif len(linked_tags) != len(valid_tags):
            raise AssertionError("valid tag without forward pointer")
        fptrs = self.tag_fptr[linked_tags]
        if len(np.unique(fptrs)) != len(fptrs):
            raise AssertionError("forward pointers are not injective")
        if sorted(fptrs.tolist()) != sorted(occupied.tolist()):
            raise AssertionError("fptr targets differ from occupied entries")
        if not np.array_equal(self.data_rptr[fptrs], linked_tags):
            raise AssertionError("rptr does not invert fptr")
        # per-set counters and bounds
        ways = self.config.ways_per_skew
        per_set = self.tag_valid.reshape(-1, ways).sum(axis=1)
        if not np.array_equal(per_set, self.set_valid):
            raise AssertionError("set_valid counters out of sync")
        if per_set.max(initial=0) > ways:
            raise AssertionError("per-set bound exceeded")
        if self.config.global_evictions_enabled and \
                occ > self.config.data_store_capacity:
            raise AssertionError("data store above capacity in correct mode")
