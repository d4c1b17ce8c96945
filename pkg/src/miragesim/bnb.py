"""Buckets-and-balls model of the MIRAGE tag store.

Insertion is power-of-2-choices across two skews: one uniformly random
bucket per skew, ball goes to the less occupied (uniform random on ties).
In the correct model every steady-state throw first removes one uniformly
random ball from the whole model (the global-eviction analogue) and then
inserts one.  The bug-compat model skips removal, so balls accumulate past
the modeled data-store capacity.

A spill is both candidate buckets at capacity W when a ball must be placed.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numba import int64, njit, uint64

from .rng import derive_seed, xoshiro_below, xoshiro_init, xoshiro_next


@dataclass(frozen=True)
class BnbConfig:
    buckets_per_skew: int = 16384
    num_skews: int = 2
    capacity_per_bucket: int = 14          # ways W
    average_load: int = 8
    max_throws: int = 100_000_000
    remove_ball_enabled: bool = True       # False = bug-compat (no removal)
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_skews != 2:
            raise ValueError("model is defined for exactly 2 skews")
        if self.remove_ball_enabled and \
                self.capacity_per_bucket < self.average_load:
            raise ValueError("capacity_per_bucket must be >= average_load "
                             "when removal is enabled")
        if self.buckets_per_skew < 1 or self.max_throws < 0:
            raise ValueError("invalid geometry")

    @property
    def total_buckets(self) -> int:
        return self.buckets_per_skew * self.num_skews

    @property
    def total_balls(self) -> int:
        """Modeled data-store capacity."""
        return self.total_buckets * self.average_load


@dataclass(frozen=True)
class SpillResult:
    """Outcome of one trial.

    throws_before_spill counts every ball throw from the empty model (the
    fill phase included), matching the trials-before-collision measure.  For
    unspilled runs it holds the exhausted budget (total_balls + max_throws)
    and is a censored lower bound.
    """

    spilled: bool
    throws_before_spill: int
    balls_in_model_at_end: int
    capacity_violation: bool
    spilled_during_fill: bool = False


@njit(int64(int64[:], uint64[:], int64, int64, int64, uint64[:]),
      cache=True, nogil=True)
def _fill(counts, locations, nbuckets, capacity, total, rng):
    """Insert `total` balls with no removal; returns the index of the
    insertion that spilled, or -1 for a clean fill."""
    for i in range(total):
        b0 = int64(xoshiro_below(rng, uint64(nbuckets)))
        b1 = nbuckets + int64(xoshiro_below(rng, uint64(nbuckets)))
        if counts[b0] < counts[b1]:
            chosen = b0
        elif counts[b1] < counts[b0]:
            chosen = b1
        else:
            chosen = b0 if (xoshiro_next(rng) & uint64(1)) else b1
        if counts[chosen] >= capacity:
            return i
        counts[chosen] += 1
        if i < locations.shape[0]:
            locations[i] = uint64(chosen)
    return -1


@njit(int64(int64[:], uint64[:], int64, int64, int64, int64, uint64[:]),
      cache=True, nogil=True)
def _steady_state(counts, locations, nbuckets, capacity, total, max_throws,
                  rng):
    """Remove-then-insert throws; returns the throw index of the first
    spill, or -1 if the budget ran out."""
    for t in range(max_throws):
        victim = xoshiro_below(rng, uint64(total))
        counts[int64(locations[victim])] -= 1
        b0 = int64(xoshiro_below(rng, uint64(nbuckets)))
        b1 = nbuckets + int64(xoshiro_below(rng, uint64(nbuckets)))
        if counts[b0] < counts[b1]:
            chosen = b0
        elif counts[b1] < counts[b0]:
            chosen = b1
        else:
            chosen = b0 if (xoshiro_next(rng) & uint64(1)) else b1
        if counts[chosen] >= capacity:
            return t
        counts[chosen] += 1
        locations[victim] = uint64(chosen)
    return -1


@njit(cache=True, nogil=True)
def _steady_state_no_removal(counts, nbuckets, capacity, total_capacity,
                             balls, max_throws, rng):
    """Bug-compat throws: insert only.  Returns (spill_throw, violation_flag,
    balls_at_end); spill_throw is -1 if the budget ran out."""
    violation = False
    for t in range(max_throws):
        b0 = int64(xoshiro_below(rng, uint64(nbuckets)))
        b1 = nbuckets + int64(xoshiro_below(rng, uint64(nbuckets)))
        if counts[b0] < counts[b1]:
            chosen = b0
        elif counts[b1] < counts[b0]:
            chosen = b1
        else:
            chosen = b0 if (xoshiro_next(rng) & uint64(1)) else b1
        if counts[chosen] >= capacity:
            return t, violation, balls
        counts[chosen] += 1
        balls += 1
        if balls > total_capacity:
            violation = True
    return -1, violation, balls


@njit(cache=True, nogil=True)
def _remove_only(counts, locations, total, n_removals, removal_counts, rng):
    """Sample n_removals uniform-over-balls removals, with replacement of the
    removed ball into the same bucket (static profile); tallies per bucket."""
    for _ in range(n_removals):
        victim = xoshiro_below(rng, uint64(total))
        removal_counts[int64(locations[victim])] += 1


class BnbState:
    """Mutable bucket state for one trial."""

    def __init__(self, config: BnbConfig):
        self.config = config
        self.counts = np.zeros(config.total_buckets, dtype=np.int64)
        self.locations = np.zeros(config.total_balls, dtype=np.uint64)
        self.rng = xoshiro_init(config.rng_seed)
        self.balls = 0

    def occupancy_histogram(self) -> np.ndarray:
        return self.counts.copy()


def bnb_fill(config: BnbConfig, state: BnbState | None = None
             ) -> tuple[BnbState, int]:
    """Fill an empty model with total_balls balls (no removal).

    Returns (state, spill_index); spill_index is -1 for a clean fill.
    """
    if state is None:
        state = BnbState(config)
    if state.balls:
        raise ValueError("fill requires empty buckets")
    spill_at = int(_fill(state.counts, state.locations,
                         config.buckets_per_skew, config.capacity_per_bucket,
                         config.total_balls, state.rng))
    state.balls = config.total_balls if spill_at < 0 else spill_at
    return state, spill_at


def bnb_run(config: BnbConfig) -> SpillResult:
    """Fill, then run up to max_throws steady-state throws."""
    state, fill_spill = bnb_fill(config)
    if fill_spill >= 0:
        return SpillResult(spilled=True, throws_before_spill=fill_spill,
                           balls_in_model_at_end=state.balls,
                           capacity_violation=False, spilled_during_fill=True)
    nb = config.buckets_per_skew
    cap = config.capacity_per_bucket
    filled = config.total_balls
    if config.remove_ball_enabled:
        spill_at = int(_steady_state(state.counts, state.locations, nb, cap,
                                     config.total_balls, config.max_throws,
                                     state.rng))
        # On a spill the removed ball is in flight, hence total - 1 at rest.
        balls = config.total_balls if spill_at < 0 else config.total_balls - 1
        return SpillResult(spilled=spill_at >= 0,
                           throws_before_spill=filled + (spill_at if spill_at >= 0 else config.max_throws),
                           balls_in_model_at_end=balls,
                           capacity_violation=False)
    spill_at, violation, balls = _steady_state_no_removal(
        state.counts, nb, cap, config.total_balls, state.balls,
        config.max_throws, state.rng)
    return SpillResult(spilled=spill_at >= 0,
                       throws_before_spill=filled + (spill_at if spill_at >= 0 else config.max_throws),
                       balls_in_model_at_end=int(balls),
                       capacity_violation=bool(violation))


def trial_seed(base_seed: int, ways: int, trial: int) -> int:
    """Independent per-(W, trial) stream seed."""
    return derive_seed(base_seed, ways, trial)


def bnb_sweep(ways_range, trials_per_point: int, template: BnbConfig,
              threads: int = 1) -> list[dict]:
    """Run bnb_run per W per trial with derived seeds.

    Returns one record per trial:
    {ways, trial, seed, spilled, throws_before_spill, capacity_violation}.
    """
    jobs = []
    for w in ways_range:
        if template.remove_ball_enabled and not (template.average_load < w):
            raise ValueError("ways_range must lie above average_load when "
                             "removal is enabled")
        for t in range(trials_per_point):
            seed = trial_seed(template.rng_seed, w, t)
            jobs.append((w, t, seed,
                         replace(template, capacity_per_bucket=w,
                                 rng_seed=seed)))

    def run(job):
        w, t, seed, cfg = job
        res = bnb_run(cfg)
        return {"ways": w, "trial": t, "seed": seed,
                "spilled": res.spilled,
                "throws_before_spill": res.throws_before_spill,
                "capacity_violation": res.capacity_violation}

    if threads is None:
        threads = os.cpu_count() or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run, jobs))
    else:
        records = [run(j) for j in jobs]
    return records


def sweep_medians(records: list[dict]) -> dict[int, float]:
    """Median throws-before-spill per W (censored runs enter at the budget)."""
    by_w: dict[int, list[int]] = {}
    for r in records:
        by_w.setdefault(r["ways"], []).append(r["throws_before_spill"])
    return {w: float(np.median(v)) for w, v in sorted(by_w.items())}


def removal_histogram(state: BnbState, n_removals: int, seed: int
                      ) -> np.ndarray:
    """Per-bucket removal tallies over a static occupancy profile."""
    counts = np.zeros(state.config.total_buckets, dtype=np.int64)
    rng = xoshiro_init(seed)
    _remove_only(state.counts, state.locations, state.balls, n_removals,
                 counts, rng)
    return counts
