"""Statistical reductions and experiment runners.

Each experiment writes one or more CSV files (header row mandatory) plus a
``manifest.json`` into its output directory.  CSV content is a pure function
of (spec, seed); the manifest additionally records wall time and the git
revision for provenance.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .bnb import BnbConfig, bnb_sweep
from .cache import CacheConfig, MirageCache
from .ciphers import BlockCipherKind, IndexDerivation, derive_set_indices
from .rng import derive_seed

LINE_BYTES = 64  # bytes per cache line, for size labelling


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class OccupancyStats:
    mean: float
    stddev: float
    max: int
    exceedance_count: int  # buckets above mean + 6*sqrt(mean)

    @classmethod
    def from_histogram(cls, histogram: np.ndarray) -> "OccupancyStats":
        mean = float(histogram.mean())
        bound = mean + 6.0 * math.sqrt(mean)
        return cls(mean=mean,
                   stddev=float(histogram.std(ddof=1)),
                   max=int(histogram.max()),
                   exceedance_count=int((histogram > bound).sum()))


def poisson_expectation(total_balls: int, num_buckets: int
                        ) -> tuple[float, float, float]:
    """Analytic (mu, sigma, mu + 6*sigma) for uniform balls into buckets."""
    if num_buckets <= 0:
        raise ValueError("num_buckets must be positive")
    mu = total_balls / num_buckets
    sigma = math.sqrt(mu)
    return mu, sigma, mu + 6.0 * sigma


def uniformity_experiment(cipher: BlockCipherKind, n_addresses: int,
                          num_sets: int, seed: int
                          ) -> tuple[OccupancyStats, np.ndarray]:
    """Derive set indices for random addresses and histogram them per set."""
    index = IndexDerivation.from_seed(cipher, num_sets,
                                      derive_seed(seed, 0xC1F),
                                      allow_buggy=cipher.is_bug_compat)
    rng = np.random.default_rng(derive_seed(seed, 0xADD2))
    hist = np.zeros(num_sets, dtype=np.int64)
    remaining = n_addresses
    while remaining > 0:
        m = min(1 << 20, remaining)
        addrs = rng.integers(0, 1 << 64, m, dtype=np.uint64)
        idx = derive_set_indices(index, 0, addrs)
        np.add.at(hist, idx, 1)
        remaining -= m
    return OccupancyStats.from_histogram(hist), hist


# ---------------------------------------------------------------------------
# experiment plumbing


class ExperimentKind(enum.Enum):
    FIG6_BNB = "fig6-bnb"
    FIG7_SAE = "fig7-sae"
    INIT_OCCUPANCY = "init-occupancy"
    INDEX_UNIFORMITY = "index-uniformity"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: ExperimentKind
    out_dir: Path
    seed: int = 0
    trials: int = 30
    threads: int | None = None
    bug_compat: tuple[str, ...] = ()
    parameters: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        known = {"no-global-evict", "bernoulli-init", "buggy-present"}
        bad = set(self.bug_compat) - known
        if bad:
            raise ValueError(f"unknown bug-compat flags: {sorted(bad)}")


def _git_revision() -> str:
    try:
        return subprocess.run(["git", "rev-parse", "HEAD"],
                              capture_output=True, text=True, check=True,
                              timeout=10).stdout.strip()
    except Exception:
        return "unknown"


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def _jsonable(v):
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_manifest(spec: ExperimentSpec, outputs: list[Path],
                   wall_time_s: float, extra: dict | None = None) -> Path:
    manifest = {
        "experiment": spec.kind.value,
        "seed": spec.seed,
        "trials": spec.trials,
        "bug_compat": list(spec.bug_compat),
        "parameters": {k: _jsonable(v) for k, v in spec.parameters.items()},
        "outputs": [p.name for p in outputs],
        "git_revision": _git_revision(),
        "wall_time_s": round(wall_time_s, 3),
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        manifest["results"] = extra
    path = spec.out_dir / "manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


# ---------------------------------------------------------------------------
# experiment runners


def fig6_experiment(spec: ExperimentSpec) -> Path:
    """Buckets-and-balls throws-before-spill sweep, both modes.

    CSV: mode,ways,trial,seed,spilled,throws_before_spill,capacity_violation
    """
    t0 = time.time()
    p = spec.parameters
    correct_ways = p.get("correct_ways", list(range(9, 13)))
    bug_ways = p.get("bug_ways", list(range(6, 15)))
    max_throws = int(p.get("max_throws", 2 * 10**8))
    buckets = int(p.get("buckets_per_skew", 16384))
    rows = []
    common = dict(buckets_per_skew=buckets, rng_seed=spec.seed)
    modes = [("correct", correct_ways,
              BnbConfig(capacity_per_bucket=14, max_throws=max_throws,
                        remove_ball_enabled=True, **common)),
             ("bug-compat", bug_ways,
              BnbConfig(capacity_per_bucket=14, max_throws=max_throws,
                        remove_ball_enabled=False, **common))]
    for mode, ways, template in modes:
        for r in bnb_sweep(ways, spec.trials, template, threads=spec.threads):
            rows.append([mode, r["ways"], r["trial"], r["seed"],
                         int(r["spilled"]), r["throws_before_spill"],
                         int(r["capacity_violation"])])
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    out = spec.out_dir / "fig6_bnb.csv"
    write_csv(out, ["mode", "ways", "trial", "seed", "spilled",
                    "throws_before_spill", "capacity_violation"], rows)
    write_manifest(spec, [out], time.time() - t0)
    return out


def _fig7_trial(sets_per_skew: int, trial_seed: int, refs: int,
                bug_compat: bool, cipher: BlockCipherKind) -> dict:
    if bug_compat:
        cfg = CacheConfig(sets_per_skew=sets_per_skew,
                          cipher=BlockCipherKind.BUGGY_PRESENT80,
                          global_evictions_enabled=False,
                          buggy_cipher_enabled=True, rng_seed=trial_seed)
        cache = MirageCache(cfg)
        cache.init_buggy_bernoulli(0.5)
    else:
        cfg = CacheConfig(sets_per_skew=sets_per_skew, cipher=cipher,
                          rng_seed=trial_seed)
        cache = MirageCache(cfg)
        cache.init_valid(cfg.data_store_capacity)
    log = cache.run_references(refs)
    first = log.first_sae_index
    return {
        "cache_size_bytes": cfg.data_store_capacity * LINE_BYTES,
        "sets_per_skew": sets_per_skew,
        "seed": trial_seed,
        "sae_count": log.sae_count,
        "refs_before_first_sae": first if first is not None else refs,
        "censored": int(first is None),
        "refs_budget": refs,
        "capacity_violation": int(log.capacity_violation),
    }


def fig7_experiment(spec: ExperimentSpec) -> Path:
    """References-before-first-SAE across cache sizes, both modes.

    CSV: mode,cache_size_bytes,sets_per_skew,trial,seed,sae_count,
         refs_before_first_sae,censored,refs_budget,capacity_violation
    """
    t0 = time.time()
    p = spec.parameters
    sizes = p.get("sets_per_skew_values", [1024, 2048, 4096, 8192, 16384])
    correct_refs = int(p.get("correct_refs", 10**8))
    bug_refs = int(p.get("bug_refs", 10**7))
    cipher = p.get("cipher", BlockCipherKind.AES128)
    bug_mode = "no-global-evict" in spec.bug_compat
    modes = p.get("modes", ["correct", "bug-compat"])
    if bug_mode:
        modes = ["bug-compat"]
    jobs = []
    for mode in modes:
        for si, s in enumerate(sizes):
            for t in range(spec.trials):
                seed = derive_seed(spec.seed, 1 if mode == "correct" else 2,
                                   si, t)
                jobs.append((mode, s, t, seed))
    rows = []
    with ThreadPoolExecutor(max_workers=spec.threads) as ex:
        futures = [
            (mode, s, t,
             ex.submit(_fig7_trial, s, seed,
                       correct_refs if mode == "correct" else bug_refs,
                       mode == "bug-compat", cipher))
            for mode, s, t, seed in jobs]
        for mode, s, t, fut in futures:
            r = fut.result()
            rows.append([mode, r["cache_size_bytes"], r["sets_per_skew"], t,
                         r["seed"], r["sae_count"],
                         r["refs_before_first_sae"], r["censored"],
                         r["refs_budget"], r["capacity_violation"]])
    rows.sort(key=lambda r: (r[0], r[1], r[3]))
    out = spec.out_dir / "fig7_sae.csv"
    write_csv(out, ["mode", "cache_size_bytes", "sets_per_skew", "trial",
                    "seed", "sae_count", "refs_before_first_sae", "censored",
                    "refs_budget", "capacity_violation"], rows)
    write_manifest(spec, [out], time.time() - t0)
    return out


def _init_trial(mode: str, seed: int, cipher: BlockCipherKind) -> np.ndarray:
    if mode == "buggy":
        cfg = CacheConfig(global_evictions_enabled=False, rng_seed=seed)
        cache = MirageCache(cfg)
        cache.init_buggy_bernoulli(0.5)
    else:
        cfg = CacheConfig(cipher=cipher, rng_seed=seed)
        cache = MirageCache(cfg)
        cache.init_valid(cfg.data_store_capacity)
    hist = cache.occupancy_histogram()
    ways = cache.config.ways_per_skew
    return np.bincount(hist, minlength=ways + 1)


def init_occupancy_experiment(spec: ExperimentSpec) -> Path:
    """Per-set occupancy histograms for buggy vs correct initialization.

    CSV: mode,seed_index,seed,valid_ways,set_count
    Summary CSV: mode,seed_index,seed,full_sets
    """
    t0 = time.time()
    n_seeds = int(spec.parameters.get("seeds", 100))
    cipher = spec.parameters.get("cipher", BlockCipherKind.AES128)
    rows, summary = [], []
    with ThreadPoolExecutor(max_workers=spec.threads) as ex:
        for mode_id, mode in enumerate(("buggy", "correct")):
            seeds = [derive_seed(spec.seed, 10 + mode_id, i)
                     for i in range(n_seeds)]
            for i, (seed, fut) in enumerate(
                    [(s, ex.submit(_init_trial, mode, s, cipher))
                     for s in seeds]):
                counts = fut.result()
                for v, n in enumerate(counts):
                    rows.append([mode, i, seed, v, int(n)])
                summary.append([mode, i, seed, int(counts[-1])])
    out = spec.out_dir / "init_occupancy.csv"
    write_csv(out, ["mode", "seed_index", "seed", "valid_ways", "set_count"],
              rows)
    out2 = spec.out_dir / "init_full_sets.csv"
    write_csv(out2, ["mode", "seed_index", "seed", "full_sets"], summary)
    write_manifest(spec, [out, out2], time.time() - t0)
    return out


def uniformity_report(spec: ExperimentSpec) -> Path:
    """Per-set index histograms and stats for a set of ciphers.

    CSV: cipher,set_index,count
    Stats CSV: cipher,mean,stddev,max,exceedance_count,six_sigma_bound
    """
    t0 = time.time()
    p = spec.parameters
    n = int(p.get("n_addresses", 10**6))
    num_sets = int(p.get("num_sets", 16384))
    ciphers = p.get("ciphers", [BlockCipherKind.AES128,
                                BlockCipherKind.PRINCE64,
                                BlockCipherKind.PRESENT80])
    if "buggy-present" in spec.bug_compat:
        ciphers = list(ciphers) + [BlockCipherKind.BUGGY_PRESENT80]
    rows, stat_rows = [], []
    for c in ciphers:
        stats, hist = uniformity_experiment(c, n, num_sets, spec.seed)
        _, _, bound = poisson_expectation(n, num_sets)
        for i, cnt in enumerate(hist):
            rows.append([c.value, i, int(cnt)])
        stat_rows.append([c.value, f"{stats.mean:.6f}", f"{stats.stddev:.6f}",
                          stats.max, stats.exceedance_count, f"{bound:.6f}"])
    out = spec.out_dir / "uniformity_hist.csv"
    write_csv(out, ["cipher", "set_index", "count"], rows)
    out2 = spec.out_dir / "uniformity_stats.csv"
    write_csv(out2, ["cipher", "mean", "stddev", "max", "exceedance_count",
                     "six_sigma_bound"], stat_rows)
    write_manifest(spec, [out, out2], time.time() - t0)
    return out
