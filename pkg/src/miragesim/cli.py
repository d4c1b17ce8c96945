"""Command-line entry point for all experiments and primitives.

Exit codes: 0 success, 2 configuration error, 3 capacity assertion
(bug-compat), 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .analysis import (ExperimentKind, ExperimentSpec, fig6_experiment,
                       fig7_experiment, init_occupancy_experiment,
                       uniformity_report, write_csv, write_manifest)
from .bnb import BnbConfig, bnb_sweep
from .cache import CacheConfig, CapacityError, MirageCache
from .ciphers import BlockCipherKind
from .ciphers.kat import buggy_diverges, run_known_answer_tests

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_IO = 4

_CIPHER_CHOICES = {
    "aes128": BlockCipherKind.AES128,
    "prince64": BlockCipherKind.PRINCE64,
    "present80": BlockCipherKind.PRESENT80,
}


def _count(text: str) -> int:
    """Integer flag accepting scientific notation (1e9)."""
    value = float(text)
    if value < 0 or value != int(value):
        raise argparse.ArgumentTypeError(f"not a non-negative count: {text}")
    return int(value)


def _add_common(p: argparse.ArgumentParser, trials_default: int = 30) -> None:
    p.add_argument("--seed", type=_count, default=0,
                   help="base seed; all trial seeds derive from it "
                        "(default: 0)")
    p.add_argument("--out-dir", type=Path, default=None,
                   help="output directory for CSVs + manifest.json "
                        "(default: runs/<subcommand>)")
    p.add_argument("--trials", type=_count, default=trials_default,
                   help=f"trials per sweep point (default: {trials_default})")
    p.add_argument("--threads", type=_count, default=None,
                   help="worker threads (default: all cores)")
    p.add_argument("--full-scale", action="store_true",
                   help="use the paper-scale budgets instead of the "
                        "acceptance-scale defaults")
    p.add_argument("--bug-compat", action="append", default=[],
                   choices=["no-global-evict", "bernoulli-init",
                            "buggy-present"],
                   help="enable a bug-compat mode (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="miragesim",
        description="Randomized-LLC simulator and experiment harness")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ciphers-kat",
                       help="run all cipher known-answer vectors")
    _add_common(p)

    p = sub.add_parser("bnb", help="buckets-and-balls spill trials")
    _add_common(p, trials_default=5)
    p.add_argument("--ways", type=_count, default=14,
                   help="bucket capacity W (default: 14)")
    p.add_argument("--throws", type=_count, default=10**8,
                   help="steady-state throw budget (default: 1e8)")
    p.add_argument("--buckets", type=_count, default=16384,
                   help="buckets per skew (default: 16384)")
    p.add_argument("--load", type=_count, default=8,
                   help="average balls per bucket (default: 8)")

    p = sub.add_parser("cache", help="cache reference run with SAE tally")
    _add_common(p, trials_default=1)
    p.add_argument("--refs", type=_count, default=10**7,
                   help="references to install (default: 1e7)")
    p.add_argument("--sets", type=_count, default=16384,
                   help="sets per skew (default: 16384)")
    p.add_argument("--cipher", choices=sorted(_CIPHER_CHOICES),
                   default="aes128", help="index cipher (default: aes128)")
    p.add_argument("--address-source", choices=["random", "recycled-mix"],
                   default="random")

    p = sub.add_parser("uniformity", help="set-index uniformity histograms")
    _add_common(p)
    p.add_argument("--addresses", type=_count, default=10**6,
                   help="random addresses to index (default: 1e6)")
    p.add_argument("--sets", type=_count, default=16384)

    p = sub.add_parser("init-occupancy",
                       help="buggy vs correct initialization histograms")
    _add_common(p)
    p.add_argument("--seeds", type=_count, default=100,
                   help="seeds per mode (default: 100)")

    p = sub.add_parser("fig6", help="bnb throws-before-spill sweep (Fig 3)")
    _add_common(p)
    p.add_argument("--throws", type=_count, default=None,
                   help="budget per trial (default: 2e8; 1e9 with "
                        "--full-scale)")

    p = sub.add_parser("fig7", help="refs-before-SAE across cache sizes")
    _add_common(p, trials_default=3)
    p.add_argument("--refs", type=_count, default=None,
                   help="correct-mode budget (default: 1e7; 1e8 with "
                        "--full-scale)")
    return ap


def _spec(args, kind: ExperimentKind, default_dir: str, **params
          ) -> ExperimentSpec:
    out_dir = args.out_dir or Path("runs") / default_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    return ExperimentSpec(kind=kind, out_dir=out_dir, seed=args.seed,
                          trials=args.trials, threads=args.threads,
                          bug_compat=tuple(args.bug_compat),
                          parameters=params)


def _run_ciphers_kat(args) -> int:
    results = run_known_answer_tests()
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        if not r.passed:
            all_ok = False
        print(f"{status} {r.vector.cipher.value:16s} "
              f"pt={r.vector.plaintext:016x} got={r.got:016x} "
              f"want={r.vector.ciphertext:016x}")
    diverges = buggy_diverges()
    print(("PASS" if diverges else "FAIL")
          + " buggy-present80 diverges from correct present80")
    return EXIT_OK if (all_ok and diverges) else EXIT_CONFIG


def _run_bnb(args) -> int:
    t0 = time.time()
    spec = _spec(args, ExperimentKind.FIG6_BNB, "bnb")
    template = BnbConfig(buckets_per_skew=args.buckets,
                         capacity_per_bucket=args.ways,
                         average_load=args.load, max_throws=args.throws,
                         remove_ball_enabled="no-global-evict"
                                             not in args.bug_compat,
                         rng_seed=args.seed)
    records = bnb_sweep([args.ways], args.trials, template,
                        threads=args.threads)
    rows = [[r["ways"], r["trial"], r["seed"], int(r["spilled"]),
             r["throws_before_spill"], int(r["capacity_violation"])]
            for r in records]
    out = spec.out_dir / "bnb.csv"
    write_csv(out, ["ways", "trial", "seed", "spilled",
                    "throws_before_spill", "capacity_violation"], rows)
    write_manifest(spec, [out], time.time() - t0,
                   extra={"spilled": sum(r[3] for r in rows),
                          "capacity_violations": sum(r[5] for r in rows)})
    print(f"wrote {out} ({len(rows)} trials, "
          f"{sum(r[3] for r in rows)} spilled)")
    return EXIT_OK


def _run_cache(args) -> int:
    t0 = time.time()
    spec = _spec(args, ExperimentKind.FIG7_SAE, "cache")
    bug = set(args.bug_compat)
    cipher = (BlockCipherKind.BUGGY_PRESENT80 if "buggy-present" in bug
              else _CIPHER_CHOICES[args.cipher])
    rows = []
    for t in range(args.trials):
        from .rng import derive_seed
        seed = derive_seed(args.seed, t)
        cfg = CacheConfig(sets_per_skew=args.sets, cipher=cipher,
                          global_evictions_enabled="no-global-evict"
                                                   not in bug,
                          buggy_cipher_enabled="buggy-present" in bug,
                          rng_seed=seed)
        cache = MirageCache(cfg)
        if "bernoulli-init" in bug:
            cache.init_buggy_bernoulli(0.5)
        else:
            cache.init_valid(cfg.data_store_capacity)
        # strict capacity semantics: a bug-compat overflow is an assertion
        log = cache.run_references(args.refs,
                                   address_source=args.address_source,
                                   allow_overflow=False)
        first = log.first_sae_index
        rows.append([t, seed, log.refs, log.hits, log.sae_count,
                     first if first is not None else args.refs,
                     int(first is None), int(log.capacity_violation)])
    out = spec.out_dir / "cache.csv"
    write_csv(out, ["trial", "seed", "refs", "hits", "sae_count",
                    "refs_before_first_sae", "censored",
                    "capacity_violation"], rows)
    write_manifest(spec, [out], time.time() - t0,
                   extra={"sae_total": sum(r[4] for r in rows)})
    print(f"wrote {out} (sae_total={sum(r[4] for r in rows)})")
    return EXIT_OK


def _run_uniformity(args) -> int:
    spec = _spec(args, ExperimentKind.INDEX_UNIFORMITY, "uniformity",
                 n_addresses=args.addresses, num_sets=args.sets)
    out = uniformity_report(spec)
    print(f"wrote {out}")
    return EXIT_OK


def _run_init_occupancy(args) -> int:
    spec = _spec(args, ExperimentKind.INIT_OCCUPANCY, "init-occupancy",
                 seeds=args.seeds)
    out = init_occupancy_experiment(spec)
    print(f"wrote {out}")
    return EXIT_OK


def _run_fig6(args) -> int:
    throws = args.throws or (10**9 if args.full_scale else 2 * 10**8)
    spec = _spec(args, ExperimentKind.FIG6_BNB, "fig6", max_throws=throws)
    out = fig6_experiment(spec)
    print(f"wrote {out}")
    return EXIT_OK


def _run_fig7(args) -> int:
    refs = args.refs or (10**8 if args.full_scale else 10**7)
    spec = _spec(args, ExperimentKind.FIG7_SAE, "fig7", correct_refs=refs,
                 bug_refs=min(refs, 10**7))
    out = fig7_experiment(spec)
    print(f"wrote {out}")
    return EXIT_OK


_DISPATCH = {
    "ciphers-kat": _run_ciphers_kat,
    "bnb": _run_bnb,
    "cache": _run_cache,
    "uniformity": _run_uniformity,
    "init-occupancy": _run_init_occupancy,
    "fig6": _run_fig6,
    "fig7": _run_fig7,
}


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad flags, 0 on --help; normalize to our codes
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        return _DISPATCH[args.subcommand](args)
    except (ValueError, KeyError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as e:
        print(f"capacity assertion (bug-compat): {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
