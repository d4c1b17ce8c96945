"""Tests for statistics and experiment runners (scaled-down geometries)."""

import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from miragesim.analysis import (ExperimentKind, ExperimentSpec,
                                OccupancyStats, fig6_experiment,
                                fig7_experiment, init_occupancy_experiment,
                                poisson_expectation, uniformity_experiment,
                                uniformity_report)
from miragesim.ciphers import BlockCipherKind


def test_poisson_expectation_paper_values():
    mu, sigma, bound = poisson_expectation(10**6, 16384)
    assert abs(mu - 61.04) < 0.01
    assert abs(sigma - 7.81) < 0.01
    assert abs(bound - 107.9) < 0.1


def test_poisson_expectation_edge_cases():
    assert poisson_expectation(0, 10) == (0.0, 0.0, 0.0)
    mu, sigma, _ = poisson_expectation(100, 1)
    assert mu == 100 and sigma == 10.0
    with pytest.raises(ValueError):
        poisson_expectation(1, 0)


@given(st.integers(0, 10**9), st.integers(1, 10**6))
@settings(max_examples=100, deadline=None)
def test_poisson_expectation_matches_formula(total, buckets):
    mu, sigma, bound = poisson_expectation(total, buckets)
    assert math.isclose(mu, total / buckets, rel_tol=1e-9)
    assert math.isclose(sigma, math.sqrt(total / buckets), rel_tol=1e-9,
                        abs_tol=1e-12)
    assert math.isclose(bound, mu + 6 * sigma, rel_tol=1e-9, abs_tol=1e-12)


def test_occupancy_stats_against_numpy():
    rng = np.random.default_rng(0)
    hist = rng.poisson(61, 16384)
    s = OccupancyStats.from_histogram(hist)
    assert s.mean == hist.mean()
    assert s.stddev == hist.std(ddof=1)
    assert s.max == hist.max()
    bound = hist.mean() + 6 * math.sqrt(hist.mean())
    assert s.exceedance_count == (hist > bound).sum()


def test_uniformity_histogram_conserves_samples():
    stats, hist = uniformity_experiment(BlockCipherKind.AES128, 10**5, 1024,
                                        seed=0)
    assert hist.sum() == 10**5
    assert len(hist) == 1024
    assert stats.max == hist.max()


def test_uniformity_is_seed_deterministic():
    a = uniformity_experiment(BlockCipherKind.PRINCE64, 10**4, 256, seed=5)
    b = uniformity_experiment(BlockCipherKind.PRINCE64, 10**4, 256, seed=5)
    assert a[0] == b[0] and np.array_equal(a[1], b[1])


def test_experiment_spec_rejects_unknown_bug_compat(tmp_path):
    with pytest.raises(ValueError):
        ExperimentSpec(ExperimentKind.FIG6_BNB, tmp_path,
                       bug_compat=("frobnicate",))


def _read_csv(path):
    with open(path) as f:
        return list(csv.reader(f))


def test_fig6_experiment_csv_and_manifest(tmp_path):
    spec = ExperimentSpec(ExperimentKind.FIG6_BNB, tmp_path, seed=3, trials=2,
                          parameters=dict(correct_ways=[9], bug_ways=[10, 14],
                                          max_throws=10**5,
                                          buckets_per_skew=256))
    out = fig6_experiment(spec)
    rows = _read_csv(out)
    assert rows[0] == ["mode", "ways", "trial", "seed", "spilled",
                       "throws_before_spill", "capacity_violation"]
    assert len(rows) == 1 + 2 * 3  # 3 sweep points, 2 trials
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["experiment"] == "fig6-bnb"
    assert manifest["seed"] == 3
    assert "max_throws" in manifest["parameters"]


def test_fig6_csv_is_rerun_identical(tmp_path):
    params = dict(correct_ways=[9], bug_ways=[12], max_throws=10**5,
                  buckets_per_skew=256)
    texts = []
    for d in ("a", "b"):
        p = tmp_path / d
        p.mkdir()
        spec = ExperimentSpec(ExperimentKind.FIG6_BNB, p, seed=4, trials=2,
                              parameters=params)
        texts.append(fig6_experiment(spec).read_bytes())
    assert texts[0] == texts[1]


def test_fig7_experiment_modes(tmp_path):
    spec = ExperimentSpec(ExperimentKind.FIG7_SAE, tmp_path, seed=1, trials=1,
                          parameters=dict(sets_per_skew_values=[128, 256],
                                          correct_refs=10**5,
                                          bug_refs=10**5))
    out = fig7_experiment(spec)
    rows = _read_csv(out)
    header, body = rows[0], rows[1:]
    assert header[0] == "mode"
    by_mode = {}
    for r in body:
        by_mode.setdefault(r[0], []).append(r)
    assert set(by_mode) == {"correct", "bug-compat"}
    for r in by_mode["correct"]:
        assert r[header.index("sae_count")] == "0"
        assert r[header.index("censored")] == "1"
    for r in by_mode["bug-compat"]:
        assert int(r[header.index("sae_count")]) > 0
        assert r[header.index("capacity_violation")] == "1"
    # bug-compat SAE onset grows with cache size
    onsets = [int(r[header.index("refs_before_first_sae")])
              for r in sorted(by_mode["bug-compat"],
                              key=lambda r: int(r[2]))]
    assert onsets[0] < onsets[1]


def test_init_occupancy_experiment(tmp_path):
    spec = ExperimentSpec(ExperimentKind.INIT_OCCUPANCY, tmp_path, seed=2,
                          parameters=dict(seeds=2))
    init_occupancy_experiment(spec)
    hist_rows = _read_csv(tmp_path / "init_occupancy.csv")[1:]
    full_rows = _read_csv(tmp_path / "init_full_sets.csv")[1:]
    assert {r[0] for r in hist_rows} == {"buggy", "correct"}
    # histogram totals equal the set count for every (mode, seed)
    totals = {}
    for mode, seed_i, _, _, count in hist_rows:
        totals[(mode, seed_i)] = totals.get((mode, seed_i), 0) + int(count)
    assert all(t == 32768 for t in totals.values())
    for mode, _, _, full in full_rows:
        if mode == "correct":
            assert full == "0"


def test_uniformity_report_stats_match_histogram(tmp_path):
    spec = ExperimentSpec(ExperimentKind.INDEX_UNIFORMITY, tmp_path, seed=6,
                          bug_compat=("buggy-present",),
                          parameters=dict(n_addresses=10**5, num_sets=1024,
                                          ciphers=[BlockCipherKind.AES128]))
    uniformity_report(spec)
    hist_rows = _read_csv(tmp_path / "uniformity_hist.csv")[1:]
    stat_rows = _read_csv(tmp_path / "uniformity_stats.csv")[1:]
    assert {r[0] for r in stat_rows} == {"aes128", "buggy-present80"}
    counts = np.array([int(r[2]) for r in hist_rows if r[0] == "aes128"])
    assert counts.sum() == 10**5
    stat = next(r for r in stat_rows if r[0] == "aes128")
    assert int(stat[3]) == counts.max()
    assert abs(float(stat[2]) - counts.std(ddof=1)) < 1e-4
