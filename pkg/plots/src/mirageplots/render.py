"""Figure rendering from miragesim run directories.

Input contract (per run directory): a ``manifest.json`` plus the experiment
CSV(s) with fixed header schemas.  Output: one PNG and one SVG per job.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


class SchemaError(RuntimeError):
    """Missing/empty CSV, bad header, or missing manifest."""


class FigureKind(enum.Enum):
    FIG6 = "fig6"
    FIG7 = "fig7"
    INIT_OCCUPANCY = "init-occupancy"
    UNIFORMITY = "uniformity"


@dataclass(frozen=True)
class FigureJob:
    figure: FigureKind
    run_dirs: tuple[Path, ...]
    out: Path
    log_y: bool | None = None  # default: log-y for fig6/fig7

    def __post_init__(self):
        if not 1 <= len(self.run_dirs) <= 2:
            raise ValueError("one or two run directories required")


_SCHEMAS = {
    "fig6_bnb.csv": ["mode", "ways", "trial", "seed", "spilled",
                     "throws_before_spill", "capacity_violation"],
    "fig7_sae.csv": ["mode", "cache_size_bytes", "sets_per_skew", "trial",
                     "seed", "sae_count", "refs_before_first_sae", "censored",
                     "refs_budget", "capacity_violation"],
    "init_occupancy.csv": ["mode", "seed_index", "seed", "valid_ways",
                           "set_count"],
    "uniformity_hist.csv": ["cipher", "set_index", "count"],
    "uniformity_stats.csv": ["cipher", "mean", "stddev", "max",
                             "exceedance_count", "six_sigma_bound"],
}

_MODE_LABEL = {"correct": "after bug-fix", "bug-compat": "original code",
               "buggy": "original code"}


def load_manifest(run_dir: Path) -> dict:
    path = run_dir / "manifest.json"
    if not path.is_file():
        raise SchemaError(f"missing manifest: {path}")
    return json.loads(path.read_text())


def load_table(run_dir: Path, name: str) -> list[dict]:
    path = run_dir / name
    if not path.is_file():
        raise SchemaError(f"missing CSV: {path}")
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"empty CSV: {path}") from None
        if header != _SCHEMAS[name]:
            raise SchemaError(f"schema mismatch in {path}: got {header}, "
                              f"want {_SCHEMAS[name]}")
        rows = [dict(zip(header, row)) for row in reader]
    if not rows:
        raise SchemaError(f"no data rows in {path}")
    return rows


def _footer(manifests: list[dict]) -> str:
    parts = []
    for m in manifests:
        parts.append(f"{m.get('experiment', '?')} seed={m.get('seed', '?')} "
                     f"git={str(m.get('git_revision', '?'))[:12]}")
    return " | ".join(parts)


def _save(fig, out: Path) -> list[Path]:
    out.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for ext in ("png", "svg"):
        path = out.with_suffix(f".{ext}")
        fig.savefig(path, dpi=150)
        written.append(path)
    plt.close(fig)
    return written


def _spill_panels(job: FigureJob):
    """(panel label, rows) pairs: one panel per (run dir, mode)."""
    csv_name = ("fig6_bnb.csv" if job.figure is FigureKind.FIG6
                else "fig7_sae.csv")
    panels, manifests = [], []
    for d in job.run_dirs:
        manifests.append(load_manifest(d))
        rows = load_table(d, csv_name)
        for mode in sorted({r["mode"] for r in rows}):
            panels.append((_MODE_LABEL.get(mode, mode),
                           [r for r in rows if r["mode"] == mode]))
    return panels, manifests


def _render_fig6(job: FigureJob):
    panels, manifests = _spill_panels(job)
    log_y = True if job.log_y is None else job.log_y
    fig, axes = plt.subplots(1, len(panels),
                             figsize=(4.2 * len(panels), 3.6), squeeze=False)
    for ax, (label, rows) in zip(axes[0], panels):
        ways = np.array([int(r["ways"]) for r in rows])
        throws = np.array([int(r["throws_before_spill"]) for r in rows])
        spilled = np.array([r["spilled"] == "1" for r in rows])
        ax.scatter(ways[spilled], throws[spilled], s=14, alpha=0.6,
                   color="tab:blue", label="spill observed")
        if (~spilled).any():
            # censored runs rendered at the exhausted budget, distinct glyph
            ax.scatter(ways[~spilled], throws[~spilled], s=40, marker="^",
                       facecolors="none", edgecolors="tab:red",
                       label="no spill (budget bound)")
        for w in sorted(set(ways.tolist())):
            ax.plot(w, np.median(throws[ways == w]), "_", color="black",
                    markersize=16)
        if log_y:
            ax.set_yscale("log")
        ax.set_xlabel("bucket capacity W (ways)")
        ax.set_ylabel("throws before spill")
        ax.set_title(label)
        ax.legend(fontsize=7)
    fig.suptitle("Balls thrown before a bucket spill")
    fig.text(0.01, 0.01, _footer(manifests), fontsize=6, color="gray")
    fig.tight_layout(rect=(0, 0.03, 1, 1))
    return fig


def _render_fig7(job: FigureJob):
    panels, manifests = _spill_panels(job)
    log_y = True if job.log_y is None else job.log_y
    fig, axes = plt.subplots(1, len(panels),
                             figsize=(4.2 * len(panels), 3.6), squeeze=False)
    for ax, (label, rows) in zip(axes[0], panels):
        size_mb = np.array([int(r["cache_size_bytes"]) for r in rows]) / 2**20
        refs = np.array([int(r["refs_before_first_sae"]) for r in rows])
        censored = np.array([r["censored"] == "1" for r in rows])
        ax.scatter(size_mb[~censored], refs[~censored], s=14, alpha=0.6,
                   color="tab:blue", label="first SAE observed")
        if censored.any():
            ax.scatter(size_mb[censored], refs[censored], s=40, marker="^",
                       facecolors="none", edgecolors="tab:red",
                       label="no SAE (budget bound)")
        if log_y:
            ax.set_yscale("log")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("cache size (MB)")
        ax.set_ylabel("references before first SAE")
        ax.set_title(label)
        ax.legend(fontsize=7)
    fig.suptitle("Cache references before a set-associative eviction")
    fig.text(0.01, 0.01, _footer(manifests), fontsize=6, color="gray")
    fig.tight_layout(rect=(0, 0.03, 1, 1))
    return fig


def _render_init_occupancy(job: FigureJob):
    manifests = [load_manifest(d) for d in job.run_dirs]
    rows = [r for d in job.run_dirs for r in load_table(d,
                                                        "init_occupancy.csv")]
    modes = sorted({r["mode"] for r in rows})
    fig, axes = plt.subplots(1, len(modes), figsize=(4.2 * len(modes), 3.6),
                             squeeze=False)
    for ax, mode in zip(axes[0], modes):
        sub = [r for r in rows if r["mode"] == mode]
        n_seeds = len({r["seed_index"] for r in sub})
        ways = sorted({int(r["valid_ways"]) for r in sub})
        mean_counts = [sum(int(r["set_count"]) for r in sub
                           if int(r["valid_ways"]) == v) / n_seeds
                       for v in ways]
        ax.bar(ways, mean_counts, color="tab:blue")
        ax.set_yscale("log")
        ax.set_xlabel("valid tags per set")
        ax.set_ylabel(f"sets (mean of {n_seeds} seeds)")
        ax.set_title(_MODE_LABEL.get(mode, mode))
        full = mean_counts[-1] if ways and ways[-1] == 14 else 0.0
        ax.annotate(f"full sets: {full:.2f}", xy=(0.97, 0.92),
                    xycoords="axes fraction", ha="right", fontsize=8)
    fig.suptitle("Tag-store occupancy after initialization")
    fig.text(0.01, 0.01, _footer(manifests), fontsize=6, color="gray")
    fig.tight_layout(rect=(0, 0.03, 1, 1))
    return fig


def _render_uniformity(job: FigureJob):
    manifests = [load_manifest(d) for d in job.run_dirs]
    hist_rows, stat_rows = [], []
    for d in job.run_dirs:
        hist_rows += load_table(d, "uniformity_hist.csv")
        stat_rows += load_table(d, "uniformity_stats.csv")
    stats = {r["cipher"]: r for r in stat_rows}
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for cipher in sorted({r["cipher"] for r in hist_rows}):
        counts = np.array([int(r["count"]) for r in hist_rows
                           if r["cipher"] == cipher])
        sigma = float(stats[cipher]["stddev"])
        edges = np.arange(counts.min(), counts.max() + 2) - 0.5
        ax.hist(counts, bins=edges, histtype="step",
                label=f"{cipher} ($\\sigma$={sigma:.1f})")
    ax.set_xlabel("addresses mapped per set")
    ax.set_ylabel("number of sets")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.suptitle("Set-index distribution over random addresses")
    fig.text(0.01, 0.01, _footer(manifests), fontsize=6, color="gray")
    fig.tight_layout(rect=(0, 0.03, 1, 1))
    return fig


_RENDERERS = {
    FigureKind.FIG6: _render_fig6,
    FigureKind.FIG7: _render_fig7,
    FigureKind.INIT_OCCUPANCY: _render_init_occupancy,
    FigureKind.UNIFORMITY: _render_uniformity,
}


def render(job: FigureJob) -> list[Path]:
    """Render the figure; returns the written image paths (PNG + SVG)."""
    fig = _RENDERERS[job.figure](job)
    return _save(fig, job.out)
