"""Matplotlib figures written straight to files (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .scenarios import FailureHistogram  # noqa: E402

# keeps PNG bytes stable across runs
_META = {"Software": None}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def plot_histogram(hist: FailureHistogram, path: str | Path) -> Path:
    rows = hist.to_rows()
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.bar([r[0] for r in rows], [r[1] for r in rows], color="#4c72b0", width=0.7)
    ax.set_xlabel("inverter failures in scenario")
    ax.set_ylabel("samples")
    ax.set_yscale("log")
    ax.set_xticks([r[0] for r in rows])
    ax.set_title(f"failure count distribution ({hist.sample_count} samples)")
    return _save(fig, path)


def plot_sr_comparison(results: Sequence[tuple[str, float, float]], path: str | Path) -> Path:
    cases = [r[0] for r in results]
    x = range(len(cases))
    fig, ax = plt.subplots(figsize=(6, 3.8))
    w = 0.38
    ax.bar([k - w / 2 for k in x], [100 * r[1] for r in results], w, label="ROP", color="#4c72b0")
    ax.bar([k + w / 2 for k in x], [100 * r[2] for r in results], w, label="MEM", color="#dd8452")
    ax.set_xticks(list(x))
    ax.set_xticklabels(cases)
    ax.set_ylabel("survivability rate [%]")
    ax.set_ylim(0, 105)
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_alpha_sweep(rows: Sequence[tuple[float, float]], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.plot([100 * a for a, _ in rows], [100 * sr for _, sr in rows], "o-", color="#4c72b0")
    ax.set_xlabel("alpha [% of critical load]")
    ax.set_ylabel("survivability rate [%]")
    ax.set_ylim(-5, 105)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_enhancement(traces: Sequence[tuple[str, Sequence[tuple[int, float]]]], path: str | Path,
                     target: float | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for event, trace in traces:
        ax.plot([n for n, _ in trace], [100 * sr for _, sr in trace], "o-", label=event)
    if target is not None:
        ax.axhline(100 * target, color="grey", ls="--", lw=1, label="target")
    ax.set_xlabel("portable DGs added")
    ax.set_ylabel("survivability rate [%]")
    top = max((n for _, t in traces for n, _ in t), default=0)
    ax.set_xticks(range(top + 1))
    ax.legend(frameon=False)
    return _save(fig, path)
