"""Figure rendering for report outputs; every plot goes straight to a file."""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import AccuracyTable, EvalReport


def save_accuracy_figure(tables: Mapping[str, AccuracyTable], path: str) -> None:
    """Pair-classification accuracy as a function of frame gap, per scheme."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for scheme in sorted(tables):
        rows = sorted(tables[scheme].rows.items())
        ax.plot([dt for dt, _ in rows], [acc for _, (acc, _) in rows], marker="o", label=scheme)
    ax.set_xlabel("frame gap")
    ax.set_ylabel("pair accuracy")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_report_figure(report: EvalReport, path: str) -> None:
    """Per-frame FP/FN bars with cumulative identity switches."""
    frames = [r[0] for r in report.per_frame]
    fps = [r[1] for r in report.per_frame]
    fns = [r[2] for r in report.per_frame]
    sw = []
    total = 0
    for r in report.per_frame:
        total += r[3]
        sw.append(total)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(frames, fps, label="FP", color="tab:red", alpha=0.6)
    ax.bar(frames, fns, bottom=fps, label="FN", color="tab:orange", alpha=0.6)
    ax.set_xlabel("frame")
    ax.set_ylabel("errors per frame")
    ax2 = ax.twinx()
    ax2.plot(frames, sw, color="tab:blue", label="cumulative IDSW")
    ax2.set_ylabel("identity switches")
    ax.set_title(f"MOTA {report.mota:.3f}   FP {report.fp}  FN {report.fn}  IDSW {report.idsw}")
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(rows: Sequence[dict], path: str) -> None:
    """Detection-threshold sweep: MOTA plus problem size and runtime."""
    thresholds = [r["score_min"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(thresholds, [r["mota"] for r in rows], marker="o", color="tab:blue")
    ax1.set_xlabel("minimum detection score")
    ax1.set_ylabel("MOTA")
    ax1.grid(alpha=0.3)
    ax2.plot(thresholds, [r["num_edges"] for r in rows], marker="s", color="tab:green", label="edges")
    ax2.set_xlabel("minimum detection score")
    ax2.set_ylabel("graph edges")
    ax3 = ax2.twinx()
    ax3.plot(thresholds, [r["wall_time"] for r in rows], marker="^", color="tab:red", label="solve time (s)")
    ax3.set_ylabel("wall time (s)")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
