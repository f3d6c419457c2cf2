"""Evaluation: pair-classification accuracy and CLEAR MOT tracking metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .costs import LabeledPair, PairModel, _bin_probabilities
from .tracks import Box

TrackBoxes = Mapping[int, Mapping[int, Box]]


@dataclass(frozen=True)
class AccuracyTable:
    """Per frame-gap classification accuracy with its support count."""

    rows: Mapping[int, tuple[float, int]]

    def accuracy(self, dt: int) -> float:
        return self.rows[dt][0]


@dataclass
class EvalReport:
    """CLEAR MOT counters for one sequence.

    ``mota = 1 - (fp + fn + idsw) / num_gt`` exactly; ``mt``/``ml`` are the
    fractions of ground-truth trajectories covered at least 80% / at most
    20% of their lifespan. ``per_frame`` carries (frame, fp, fn, idsw) rows
    for diagnostics and plotting.
    """

    mota: float
    motp: float
    fp: int
    fn: int
    idsw: int
    frag: int
    mt: float
    ml: float
    num_gt: int
    num_gt_tracks: int
    num_frames: int
    faf: float
    per_frame: list[tuple[int, int, int, int]] = field(default_factory=list, repr=False)


def pair_accuracy(model: PairModel, pairs: Sequence[LabeledPair]) -> AccuracyTable:
    """Rate of correctly classified pairs per frame gap.

    A pair is classified positive iff its join probability exceeds 0.5
    (exactly 0.5 counts as negative); a classification is correct iff it
    matches the pair's label. Bins without pairs are omitted.
    """
    by_dt: dict[int, list[LabeledPair]] = {}
    for p in pairs:
        by_dt.setdefault(p.dt, []).append(p)
    rows: dict[int, tuple[float, int]] = {}
    for dt in sorted(by_dt):
        group = by_dt[dt]
        feats = np.array([p.features.values for p in group])
        labels = np.array([p.label for p in group])
        probs = _bin_probabilities(model.bins[dt], feats)
        predicted = probs > 0.5
        correct = int((predicted == (labels == 1)).sum())
        rows[dt] = (correct / len(group), len(group))
    return AccuracyTable(rows=rows)


def _box_iou_matrix(boxes_a: Sequence[Box], boxes_b: Sequence[Box]) -> np.ndarray:
    a = np.array(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.array(boxes_b, dtype=np.float64).reshape(-1, 4)
    la, ta = a[:, 0] - a[:, 2] / 2, a[:, 1] - a[:, 3] / 2
    lb, tb = b[:, 0] - b[:, 2] / 2, b[:, 1] - b[:, 3] / 2
    iw = np.minimum(la[:, None] + a[:, 2:3], lb + b[:, 2]) - np.maximum(la[:, None], lb)
    ih = np.minimum(ta[:, None] + a[:, 3:4], tb + b[:, 3]) - np.maximum(ta[:, None], tb)
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    union = (a[:, 2] * a[:, 3])[:, None] + b[:, 2] * b[:, 3] - inter
    return inter / union


def clear_mot(tracks: TrackBoxes, gt_tracks: TrackBoxes, iou_thresh: float = 0.5) -> EvalReport:
    """CLEAR MOT evaluation of predicted tracks against ground truth.

    Per frame, pairings from the previous frame persist while their IoU
    stays at or above the threshold; the remaining boxes are matched by an
    optimal bipartite assignment maximizing total IoU among pairs above the
    threshold. Unmatched ground truth counts as a miss, unmatched track
    boxes as false positives, and a ground-truth identity changing its
    paired track id (relative to its most recent pairing, also across gaps)
    as an identity switch.
    """
    if not 0.0 < iou_thresh < 1.0:
        raise ValueError("iou_thresh must be in (0, 1)")
    if not gt_tracks or not any(gt_tracks.values()):
        raise ValueError("empty ground truth")

    gt_by_frame: dict[int, list[tuple[int, Box]]] = {}
    for gid in sorted(gt_tracks):
        for f, box in gt_tracks[gid].items():
            gt_by_frame.setdefault(f, []).append((gid, box))
    tr_by_frame: dict[int, list[tuple[int, Box]]] = {}
    for tid in sorted(tracks):
        for f, box in tracks[tid].items():
            tr_by_frame.setdefault(f, []).append((tid, box))

    frames = sorted(set(gt_by_frame) | set(tr_by_frame))
    num_gt = sum(len(v) for v in gt_by_frame.values())

    fp = fn = idsw = frag = 0
    iou_sum = 0.0
    match_count = 0
    prev_pairs: dict[int, int] = {}
    last_match: dict[int, int] = {}
    covered: dict[int, int] = {gid: 0 for gid in gt_tracks}
    in_match: dict[int, bool] = {gid: False for gid in gt_tracks}
    ever_matched: dict[int, bool] = {gid: False for gid in gt_tracks}
    per_frame: list[tuple[int, int, int, int]] = []

    for f in frames:
        gts = gt_by_frame.get(f, [])
        trs = tr_by_frame.get(f, [])
        gids = [g[0] for g in gts]
        tids = [t[0] for t in trs]
        matches: dict[int, int] = {}
        if gts and trs:
            overlap = _box_iou_matrix([g[1] for g in gts], [t[1] for t in trs])
            # persistence first: keep still-valid pairings from the last frame
            used_t: set[int] = set()
            for i, gid in enumerate(gids):
                tid = prev_pairs.get(gid)
                if tid is not None and tid in tids and tid not in used_t:
                    j = tids.index(tid)
                    if overlap[i, j] >= iou_thresh:
                        matches[gid] = tid
                        used_t.add(tid)
                        iou_sum += float(overlap[i, j])
            # optimal completion over the rest
            free_g = [i for i, gid in enumerate(gids) if gid not in matches]
            free_t = [j for j, tid in enumerate(tids) if tid not in used_t]
            if free_g and free_t:
                sub = overlap[np.ix_(free_g, free_t)]
                cost = np.where(sub >= iou_thresh, -sub, 1.0)
                rows, cols = linear_sum_assignment(cost)
                for r, c in zip(rows, cols):
                    if sub[r, c] >= iou_thresh:
                        gid, tid = gids[free_g[r]], tids[free_t[c]]
                        matches[gid] = tid
                        iou_sum += float(sub[r, c])
        frame_fn = len(gids) - len(matches)
        frame_fp = len(tids) - len(matches)
        frame_idsw = 0
        for gid, tid in matches.items():
            prev = last_match.get(gid)
            if prev is not None and prev != tid:
                frame_idsw += 1
            last_match[gid] = tid
        fn += frame_fn
        fp += frame_fp
        idsw += frame_idsw
        match_count += len(matches)
        for gid in gids:
            hit = gid in matches
            if hit:
                covered[gid] += 1
                if ever_matched[gid] and not in_match[gid]:
                    frag += 1
                ever_matched[gid] = True
            in_match[gid] = hit
        prev_pairs = matches
        per_frame.append((f, frame_fp, frame_fn, frame_idsw))

    lengths = {gid: len(boxes) for gid, boxes in gt_tracks.items()}
    ratios = [covered[gid] / lengths[gid] for gid in gt_tracks if lengths[gid] > 0]
    mt = sum(1 for r in ratios if r >= 0.8) / len(ratios)
    ml = sum(1 for r in ratios if r <= 0.2) / len(ratios)
    mota = 1.0 - (fp + fn + idsw) / num_gt
    motp = iou_sum / match_count if match_count else 0.0
    return EvalReport(
        mota=mota,
        motp=motp,
        fp=fp,
        fn=fn,
        idsw=idsw,
        frag=frag,
        mt=mt,
        ml=ml,
        num_gt=num_gt,
        num_gt_tracks=len(ratios),
        num_frames=len(frames),
        faf=fp / len(frames) if frames else 0.0,
        per_frame=per_frame,
    )


def format_report(report: EvalReport) -> str:
    """Aligned text table for terminal output."""
    fields = [
        ("MOTA", f"{report.mota:.4f}"),
        ("MOTP", f"{report.motp:.4f}"),
        ("FP", str(report.fp)),
        ("FN", str(report.fn)),
        ("IDSW", str(report.idsw)),
        ("Frag", str(report.frag)),
        ("MT", f"{report.mt:.4f}"),
        ("ML", f"{report.ml:.4f}"),
        ("FAF", f"{report.faf:.4f}"),
        ("GT boxes", str(report.num_gt)),
        ("GT tracks", str(report.num_gt_tracks)),
        ("Frames", str(report.num_frames)),
    ]
    width = max(len(k) for k, _ in fields)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in fields)


def report_rows(report: EvalReport) -> list[str]:
    """Machine-readable `key,value` rows."""
    return [
        f"mota,{repr(report.mota)}",
        f"motp,{repr(report.motp)}",
        f"fp,{report.fp}",
        f"fn,{report.fn}",
        f"idsw,{report.idsw}",
        f"frag,{report.frag}",
        f"mt,{repr(report.mt)}",
        f"ml,{repr(report.ml)}",
        f"faf,{repr(report.faf)}",
        f"num_gt,{report.num_gt}",
        f"num_gt_tracks,{report.num_gt_tracks}",
        f"num_frames,{report.num_frames}",
    ]


def accuracy_rows(tables: Mapping[str, AccuracyTable]) -> list[str]:
    """`scheme,dt,accuracy,support` rows for one or more accuracy tables."""
    rows = ["scheme,dt,accuracy,support"]
    for scheme in sorted(tables):
        for dt, (acc, support) in sorted(tables[scheme].rows.items()):
            rows.append(f"{scheme},{dt},{repr(acc)},{support}")
    return rows
