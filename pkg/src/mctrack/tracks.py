"""From solver clusters to per-frame tracks.

Small clusters are dropped (low-confidence detections end up as singletons
or near-singletons, which is how false positives get removed), then each
surviving cluster becomes one track by averaging its detections per frame
and bridging short gaps by linear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .graph import Detection
from .multicut import DISCARDED, Partition

Box = tuple[float, float, float, float]  # center x, center y, width, height


@dataclass
class Track:
    """One person's trajectory: a representative box per covered frame."""

    track_id: int
    boxes: dict[int, Box]

    @property
    def birth(self) -> int:
        return min(self.boxes)

    @property
    def death(self) -> int:
        return max(self.boxes)


def filter_clusters(partition: Partition, min_size: int) -> Partition:
    """Discard clusters with fewer than ``min_size`` nodes; relabel the rest."""
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    counts: dict[int, int] = {}
    for lab in partition.labels:
        if lab != DISCARDED:
            counts[lab] = counts.get(lab, 0) + 1
    kept = [
        lab if lab != DISCARDED and counts[lab] >= min_size else DISCARDED
        for lab in partition.labels
    ]
    return Partition.from_labels(kept)


def clusters_to_tracks(
    partition: Partition,
    detections: Sequence[Detection],
    interpolate: bool = True,
    max_gap: int | None = None,
) -> list[Track]:
    """Average each cluster's detections per frame into one representative box.

    With ``interpolate`` on, frames between a track's birth and death that
    have no detections get linearly interpolated boxes, as long as the gap
    spans at most ``max_gap`` frames (no limit when ``None``). Tracks never
    extrapolate beyond their first or last detection.
    """
    if len(partition.labels) != len(detections):
        raise ValueError("partition and detection list sizes differ")
    by_cluster: dict[int, list[Detection]] = {}
    for node, lab in enumerate(partition.labels):
        if lab != DISCARDED:
            by_cluster.setdefault(lab, []).append(detections[node])
    tracks: list[Track] = []
    for lab in sorted(by_cluster):
        dets = by_cluster[lab]
        per_frame: dict[int, list[Detection]] = {}
        for d in dets:
            per_frame.setdefault(d.frame, []).append(d)
        boxes: dict[int, Box] = {}
        for f, group in per_frame.items():
            k = len(group)
            boxes[f] = (
                sum(d.x for d in group) / k,
                sum(d.y for d in group) / k,
                sum(d.w for d in group) / k,
                sum(d.h for d in group) / k,
            )
        if interpolate:
            frames = sorted(boxes)
            for f0, f1 in zip(frames, frames[1:]):
                span = f1 - f0
                if span <= 1 or (max_gap is not None and span > max_gap):
                    continue
                b0, b1 = boxes[f0], boxes[f1]
                for f in range(f0 + 1, f1):
                    t = (f - f0) / span
                    boxes[f] = tuple(a + t * (b - a) for a, b in zip(b0, b1))
        tracks.append(Track(track_id=lab + 1, boxes=boxes))
    return tracks
