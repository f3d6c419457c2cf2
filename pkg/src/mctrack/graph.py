"""Detections and the spatio-temporal graph they span.

Every detection becomes a node; edges connect all detection pairs that are
at most ``tau_max`` frames apart, including pairs inside the same frame.
The graph is immutable once built and safe to share across readers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Detection:
    """One detector hypothesis: a scored box in a single frame.

    Coordinates are the box center in pixels; ``w``/``h`` are the full box
    width and height. Identity is unknown at this stage.
    """

    id: int
    frame: int
    x: float
    y: float
    w: float
    h: float
    score: float = 0.0

    def __post_init__(self) -> None:
        if self.frame < 1:
            raise ValueError(f"detection {self.id}: frame must be >= 1, got {self.frame}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"detection {self.id}: non-positive box size {self.w}x{self.h}")

    @property
    def box(self) -> BoundingBox:
        return BoundingBox(self.x - self.w / 2.0, self.y - self.h / 2.0, self.w, self.h)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box given by its top-left corner and size."""

    left: float
    top: float
    width: float
    height: float

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, px: float, py: float) -> bool:
        """Point membership, inclusive on all four borders."""
        return self.left <= px <= self.right and self.top <= py <= self.bottom


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two box areas; symmetric, in [0, 1]."""
    if a.width <= 0 or a.height <= 0 or b.width <= 0 or b.height <= 0:
        raise ValueError("iou requires boxes with positive area")
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    # areas from the same corner arithmetic, so identical boxes give exactly 1
    area_a = (a.right - a.left) * (a.bottom - a.top)
    area_b = (b.right - b.left) * (b.bottom - b.top)
    return inter / (area_a + area_b - inter)


@dataclass(frozen=True)
class TrackingGraph:
    """Detections plus the edge set linking them within the temporal window.

    Edges are ``(u, v, dt)`` with ``u < v`` (node ids) and ``dt`` the frame
    gap, sorted by ``(u, v)`` so identical inputs always produce identical
    edge lists.
    """

    nodes: tuple[Detection, ...]
    edges: tuple[tuple[int, int, int], ...]
    tau_max: int

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def node_map(self) -> dict[int, Detection]:
        """Node id -> detection lookup."""
        return {d.id: d for d in self.nodes}


def build_graph(
    detections: Iterable[Detection],
    tau_max: int = 10,
    score_min: float | None = None,
) -> TrackingGraph:
    """Connect every detection pair at most ``tau_max`` frames apart.

    ``score_min`` drops detections below the threshold before building;
    intra-frame pairs (frame gap 0) are connected as well, so multiple
    hypotheses for one person can be clustered jointly.
    """
    if tau_max < 0:
        raise ValueError(f"tau_max must be >= 0, got {tau_max}")
    nodes = tuple(d for d in detections if score_min is None or d.score >= score_min)
    seen: set[int] = set()
    for d in nodes:
        if d.id in seen:
            raise ValueError(f"duplicate detection id {d.id}")
        seen.add(d.id)

    by_frame: dict[int, list[int]] = {}
    for d in nodes:
        by_frame.setdefault(d.frame, []).append(d.id)
    for ids in by_frame.values():
        ids.sort()

    frames = sorted(by_frame)
    edges: list[tuple[int, int, int]] = []
    for fi, f in enumerate(frames):
        ids_f = by_frame[f]
        # intra-frame pairs
        for i in range(len(ids_f)):
            for j in range(i + 1, len(ids_f)):
                edges.append((ids_f[i], ids_f[j], 0))
        # pairs into later frames within the window
        for g in frames[fi + 1:]:
            dt = g - f
            if dt > tau_max:
                break
            for u in ids_f:
                for v in by_frame[g]:
                    a, b = (u, v) if u < v else (v, u)
                    edges.append((a, b, dt))
    edges.sort(key=lambda e: (e[0], e[1]))
    return TrackingGraph(nodes=nodes, edges=tuple(edges), tau_max=tau_max)


def boxes_overlap_matrix(dets_a: Sequence[Detection], dets_b: Sequence[Detection]) -> np.ndarray:
    """IoU matrix between two detection lists (rows: a, cols: b)."""
    if not dets_a or not dets_b:
        return np.zeros((len(dets_a), len(dets_b)))
    la = np.array([d.x - d.w / 2 for d in dets_a])
    ta = np.array([d.y - d.h / 2 for d in dets_a])
    wa = np.array([d.w for d in dets_a])
    ha = np.array([d.h for d in dets_a])
    lb = np.array([d.x - d.w / 2 for d in dets_b])
    tb = np.array([d.y - d.h / 2 for d in dets_b])
    wb = np.array([d.w for d in dets_b])
    hb = np.array([d.h for d in dets_b])
    iw = np.minimum(la[:, None] + wa[:, None], lb + wb) - np.maximum(la[:, None], lb)
    ih = np.minimum(ta[:, None] + ha[:, None], tb + hb) - np.maximum(ta[:, None], tb)
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    union = (wa * ha)[:, None] + wb * hb - inter
    return inter / union
