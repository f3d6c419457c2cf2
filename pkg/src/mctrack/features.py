"""Pairwise affinity features for detection pairs.

Two feature families: correspondence-overlap features built from matched
keypoints between frames (scheme ``"dm"``), and a purely geometric
spatio-temporal baseline (scheme ``"st"``). Intra-frame pairs have no
correspondence data, so they always use the geometric features.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import Detection, iou

SCHEME_DM = "dm"
SCHEME_ST = "st"

DM_DIM = 5
ST_DIM = 6


@dataclass(frozen=True)
class PointMatch:
    """A matched point pair linking frame ``t`` to a later frame ``tp``."""

    id: int
    t: int
    tp: int
    px: float
    py: float
    qx: float
    qy: float

    def __post_init__(self) -> None:
        if self.t >= self.tp:
            raise ValueError(f"match {self.id}: frames must satisfy t < t', got ({self.t}, {self.tp})")


@dataclass(frozen=True)
class CorrespondenceSet:
    """Point matches grouped by ordered frame pair ``(t, t')`` with ``t < t'``."""

    by_pair: Mapping[tuple[int, int], tuple[PointMatch, ...]] = field(default_factory=dict)

    @classmethod
    def from_matches(cls, matches: Iterable[PointMatch]) -> "CorrespondenceSet":
        grouped: dict[tuple[int, int], list[PointMatch]] = {}
        for m in matches:
            grouped.setdefault((m.t, m.tp), []).append(m)
        for pair, group in grouped.items():
            ids = [m.id for m in group]
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate match ids for frame pair {pair}")
        return cls(by_pair={p: tuple(g) for p, g in grouped.items()})

    def matches(self, t: int, tp: int) -> tuple[PointMatch, ...]:
        return self.by_pair.get((t, tp), ())

    def frame_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.by_pair)

    def num_matches(self) -> int:
        return sum(len(g) for g in self.by_pair.values())


@dataclass(frozen=True)
class FeatureVector:
    """An ordered feature tuple tagged with its scheme (``dm`` or ``st``)."""

    values: tuple[float, ...]
    scheme: str

    def __post_init__(self) -> None:
        expected = DM_DIM if self.scheme == SCHEME_DM else ST_DIM
        if self.scheme not in (SCHEME_DM, SCHEME_ST):
            raise ValueError(f"unknown feature scheme {self.scheme!r}")
        if len(self.values) != expected:
            raise ValueError(f"{self.scheme} features need {expected} entries, got {len(self.values)}")


def match_sets(v: Detection, w: Detection, corr: CorrespondenceSet) -> tuple[int, int]:
    """Count shared and combined keypoint matches for a detection pair.

    A match belongs to the earlier detection's set when its earlier-frame
    endpoint lies inside that box, and to the later detection's set when its
    later-frame endpoint lies inside that box. Returns ``(MI, MU)``, the
    intersection and union sizes. Same-frame pairs have no correspondence
    data and yield ``(0, 0)``.
    """
    if v.frame == w.frame:
        return 0, 0
    a, b = (v, w) if v.frame < w.frame else (w, v)
    box_a, box_b = a.box, b.box
    in_a: set[int] = set()
    in_b: set[int] = set()
    for m in corr.matches(a.frame, b.frame):
        if box_a.contains(m.px, m.py):
            in_a.add(m.id)
        if box_b.contains(m.qx, m.qy):
            in_b.add(m.id)
    return len(in_a & in_b), len(in_a | in_b)


def dm_features(v: Detection, w: Detection, corr: CorrespondenceSet) -> FeatureVector:
    """Correspondence-overlap features for an inter-frame pair.

    The overlap ratio MI/MU measures how consistently the point matches
    agree that the two boxes show the same person; the detector confidence
    enters through the pair minimum, plus product and square terms so a
    linear model can pick up the interactions. An empty match union gives
    overlap 0: absent evidence must not imply sameness.
    """
    mi, mu = match_sets(v, w, corr)
    overlap = mi / mu if mu > 0 else 0.0
    conf = min(v.score, w.score)
    return FeatureVector(
        values=(overlap, conf, overlap * conf, overlap * overlap, conf * conf),
        scheme=SCHEME_DM,
    )


def st_features(v: Detection, w: Detection) -> FeatureVector:
    """Geometric baseline features: gaps in time, position and scale, IoU, min score."""
    hbar = (v.h + w.h) / 2.0
    if hbar <= 0:
        raise ValueError("mean box height must be positive")
    dt = float(abs(v.frame - w.frame))
    dx = abs(v.x - w.x) / hbar
    dy = abs(v.y - w.y) / hbar
    dh = abs(v.h - w.h) / hbar
    overlap = iou(v.box, w.box)
    conf = min(v.score, w.score)
    return FeatureVector(values=(dt, dx, dy, dh, overlap, conf), scheme=SCHEME_ST)


def edge_features(
    v: Detection,
    w: Detection,
    corr: CorrespondenceSet | None,
    scheme: str,
) -> FeatureVector:
    """Features for one edge under a scheme; same-frame pairs fall back to geometry."""
    if scheme == SCHEME_DM and v.frame != w.frame:
        if corr is None:
            raise ValueError("dm features require a correspondence set")
        return dm_features(v, w, corr)
    return st_features(v, w)


def edge_feature_matrix(
    nodes: Sequence[Detection],
    edges: Sequence[tuple[int, int, int]],
    corr: CorrespondenceSet | None,
    scheme: str,
) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Batched features for a whole edge list, grouped by frame gap.

    Returns ``{dt: (edge_index_array, feature_matrix)}`` where edge indices
    point into ``edges``. Row semantics are identical to ``edge_features``
    on the corresponding pair; the batched path exists because per-edge
    keypoint counting is too slow for full sequences.
    """
    if scheme not in (SCHEME_DM, SCHEME_ST):
        raise ValueError(f"unknown feature scheme {scheme!r}")
    pos = {d.id: i for i, d in enumerate(nodes)}
    n = len(nodes)
    x = np.array([d.x for d in nodes]) if n else np.zeros(0)
    y = np.array([d.y for d in nodes]) if n else np.zeros(0)
    w_ = np.array([d.w for d in nodes]) if n else np.zeros(0)
    h = np.array([d.h for d in nodes]) if n else np.zeros(0)
    score = np.array([d.score for d in nodes]) if n else np.zeros(0)
    frame = np.array([d.frame for d in nodes], dtype=np.int64) if n else np.zeros(0, dtype=np.int64)

    m = len(edges)
    iu = np.fromiter((pos[e[0]] for e in edges), dtype=np.int64, count=m)
    iv = np.fromiter((pos[e[1]] for e in edges), dtype=np.int64, count=m)
    dts = np.fromiter((e[2] for e in edges), dtype=np.int64, count=m)

    out: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for dt in sorted(set(dts.tolist())):
        idx = np.nonzero(dts == dt)[0]
        a, b = iu[idx], iv[idx]
        if scheme == SCHEME_ST or dt == 0:
            hbar = (h[a] + h[b]) / 2.0
            iw = np.minimum(x[a] + w_[a] / 2, x[b] + w_[b] / 2) - np.maximum(x[a] - w_[a] / 2, x[b] - w_[b] / 2)
            ih = np.minimum(y[a] + h[a] / 2, y[b] + h[b] / 2) - np.maximum(y[a] - h[a] / 2, y[b] - h[b] / 2)
            inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
            ov = inter / (w_[a] * h[a] + w_[b] * h[b] - inter)
            feats = np.column_stack([
                np.full(len(idx), float(dt)),
                np.abs(x[a] - x[b]) / hbar,
                np.abs(y[a] - y[b]) / hbar,
                np.abs(h[a] - h[b]) / hbar,
                ov,
                np.minimum(score[a], score[b]),
            ])
        else:
            if corr is None:
                raise ValueError("dm features require a correspondence set")
            mi, mu = _batched_match_counts(nodes, frame, a, b, corr)
            overlap = np.where(mu > 0, mi / np.maximum(mu, 1), 0.0)
            conf = np.minimum(score[a], score[b])
            feats = np.column_stack([overlap, conf, overlap * conf, overlap**2, conf**2])
        out[dt] = (idx, feats)
    return out


def _batched_match_counts(
    nodes: Sequence[Detection],
    frame: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    corr: CorrespondenceSet,
) -> tuple[np.ndarray, np.ndarray]:
    """MI and MU per edge, computed one frame pair at a time.

    Box membership is evaluated as a boolean matrix per frame side, and the
    shared-match count falls out of a small matrix product.
    """
    lo = np.where(frame[a] <= frame[b], a, b)
    hi = np.where(frame[a] <= frame[b], b, a)
    key = frame[lo] * (frame.max() + 1) + frame[hi]
    mi = np.zeros(len(a), dtype=np.float64)
    mu = np.zeros(len(a), dtype=np.float64)
    for k in np.unique(key):
        sel = np.nonzero(key == k)[0]
        t = int(frame[lo[sel[0]]])
        tp = int(frame[hi[sel[0]]])
        group = corr.matches(t, tp)
        if not group:
            continue
        px = np.array([mm.px for mm in group])
        py = np.array([mm.py for mm in group])
        qx = np.array([mm.qx for mm in group])
        qy = np.array([mm.qy for mm in group])
        det_lo = np.unique(lo[sel])
        det_hi = np.unique(hi[sel])
        in_lo = _membership(nodes, det_lo, px, py)
        in_hi = _membership(nodes, det_hi, qx, qy)
        shared = in_lo.astype(np.float64) @ in_hi.astype(np.float64).T
        cnt_lo = in_lo.sum(axis=1).astype(np.float64)
        cnt_hi = in_hi.sum(axis=1).astype(np.float64)
        row = {d: i for i, d in enumerate(det_lo.tolist())}
        col = {d: i for i, d in enumerate(det_hi.tolist())}
        ri = np.array([row[d] for d in lo[sel].tolist()])
        ci = np.array([col[d] for d in hi[sel].tolist()])
        mi[sel] = shared[ri, ci]
        mu[sel] = cnt_lo[ri] + cnt_hi[ci] - shared[ri, ci]
    return mi, mu


def _membership(nodes: Sequence[Detection], det_idx: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    left = np.array([nodes[i].x - nodes[i].w / 2 for i in det_idx])
    top = np.array([nodes[i].y - nodes[i].h / 2 for i in det_idx])
    right = np.array([nodes[i].x + nodes[i].w / 2 for i in det_idx])
    bottom = np.array([nodes[i].y + nodes[i].h / 2 for i in det_idx])
    return (
        (px >= left[:, None]) & (px <= right[:, None]) & (py >= top[:, None]) & (py <= bottom[:, None])
    )


def synth_matches(
    gt_tracks: Mapping[int, Mapping[int, tuple[float, float, float, float]]],
    frame_pairs: Iterable[tuple[int, int]],
    density: int,
    noise: float,
    seed: int,
    image_size: tuple[int, int] = (1280, 720),
) -> CorrespondenceSet:
    """Desk-scale surrogate for an external keypoint matcher.

    For each frame pair, ``density`` matches are drawn. Each lands inside
    one ground-truth identity's boxes in both frames with probability
    ``1 - noise`` (same relative position in both boxes, as on a rigid
    person); otherwise it becomes a uniform background match. Fully
    deterministic given the seed.
    """
    if density < 0:
        raise ValueError("density must be >= 0")
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must be in [0, 1]")
    rng = np.random.default_rng(seed)
    width, height = image_size
    matches: list[PointMatch] = []
    for t, tp in sorted(frame_pairs):
        if t >= tp:
            raise ValueError(f"frame pairs must be ordered, got ({t}, {tp})")
        visible = sorted(
            pid for pid, boxes in gt_tracks.items() if t in boxes and tp in boxes
        )
        for k in range(density):
            background = rng.random() < noise or not visible
            if background:
                px, qx = rng.uniform(0, width, 2)
                py, qy = rng.uniform(0, height, 2)
            else:
                pid = visible[int(rng.integers(len(visible)))]
                bx, by, bw, bh = gt_tracks[pid][t]
                cx, cy, cw, ch = gt_tracks[pid][tp]
                u, vv = rng.random(2)
                px = bx - bw / 2 + u * bw
                py = by - bh / 2 + vv * bh
                qx = cx - cw / 2 + u * cw
                qy = cy - ch / 2 + vv * ch
            matches.append(
                PointMatch(id=k, t=t, tp=tp, px=float(px), py=float(py), qx=float(qx), qy=float(qy))
            )
    return CorrespondenceSet.from_matches(matches)
