"""File ingestion, synthetic sequences, and the train/track/eval pipeline.

All file formats are plain text (comma- or space-separated) and round-trip
bit-exactly: floats are written with ``repr`` so parsing returns the exact
same value. Detection and track files follow the MOT16 layouts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from .graph import Detection, build_graph
from .features import SCHEME_DM, CorrespondenceSet, PointMatch, synth_matches
from .costs import PairModel, compute_edge_costs
from .multicut import MulticutInstance, solve
from .tracks import Box, Track, clusters_to_tracks, filter_clusters

GtTracks = dict[int, dict[int, Box]]


@dataclass
class PipelineConfig:
    """Tracking parameters; the defaults are the reference settings."""

    tau_max: int = 10
    min_cluster_size: int = 5
    score_min: float | None = None
    scheme: str = SCHEME_DM
    init: str = "gaec"
    interpolate: bool = True
    iou_thresh: float = 0.5
    iou_assign: float = 0.5
    seed: int = 0


@dataclass
class SynthConfig:
    """Knobs for the synthetic sequence generator."""

    persons: int = 5
    frames: int = 200
    width: int = 1280
    height: int = 720
    speed: float = 3.0          # max per-frame person velocity, px
    camera_motion: float = 2.0  # std of the global per-frame camera step, px
    jitter: float = 1.5         # detection center noise, px
    scale_jitter: float = 0.03
    dup_rate: float = 0.3       # chance of a second detection on a person
    fp_rate: float = 0.1        # per frame and person slot
    fn_rate: float = 0.05       # chance of missing a visible person
    density: int = 40           # point matches per frame pair
    match_noise: float = 0.15
    match_span: int = 10        # max frame gap covered by the matcher
    occlusions: tuple[tuple[int, int, int], ...] = ()  # (person, start, length)


@dataclass
class SequenceBundle:
    """Everything known about one sequence."""

    name: str
    num_frames: int
    width: int
    height: int
    detections: list[Detection]
    gt_tracks: GtTracks | None
    matches: CorrespondenceSet


@dataclass
class Diagnostics:
    num_nodes: int
    num_edges: int
    passes: int
    wall_time: float
    objective: float
    num_tracks: int
    num_discarded: int


def synth_sequence(config: SynthConfig, seed: int) -> SequenceBundle:
    """Generate a full synthetic sequence: tracks, detections, matches.

    Persons move with constant velocity (reflected at the scene borders) on
    top of a global camera random walk; detections are ground-truth boxes
    with jitter, optional duplicates, dropped boxes, and scored false
    positives. Deterministic given the seed.
    """
    if config.persons < 1 or config.frames < 2:
        raise ValueError("need at least 1 person and 2 frames")
    for rate in (config.dup_rate, config.fp_rate, config.fn_rate):
        if not 0.0 <= rate <= 1.0:
            raise ValueError("rates must be in [0, 1]")
    rng = np.random.default_rng(seed)
    margin = 60.0
    span_x = config.width - 2 * margin
    span_y = config.height - 2 * margin

    heights = rng.uniform(55.0, 75.0, config.persons)
    starts = np.column_stack([
        rng.uniform(margin, config.width - margin, config.persons),
        rng.uniform(margin, config.height - margin, config.persons),
    ])
    velocities = rng.uniform(-config.speed, config.speed, (config.persons, 2))
    camera = np.cumsum(rng.normal(0.0, config.camera_motion, (config.frames, 2)), axis=0)

    occluded: set[tuple[int, int]] = set()
    for person, start, length in config.occlusions:
        for f in range(start, start + length):
            occluded.add((person, f))

    def reflect(value: float, low: float, span: float) -> float:
        # fold an unbounded coordinate back into [low, low + span]
        period = 2 * span
        r = (value - low) % period
        return low + (r if r <= span else period - r)

    def quant(value: float) -> float:
        # snap geometry to 1/256 px so center/corner conversions round-trip
        # through the text formats without losing bits
        return round(float(value) * 256.0) / 256.0

    gt: GtTracks = {}
    for p in range(config.persons):
        track: dict[int, Box] = {}
        h = quant(heights[p])
        w = quant(0.4 * h)
        for f in range(1, config.frames + 1):
            if (p, f) in occluded:
                continue
            raw_x = starts[p, 0] + velocities[p, 0] * (f - 1)
            raw_y = starts[p, 1] + velocities[p, 1] * (f - 1)
            x = reflect(raw_x, margin, span_x) + camera[f - 1, 0]
            y = reflect(raw_y, margin, span_y) + camera[f - 1, 1]
            track[f] = (quant(x), quant(y), w, h)
        gt[p + 1] = track

    detections: list[Detection] = []
    next_id = 0

    def emit(frame: int, x: float, y: float, w: float, h: float, score: float) -> None:
        nonlocal next_id
        detections.append(
            Detection(
                id=next_id, frame=frame,
                x=quant(x), y=quant(y), w=quant(w), h=quant(h), score=float(score),
            )
        )
        next_id += 1

    for f in range(1, config.frames + 1):
        for pid in sorted(gt):
            if f not in gt[pid]:
                continue
            x, y, w, h = gt[pid][f]
            if rng.random() < config.fn_rate:
                continue
            jx, jy = rng.normal(0.0, config.jitter, 2)
            scale = 1.0 + rng.normal(0.0, config.scale_jitter)
            score = rng.normal(0.9, 0.05)
            emit(f, x + jx, y + jy, w * scale, h * scale, score)
            if rng.random() < config.dup_rate:
                jx, jy = rng.normal(0.0, 2.0 * config.jitter, 2)
                scale = 1.0 + rng.normal(0.0, 2.0 * config.scale_jitter)
                score = rng.normal(0.65, 0.1)
                emit(f, x + jx, y + jy, w * scale, h * scale, score)
        for _ in range(config.persons):
            if rng.random() < config.fp_rate:
                h = quant(rng.uniform(55.0, 75.0))
                x = rng.uniform(margin, config.width - margin)
                y = rng.uniform(margin, config.height - margin)
                score = rng.normal(0.3, 0.12)
                emit(f, x, y, quant(0.4 * h), h, score)

    frame_pairs = [
        (t, tp)
        for t in range(1, config.frames + 1)
        for tp in range(t + 1, min(t + config.match_span, config.frames) + 1)
    ]
    match_seed = int(rng.integers(2**31))
    corr = synth_matches(
        gt,
        frame_pairs,
        density=config.density,
        noise=config.match_noise,
        seed=match_seed,
        image_size=(config.width, config.height),
    )
    return SequenceBundle(
        name=f"synth-{seed}",
        num_frames=config.frames,
        width=config.width,
        height=config.height,
        detections=detections,
        gt_tracks=gt,
        matches=corr,
    )


def run_tracking(
    bundle: SequenceBundle,
    model: PairModel,
    config: PipelineConfig,
) -> tuple[list[Track], Diagnostics]:
    """Full tracking pass: graph, costs, multicut, clusters, tracks."""
    if model.scheme != config.scheme:
        raise ValueError(f"model scheme {model.scheme!r} does not match config scheme {config.scheme!r}")
    t0 = time.perf_counter()
    graph = build_graph(bundle.detections, config.tau_max, config.score_min)
    nodes = graph.nodes
    pos = {d.id: i for i, d in enumerate(nodes)}
    costs = compute_edge_costs(nodes, graph.edges, bundle.matches, model)
    instance = MulticutInstance.build(
        len(nodes),
        [(pos[u], pos[v], float(c)) for (u, v, _), c in zip(graph.edges, costs)],
    )
    stats: dict = {}
    partition = solve(instance, init_mode=config.init, max_passes=100, stats=stats)
    kept = filter_clusters(partition, config.min_cluster_size)
    tracks = clusters_to_tracks(
        kept, nodes, interpolate=config.interpolate, max_gap=config.tau_max
    )
    discarded = sum(1 for lab in kept.labels if lab == -1)
    diag = Diagnostics(
        num_nodes=graph.num_nodes,
        num_edges=graph.num_edges,
        passes=stats.get("passes", 0),
        wall_time=time.perf_counter() - t0,
        objective=stats.get("objective", 0.0),
        num_tracks=len(tracks),
        num_discarded=discarded,
    )
    return tracks, diag


def tracks_to_map(tracks: Sequence[Track]) -> dict[int, dict[int, Box]]:
    return {t.track_id: dict(t.boxes) for t in tracks}


# ---------------------------------------------------------------------------
# file formats


def load_detections(path: str) -> list[Detection]:
    """MOT det file: `frame,id,left,top,width,height,score,-1,-1,-1`."""
    detections: list[Detection] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 10:
                raise ValueError(f"{path}: line {lineno}: expected 10 fields, got {len(parts)}")
            try:
                frame = int(parts[0])
                left, top, w, h = (float(p) for p in parts[2:6])
                score = float(parts[6])
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
            detections.append(
                Detection(
                    id=len(detections),
                    frame=frame,
                    x=left + w / 2.0,
                    y=top + h / 2.0,
                    w=w,
                    h=h,
                    score=score,
                )
            )
    return detections


def write_detections(detections: Sequence[Detection], path: str) -> None:
    with open(path, "w") as fh:
        for d in detections:
            left = d.x - d.w / 2.0
            top = d.y - d.h / 2.0
            fh.write(f"{d.frame},-1,{float(left)!r},{float(top)!r},{float(d.w)!r},{float(d.h)!r},{float(d.score)!r},-1,-1,-1\n")


def load_gt(path: str) -> GtTracks:
    """MOT gt file: `frame,id,left,top,width,height,flag,class,visibility`.

    Rows whose flag is 0 are ignored.
    """
    gt: GtTracks = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 9:
                raise ValueError(f"{path}: line {lineno}: expected 9 fields, got {len(parts)}")
            try:
                frame = int(parts[0])
                gid = int(parts[1])
                left, top, w, h = (float(p) for p in parts[2:6])
                flag = int(parts[6])
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
            if flag == 0:
                continue
            gt.setdefault(gid, {})[frame] = (left + w / 2.0, top + h / 2.0, w, h)
    return gt


def write_gt(gt: GtTracks, path: str) -> None:
    with open(path, "w") as fh:
        for gid in sorted(gt):
            for frame in sorted(gt[gid]):
                x, y, w, h = gt[gid][frame]
                left, top = x - w / 2.0, y - h / 2.0
                fh.write(f"{frame},{gid},{float(left)!r},{float(top)!r},{float(w)!r},{float(h)!r},1,1,1\n")


def load_matches(path: str) -> CorrespondenceSet:
    """Matcher output: one `t t' px py px' py'` line per point match."""
    matches: list[PointMatch] = []
    counters: dict[tuple[int, int], int] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"{path}: line {lineno}: expected 6 fields, got {len(parts)}")
            t, tp = int(parts[0]), int(parts[1])
            if t >= tp:
                raise ValueError(f"{path}: line {lineno}: frames must satisfy t < t'")
            px, py, qx, qy = (float(p) for p in parts[2:])
            mid = counters.get((t, tp), 0)
            counters[(t, tp)] = mid + 1
            matches.append(PointMatch(id=mid, t=t, tp=tp, px=px, py=py, qx=qx, qy=qy))
    return CorrespondenceSet.from_matches(matches)


def write_matches(corr: CorrespondenceSet, path: str) -> None:
    with open(path, "w") as fh:
        for t, tp in corr.frame_pairs():
            for m in corr.matches(t, tp):
                fh.write(f"{t} {tp} {float(m.px)!r} {float(m.py)!r} {float(m.qx)!r} {float(m.qy)!r}\n")


def write_tracks(tracks: Sequence[Track], path: str) -> None:
    """MOT submission format: `frame,track_id,left,top,width,height,-1,-1,-1,-1`."""
    rows: list[tuple[int, int, Box]] = []
    for t in tracks:
        for frame, box in t.boxes.items():
            rows.append((frame, t.track_id, box))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w") as fh:
        for frame, tid, (x, y, w, h) in rows:
            left, top = x - w / 2.0, y - h / 2.0
            fh.write(f"{frame},{tid},{float(left)!r},{float(top)!r},{float(w)!r},{float(h)!r},-1,-1,-1,-1\n")


def load_tracks(path: str) -> dict[int, dict[int, Box]]:
    out: dict[int, dict[int, Box]] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 10:
                raise ValueError(f"{path}: line {lineno}: expected 10 fields, got {len(parts)}")
            frame = int(parts[0])
            tid = int(parts[1])
            left, top, w, h = (float(p) for p in parts[2:6])
            out.setdefault(tid, {})[frame] = (left + w / 2.0, top + h / 2.0, w, h)
    return out


def write_seqinfo(bundle: SequenceBundle, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"name={bundle.name}\n")
        fh.write(f"frames={bundle.num_frames}\n")
        fh.write(f"width={bundle.width}\n")
        fh.write(f"height={bundle.height}\n")


def dump_config(config, path: str) -> None:
    """Write any config dataclass as `key=value` lines."""
    with open(path, "w") as fh:
        for key, value in asdict(config).items():
            fh.write(f"{key}={value!r}\n")
