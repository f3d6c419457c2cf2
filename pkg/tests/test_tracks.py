import numpy as np
import pytest

from mctrack.graph import Detection
from mctrack.multicut import Partition
from mctrack.tracks import clusters_to_tracks, filter_clusters


def _det(i, frame, x, y=50.0, w=20.0, h=40.0):
    return Detection(id=i, frame=frame, x=x, y=y, w=w, h=h, score=0.9)


def test_filter_clusters_removes_small():
    # cluster 0 has 4 nodes, cluster 1 has 5
    part = Partition.from_labels([0, 0, 0, 0, 1, 1, 1, 1, 1])
    kept = filter_clusters(part, min_size=5)
    assert kept.labels == (-1, -1, -1, -1, 0, 0, 0, 0, 0)


def test_filter_clusters_boundary_size_kept():
    part = Partition.from_labels([0] * 5)
    assert filter_clusters(part, min_size=5).labels == (0,) * 5


def test_filter_clusters_min_size_one_is_noop():
    part = Partition.from_labels([0, 1, 1, 2])
    assert filter_clusters(part, min_size=1).labels == part.labels


def test_filter_clusters_idempotent():
    rng = np.random.default_rng(41)
    for _ in range(30):
        labels = [int(rng.integers(0, 6)) for _ in range(25)]
        part = Partition.from_labels(labels)
        once = filter_clusters(part, min_size=4)
        twice = filter_clusters(once, min_size=4)
        assert once.labels == twice.labels


def test_filter_clusters_rejects_bad_min_size():
    with pytest.raises(ValueError):
        filter_clusters(Partition.from_labels([0]), min_size=0)


def test_clusters_to_tracks_averages_same_frame():
    dets = [_det(0, 1, 10.0), _det(1, 1, 20.0)]
    part = Partition.from_labels([0, 0])
    tracks = clusters_to_tracks(part, dets, interpolate=False)
    assert len(tracks) == 1
    assert tracks[0].boxes[1][0] == pytest.approx(15.0)


def test_clusters_to_tracks_identity_for_single_detections():
    dets = [_det(0, 1, 10.0), _det(1, 2, 12.0), _det(2, 3, 14.0)]
    part = Partition.from_labels([0, 0, 0])
    (track,) = clusters_to_tracks(part, dets, interpolate=False)
    for d in dets:
        assert track.boxes[d.frame] == (d.x, d.y, d.w, d.h)
    assert track.birth == 1 and track.death == 3


def test_clusters_to_tracks_interpolates_gap():
    dets = [_det(0, 1, 10.0), _det(1, 3, 20.0)]
    part = Partition.from_labels([0, 0])
    (track,) = clusters_to_tracks(part, dets, interpolate=True)
    assert track.boxes[2][0] == pytest.approx(15.0)
    assert track.boxes[2][1] == pytest.approx(50.0)


def test_clusters_to_tracks_gap_limit():
    dets = [_det(0, 1, 10.0), _det(1, 14, 20.0)]
    part = Partition.from_labels([0, 0])
    (track,) = clusters_to_tracks(part, dets, interpolate=True, max_gap=10)
    assert set(track.boxes) == {1, 14}  # 13-frame span exceeds the limit


def test_clusters_to_tracks_no_extrapolation():
    dets = [_det(0, 5, 10.0), _det(1, 6, 12.0)]
    part = Partition.from_labels([0, 0])
    (track,) = clusters_to_tracks(part, dets, interpolate=True)
    assert min(track.boxes) == 5 and max(track.boxes) == 6


def test_clusters_to_tracks_discarded_nodes_dropped():
    dets = [_det(0, 1, 10.0), _det(1, 2, 12.0), _det(2, 1, 500.0)]
    part = Partition(labels=(0, 0, -1))
    tracks = clusters_to_tracks(part, dets, interpolate=False)
    assert len(tracks) == 1
    assert all(500.0 not in (b[0],) for b in tracks[0].boxes.values())


def test_track_count_equals_cluster_count_and_hull_property():
    rng = np.random.default_rng(42)
    for _ in range(20):
        n = int(rng.integers(2, 30))
        dets = [
            _det(i, int(rng.integers(1, 8)), float(rng.uniform(0, 300)), float(rng.uniform(0, 200)))
            for i in range(n)
        ]
        labels = [int(rng.integers(0, 4)) for _ in range(n)]
        part = Partition.from_labels(labels)
        tracks = clusters_to_tracks(part, dets, interpolate=False)
        assert len(tracks) == part.num_clusters
        clusters = part.clusters()
        for track, members in zip(tracks, clusters):
            frames = [dets[m].frame for m in members]
            assert len(track.boxes) == len(set(frames))
            for f in set(frames):
                xs = [dets[m].x for m in members if dets[m].frame == f]
                ys = [dets[m].y for m in members if dets[m].frame == f]
                bx, by, _, _ = track.boxes[f]
                assert min(xs) - 1e-9 <= bx <= max(xs) + 1e-9
                assert min(ys) - 1e-9 <= by <= max(ys) + 1e-9


def test_clusters_to_tracks_size_mismatch():
    with pytest.raises(ValueError):
        clusters_to_tracks(Partition.from_labels([0]), [], interpolate=False)
