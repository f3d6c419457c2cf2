"""Learned edge costs: per-frame-gap logistic models over pairwise features.

Each frame gap gets its own logistic model because pair affinity degrades
with temporal distance and the feature families cannot express that on
their own. A model maps a feature vector to the probability that the two
detections show the same person; the signed edge cost is the logit of that
probability, so likely-same pairs are expensive to cut and likely-distinct
pairs are rewarded for it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from .graph import Detection, build_graph, boxes_overlap_matrix
from .features import (
    SCHEME_DM,
    SCHEME_ST,
    CorrespondenceSet,
    FeatureVector,
    edge_feature_matrix,
)

PROB_CLAMP = 1e-6


@dataclass(frozen=True)
class LabeledPair:
    """A graph edge with features and a same-person / different-person label."""

    v: int
    w: int
    dt: int
    features: FeatureVector
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class BinModel:
    """Logistic parameters for one frame-gap bin.

    ``theta`` has the bias first, then one weight per standardized feature;
    ``mean``/``sigma`` are the training-set standardization statistics.
    """

    theta: np.ndarray
    mean: np.ndarray
    sigma: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.mean)


@dataclass(frozen=True)
class PairModel:
    """Per-frame-gap bin models under one feature scheme.

    For the ``dm`` scheme the gap-0 bin holds a geometric (``st``) model,
    since intra-frame pairs carry no correspondence data.
    """

    scheme: str
    tau_max: int
    bins: Mapping[int, BinModel]

    def expected_scheme(self, dt: int) -> str:
        if self.scheme == SCHEME_DM and dt == 0:
            return SCHEME_ST
        return self.scheme


@dataclass
class TrainConfig:
    l2: float = 1e-4
    tol: float = 1e-8
    max_iter: int = 10_000
    armijo: float = 1e-4
    step_min: float = 1e-12


def loss_and_gradient(
    theta: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    l2: float = 1e-4,
) -> tuple[float, np.ndarray]:
    """Regularized mean negative log-likelihood and its exact gradient.

    ``features`` excludes the bias column; ``theta[0]`` is the unpenalized
    bias. Uses the softplus form, so the loss stays finite even when the
    predicted probability saturates.
    """
    theta = np.asarray(theta, dtype=np.float64)
    z = theta[0] + features @ theta[1:]
    nll = np.logaddexp(0.0, z) - labels * z
    weights = theta[1:]
    loss = float(nll.mean() + l2 * (weights @ weights))
    resid = (expit(z) - labels) / len(labels)
    grad = np.concatenate(([resid.sum()], features.T @ resid + 2.0 * l2 * weights))
    return loss, grad


def train(
    pairs: Sequence[LabeledPair],
    scheme: str,
    dt: int,
    config: TrainConfig | None = None,
    history: list[float] | None = None,
) -> BinModel:
    """Fit the logistic model for one frame-gap bin.

    Full-batch gradient descent with a backtracking (Armijo) line search,
    using a Barzilai-Borwein initial step. Deterministic: zero init, fixed
    halving schedule, runs to the gradient-norm tolerance or the iteration
    cap. The bin needs at least one pair of each label.
    """
    cfg = config or TrainConfig()
    rows = [p for p in pairs if p.dt == dt]
    if not rows:
        raise ValueError(f"no training pairs for frame gap {dt}")
    x = np.array([p.features.values for p in rows], dtype=np.float64)
    y = np.array([p.label for p in rows], dtype=np.float64)
    if y.min() == y.max():
        raise ValueError(f"degenerate labels in frame-gap bin {dt}: single class")

    mean = x.mean(axis=0)
    sigma = x.std(axis=0)
    # constant columns (up to float residue) standardize with sigma 1
    sigma = np.where(sigma > 1e-12 * (1.0 + np.abs(mean)), sigma, 1.0)
    xs = (x - mean) / sigma

    theta = np.zeros(x.shape[1] + 1)
    loss, grad = loss_and_gradient(theta, xs, y, cfg.l2)
    if history is not None:
        history.append(loss)
    prev_step_vec: np.ndarray | None = None
    prev_grad_diff: np.ndarray | None = None
    for _ in range(cfg.max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= cfg.tol:
            break
        step = 1.0
        if prev_step_vec is not None and prev_grad_diff is not None:
            sy = float(prev_step_vec @ prev_grad_diff)
            if sy > 0:
                step = float(prev_step_vec @ prev_step_vec) / sy
        gsq = float(grad @ grad)
        accepted = False
        while step >= cfg.step_min:
            cand = theta - step * grad
            cand_loss, cand_grad = loss_and_gradient(cand, xs, y, cfg.l2)
            if cand_loss <= loss - cfg.armijo * step * gsq:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        prev_step_vec = cand - theta
        prev_grad_diff = cand_grad - grad
        theta, loss, grad = cand, cand_loss, cand_grad
        if history is not None:
            history.append(loss)
    return BinModel(theta=theta, mean=mean, sigma=sigma)


def fit_pair_model(
    pairs: Sequence[LabeledPair],
    scheme: str,
    tau_max: int,
    config: TrainConfig | None = None,
) -> PairModel:
    """Train one bin model per frame gap present in the pairs."""
    bins: dict[int, BinModel] = {}
    for dt in range(tau_max + 1):
        if any(p.dt == dt for p in pairs):
            bins[dt] = train(pairs, scheme, dt, config)
    if not bins:
        raise ValueError("no training pairs in any frame-gap bin")
    return PairModel(scheme=scheme, tau_max=tau_max, bins=bins)


def _bin_probabilities(bin_model: BinModel, features: np.ndarray) -> np.ndarray:
    """Join probabilities for a feature matrix, clamped away from 0 and 1."""
    xs = (features - bin_model.mean) / bin_model.sigma
    z = bin_model.theta[0] + xs @ bin_model.theta[1:]
    return np.clip(expit(z), PROB_CLAMP, 1.0 - PROB_CLAMP)


def join_probability(model: PairModel, feature: FeatureVector, dt: int) -> float:
    """Probability that the two detections of an edge show the same person."""
    if dt not in model.bins:
        raise ValueError(f"no model bin for frame gap {dt}")
    expected = model.expected_scheme(dt)
    if feature.scheme != expected:
        raise ValueError(f"frame gap {dt} expects {expected} features, got {feature.scheme}")
    b = model.bins[dt]
    f = np.asarray(feature.values, dtype=np.float64)
    if len(f) != b.dim:
        raise ValueError(f"feature length {len(f)} does not match bin dimension {b.dim}")
    return float(_bin_probabilities(b, f[None, :])[0])


def edge_cost(model: PairModel, feature: FeatureVector, dt: int) -> float:
    """Signed cost of cutting an edge: the logit of its join probability.

    Positive cost discourages cutting (likely the same person), negative
    cost rewards it. Probability clamping bounds the magnitude, so no
    single edge can dominate the objective.
    """
    p = join_probability(model, feature, dt)
    return float(np.log(p / (1.0 - p)))


def compute_edge_costs(
    nodes: Sequence[Detection],
    edges: Sequence[tuple[int, int, int]],
    corr: CorrespondenceSet | None,
    model: PairModel,
) -> np.ndarray:
    """Costs for a whole edge list via the batched feature path.

    Exactly equivalent to ``edge_cost(model, edge_features(...), dt)`` per
    edge, just without the per-edge Python overhead.
    """
    costs = np.zeros(len(edges))
    grouped = edge_feature_matrix(nodes, edges, corr, model.scheme)
    for dt, (idx, feats) in grouped.items():
        if dt not in model.bins:
            raise ValueError(f"no model bin for frame gap {dt}")
        p = _bin_probabilities(model.bins[dt], feats)
        costs[idx] = np.log(p / (1.0 - p))
    return costs


def assign_identities(
    detections: Sequence[Detection],
    gt_tracks: Mapping[int, Mapping[int, tuple[float, float, float, float]]],
    iou_assign: float = 0.5,
) -> dict[int, int | None]:
    """Give each detection the ground-truth identity it overlaps best, if any.

    A detection whose best IoU against the ground-truth boxes of its frame
    stays below the threshold is background (``None``). Ties go to the
    smaller identity.
    """
    gt_dets_by_frame: dict[int, list[tuple[int, Detection]]] = {}
    for pid in sorted(gt_tracks):
        for f, (x, y, w, h) in gt_tracks[pid].items():
            gt_dets_by_frame.setdefault(f, []).append(
                (pid, Detection(id=-1, frame=f, x=x, y=y, w=w, h=h))
            )
    out: dict[int, int | None] = {}
    by_frame: dict[int, list[Detection]] = {}
    for d in detections:
        by_frame.setdefault(d.frame, []).append(d)
    for f, dets in by_frame.items():
        gts = gt_dets_by_frame.get(f, [])
        if not gts:
            for d in dets:
                out[d.id] = None
            continue
        overlaps = boxes_overlap_matrix(dets, [g[1] for g in gts])
        for i, d in enumerate(dets):
            j = int(np.argmax(overlaps[i]))
            out[d.id] = gts[j][0] if overlaps[i, j] >= iou_assign else None
    return out


def harvest_pairs(
    detections: Sequence[Detection],
    gt_tracks: Mapping[int, Mapping[int, tuple[float, float, float, float]]],
    tau_max: int,
    iou_assign: float = 0.5,
    scheme: str = SCHEME_DM,
    corr: CorrespondenceSet | None = None,
) -> list[LabeledPair]:
    """Labeled training pairs for every graph edge within the window.

    An edge is positive iff both detections carry the same ground-truth
    identity; pairs touching a background detection (including false
    positives) are negative.
    """
    if not gt_tracks or not any(gt_tracks.values()):
        raise ValueError("no supervision: ground truth is empty")
    identity = assign_identities(detections, gt_tracks, iou_assign)
    graph = build_graph(detections, tau_max)
    by_id = graph.node_map()
    grouped = edge_feature_matrix(graph.nodes, graph.edges, corr, scheme)
    feats_by_edge: dict[int, tuple[str, tuple[float, ...]]] = {}
    for dt, (idx, feats) in grouped.items():
        tag = SCHEME_ST if (scheme == SCHEME_DM and dt == 0) or scheme == SCHEME_ST else SCHEME_DM
        for k, ei in enumerate(idx.tolist()):
            feats_by_edge[ei] = (tag, tuple(feats[k].tolist()))
    pairs: list[LabeledPair] = []
    for ei, (u, v, dt) in enumerate(graph.edges):
        iu, iv = identity[u], identity[v]
        label = 1 if iu is not None and iu == iv else 0
        tag, values = feats_by_edge[ei]
        pairs.append(LabeledPair(v=u, w=v, dt=dt, features=FeatureVector(values, tag), label=label))
    return pairs


def save_model(model: PairModel, path: str) -> None:
    """Write a model as plain text with full-precision decimals."""
    lines = [f"scheme {model.scheme}", f"tau_max {model.tau_max}", f"bins {len(model.bins)}"]
    for dt in sorted(model.bins):
        b = model.bins[dt]
        lines.append(f"bin {dt}")
        lines.append(f"dim {b.dim}")
        lines.append("theta " + " ".join(repr(float(t)) for t in b.theta))
        lines.append("mean " + " ".join(repr(float(t)) for t in b.mean))
        lines.append("sigma " + " ".join(repr(float(t)) for t in b.sigma))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> PairModel:
    with open(path) as fh:
        tokens = [line.strip().split() for line in fh if line.strip()]
    it = iter(tokens)

    def expect(key: str) -> list[str]:
        row = next(it)
        if row[0] != key:
            raise ValueError(f"model file: expected {key!r}, found {row[0]!r}")
        return row[1:]

    scheme = expect("scheme")[0]
    tau_max = int(expect("tau_max")[0])
    n_bins = int(expect("bins")[0])
    bins: dict[int, BinModel] = {}
    for _ in range(n_bins):
        dt = int(expect("bin")[0])
        dim = int(expect("dim")[0])
        theta = np.array([float(t) for t in expect("theta")])
        mean = np.array([float(t) for t in expect("mean")])
        sigma = np.array([float(t) for t in expect("sigma")])
        if len(theta) != dim + 1 or len(mean) != dim or len(sigma) != dim:
            raise ValueError(f"model file: inconsistent sizes in bin {dt}")
        bins[dt] = BinModel(theta=theta, mean=mean, sigma=sigma)
    return PairModel(scheme=scheme, tau_max=tau_max, bins=bins)
