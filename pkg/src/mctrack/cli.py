"""Command-line interface: synth, pairs, train, track, eval, bench."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import evaluation, figures, pipeline
from .costs import TrainConfig, fit_pair_model, harvest_pairs, load_model, save_model
from .features import SCHEME_DM, SCHEME_ST, CorrespondenceSet
from .pipeline import PipelineConfig, SynthConfig


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau-max", type=int, default=10, help="maximum frame gap for graph edges")
    p.add_argument("--iou-thresh", type=float, default=0.5, help="IoU threshold for matching")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mctrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic sequence")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--persons", type=int, default=5)
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--fp-rate", type=float, default=0.1)
    p.add_argument("--fn-rate", type=float, default=0.05)
    p.add_argument("--dup-rate", type=float, default=0.3)
    p.add_argument("--jitter", type=float, default=1.5)
    p.add_argument("--camera-motion", type=float, default=2.0)
    p.add_argument("--density", type=int, default=40)
    p.add_argument("--match-noise", type=float, default=0.15)
    p.add_argument("--occlusion", action="append", default=[], metavar="P:START:LEN",
                   help="occlude person P for LEN frames starting at START (repeatable)")
    p.add_argument("--tau-max", type=int, default=10, help="frame-gap span covered by matches")

    p = sub.add_parser("pairs", help="harvest labeled training pairs")
    p.add_argument("--det", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--matches")
    p.add_argument("--scheme", choices=[SCHEME_DM, SCHEME_ST], default=SCHEME_DM)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("train", help="fit per-frame-gap logistic models")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True, help="model file path")
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--report", help="prefix for a training-accuracy report (csv + png)")

    p = sub.add_parser("track", help="run the multicut tracker")
    p.add_argument("--det", required=True)
    p.add_argument("--matches")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="track output file")
    p.add_argument("--min-cluster-size", type=int, default=5)
    p.add_argument("--score-min", type=float, default=None)
    p.add_argument("--init", choices=["gaec", "singleton"], default="gaec")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-interpolate", action="store_true")
    p.add_argument("--diag", help="write diagnostics to this file")
    p.add_argument("--dump-config", help="write the effective configuration to this file")
    _add_common(p)

    p = sub.add_parser("eval", help="CLEAR MOT evaluation of a track file")
    p.add_argument("--tracks", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True, help="report prefix (.txt, .csv, .png)")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--iou-thresh", type=float, default=0.5)

    p = sub.add_parser("bench", help="detection-threshold robustness sweep on synthetic data")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output prefix (.csv, .png)")
    p.add_argument("--persons", type=int, default=5)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--scheme", choices=[SCHEME_DM, SCHEME_ST], default=SCHEME_DM)
    p.add_argument("--init", choices=["gaec", "singleton"], default="gaec")
    p.add_argument("--thresholds", help="comma-separated score thresholds (default: 5 spanning the score range)")
    p.add_argument("--no-figure", action="store_true")
    _add_common(p)

    return parser


def _parse_occlusions(specs: list[str]) -> tuple[tuple[int, int, int], ...]:
    out = []
    for spec in specs:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"occlusion spec must be P:START:LEN, got {spec!r}")
        out.append(tuple(int(p) for p in parts))
    return tuple(out)


def cmd_synth(args) -> int:
    config = SynthConfig(
        persons=args.persons,
        frames=args.frames,
        fp_rate=args.fp_rate,
        fn_rate=args.fn_rate,
        dup_rate=args.dup_rate,
        jitter=args.jitter,
        camera_motion=args.camera_motion,
        density=args.density,
        match_noise=args.match_noise,
        match_span=args.tau_max,
        occlusions=_parse_occlusions(args.occlusion),
    )
    bundle = pipeline.synth_sequence(config, args.seed)
    os.makedirs(args.out, exist_ok=True)
    pipeline.write_detections(bundle.detections, os.path.join(args.out, "det.txt"))
    pipeline.write_gt(bundle.gt_tracks, os.path.join(args.out, "gt.txt"))
    pipeline.write_matches(bundle.matches, os.path.join(args.out, "matches.txt"))
    pipeline.write_seqinfo(bundle, os.path.join(args.out, "seqinfo.txt"))
    pipeline.dump_config(config, os.path.join(args.out, "config.txt"))
    print(f"wrote {bundle.name}: {len(bundle.detections)} detections, "
          f"{bundle.matches.num_matches()} matches -> {args.out}")
    return 0


def cmd_pairs(args) -> int:
    detections = pipeline.load_detections(args.det)
    gt = pipeline.load_gt(args.gt)
    corr = pipeline.load_matches(args.matches) if args.matches else None
    pairs = harvest_pairs(
        detections, gt, args.tau_max,
        iou_assign=args.iou_thresh, scheme=args.scheme, corr=corr,
    )
    with open(args.out, "w") as fh:
        fh.write(f"# scheme={args.scheme} tau_max={args.tau_max}\n")
        for p in pairs:
            feats = ",".join(repr(v) for v in p.features.values)
            fh.write(f"{p.v},{p.w},{p.dt},{p.label},{feats}\n")
    positives = sum(p.label for p in pairs)
    print(f"wrote {len(pairs)} pairs ({positives} positive) -> {args.out}")
    return 0


def load_pairs(path: str):
    """Read a pairs file back into LabeledPair objects."""
    from .costs import LabeledPair
    from .features import FeatureVector

    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# scheme="):
            raise ValueError(f"{path}: missing pairs header")
        scheme = header.split("scheme=")[1].split()[0]
        tau_max = int(header.split("tau_max=")[1])
        pairs = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            v, w, dt, label = int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3])
            values = tuple(float(p) for p in parts[4:])
            tag = SCHEME_ST if (scheme == SCHEME_DM and dt == 0) or scheme == SCHEME_ST else SCHEME_DM
            pairs.append(LabeledPair(v=v, w=w, dt=dt, features=FeatureVector(values, tag), label=label))
    return pairs, scheme, tau_max


def cmd_train(args) -> int:
    pairs, scheme, tau_max = load_pairs(args.pairs)
    config = TrainConfig(l2=args.l2, tol=args.tol, max_iter=args.max_iter)
    model = fit_pair_model(pairs, scheme, tau_max, config)
    save_model(model, args.out)
    print(f"trained {len(model.bins)} frame-gap bins ({scheme}) -> {args.out}")
    if args.report:
        table = evaluation.pair_accuracy(model, pairs)
        rows = evaluation.accuracy_rows({scheme: table})
        with open(args.report + ".csv", "w") as fh:
            fh.write("\n".join(rows) + "\n")
        figures.save_accuracy_figure({scheme: table}, args.report + ".png")
        print(f"training accuracy report -> {args.report}.csv / .png")
    return 0


def cmd_track(args) -> int:
    detections = pipeline.load_detections(args.det)
    corr = pipeline.load_matches(args.matches) if args.matches else None
    model = load_model(args.model)
    if model.scheme == SCHEME_DM and corr is None:
        raise ValueError("a dm-scheme model requires --matches")
    config = PipelineConfig(
        tau_max=args.tau_max,
        min_cluster_size=args.min_cluster_size,
        score_min=args.score_min,
        scheme=model.scheme,
        init=args.init,
        interpolate=not args.no_interpolate,
        iou_thresh=args.iou_thresh,
        seed=args.seed,
    )
    if args.dump_config:
        pipeline.dump_config(config, args.dump_config)
    bundle = pipeline.SequenceBundle(
        name=os.path.basename(args.det),
        num_frames=max((d.frame for d in detections), default=1),
        width=0,
        height=0,
        detections=detections,
        gt_tracks=None,
        matches=corr if corr is not None else CorrespondenceSet(),
    )
    tracks, diag = pipeline.run_tracking(bundle, model, config)
    pipeline.write_tracks(tracks, args.out)
    lines = [
        f"nodes={diag.num_nodes}",
        f"edges={diag.num_edges}",
        f"passes={diag.passes}",
        f"objective={diag.objective!r}",
        f"wall_time={diag.wall_time:.3f}",
        f"tracks={diag.num_tracks}",
        f"discarded={diag.num_discarded}",
    ]
    print(" ".join(lines))
    if args.diag:
        with open(args.diag, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def cmd_eval(args) -> int:
    tracks = pipeline.load_tracks(args.tracks)
    gt = pipeline.load_gt(args.gt)
    report = evaluation.clear_mot(tracks, gt, iou_thresh=args.iou_thresh)
    text = evaluation.format_report(report)
    print(text)
    with open(args.out + ".txt", "w") as fh:
        fh.write(text + "\n")
    with open(args.out + ".csv", "w") as fh:
        fh.write("\n".join(evaluation.report_rows(report)) + "\n")
    if not args.no_figure:
        figures.save_report_figure(report, args.out + ".png")
    return 0


def cmd_bench(args) -> int:
    """Synthesize a sequence, train on a sibling sequence, sweep score_min."""
    synth_cfg = SynthConfig(persons=args.persons, frames=args.frames, match_span=args.tau_max)
    train_bundle = pipeline.synth_sequence(synth_cfg, args.seed)
    eval_bundle = pipeline.synth_sequence(synth_cfg, args.seed + 1)
    pairs = harvest_pairs(
        train_bundle.detections, train_bundle.gt_tracks, args.tau_max,
        iou_assign=args.iou_thresh, scheme=args.scheme, corr=train_bundle.matches,
    )
    model = fit_pair_model(pairs, args.scheme, args.tau_max)
    scores = np.array([d.score for d in eval_bundle.detections])
    if args.thresholds:
        thresholds = [float(t) for t in args.thresholds.split(",")]
    else:
        thresholds = np.linspace(scores.min(), scores.max(), 5).tolist()
    rows = []
    for thr in thresholds:
        config = PipelineConfig(
            tau_max=args.tau_max, score_min=thr, scheme=args.scheme,
            init=args.init, iou_thresh=args.iou_thresh, seed=args.seed,
        )
        tracks, diag = pipeline.run_tracking(eval_bundle, model, config)
        report = evaluation.clear_mot(
            pipeline.tracks_to_map(tracks), eval_bundle.gt_tracks, iou_thresh=args.iou_thresh
        )
        rows.append({
            "score_min": thr,
            "num_nodes": diag.num_nodes,
            "num_edges": diag.num_edges,
            "passes": diag.passes,
            "wall_time": diag.wall_time,
            "mota": report.mota,
            "fp": report.fp,
            "fn": report.fn,
            "idsw": report.idsw,
        })
        print(f"score_min={thr:+.3f}  |V|={diag.num_nodes:5d}  |E|={diag.num_edges:7d}  "
              f"passes={diag.passes}  time={diag.wall_time:6.2f}s  MOTA={report.mota:.3f}")
    header = "score_min,num_nodes,num_edges,passes,wall_time,mota,fp,fn,idsw"
    with open(args.out + ".csv", "w") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(repr(r[k]) if isinstance(r[k], float) else str(r[k])
                              for k in header.split(",")) + "\n")
    if not args.no_figure:
        figures.save_sweep_figure(rows, args.out + ".png")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "pairs": cmd_pairs,
    "train": cmd_train,
    "track": cmd_track,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
