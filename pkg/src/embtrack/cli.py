"""Command line entry point: ``embtrack {track,eval-mot,eval-map,simulate,loss-check}``.

Exit status is 0 on success, 1 for unreadable or invalid input and 2 when a
check fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from itertools import groupby
from pathlib import Path

import numpy as np

from . import metriclearn, metrics, sim
from .fileio import (
    FormatError,
    MotRecord,
    RunConfig,
    load_config,
    mot_frames,
    read_detections,
    read_mot,
    write_detections,
    write_mot,
)
from .tracker import TrackStore, observe_frame

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2
LOSS_TOLERANCE = 1e-9


class InputError(Exception):
    pass


def _weights(text: str):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected IOU,EMB, e.g. 0.5,0.5") from None
    return a, b


def _run_config(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    over = {
        "iou_gate": getattr(args, "iou_gate", None),
        "score_threshold": getattr(args, "score_threshold", None),
        "epsilon": getattr(args, "epsilon", None),
        "history_depth": getattr(args, "history_depth", None),
        "keep_alive_frames": getattr(args, "keep_alive", None),
        "rng_seed": getattr(args, "seed", None),
    }
    if getattr(args, "weights", None) is not None:
        over["weight_iou"], over["weight_emb"] = args.weights
    return cfg.with_overrides(**over)


def _fmt(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_track(args) -> int:
    cfg = _run_config(args)
    dets = read_detections(args.detections)
    records = []
    store = TrackStore()
    last = -1
    n_frames = 0
    for frame, group in groupby(dets, key=lambda d: d.frame_index):
        if frame <= last:
            raise InputError(f"frames not in nondecreasing order: {frame} after {last}")
        last = frame
        n_frames += 1
        for tid, det in observe_frame(store, list(group), cfg.tracker):
            records.append(MotRecord.from_box(frame, tid, det.box, det.score))
    records.sort(key=lambda r: (r.frame, r.id))
    write_mot(args.output, records)
    print(f"tracks {len(store)}")
    print(f"frames {n_frames}")
    return EXIT_OK


def cmd_eval_mot(args) -> int:
    cfg = _run_config(args)
    gt = mot_frames(read_mot(args.gt))
    hyp = mot_frames(read_mot(args.hyp))
    if gt and hyp and (min(gt), max(gt)) != (min(hyp), max(hyp)):
        print(
            f"warning: frame ranges differ (gt {min(gt)}-{max(gt)}, hyp {min(hyp)}-{max(hyp)}); "
            "evaluating over the union",
            file=sys.stderr,
        )
    result = metrics.evaluate_mot(gt, hyp, iou_gate=cfg.iou_gate)
    for key in ("MOTA", "TP", "FP", "misses", "id_switches"):
        print(f"{key} {_fmt(result[key])}")
    return EXIT_OK


def cmd_eval_map(args) -> int:
    cfg = _run_config(args)
    dets = [d for d in read_detections(args.detections) if d.score >= cfg.detector_score_threshold]
    gt = [(0, r.box, r.frame - 1) for r in read_mot(args.gt)]
    # MOT groundtruth has no class column: evaluate as a single class
    dets = [d if d.class_id == 0 else replace(d, class_id=0) for d in dets]
    per = metrics.per_threshold_ap(dets, gt)
    m = metrics.detection_map(dets, gt)
    print(f"mAP {_fmt(m)}")
    for thr, ap in per.items():
        print(f"AP@{thr:.2f} {_fmt(ap)}")
    return EXIT_OK if m is not None else EXIT_INPUT


def cmd_simulate(args) -> int:
    cfg = _run_config(args)
    if args.crossing:
        clip = sim.crossing_scenario(
            seed=cfg.sim.rng_seed,
            box_jitter_sigma=cfg.sim.box_jitter_sigma,
            embedding_noise_sigma=cfg.sim.embedding_noise_sigma,
            embedding_dim=cfg.sim.embedding_dim,
        )
    else:
        clip = sim.generate_clip(cfg.sim)
    prefix = str(args.out_prefix)
    gt_records = [
        MotRecord.from_box(f, k, box) for f in range(clip.num_frames) for k, box in clip.gt[f]
    ]
    write_mot(prefix + ".gt.txt", gt_records)
    write_detections(prefix + ".det.jsonl", clip.detections, embedding_dim=cfg.sim.embedding_dim)
    print(f"frames {clip.num_frames}")
    print(f"objects {len(clip.prototypes)}")
    return EXIT_OK


def load_batch(path) -> tuple[metriclearn.TripletBatch, dict]:
    try:
        doc = json.loads(Path(path).read_text())
        batch = metriclearn.TripletBatch(
            embeddings=np.asarray(doc["embeddings"], dtype=float),
            track_ids=doc["track_ids"],
            clip_ids=doc.get("clip_ids"),
            margin=float(doc.get("margin", metriclearn.DEFAULT_MARGIN)),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    return batch, doc


def cmd_loss_check(args) -> int:
    batch, doc = load_batch(args.batch)
    fast = metriclearn.batchhard_loss(batch)
    oracle = metriclearn.batchhard_loss_bruteforce(batch)
    diff = abs(fast - oracle)
    print(f"batchhard {fast!r}")
    print(f"oracle {oracle!r}")
    print(f"abs_diff {diff!r}")
    ok = diff <= LOSS_TOLERANCE
    if "expected_loss" in doc:
        tol = float(doc.get("expected_tolerance", LOSS_TOLERANCE))
        off = abs(fast - float(doc["expected_loss"]))
        print(f"expected {float(doc['expected_loss'])!r}")
        ok = ok and off <= tol
    return EXIT_OK if ok else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="embtrack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tracker=False):
        sp.add_argument("--config", help="flat key = value run config")
        if tracker:
            sp.add_argument("--score-threshold", type=float)
            sp.add_argument("--epsilon", type=float)
            sp.add_argument("--history-depth", type=int)
            sp.add_argument("--keep-alive", type=int)
            sp.add_argument("--weights", type=_weights, metavar="IOU,EMB")

    sp = sub.add_parser("track", help="run the tracker over a detection file")
    sp.add_argument("detections")
    sp.add_argument("output")
    common(sp, tracker=True)
    sp.set_defaults(func=cmd_track)

    sp = sub.add_parser("eval-mot", help="CLEAR MOT metrics for MOT Challenge files")
    sp.add_argument("gt")
    sp.add_argument("hyp")
    sp.add_argument("--iou-gate", type=float)
    common(sp)
    sp.set_defaults(func=cmd_eval_mot)

    sp = sub.add_parser("eval-map", help="COCO-style mAP of detections against MOT groundtruth")
    sp.add_argument("detections")
    sp.add_argument("gt")
    common(sp)
    sp.set_defaults(func=cmd_eval_map)

    sp = sub.add_parser("simulate", help="write a synthetic clip")
    sp.add_argument("out_prefix")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--crossing", action="store_true", help="emit the canned crossing clip")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("loss-check", help="BatchHard loss against the brute-force oracle")
    sp.add_argument("batch")
    sp.set_defaults(func=cmd_loss_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
