"""Glue for running the tracker over a simulated clip and scoring it."""
from __future__ import annotations

from collections import defaultdict

from .metrics import evaluate_mot
from .sim import GroundTruthClip
from .tracker import OnlineTracker, TrackerConfig


def track_clip(clip: GroundTruthClip, config: TrackerConfig):
    """Returns ``(hyp_frames, identity_tracks)``.

    ``hyp_frames`` maps frame -> ``[(track_id, box), ...]``; ``identity_tracks``
    maps each simulated identity to the set of track ids its detections got.
    """
    tracker = OnlineTracker(config)
    hyp = {}
    owners = defaultdict(set)
    for f, dets in clip.frames():
        ident = {id(d): k for d, k in zip(dets, clip.detection_ids[f])}
        out = tracker.step(dets, f)
        hyp[f] = [(tid, d.box) for tid, d in out]
        for tid, d in out:
            k = ident[id(d)]
            if k >= 0:
                owners[k].add(tid)
    return hyp, dict(owners)


def evaluate_clip(clip: GroundTruthClip, config: TrackerConfig, iou_gate: float = 0.5) -> dict:
    hyp, owners = track_clip(clip, config)
    result = evaluate_mot(clip.gt_frames(), hyp, iou_gate=iou_gate)
    result["identity_tracks"] = owners
    return result
