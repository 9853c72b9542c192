"""CLEAR MOT accumulation and COCO-style detection mAP.

The MOT side follows the usual py-motmetrics event semantics: correspondences
from the previous frame are kept while their IOU stays at or above the gate,
the rest are solved as a maximum-IOU assignment, and a groundtruth object
whose hypothesis differs from the one it was last matched to counts one
identity switch.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .boxgeom import as_box_array, iou_matrix

COCO_IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
# exactly rounded i/100; linspace drifts by an ulp at a few points
RECALL_POINTS = np.arange(101) / 100.0


@dataclass
class MotAccumulator:
    iou_gate: float = 0.5
    true_positives: int = 0
    false_positives: int = 0
    misses: int = 0
    id_switches: int = 0
    total_gt: int = 0
    num_frames: int = 0
    active: dict = field(default_factory=dict)  # gt id -> hyp id, previous frame
    last_match: dict = field(default_factory=dict)  # gt id -> last hyp id ever

    def update(self, gt, hyp) -> "MotAccumulator":
        return mot_update(self, gt, hyp)

    def merge(self, other: "MotAccumulator") -> "MotAccumulator":
        """Sum of counts over independent clips (correspondence state is dropped)."""
        return MotAccumulator(
            iou_gate=self.iou_gate,
            true_positives=self.true_positives + other.true_positives,
            false_positives=self.false_positives + other.false_positives,
            misses=self.misses + other.misses,
            id_switches=self.id_switches + other.id_switches,
            total_gt=self.total_gt + other.total_gt,
            num_frames=self.num_frames + other.num_frames,
        )

    def finalize(self) -> dict:
        return mot_finalize(self)


def _split(items):
    ids = [i for i, _ in items]
    boxes = as_box_array([b for _, b in items]) if items else np.zeros((0, 4))
    return ids, boxes


def mot_update(
    acc: MotAccumulator,
    gt: Sequence[tuple[Hashable, object]],
    hyp: Sequence[tuple[Hashable, object]],
    iou_gate: Optional[float] = None,
) -> MotAccumulator:
    """Fold one frame of ``(id, box)`` pairs into ``acc`` (in place; also returned)."""
    gate = acc.iou_gate if iou_gate is None else iou_gate
    gt_ids, gt_boxes = _split(list(gt))
    hyp_ids, hyp_boxes = _split(list(hyp))
    if len(set(gt_ids)) != len(gt_ids):
        raise ValueError("duplicate groundtruth ids in one frame")
    if len(set(hyp_ids)) != len(hyp_ids):
        raise ValueError("duplicate hypothesis ids in one frame")
    ious = iou_matrix(gt_boxes, hyp_boxes)
    valid = ious >= gate

    gt_pos = {g: i for i, g in enumerate(gt_ids)}
    hyp_pos = {h: j for j, h in enumerate(hyp_ids)}
    pairs: dict[int, int] = {}
    for g, h in acc.active.items():
        i, j = gt_pos.get(g), hyp_pos.get(h)
        if i is not None and j is not None and valid[i, j]:
            pairs[i] = j

    free_g = [i for i in range(len(gt_ids)) if i not in pairs]
    used_h = set(pairs.values())
    free_h = [j for j in range(len(hyp_ids)) if j not in used_h]
    if free_g and free_h:
        sub = ious[np.ix_(free_g, free_h)]
        ok = valid[np.ix_(free_g, free_h)]
        cost = np.where(ok, 1.0 - sub, 1e6)
        rr, cc = linear_sum_assignment(cost)
        for r, c in zip(rr, cc):
            if ok[r, c]:
                pairs[free_g[r]] = free_h[c]

    new_active = {}
    for i, j in pairs.items():
        g, h = gt_ids[i], hyp_ids[j]
        prev = acc.last_match.get(g)
        if prev is not None and prev != h:
            acc.id_switches += 1
        acc.last_match[g] = h
        new_active[g] = h
    acc.active = new_active
    acc.true_positives += len(pairs)
    acc.misses += len(gt_ids) - len(pairs)
    acc.false_positives += len(hyp_ids) - len(pairs)
    acc.total_gt += len(gt_ids)
    acc.num_frames += 1
    return acc


def mot_finalize(acc: MotAccumulator) -> dict:
    """Counts plus MOTA; ``MOTA`` is ``None`` when there is no groundtruth."""
    mota = None
    if acc.total_gt > 0:
        errors = acc.misses + acc.false_positives + acc.id_switches
        # one rounding step: (n - e) / n rather than 1 - e / n
        mota = (acc.total_gt - errors) / acc.total_gt
    return {
        "MOTA": mota,
        "TP": acc.true_positives,
        "FP": acc.false_positives,
        "misses": acc.misses,
        "id_switches": acc.id_switches,
        "num_gt": acc.total_gt,
    }


def evaluate_mot(gt_frames: dict, hyp_frames: dict, iou_gate: float = 0.5) -> dict:
    """Run a whole clip given ``frame -> [(id, box), ...]`` maps; frames are the union."""
    acc = MotAccumulator(iou_gate=iou_gate)
    for f in sorted(set(gt_frames) | set(hyp_frames)):
        mot_update(acc, gt_frames.get(f, []), hyp_frames.get(f, []))
    return mot_finalize(acc)


# --- detection AP -----------------------------------------------------------


def _normalize_gt(gt):
    out = []
    for item in gt:
        if len(item) == 2:
            cls, box = item
            frame = 0
        else:
            cls, box, frame = item
        out.append((int(cls), tuple(as_box_array([box])[0]), int(frame)))
    return out


def match_detections(detections, gt, threshold: float):
    """Greedy COCO matching at one IOU threshold for a single class.

    ``detections`` and ``gt`` are already filtered to one class. Returns the
    detections' ``is_tp`` flags in descending-score order (stable on ties)
    and the scores in that order.
    """
    order = sorted(range(len(detections)), key=lambda i: -detections[i].score)
    gt_by_frame: dict[int, list[int]] = {}
    for k, (_, _, frame) in enumerate(gt):
        gt_by_frame.setdefault(frame, []).append(k)
    taken = np.zeros(len(gt), dtype=bool)
    is_tp = np.zeros(len(order), dtype=bool)
    for rank, i in enumerate(order):
        det = detections[i]
        cand = gt_by_frame.get(det.frame_index, [])
        if not cand:
            continue
        ious = iou_matrix([det.box.as_tuple()], [gt[k][1] for k in cand])[0]
        best, best_k = -1.0, -1
        for v, k in zip(ious, cand):
            if taken[k] or v < threshold:
                continue
            if v > best:
                best, best_k = v, k
        if best_k >= 0:
            taken[best_k] = True
            is_tp[rank] = True
    scores = np.array([detections[i].score for i in order], dtype=float)
    return is_tp, scores


def average_precision(is_tp: np.ndarray, num_gt: int) -> Optional[float]:
    """101-point interpolated AP from ranked TP flags; ``None`` when ``num_gt == 0``."""
    if num_gt == 0:
        return None
    if len(is_tp) == 0:
        return 0.0
    tp = np.cumsum(is_tp)
    fp = np.cumsum(~is_tp)
    recall = tp / num_gt
    precision = tp / (tp + fp)
    # precision envelope: best precision at any recall to the right
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    q = np.zeros(len(RECALL_POINTS))
    ok = idx < len(recall)
    q[ok] = envelope[idx[ok]]
    return float(np.mean(q))


def detection_ap_table(detections, gt, thresholds=COCO_IOU_THRESHOLDS) -> dict:
    """AP per (class, threshold); classes without groundtruth map to ``None``."""
    gt = _normalize_gt(gt)
    classes = sorted({c for c, _, _ in gt} | {d.class_id for d in detections})
    table = {}
    for cls in classes:
        cls_gt = [g for g in gt if g[0] == cls]
        cls_det = [d for d in detections if d.class_id == cls]
        for thr in thresholds:
            is_tp, _ = match_detections(cls_det, cls_gt, thr)
            table[(cls, thr)] = average_precision(is_tp, len(cls_gt))
    return table


def detection_map(detections, gt, thresholds=COCO_IOU_THRESHOLDS) -> Optional[float]:
    """Mean AP over IOU thresholds and over classes that have groundtruth.

    ``gt`` items are ``(class_id, box)`` or ``(class_id, box, frame_index)``;
    detections only match groundtruth in their own frame. Returns ``None``
    when no class has groundtruth.
    """
    thresholds = tuple(thresholds)
    if not thresholds:
        raise ValueError("thresholds must be non-empty")
    table = detection_ap_table(detections, gt, thresholds)
    vals = [v for v in table.values() if v is not None]
    if not vals:
        return None
    return float(np.mean(vals))


def per_threshold_ap(detections, gt, thresholds=COCO_IOU_THRESHOLDS) -> dict:
    """Class-averaged AP at each threshold (``None`` where no class has groundtruth)."""
    table = detection_ap_table(detections, gt, thresholds)
    out = {}
    for thr in thresholds:
        vals = [v for (c, t), v in table.items() if t == thr and v is not None]
        out[thr] = float(np.mean(vals)) if vals else None
    return out
