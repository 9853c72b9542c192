import numpy as np
import pytest

from embtrack.boxgeom import BoundingBox
from embtrack.metrics import (
    COCO_IOU_THRESHOLDS,
    MotAccumulator,
    average_precision,
    detection_map,
    evaluate_mot,
    mot_finalize,
    mot_update,
    per_threshold_ap,
)
from embtrack.tracker import Detection
from fixtures import A, B, mota_07_frames
from oracles import ap_bruteforce


def d(box, score=0.9, frame=0, cls=0):
    return Detection(BoundingBox(*box), cls, score, np.ones(2), frame)


def test_perfect_tracker():
    gt, _ = mota_07_frames()
    r = evaluate_mot(gt, gt)
    assert r["MOTA"] == 1.0 and r["id_switches"] == 0 and r["FP"] == 0 and r["TP"] == 10


def test_mota_hand_count():
    gt, hyp = mota_07_frames()
    r = evaluate_mot(gt, hyp)
    assert r == {"MOTA": 0.7, "TP": 9, "FP": 1, "misses": 1, "id_switches": 1, "num_gt": 10}


def test_no_hypotheses_all_misses():
    gt, _ = mota_07_frames()
    r = evaluate_mot(gt, {})
    assert r["misses"] == 10 and r["MOTA"] == 0.0


def test_negative_mota_possible():
    acc = MotAccumulator()
    mot_update(acc, [(1, A)], [(1, B), (2, BoundingBox(200, 0, 210, 10))])
    assert mot_finalize(acc)["MOTA"] == -2.0


def test_zero_gt_mota_absent():
    acc = MotAccumulator()
    mot_update(acc, [], [(1, A), (2, B)])
    r = mot_finalize(acc)
    assert r["MOTA"] is None and r["FP"] == 2


def test_concatenated_clips_double():
    gt, hyp = mota_07_frames()
    once = evaluate_mot(gt, hyp)
    accs = []
    for _ in range(2):
        acc = MotAccumulator()
        for f in sorted(gt):
            mot_update(acc, gt[f], hyp[f])
        accs.append(acc)
    twice = mot_finalize(accs[0].merge(accs[1]))
    for k in ("TP", "FP", "misses", "id_switches", "num_gt"):
        assert twice[k] == 2 * once[k]
    assert twice["MOTA"] == once["MOTA"]


def test_merge_adds_counts():
    gt, hyp = mota_07_frames()
    a, b = MotAccumulator(), MotAccumulator()
    for f in sorted(gt):
        mot_update(a, gt[f], hyp[f])
        mot_update(b, gt[f], gt[f])
    m = mot_finalize(a.merge(b))
    assert m["num_gt"] == 20 and m["id_switches"] == 1 and m["MOTA"] == 17 / 20


def test_duplicate_gt_rejected():
    with pytest.raises(ValueError):
        mot_update(MotAccumulator(), [(1, A), (1, B)], [])


def test_correspondence_persists_over_better_iou():
    # h1 keeps gt1 while still above the gate even when h2 overlaps better
    acc = MotAccumulator()
    mot_update(acc, [(1, BoundingBox(0, 0, 10, 10))], [(1, BoundingBox(0, 0, 10, 10))])
    mot_update(
        acc,
        [(1, BoundingBox(0, 0, 10, 10))],
        [(1, BoundingBox(2, 0, 12, 10)), (2, BoundingBox(0, 0, 10, 10))],
    )
    r = mot_finalize(acc)
    assert r["id_switches"] == 0 and r["FP"] == 1


def test_switch_after_gap_counts_once():
    acc = MotAccumulator()
    mot_update(acc, [(1, A)], [(1, A)])
    mot_update(acc, [(1, A)], [])
    mot_update(acc, [(1, A)], [(2, A)])
    mot_update(acc, [(1, A)], [(2, A)])
    r = mot_finalize(acc)
    assert r["id_switches"] == 1 and r["misses"] == 1


def test_scale_invariance():
    gt, hyp = mota_07_frames()

    def scaled(frames, k):
        return {f: [(i, BoundingBox(*(k * v for v in b.as_tuple()))) for i, b in items] for f, items in frames.items()}

    assert evaluate_mot(scaled(gt, 4.0), scaled(hyp, 4.0)) == evaluate_mot(gt, hyp)


def test_update_deterministic():
    gt, hyp = mota_07_frames()
    assert evaluate_mot(gt, hyp) == evaluate_mot(gt, hyp)


# --- mAP ---------------------------------------------------------------------


def test_thresholds():
    assert COCO_IOU_THRESHOLDS == (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)


def test_map_exact_match():
    assert detection_map([d((0, 0, 10, 10))], [(0, (0, 0, 10, 10))]) == 1.0


def test_map_iou_06():
    # IOU = 60 / 100 exactly: TP at 0.5, 0.55, 0.6 only
    dets = [d((0, 0, 6, 10))]
    gt = [(0, (0, 0, 10, 10))]
    assert detection_map(dets, gt) == pytest.approx(0.3, abs=1e-15)
    per = per_threshold_ap(dets, gt)
    assert [per[t] for t in COCO_IOU_THRESHOLDS] == [1.0] * 3 + [0.0] * 7


def test_map_no_detections():
    assert detection_map([], [(0, (0, 0, 10, 10))]) == 0.0


def test_map_no_gt_absent():
    assert detection_map([d((0, 0, 1, 1))], []) is None


def test_ap_interpolation_by_hand():
    # ranks TP, FP, TP over 3 gt: envelope 1 up to recall 1/3, 2/3 up to 2/3
    ap = average_precision(np.array([True, False, True]), 3)
    assert ap == pytest.approx((34 + 33 * 2 / 3) / 101, abs=1e-15)


def test_frames_are_matched_separately():
    dets = [d((0, 0, 10, 10), frame=1)]
    assert detection_map(dets, [(0, (0, 0, 10, 10), 0)]) == 0.0
    assert detection_map(dets, [(0, (0, 0, 10, 10), 1)]) == 1.0


def test_multi_class_mean():
    dets = [d((0, 0, 10, 10), cls=0), d((0, 0, 6, 10), cls=1)]
    gt = [(0, (0, 0, 10, 10)), (1, (0, 0, 10, 10))]
    assert detection_map(dets, gt) == pytest.approx((1.0 + 0.3) / 2)


def _random_fixture(rng, n_det=10):
    n_gt = int(rng.integers(1, 8))
    gxy = rng.uniform(0, 60, size=(n_gt, 2))
    gt = np.concatenate([gxy, gxy + rng.uniform(8, 20, size=(n_gt, 2))], 1)
    # detections near random gt plus clutter
    src = gt[rng.integers(0, n_gt, size=n_det)]
    dets = src + rng.normal(0, 3, size=src.shape)
    dets = np.concatenate([np.minimum(dets[:, :2], dets[:, 2:]), np.maximum(dets[:, :2], dets[:, 2:])], 1)
    scores = rng.permutation(n_det) / n_det + 0.01
    return dets, scores, gt


def test_ap50_matches_bruteforce():
    rng = np.random.default_rng(11)
    for _ in range(100):
        dets, scores, gt = _random_fixture(rng)
        fast = detection_map(
            [d(b, s) for b, s in zip(dets, scores)], [(0, tuple(g)) for g in gt], thresholds=[0.5]
        )
        ref = ap_bruteforce(dets.tolist(), scores.tolist(), gt.tolist(), 0.5)
        assert fast == pytest.approx(ref, abs=1e-9)


def test_map_permutation_invariant():
    rng = np.random.default_rng(12)
    for _ in range(30):
        dets, scores, gt = _random_fixture(rng)
        items = [d(b, s) for b, s in zip(dets, scores)]
        g = [(0, tuple(x)) for x in gt]
        p = rng.permutation(len(items))
        assert detection_map([items[i] for i in p], g) == detection_map(items, g)
