"""Exit criteria for the package; each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""
import filecmp
import time
from pathlib import Path

import numpy as np
import pytest

from embtrack import cli
from embtrack.anchors import AnchorConfig, assign_detection_targets, assign_track_identities, generate_anchors
from embtrack.metriclearn import TripletBatch, batchhard_loss, batchhard_loss_bruteforce
from embtrack.metrics import detection_map
from embtrack.pipeline import evaluate_clip
from embtrack.sim import SimulationConfig, crossing_scenario, generate_clip
from embtrack.tracker import Detection, TrackerConfig, greedy_match
from embtrack.boxgeom import BoundingBox
from oracles import ap_bruteforce, greedy_select_max

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

DATA = Path(__file__).parent / "data"


def report(name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def cli_values(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, dict(l.split(" ", 1) for l in out.strip().splitlines())


def test_batchhard_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        a = int(rng.integers(1, 11))
        d = int(rng.integers(1, 9))
        b = TripletBatch(
            rng.normal(size=(a, d)),
            [int(t) for t in rng.integers(0, 4, size=a)],
            [int(c) for c in rng.integers(0, 2, size=a)],
            margin=float(rng.uniform(0, 1)),
        )
        worst = max(worst, abs(batchhard_loss(b) - batchhard_loss_bruteforce(b)))
    elapsed = time.perf_counter() - t0
    worked = batchhard_loss(TripletBatch(np.array([[0.0], [0.2], [1.0]]), ["A", "A", "B"], margin=0.1))
    ok = worst <= 1e-9 and abs(worked - 1.28044) <= 1e-5 and elapsed < 5.0
    report("BatchHard oracle equivalence", ok,
           f"max |diff| {worst:.2e} over 1000 batches, worked {worked:.5f}, {elapsed:.2f}s")


def test_assignment_completeness():
    rng = np.random.default_rng(7)
    cfg = AnchorConfig(strides=(16, 32), base_size=(24.0, 48.0))
    anchors = generate_anchors(cfg, 96, 96)
    t0 = time.perf_counter()
    missing = not_subset = 0
    for _ in range(500):
        n = int(rng.integers(1, 9))
        xy = rng.uniform(-10, 90, size=(n, 2))
        gt = np.concatenate([xy, xy + rng.uniform(2, 70, size=(n, 2))], 1)
        det = assign_detection_targets(anchors, gt)
        ids = assign_track_identities(anchors, gt, list(range(n)))
        missing += len(set(range(n)) - set(det.matched_gt[det.is_matched].tolist()))
        not_subset += int(np.sum(ids.has_identity & ~det.is_matched))
    elapsed = time.perf_counter() - t0
    ok = missing == 0 and not_subset == 0 and elapsed < 5.0
    report("Assignment completeness", ok,
           f"unmatched gt {missing}, identity-not-matched anchors {not_subset}, {elapsed:.2f}s")


def test_greedy_matching_oracle():
    rng = np.random.default_rng(99)
    mismatches = 0
    for _ in range(1000):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        sims = rng.permutation(n * m).reshape(n, m) / (n * m)
        gates = rng.random((n, m)) < 0.75
        fast = greedy_match(sims, gates)
        if fast != greedy_select_max(sims.tolist(), gates.tolist()):
            mismatches += 1
    report("Greedy matching oracle", mismatches == 0, f"{mismatches} mismatches in 1000")


def test_noiseless_end_to_end(tmp_path, capsys):
    prefix = tmp_path / "clip"
    code_sim, _ = cli_values(capsys, "simulate", prefix, "--config", DATA / "noiseless.cfg")
    code_trk, _ = cli_values(capsys, "track", f"{prefix}.det.jsonl", tmp_path / "hyp.txt",
                             "--config", DATA / "noiseless.cfg")
    code_ev, vals = cli_values(capsys, "eval-mot", f"{prefix}.gt.txt", tmp_path / "hyp.txt")
    ok = (code_sim, code_trk, code_ev) == (0, 0, 0) and vals["MOTA"] == "1.0" \
        and vals["id_switches"] == "0" and vals["FP"] == "0"
    report("Noiseless end-to-end", ok,
           f"MOTA {vals['MOTA']}, switches {vals['id_switches']}, FP {vals['FP']}")


def _occlusion_clip(length):
    return generate_clip(SimulationConfig(
        num_objects=5, num_frames=120, occlusion_windows=[(2, 30, 30 + length)],
        embedding_noise_sigma=0.03, box_jitter_sigma=0.5, rng_seed=17,
    ))


def test_occlusion_reidentification():
    cfg = TrackerConfig(keep_alive_frames=40)
    short = evaluate_clip(_occlusion_clip(30), cfg)
    long = evaluate_clip(_occlusion_clip(50), cfg)
    short_ids = short["identity_tracks"][2]
    long_ids = long["identity_tracks"][2]
    others_stable = all(len(v) == 1 for k, v in long["identity_tracks"].items() if k != 2)
    ok = (short["id_switches"] == 0 and len(short_ids) == 1
          and len(long_ids) == 2 and long["id_switches"] == 1 and others_stable)
    report("Occlusion re-identification", ok,
           f"30-frame: switches {short['id_switches']}, ids {len(short_ids)}; "
           f"50-frame: ids {len(long_ids)}, switches {long['id_switches']}")


def test_embeddings_beat_iou():
    t0 = time.perf_counter()
    wins = 0
    emb_sw = iou_sw = 0
    for seed in range(20):
        clip = crossing_scenario(seed, box_jitter_sigma=1.0, embedding_noise_sigma=0.05)
        e = evaluate_clip(clip, TrackerConfig())
        i = evaluate_clip(clip, TrackerConfig.iou_only())
        emb_sw += e["id_switches"]
        iou_sw += i["id_switches"]
        wins += e["id_switches"] < i["id_switches"] and e["MOTA"] > i["MOTA"]
    elapsed = time.perf_counter() - t0
    report("Embeddings beat IOU", wins >= 18 and elapsed < 30.0,
           f"{wins}/20 seeds, switches emb {emb_sw} vs iou {iou_sw}, {elapsed:.2f}s")


def test_mot_hand_check(capsys):
    _, hand = cli_values(capsys, "eval-mot", DATA / "mota07_gt.txt", DATA / "mota07_hyp.txt")
    _, self_ = cli_values(capsys, "eval-mot", DATA / "mota07_gt.txt", DATA / "mota07_gt.txt")
    ok = float(hand["MOTA"]) == 0.7 and float(self_["MOTA"]) == 1.0
    report("MOT metric hand-check", ok, f"fixture MOTA {hand['MOTA']}, self MOTA {self_['MOTA']}")


def test_map_hand_check():
    single = detection_map(
        [Detection(BoundingBox(0, 0, 6, 10), 0, 0.9, np.ones(2), 0)], [(0, (0, 0, 10, 10))]
    )
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(200):
        n_gt = int(rng.integers(1, 8))
        gxy = rng.uniform(0, 60, size=(n_gt, 2))
        gt = np.concatenate([gxy, gxy + rng.uniform(8, 20, size=(n_gt, 2))], 1)
        src = gt[rng.integers(0, n_gt, size=10)] + rng.normal(0, 3, size=(10, 4))
        boxes = np.concatenate([np.minimum(src[:, :2], src[:, 2:]), np.maximum(src[:, :2], src[:, 2:])], 1)
        scores = rng.permutation(10) / 10 + 0.05
        dets = [Detection(BoundingBox(*b), 0, float(s), np.ones(2), 0) for b, s in zip(boxes, scores)]
        fast = detection_map(dets, [(0, tuple(g)) for g in gt], thresholds=[0.5])
        worst = max(worst, abs(fast - ap_bruteforce(boxes.tolist(), scores.tolist(), gt.tolist(), 0.5)))
    ok = single == 0.3 and worst <= 1e-9
    report("mAP hand-check", ok, f"single-detection mAP {single!r}, AP@0.5 max |diff| {worst:.1e}")


def test_cli_determinism(tmp_path, capsys):
    outs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        log = []
        for argv in (
            ["simulate", d / "sim", "--config", DATA / "noiseless.cfg"],
            ["simulate", d / "cross", "--crossing", "--seed", "3"],
            ["track", d / "sim.det.jsonl", d / "trk.txt"],
            ["track", d / "cross.det.jsonl", d / "cross_trk.txt", "--weights", "1,0"],
            ["eval-mot", d / "sim.gt.txt", d / "trk.txt"],
            ["eval-map", d / "sim.det.jsonl", d / "sim.gt.txt"],
            ["loss-check", DATA / "worked_batch.json"],
        ):
            code = cli.main([str(a) for a in argv])
            log.append((code, capsys.readouterr().out.replace(str(d), "<dir>")))
        (d / "stdout.txt").write_text(repr(log))
        outs.append(d)
    names = sorted(p.name for p in outs[0].iterdir())
    match, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
    report("Determinism", not mismatch and not errors and len(match) == len(names),
           f"{len(match)}/{len(names)} files byte-identical")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
