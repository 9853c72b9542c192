"""
Embeddings versus IOU on a crossing
===================================

Two identical boxes drive through each other. An IOU-only tracker swaps
their identities as they pass; adding appearance embeddings keeps them
apart.
"""

from embtrack.pipeline import evaluate_clip
from embtrack.sim import crossing_frame, crossing_scenario
from embtrack.tracker import TrackerConfig

clip = crossing_scenario(seed=0, box_jitter_sigma=1.0, embedding_noise_sigma=0.05)
print("closest approach at frame", crossing_frame(clip))

for name, cfg in [("embedding + IOU", TrackerConfig()), ("IOU only", TrackerConfig.iou_only())]:
    r = evaluate_clip(clip, cfg)
    print(f"{name:16s} MOTA {r['MOTA']:.3f}  id switches {r['id_switches']}  "
          f"tracks per object {[sorted(v) for v in r['identity_tracks'].values()]}")

# Over many seeds
wins = 0
for seed in range(20):
    c = crossing_scenario(seed, box_jitter_sigma=1.0, embedding_noise_sigma=0.05)
    e, i = evaluate_clip(c, TrackerConfig()), evaluate_clip(c, TrackerConfig.iou_only())
    wins += e["MOTA"] > i["MOTA"]
print(f"embedding tracker ahead on {wins}/20 seeds")
