"""
Anchors and target assignment
=============================

Lay an anchor grid over an image, then label anchors for the detection
losses (IOU >= 0.5, plus a forced nearest anchor per object) and for the
embedding loss (IOU >= 0.7, no forcing).
"""

import numpy as np

from embtrack.anchors import AnchorConfig, assign_detection_targets, assign_track_identities, generate_anchors

# Two pyramid levels, K = 6 shapes per grid point (2 scales x 3 aspect ratios)
config = AnchorConfig(strides=(16, 32), base_size=(32.0, 64.0))
anchors = generate_anchors(config, image_width=128, image_height=96)
print("anchors per location:", config.shapes_per_location)
print("total anchors:", len(anchors))

# Two cars, one tiny object no anchor overlaps well
gt = np.array([[9, 25, 41, 55], [34, 18, 78, 62], [100, 80, 104, 84]], dtype=float)
track_ids = [7, 8, 9]

targets = assign_detection_targets(anchors, gt)
for g in range(len(gt)):
    n = int(np.sum(targets.matched_gt == g))
    print(f"gt {g}: {n} matched anchor(s)")

# The tiny object still owns one anchor thanks to the forced pass, but it
# gets no identity: identities need IOU >= 0.7.
ids = assign_track_identities(anchors, gt, track_ids)
carrying = [t for t in ids.track_ids if t is not None]
print("anchors carrying identities:", {t: carrying.count(t) for t in set(carrying)})
