"""Tracking-by-detection toolkit: anchor assignment, BatchHard embedding loss,
a greedy online tracker with appearance embeddings, CLEAR MOT / COCO mAP
evaluation and a synthetic clip generator."""

from .anchors import (
    AnchorConfig,
    AnchorSet,
    AssignmentResult,
    assign_detection_targets,
    assign_track_identities,
    generate_anchors,
)
from .boxgeom import BoundingBox, iou, iou_matrix, truncated_iou
from .metriclearn import (
    TripletBatch,
    batchhard_loss,
    cosine_distance,
    euclidean_distance,
    sample_training_triplets,
)
from .metrics import MotAccumulator, detection_map, mot_finalize, mot_update
from .sim import GroundTruthClip, SimulationConfig, crossing_scenario, generate_clip
from .tracker import (
    Detection,
    OnlineTracker,
    Track,
    TrackerConfig,
    TrackStore,
    greedy_match,
    observe_frame,
    similarity,
)

__version__ = "0.1.0"
