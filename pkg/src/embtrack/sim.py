"""Synthetic clips with identity-labelled trajectories and noisy detections.

Objects move on straight constant-velocity paths that stay inside the image.
Every identity owns a unit-length prototype embedding; its detections carry
``normalize(prototype + noise)``. False positives are uniform random boxes
with uniform random unit embeddings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .boxgeom import BoundingBox, iou
from .metriclearn import cosine_distance
from .tracker import Detection

MAX_PROTOTYPE_ATTEMPTS = 10_000
MAX_PATH_ATTEMPTS = 1_000


@dataclass(frozen=True)
class SimulationConfig:
    num_objects: int = 5
    num_frames: int = 100
    image_width: float = 640.0
    image_height: float = 480.0
    speed_min: float = 1.0  # pixels / frame
    speed_max: float = 4.0
    box_size_min: float = 30.0
    box_size_max: float = 60.0
    occlusion_windows: tuple = ()  # (object, start, end) with end exclusive
    crossing_pairs: tuple = ()  # (object, object)
    embedding_dim: int = 64
    embedding_noise_sigma: float = 0.0
    box_jitter_sigma: float = 0.0
    detection_dropout: float = 0.0
    false_positive_rate: float = 0.0
    min_prototype_angle_deg: float = 75.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "occlusion_windows", tuple(tuple(int(v) for v in w) for w in self.occlusion_windows)
        )
        object.__setattr__(
            self, "crossing_pairs", tuple(tuple(int(v) for v in p) for p in self.crossing_pairs)
        )
        self.validate()

    def validate(self) -> None:
        def bad(key, why):
            raise ValueError(f"{key}: {why}")

        if self.num_objects < 0:
            bad("num_objects", "must be >= 0")
        if self.num_frames < 0:
            bad("num_frames", "must be >= 0")
        if self.image_width <= 0:
            bad("image_width", "must be positive")
        if self.image_height <= 0:
            bad("image_height", "must be positive")
        if not 0 <= self.speed_min <= self.speed_max:
            bad("speed_min", "need 0 <= speed_min <= speed_max")
        if not 0 < self.box_size_min <= self.box_size_max:
            bad("box_size_min", "need 0 < box_size_min <= box_size_max")
        if self.box_size_max > min(self.image_width, self.image_height):
            bad("box_size_max", "objects cannot fit the image")
        if self.embedding_dim < 2:
            bad("embedding_dim", "must be >= 2")
        for key in ("embedding_noise_sigma", "box_jitter_sigma", "false_positive_rate"):
            if getattr(self, key) < 0:
                bad(key, "must be non-negative")
        if not 0 <= self.detection_dropout <= 1:
            bad("detection_dropout", "must be in [0, 1]")
        if not 0 <= self.min_prototype_angle_deg <= 180:
            bad("min_prototype_angle_deg", "must be in [0, 180]")
        for w in self.occlusion_windows:
            if len(w) != 3:
                bad("occlusion_windows", f"expected (object, start, end), got {w}")
            obj, start, end = w
            if not 0 <= obj < self.num_objects:
                bad("occlusion_windows", f"unknown object {obj}")
            if not 0 <= start <= end <= self.num_frames:
                bad("occlusion_windows", f"window {w} outside [0, {self.num_frames})")
        for p in self.crossing_pairs:
            if len(p) != 2 or p[0] == p[1] or not all(0 <= o < self.num_objects for o in p):
                bad("crossing_pairs", f"invalid pair {p}")


@dataclass
class GroundTruthClip:
    num_frames: int
    gt: list  # per frame: [(track_id, BoundingBox), ...]
    detections: list  # per frame: [Detection, ...]
    detection_ids: list  # per frame: identity per detection, -1 for false positives
    prototypes: dict  # track_id -> unit embedding
    image_size: tuple = (640.0, 480.0)

    def frames(self):
        """``(frame_index, detections)`` pairs, ready for a tracker."""
        return [(f, self.detections[f]) for f in range(self.num_frames)]

    def gt_frames(self) -> dict:
        return {f: list(self.gt[f]) for f in range(self.num_frames)}


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(dim)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n


def sample_prototypes(
    rng: np.random.Generator, count: int, dim: int, min_angle_deg: float
) -> list[np.ndarray]:
    """Uniform random unit vectors with a minimum pairwise angle, by rejection."""
    max_cos = math.cos(math.radians(min_angle_deg))
    protos: list[np.ndarray] = []
    attempts = 0
    while len(protos) < count:
        attempts += 1
        if attempts > MAX_PROTOTYPE_ATTEMPTS:
            raise ValueError(
                "min_prototype_angle_deg: could not place prototypes; "
                "lower the angle or raise embedding_dim"
            )
        v = random_unit(rng, dim)
        if all(float(v @ p) <= max_cos for p in protos):
            protos.append(v)
    return protos


def _fit_start(lo: float, hi: float, travel: float, rng: np.random.Generator) -> Optional[float]:
    # start s with s and s + travel both inside [lo, hi]
    a = max(lo, lo - travel)
    b = min(hi, hi - travel)
    if a > b:
        return None
    return float(rng.uniform(a, b))


def _sample_path(cfg: SimulationConfig, rng, size):
    w, h = size
    span = max(cfg.num_frames - 1, 0)
    for _ in range(MAX_PATH_ATTEMPTS):
        speed = rng.uniform(cfg.speed_min, cfg.speed_max)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        vx, vy = speed * math.cos(theta), speed * math.sin(theta)
        x0 = _fit_start(0.0, cfg.image_width - w, vx * span, rng)
        y0 = _fit_start(0.0, cfg.image_height - h, vy * span, rng)
        if x0 is not None and y0 is not None:
            return np.array([x0, y0]), np.array([vx, vy])
    # fall back to a stationary object
    return np.array([rng.uniform(0, cfg.image_width - w), rng.uniform(0, cfg.image_height - h)]), np.zeros(2)


def _crossing_path(cfg: SimulationConfig, rng, size, target_center, t_cross):
    w, h = size
    span = max(cfg.num_frames - 1, 0)
    for _ in range(MAX_PATH_ATTEMPTS):
        speed = rng.uniform(max(cfg.speed_min, 1e-9), max(cfg.speed_max, 1e-9))
        theta = rng.uniform(0.0, 2.0 * math.pi)
        v = np.array([speed * math.cos(theta), speed * math.sin(theta)])
        start = np.asarray(target_center) - np.array([w, h]) / 2 - v * t_cross
        end = start + v * span
        lo = np.minimum(start, end)
        hi = np.maximum(start, end)
        if lo[0] >= 0 and lo[1] >= 0 and hi[0] <= cfg.image_width - w and hi[1] <= cfg.image_height - h:
            return start, v
    return None


def generate_clip(config: SimulationConfig) -> GroundTruthClip:
    config.validate()
    rng = np.random.default_rng(config.rng_seed)
    n, T = config.num_objects, config.num_frames
    sizes = [tuple(rng.uniform(config.box_size_min, config.box_size_max, size=2)) for _ in range(n)]
    starts, vels = [], []
    for k in range(n):
        s, v = _sample_path(config, rng, sizes[k])
        starts.append(s)
        vels.append(v)
    t_cross = (T - 1) / 2.0
    for a, b in config.crossing_pairs:
        center = starts[a] + vels[a] * t_cross + np.array(sizes[a]) / 2
        path = _crossing_path(config, rng, sizes[b], center, t_cross)
        if path is None:
            raise ValueError(f"crossing_pairs: cannot route object {b} through object {a}")
        starts[b], vels[b] = path
    protos = sample_prototypes(rng, n, config.embedding_dim, config.min_prototype_angle_deg)

    hidden = np.zeros((n, T), dtype=bool)
    for obj, s, e in config.occlusion_windows:
        hidden[obj, s:e] = True

    gt, dets, det_ids = [], [], []
    for f in range(T):
        frame_gt, frame_det, frame_ids = [], [], []
        for k in range(n):
            if hidden[k, f]:
                continue
            x, y = starts[k] + vels[k] * f
            w, h = sizes[k]
            box = BoundingBox(float(x), float(y), float(x + w), float(y + h))
            frame_gt.append((k, box))
            if config.detection_dropout > 0 and rng.random() < config.detection_dropout:
                continue
            frame_det.append(
                Detection(
                    box=_jitter(box, config.box_jitter_sigma, rng),
                    class_id=0,
                    score=float(rng.uniform(0.6, 1.0)),
                    embedding=_noisy(protos[k], config.embedding_noise_sigma, rng),
                    frame_index=f,
                )
            )
            frame_ids.append(k)
        n_fp = rng.poisson(config.false_positive_rate) if config.false_positive_rate > 0 else 0
        for _ in range(n_fp):
            frame_det.append(
                Detection(
                    box=_random_box(config, rng),
                    class_id=0,
                    score=float(rng.uniform(0.0, 1.0)),
                    embedding=random_unit(rng, config.embedding_dim),
                    frame_index=f,
                )
            )
            frame_ids.append(-1)
        gt.append(frame_gt)
        dets.append(frame_det)
        det_ids.append(frame_ids)
    return GroundTruthClip(
        num_frames=T,
        gt=gt,
        detections=dets,
        detection_ids=det_ids,
        prototypes={k: protos[k] for k in range(n)},
        image_size=(config.image_width, config.image_height),
    )


def _jitter(box: BoundingBox, sigma: float, rng) -> BoundingBox:
    if sigma <= 0:
        return box
    c = box.as_array() + rng.normal(0.0, sigma, size=4)
    # keep the corners ordered
    x0, x1 = sorted((c[0], c[2]))
    y0, y1 = sorted((c[1], c[3]))
    return BoundingBox(float(x0), float(y0), float(x1), float(y1))


def _noisy(proto: np.ndarray, sigma: float, rng) -> np.ndarray:
    if sigma <= 0:
        return proto.copy()
    v = proto + rng.normal(0.0, sigma, size=proto.shape)
    return v / np.linalg.norm(v)


def _random_box(cfg: SimulationConfig, rng) -> BoundingBox:
    w, h = rng.uniform(cfg.box_size_min, cfg.box_size_max, size=2)
    x = rng.uniform(0, cfg.image_width - w)
    y = rng.uniform(0, cfg.image_height - h)
    return BoundingBox(float(x), float(y), float(x + w), float(y + h))


# --- canned crossing clip ----------------------------------------------------

CROSSING_BOX = 100.0
CROSSING_SPEED = 5.0
CROSSING_FRAMES = 40


def crossing_scenario(
    seed: int = 0,
    box_jitter_sigma: float = 0.0,
    embedding_noise_sigma: float = 0.0,
    embedding_dim: int = 64,
) -> GroundTruthClip:
    """Two equal boxes driving head-on along one row and passing through each other.

    The centres meet halfway between two frames, so at the nearest frames the
    boxes are offset by one step (IOU about 0.9). At that point each track's
    last box coincides with the *other* object's new box, which lures an
    IOU-only matcher into swapping identities. Prototypes have a negative dot
    product, i.e. cosine distance above 1.
    """
    rng = np.random.default_rng(seed)
    width, height = 640.0, 480.0
    side, v, T = CROSSING_BOX, CROSSING_SPEED, CROSSING_FRAMES
    t_mid = (T - 1) / 2.0  # crossing instant, between two integer frames
    cx = width / 2.0
    top = height / 2.0 - side / 2.0

    p0 = random_unit(rng, embedding_dim)
    q = random_unit(rng, embedding_dim)
    q = q - (q @ p0) * p0
    q /= np.linalg.norm(q)
    p1 = q - 0.5 * p0
    p1 /= np.linalg.norm(p1)
    protos = {0: p0, 1: p1}

    gt, dets, det_ids = [], [], []
    for f in range(T):
        x = (cx + v * (f - t_mid) - side / 2.0, cx - v * (f - t_mid) - side / 2.0)
        frame_gt, frame_det = [], []
        for k in (0, 1):
            box = BoundingBox(x[k], top, x[k] + side, top + side)
            frame_gt.append((k, box))
            frame_det.append(
                Detection(
                    box=_jitter(box, box_jitter_sigma, rng),
                    class_id=0,
                    score=float(rng.uniform(0.8, 1.0)),
                    embedding=_noisy(protos[k], embedding_noise_sigma, rng),
                    frame_index=f,
                )
            )
        gt.append(frame_gt)
        dets.append(frame_det)
        det_ids.append([0, 1])
    return GroundTruthClip(
        num_frames=T,
        gt=gt,
        detections=dets,
        detection_ids=det_ids,
        prototypes=protos,
        image_size=(width, height),
    )


def crossing_frame(clip: GroundTruthClip) -> int:
    """Frame where the two groundtruth boxes overlap the most."""
    best = max(range(clip.num_frames), key=lambda f: iou(clip.gt[f][0][1], clip.gt[f][1][1]))
    return best


def prototype_gap(clip: GroundTruthClip) -> float:
    """Smallest cosine distance between any two prototypes."""
    ks = sorted(clip.prototypes)
    gaps = [
        cosine_distance(clip.prototypes[a], clip.prototypes[b])
        for i, a in enumerate(ks)
        for b in ks[i + 1 :]
    ]
    return min(gaps) if gaps else float("inf")
