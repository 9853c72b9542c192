"""Anchor grids and the anchor-to-groundtruth assignment rules.

Detection targets: an anchor is matched to its best-overlapping groundtruth
when that IOU is at least 0.5, background otherwise, and every groundtruth
additionally claims its nearest anchor regardless of the threshold. Track
identities use the stricter 0.7 cutoff with no forced pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence, Union

import numpy as np

from .boxgeom import BoundingBox, as_box_array, iou_matrix

DETECTION_IOU_THRESHOLD = 0.5
IDENTITY_IOU_THRESHOLD = 0.7
BACKGROUND = -1


@dataclass(frozen=True)
class AnchorConfig:
    """Anchor layout.

    ``base_size`` is either one side length shared by every pyramid level or a
    per-level sequence aligned with ``strides``. The default gives ``K = 6``
    shapes: two octave scales times three aspect ratios (width / height).
    """

    strides: tuple[int, ...] = (8, 16, 32, 64, 128)
    scales: tuple[float, ...] = (1.0, 2.0 ** 0.5)
    aspect_ratios: tuple[float, ...] = (0.5, 1.0, 2.0)
    base_size: Union[float, tuple[float, ...]] = (32.0, 64.0, 128.0, 256.0, 512.0)

    def __post_init__(self):
        object.__setattr__(self, "strides", tuple(int(s) for s in self.strides))
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        object.__setattr__(self, "aspect_ratios", tuple(float(a) for a in self.aspect_ratios))
        if not isinstance(self.base_size, (int, float)):
            object.__setattr__(self, "base_size", tuple(float(b) for b in self.base_size))
        self.validate()

    @property
    def shapes_per_location(self) -> int:
        return len(self.scales) * len(self.aspect_ratios)

    def validate(self) -> None:
        if not self.scales:
            raise ValueError("scales must be non-empty")
        if not self.aspect_ratios:
            raise ValueError("aspect_ratios must be non-empty")
        if not self.strides:
            raise ValueError("strides must be non-empty")
        if any(s <= 0 for s in self.strides):
            raise ValueError("strides must be positive")
        if any(b <= a for a, b in zip(self.strides, self.strides[1:])):
            raise ValueError("strides must be strictly increasing")
        if any(s <= 0 for s in self.scales) or any(a <= 0 for a in self.aspect_ratios):
            raise ValueError("scales and aspect_ratios must be positive")
        if isinstance(self.base_size, tuple):
            if len(self.base_size) != len(self.strides):
                raise ValueError("per-level base_size must have one entry per stride")
            if any(b <= 0 for b in self.base_size):
                raise ValueError("base_size must be positive")
        elif self.base_size <= 0:
            raise ValueError("base_size must be positive")

    def level_base_size(self, level: int) -> float:
        if isinstance(self.base_size, tuple):
            return self.base_size[level]
        return float(self.base_size)


@dataclass
class AnchorSet:
    boxes: np.ndarray  # (N, 4) corner form
    level_of: np.ndarray  # (N,) pyramid level index
    shape_of: np.ndarray  # (N,) shape index in [0, K)
    centers: np.ndarray  # (N, 2)

    def __len__(self) -> int:
        return len(self.boxes)

    @property
    def anchors(self) -> list[BoundingBox]:
        return [BoundingBox.from_array(b) for b in self.boxes]


@dataclass
class AssignmentResult:
    """Per-anchor labels.

    ``matched_gt[i]`` is a groundtruth index or ``BACKGROUND`` (-1);
    ``track_ids[i]`` is the identity carried by anchor ``i`` or ``None``.
    """

    matched_gt: np.ndarray
    track_ids: list = field(default_factory=list)

    @property
    def is_matched(self) -> np.ndarray:
        return self.matched_gt != BACKGROUND

    @property
    def has_identity(self) -> np.ndarray:
        return np.array([t is not None for t in self.track_ids], dtype=bool)


def anchor_shapes(config: AnchorConfig, level: int = 0) -> np.ndarray:
    """``(K, 2)`` array of (width, height), scale-major then aspect ratio."""
    base = config.level_base_size(level)
    out = []
    for s in config.scales:
        for a in config.aspect_ratios:
            r = math.sqrt(a)
            out.append((base * s * r, base * s / r))
    return np.asarray(out, dtype=float)


def generate_anchors(config: AnchorConfig, image_width: float, image_height: float) -> AnchorSet:
    if image_width <= 0 or image_height <= 0:
        raise ValueError("image dimensions must be positive")
    config.validate()
    k = config.shapes_per_location
    boxes, levels, shapes, centers = [], [], [], []
    for level, stride in enumerate(config.strides):
        nx = math.ceil(image_width / stride)
        ny = math.ceil(image_height / stride)
        cx = (np.arange(nx) + 0.5) * stride
        cy = (np.arange(ny) + 0.5) * stride
        # row-major over the grid, then K shapes per center
        gy, gx = np.meshgrid(cy, cx, indexing="ij")
        ctr = np.stack([gx.ravel(), gy.ravel()], axis=1)
        ctr = np.repeat(ctr, k, axis=0)
        wh = np.tile(anchor_shapes(config, level), (nx * ny, 1))
        boxes.append(np.concatenate([ctr - wh / 2, ctr + wh / 2], axis=1))
        centers.append(ctr)
        levels.append(np.full(nx * ny * k, level, dtype=int))
        shapes.append(np.tile(np.arange(k), nx * ny))
    return AnchorSet(
        boxes=np.concatenate(boxes),
        level_of=np.concatenate(levels),
        shape_of=np.concatenate(shapes),
        centers=np.concatenate(centers),
    )


def _anchor_boxes(anchors) -> np.ndarray:
    if isinstance(anchors, AnchorSet):
        return anchors.boxes
    return as_box_array(anchors)


def _threshold_match(overlaps: np.ndarray, threshold: float) -> np.ndarray:
    n_anchors = overlaps.shape[0]
    if overlaps.shape[1] == 0:
        return np.full(n_anchors, BACKGROUND, dtype=int)
    best = np.argmax(overlaps, axis=1)  # first max -> lowest gt index on ties
    best_iou = overlaps[np.arange(n_anchors), best]
    return np.where(best_iou >= threshold, best, BACKGROUND)


def force_nearest(overlaps: np.ndarray) -> np.ndarray:
    """Give each groundtruth a distinct nearest anchor, ``(G,)`` anchor indices.

    Pairs are claimed greedily in order of decreasing IOU (ties: lower gt
    index, then lower anchor index), so a groundtruth whose best anchor was
    already claimed by a better-overlapping groundtruth takes its next best.
    When there are fewer anchors than groundtruths the surplus gets -1.
    """
    n_anchors, n_gt = overlaps.shape
    forced = np.full(n_gt, -1, dtype=int)
    if n_anchors == 0 or n_gt == 0:
        return forced
    gt_idx, anchor_idx = np.meshgrid(np.arange(n_gt), np.arange(n_anchors), indexing="ij")
    vals = overlaps.T.ravel()
    order = np.lexsort((anchor_idx.ravel(), gt_idx.ravel(), -vals))
    taken = np.zeros(n_anchors, dtype=bool)
    remaining = n_gt
    for flat in order:
        g, a = divmod(int(flat), n_anchors)
        if forced[g] >= 0 or taken[a]:
            continue
        forced[g] = a
        taken[a] = True
        remaining -= 1
        if remaining == 0:
            break
    return forced


def assign_detection_targets(anchors, gt: Sequence) -> AssignmentResult:
    boxes = _anchor_boxes(anchors)
    gt_boxes = as_box_array(gt)
    overlaps = iou_matrix(boxes, gt_boxes)
    matched = _threshold_match(overlaps, DETECTION_IOU_THRESHOLD)
    # the forced pass may overwrite a >= 0.5 match to a different groundtruth
    for g, a in enumerate(force_nearest(overlaps)):
        if a >= 0:
            matched[a] = g
    return AssignmentResult(matched_gt=matched, track_ids=[None] * len(boxes))


def assign_track_identities(
    anchors, gt: Sequence, gt_track_ids: Sequence[Hashable]
) -> AssignmentResult:
    boxes = _anchor_boxes(anchors)
    gt_boxes = as_box_array(gt)
    if len(gt_boxes) != len(gt_track_ids):
        raise ValueError("gt and gt_track_ids must have equal length")
    overlaps = iou_matrix(boxes, gt_boxes)
    matched = _threshold_match(overlaps, IDENTITY_IOU_THRESHOLD)
    ids: list[Optional[Hashable]] = [
        gt_track_ids[g] if g != BACKGROUND else None for g in matched
    ]
    return AssignmentResult(matched_gt=matched, track_ids=ids)
