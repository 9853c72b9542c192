"""Axis-aligned boxes in corner form and their overlap arithmetic.

Boxes use continuous pixel coordinates ``(xmin, ymin, xmax, ymax)`` with no
``+1`` correction. Scalar helpers operate on :class:`BoundingBox`; the
``*_matrix`` helpers take ``(N, 4)`` arrays and are what the rest of the
package uses in hot loops.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoundingBox:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin <= self.xmax and self.ymin <= self.ymax):
            raise ValueError(f"invalid box corners: {self.as_tuple()}")

    @classmethod
    def from_xywh(cls, left: float, top: float, width: float, height: float) -> "BoundingBox":
        return cls(left, top, left + width, top + height)

    @classmethod
    def from_array(cls, arr) -> "BoundingBox":
        a = np.asarray(arr, dtype=float).reshape(4)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.ymin, self.xmax, self.ymax)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    def to_xywh(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.ymin, self.width, self.height)

    def shifted(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.xmin + dx, self.ymin + dy, self.xmax + dx, self.ymax + dy)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when the union is empty."""
    iw = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    ih = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def truncated_iou(a: BoundingBox, b: BoundingBox, floor: float) -> float:
    """IOU passed through when ``>= floor``, zero otherwise (inclusive boundary)."""
    if not 0.0 <= floor <= 1.0:
        raise ValueError(f"floor must lie in [0, 1], got {floor}")
    v = iou(a, b)
    return v if v >= floor else 0.0


def as_box_array(boxes) -> np.ndarray:
    """Coerce a sequence of boxes (BoundingBox or 4-sequences) to an ``(N, 4)`` float array."""
    if isinstance(boxes, np.ndarray):
        arr = boxes.astype(float, copy=False)
    else:
        rows = [b.as_tuple() if isinstance(b, BoundingBox) else tuple(b) for b in boxes]
        arr = np.asarray(rows, dtype=float)
    return arr.reshape(-1, 4)


def area_array(boxes: np.ndarray) -> np.ndarray:
    boxes = as_box_array(boxes)
    return (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise IOU, shape ``(len(boxes_a), len(boxes_b))``.

    Entry-wise identical to :func:`iou` (same operation order), so scalar and
    vectorised paths agree bit for bit.
    """
    a = as_box_array(boxes_a)
    b = as_box_array(boxes_b)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    overlap = (iw > 0) & (ih > 0)
    inter = np.where(overlap, iw * ih, 0.0)
    union = area_array(a)[:, None] + area_array(b)[None, :] - inter
    out = np.zeros_like(inter)
    ok = overlap & (union > 0)
    out[ok] = inter[ok] / union[ok]
    return out


def truncated_iou_matrix(boxes_a, boxes_b, floor: float) -> np.ndarray:
    m = iou_matrix(boxes_a, boxes_b)
    m[m < floor] = 0.0
    return m
