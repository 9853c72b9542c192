"""Online single-hypothesis tracker built on greedy bipartite matching.

Each frame the top scoring detections are kept, score-filtered and compared
against every alive track's recent observations. The similarity of a
detection to a track is the best, over the track's last ``H`` observations,
of ``w_iou * truncated_iou + w_emb * (1 - cosine_distance)``. A pair is
eligible only if some stored observation lies within cosine distance
``1 - epsilon`` of the detection (checked when ``w_emb > 0``), the classes
agree, and the similarity is positive. Greedy matching extends tracks;
leftover detections open new tracks; tracks unseen for more than
``keep_alive_frames`` frames die and are never matched again.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .boxgeom import BoundingBox, iou_matrix
from .metriclearn import cosine_distance_matrix


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    class_id: int
    score: float
    embedding: np.ndarray
    frame_index: int

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        if self.class_id < 0 or self.frame_index < 0:
            raise ValueError("class_id and frame_index must be non-negative")
        emb = np.asarray(self.embedding, dtype=float).ravel()
        if not np.all(np.isfinite(emb)) or not np.any(emb):
            raise ValueError("embedding must be finite and nonzero")
        emb.setflags(write=False)
        object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class TrackerConfig:
    score_threshold: float = 0.5
    top_k: int = 100
    history_depth: int = 5
    keep_alive_frames: int = 40
    epsilon: float = 0.5
    iou_truncation: float = 0.4
    weight_iou: float = 0.5
    weight_emb: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError("score_threshold must be in [0, 1]")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.history_depth < 1:
            raise ValueError("history_depth must be >= 1")
        if self.keep_alive_frames < 0:
            raise ValueError("keep_alive_frames must be >= 0")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must be in (0, 1]")
        if not 0.0 <= self.iou_truncation <= 1.0:
            raise ValueError("iou_truncation must be in [0, 1]")
        if self.weight_iou < 0 or self.weight_emb < 0:
            raise ValueError("weights must be non-negative")
        if self.weight_iou + self.weight_emb <= 0:
            raise ValueError("weight_iou + weight_emb must be positive")

    @property
    def cosine_gate(self) -> float:
        return 1.0 - self.epsilon

    @classmethod
    def iou_only(cls, **kwargs) -> "TrackerConfig":
        """Configuration of the IOU baseline: embeddings ignored entirely."""
        kwargs.update(weight_iou=1.0, weight_emb=0.0)
        return cls(**kwargs)


class TrackState(enum.Enum):
    ALIVE = "alive"
    DEAD = "dead"


@dataclass
class Observation:
    frame_index: int
    detection: Detection

    @property
    def embedding(self) -> np.ndarray:
        return self.detection.embedding


@dataclass
class Track:
    track_id: int
    history: deque
    state: TrackState = TrackState.ALIVE
    frames_since_update: int = 0

    @property
    def alive(self) -> bool:
        return self.state is TrackState.ALIVE

    @property
    def last(self) -> Observation:
        return self.history[-1]

    @property
    def class_id(self) -> int:
        return self.history[-1].detection.class_id


@dataclass
class TrackStore:
    tracks: dict = field(default_factory=dict)  # track_id -> Track, in creation order
    next_track_id: int = 0
    current_frame: int = -1

    def alive_tracks(self) -> list[Track]:
        return [t for t in self.tracks.values() if t.alive]

    def __len__(self) -> int:
        return len(self.tracks)


def similarity(det: Detection, track: Track, config: TrackerConfig) -> tuple[float, bool]:
    """Best similarity of ``det`` to ``track``'s stored observations and its gate flag."""
    sims, gates = similarity_matrix([det], [track], config)
    return float(sims[0, 0]), bool(gates[0, 0])


def similarity_matrix(
    detections: Sequence[Detection], tracks: Sequence[Track], config: TrackerConfig
) -> tuple[np.ndarray, np.ndarray]:
    """``(n_det, n_track)`` similarities and cosine-gate flags.

    The gate flag here reflects the cosine gate only; class agreement and
    positivity are applied in :func:`observe_frame`.
    """
    n_det, n_trk = len(detections), len(tracks)
    sims = np.zeros((n_det, n_trk))
    gates = np.ones((n_det, n_trk), dtype=bool)
    if n_det == 0 or n_trk == 0:
        return sims, gates
    det_boxes = np.array([d.box.as_tuple() for d in detections], dtype=float)
    det_emb = np.stack([d.embedding for d in detections])
    obs = [(k, o) for k, t in enumerate(tracks) for o in t.history]
    owner = np.array([k for k, _ in obs])
    obs_boxes = np.array([o.detection.box.as_tuple() for _, o in obs], dtype=float)
    ious = iou_matrix(det_boxes, obs_boxes)
    ious[ious < config.iou_truncation] = 0.0
    total = config.weight_iou * ious
    use_emb = config.weight_emb > 0
    if use_emb:
        obs_emb = np.stack([o.embedding for _, o in obs])
        cosd = cosine_distance_matrix(det_emb, obs_emb)
        total = total + config.weight_emb * (1.0 - cosd)
    for k in range(n_trk):
        cols = owner == k
        sims[:, k] = total[:, cols].max(axis=1)
        if use_emb:
            gates[:, k] = cosd[:, cols].min(axis=1) <= config.cosine_gate
    return sims, gates


def greedy_match(similarities, gates=None) -> list[tuple[int, int]]:
    """Repeatedly commit the largest open pair whose row and column are still free.

    Ties are broken towards the lower (row, column) index. Output is in
    commit order.
    """
    sims = np.asarray(similarities, dtype=float)
    if sims.size == 0:
        return []
    open_ = np.ones(sims.shape, dtype=bool) if gates is None else np.asarray(gates, dtype=bool)
    if open_.shape != sims.shape:
        raise ValueError("similarities and gates must have the same shape")
    rows, cols = np.nonzero(open_)
    order = np.lexsort((cols, rows, -sims[rows, cols]))
    used_r = np.zeros(sims.shape[0], dtype=bool)
    used_c = np.zeros(sims.shape[1], dtype=bool)
    out = []
    for i in order:
        r, c = int(rows[i]), int(cols[i])
        if used_r[r] or used_c[c]:
            continue
        used_r[r] = used_c[c] = True
        out.append((r, c))
    return out


def select_detections(detections: Sequence[Detection], config: TrackerConfig) -> list[Detection]:
    """Top-k by score (stable on ties), then the score threshold."""
    order = sorted(range(len(detections)), key=lambda i: -detections[i].score)
    kept = [detections[i] for i in order[: config.top_k]]
    return [d for d in kept if d.score >= config.score_threshold]


def _age(store: TrackStore, tracks, frames: int, config: TrackerConfig) -> None:
    if frames <= 0:
        return
    for t in tracks:
        t.frames_since_update += frames
        if t.frames_since_update > config.keep_alive_frames:
            t.state = TrackState.DEAD


def observe_frame(
    store: TrackStore,
    detections: Sequence[Detection],
    config: TrackerConfig,
    frame_index: Optional[int] = None,
) -> list[tuple[int, Detection]]:
    """Advance ``store`` by one frame and return the frame's (track_id, detection) pairs.

    ``frame_index`` must be given when ``detections`` is empty; otherwise it is
    read from the detections. Pairs are listed matched tracks first (in
    matching order), then new tracks in creation order.
    """
    frames = {d.frame_index for d in detections}
    if len(frames) > 1:
        raise ValueError(f"detections span several frames: {sorted(frames)}")
    if frames:
        f = frames.pop()
        if frame_index is not None and frame_index != f:
            raise ValueError("frame_index disagrees with the detections")
        frame_index = f
    if frame_index is None:
        raise ValueError("frame_index is required for an empty frame")
    if frame_index <= store.current_frame:
        raise ValueError(
            f"frame {frame_index} does not follow current frame {store.current_frame}"
        )
    gap = frame_index - store.current_frame if store.current_frame >= 0 else 1
    store.current_frame = frame_index

    # frames skipped since the last call count as unseen
    _age(store, store.alive_tracks(), gap - 1, config)

    dets = select_detections(detections, config)
    tracks = store.alive_tracks()
    sims, gates = similarity_matrix(dets, tracks, config)
    if dets and tracks:
        det_cls = np.array([d.class_id for d in dets])
        trk_cls = np.array([t.class_id for t in tracks])
        gates &= det_cls[:, None] == trk_cls[None, :]
        gates &= sims > 0
    matches = greedy_match(sims, gates)

    out = []
    matched_dets = set()
    matched_trks = set()
    for di, ti in matches:
        trk = tracks[ti]
        trk.history.append(Observation(frame_index, dets[di]))
        trk.frames_since_update = 0
        matched_dets.add(di)
        matched_trks.add(ti)
        out.append((trk.track_id, dets[di]))
    _age(store, [t for k, t in enumerate(tracks) if k not in matched_trks], 1, config)

    # dets is already in descending-score order, so ids follow score order
    for di, det in enumerate(dets):
        if di in matched_dets:
            continue
        tid = store.next_track_id
        store.next_track_id += 1
        store.tracks[tid] = Track(
            track_id=tid,
            history=deque([Observation(frame_index, det)], maxlen=config.history_depth),
        )
        out.append((tid, det))
    return out


class OnlineTracker:
    """Convenience wrapper pairing a :class:`TrackStore` with its configuration."""

    def __init__(self, config: Optional[TrackerConfig] = None):
        self.config = config or TrackerConfig()
        self.store = TrackStore()

    def step(self, detections: Sequence[Detection], frame_index: Optional[int] = None):
        return observe_frame(self.store, detections, self.config, frame_index)

    def run(self, frames) -> dict[int, list[tuple[int, Detection]]]:
        """Track an iterable of ``(frame_index, detections)``; returns per-frame outputs."""
        return {f: self.step(dets, f) for f, dets in frames}
