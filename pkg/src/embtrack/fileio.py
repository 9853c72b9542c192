"""On-disk formats: detection records, MOT Challenge rows and run configs.

Detection files are JSON lines. The first line is a header declaring the
embedding length, every further line is one detection::

    {"format": "detections", "embedding_dim": 4}
    {"frame": 0, "class": 0, "score": 0.9, "box": [x0, y0, x1, y1], "embedding": [...]}

Frames in detection files are 0-based like the library. MOT Challenge files
are 1-based in both frame and id and store boxes as (left, top, width,
height); the conversion happens here and nowhere else.

Run configs are flat ``key = value`` text, one key per line, ``#`` starts a
comment and each value is a JSON literal (numbers, booleans, lists, quoted
strings).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .anchors import AnchorConfig
from .boxgeom import BoundingBox
from .sim import SimulationConfig
from .tracker import Detection, TrackerConfig


class FormatError(ValueError):
    """Malformed input file; carries the offending 1-based line number."""

    def __init__(self, message: str, path=None, line: Optional[int] = None):
        where = f"{path}:{line}: " if path is not None and line is not None else (
            f"line {line}: " if line is not None else "")
        super().__init__(where + message)
        self.line = line
        self.path = path


def _fmt(x: float) -> str:
    # repr is the shortest string that round-trips exactly
    x = float(x)
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


# --- detection records -------------------------------------------------------


def write_detections(path, frames: Iterable[Iterable[Detection]], embedding_dim: Optional[int] = None) -> None:
    dets = [d for frame in frames for d in frame]
    if embedding_dim is None:
        embedding_dim = len(dets[0].embedding) if dets else 0
    lines = [json.dumps({"format": "detections", "embedding_dim": int(embedding_dim)})]
    for d in dets:
        if len(d.embedding) != embedding_dim:
            raise ValueError("embedding length differs from the declared dimension")
        lines.append(
            json.dumps(
                {
                    "frame": int(d.frame_index),
                    "class": int(d.class_id),
                    "score": float(d.score),
                    "box": [float(v) for v in d.box.as_tuple()],
                    "embedding": [float(v) for v in d.embedding],
                }
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_detections(path) -> list[Detection]:
    """Parse a detection file; raises :class:`FormatError` naming the bad line."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not any(l.strip() for l in lines):
        return []
    dim = None
    out = []
    for n, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
            if not isinstance(rec, dict):
                raise ValueError("expected a JSON object")
            if dim is None:
                if rec.get("format") != "detections" or "embedding_dim" not in rec:
                    raise ValueError("first line must be the detections header")
                dim = int(rec["embedding_dim"])
                continue
            emb = rec["embedding"]
            if len(emb) != dim:
                raise ValueError(f"embedding has {len(emb)} values, header says {dim}")
            box = rec["box"]
            if len(box) != 4:
                raise ValueError("box must have 4 values")
            out.append(
                Detection(
                    box=BoundingBox(*(float(v) for v in box)),
                    class_id=int(rec.get("class", 0)),
                    score=float(rec["score"]),
                    embedding=np.asarray(emb, dtype=float),
                    frame_index=int(rec["frame"]),
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(str(exc), path, n) from None
    return out


# --- MOT Challenge -----------------------------------------------------------


@dataclass(frozen=True)
class MotRecord:
    frame: int
    id: int
    bb_left: float
    bb_top: float
    bb_width: float
    bb_height: float
    conf: float = 1.0
    x: float = -1.0
    y: float = -1.0
    z: float = -1.0

    @property
    def box(self) -> BoundingBox:
        return BoundingBox.from_xywh(self.bb_left, self.bb_top, self.bb_width, self.bb_height)

    @classmethod
    def from_box(cls, frame_index: int, track_id: int, box: BoundingBox, conf: float = 1.0) -> "MotRecord":
        """From library conventions (0-based frame and id) to MOT (1-based)."""
        left, top, w, h = box.to_xywh()
        return cls(frame_index + 1, track_id + 1, left, top, w, h, conf)

    def to_line(self) -> str:
        vals = [self.frame, self.id, self.bb_left, self.bb_top, self.bb_width,
                self.bb_height, self.conf, self.x, self.y, self.z]
        return ",".join(str(v) if isinstance(v, int) else _fmt(v) for v in vals)


def write_mot(path, records: Iterable[MotRecord]) -> None:
    lines = [r.to_line() for r in records]
    Path(path).write_text("".join(l + "\n" for l in lines))


def read_mot(path) -> list[MotRecord]:
    out = []
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        parts = [p.strip() for p in raw.split(",")]
        try:
            if len(parts) < 6:
                raise ValueError(f"expected at least 6 fields, got {len(parts)}")
            frame = int(float(parts[0]))
            tid = int(float(parts[1]))
            if frame < 1 or tid < 1:
                raise ValueError("frame and id must be positive")
            nums = [float(p) for p in parts[2:10]]
            while len(nums) < 8:
                nums.append(1.0 if len(nums) == 4 else -1.0)
            if nums[2] < 0 or nums[3] < 0:
                raise ValueError("negative box size")
            if not all(math.isfinite(v) for v in nums):
                raise ValueError("non-finite value")
            out.append(MotRecord(frame, tid, *nums))
        except ValueError as exc:
            raise FormatError(str(exc), path, n) from None
    return out


def mot_frames(records: Iterable[MotRecord]) -> dict:
    """``frame -> [(id, BoundingBox), ...]`` keyed by the file's 1-based frames."""
    frames: dict = {}
    for r in records:
        frames.setdefault(r.frame, []).append((r.id, r.box))
    return frames


# --- run configuration -------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    anchors: AnchorConfig = field(default_factory=AnchorConfig)
    sim: SimulationConfig = field(default_factory=SimulationConfig)
    detector_score_threshold: float = 0.001
    iou_gate: float = 0.5

    _SECTIONS = ("tracker", "anchors", "sim")
    _TOP = ("detector_score_threshold", "iou_gate")

    @classmethod
    def keys(cls) -> dict:
        """Flat key -> owning section (``None`` for top-level keys)."""
        out = {k: None for k in cls._TOP}
        out["shapes_per_location"] = "anchors"
        for section, typ in (("tracker", TrackerConfig), ("anchors", AnchorConfig), ("sim", SimulationConfig)):
            for f in fields(typ):
                if f.name in out:
                    raise RuntimeError(f"config key collision: {f.name}")
                out[f.name] = section
        return out

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        owners = cls.keys()
        unknown = sorted(set(values) - set(owners))
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
        parts: dict = {"tracker": {}, "anchors": {}, "sim": {}}
        top = {}
        for k, v in values.items():
            if owners[k] is None:
                top[k] = v
            elif k != "shapes_per_location":
                parts[owners[k]][k] = v
        try:
            anchors = AnchorConfig(**parts["anchors"])
            built = cls(
                tracker=TrackerConfig(**parts["tracker"]),
                anchors=anchors,
                sim=SimulationConfig(**parts["sim"]),
                **top,
            )
        except TypeError as exc:
            raise ValueError(str(exc)) from None
        k = values.get("shapes_per_location")
        if k is not None and int(k) != anchors.shapes_per_location:
            raise ValueError(
                f"shapes_per_location: {k} != len(scales) * len(aspect_ratios) = {anchors.shapes_per_location}"
            )
        if not 0.0 <= built.detector_score_threshold <= 1.0:
            raise ValueError("detector_score_threshold: must be in [0, 1]")
        if not 0.0 <= built.iou_gate <= 1.0:
            raise ValueError("iou_gate: must be in [0, 1]")
        return built

    def with_overrides(self, **flat) -> "RunConfig":
        flat = {k: v for k, v in flat.items() if v is not None}
        if not flat:
            return self
        return RunConfig.from_mapping({**self.to_mapping(), **flat})

    def to_mapping(self) -> dict:
        out = {k: getattr(self, k) for k in self._TOP}
        for section in self._SECTIONS:
            obj = getattr(self, section)
            for f in fields(obj):
                out[f.name] = getattr(obj, f.name)
        return out


def parse_config_text(text: str, path=None) -> dict:
    values = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError("expected 'key = value'", path, n)
        key, _, val = (s.strip() for s in line.partition("="))
        if not key:
            raise FormatError("empty key", path, n)
        if key in values:
            raise FormatError(f"duplicate key {key!r}", path, n)
        try:
            values[key] = json.loads(val)
        except json.JSONDecodeError:
            raise FormatError(f"value for {key!r} is not a JSON literal: {val}", path, n) from None
    return values


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    return RunConfig.from_mapping(parse_config_text(Path(path).read_text(), path))


def dump_config(config: RunConfig) -> str:
    def enc(v):
        if isinstance(v, tuple):
            return [enc(x) for x in v]
        return v

    return "".join(f"{k} = {json.dumps(enc(v))}\n" for k, v in config.to_mapping().items())
