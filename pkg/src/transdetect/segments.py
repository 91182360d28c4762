"""Temporal segments and the JSON label file format."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import FormatError, PreconditionError
from .video import as_fps

# Endpoint comparisons tolerate float noise from sums like ``0.25 - 0.1``.
EPS = 1e-9


@dataclass(frozen=True, order=True)
class Segment:
    """A transition span ``[start, end]`` in seconds; ``start == end`` is a cut."""

    start: float
    end: float
    type: str = "transition"

    def __post_init__(self):
        if not (self.start <= self.end):
            raise PreconditionError(f"segment start {self.start} > end {self.end}")
        if self.start < 0:
            raise PreconditionError(f"segment starts before 0: {self.start}")

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.start + self.end)

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end, "type": self.type}


TransitionSegment = Segment
TransitionLabel = Segment


def intersection(a: Segment, b: Segment) -> float:
    return max(0.0, min(a.end, b.end) - max(a.start, b.start))


def is_point(seg: Segment) -> bool:
    return seg.end - seg.start <= EPS


def overlaps(a: Segment, b: Segment) -> bool:
    """True when the spans share positive length, or a zero-length span touches the other.

    Zero-length cuts have no measurable intersection with anything, so they
    count as overlapping whatever closed interval contains them.
    """
    if intersection(a, b) > EPS:
        return True
    if is_point(a) or is_point(b):
        return max(a.start, b.start) <= min(a.end, b.end) + EPS
    return False


def temporal_iou(a: Segment, b: Segment) -> float:
    inter = intersection(a, b)
    union = max(a.end, b.end) - min(a.start, b.start)
    if union <= EPS:
        # two coincident points
        return 1.0
    return inter / union


def union_overlapping(segments: Iterable[Segment]) -> list[tuple[Segment, list[int]]]:
    """Merge overlapping segments; return ``(merged, member indices)``.

    Output is sorted by start. Two positive-length segments that merely touch
    stay separate; a zero-length segment joins any span it touches.
    """
    order = sorted(range(len(segments := list(segments))), key=lambda i: (segments[i].start, segments[i].end))
    groups: list[tuple[float, float, str, list[int]]] = []
    for i in order:
        s = segments[i]
        if groups and (
            s.start < groups[-1][1] - EPS
            or ((is_point(s) or groups[-1][1] - groups[-1][0] <= EPS) and s.start <= groups[-1][1] + EPS)
        ):
            start, end, typ, members = groups[-1]
            groups[-1] = (start, max(end, s.end), typ, members + [i])
        else:
            groups.append((s.start, s.end, s.type, [i]))
    return [(Segment(a, b, t), m) for a, b, t, m in groups]


def load_label_file(path) -> dict:
    """Read a label JSON file into ``{"video", "fps", "duration_s", "transitions"}``.

    ``transitions`` is returned as a list of :class:`Segment`; ``fps`` as a Fraction.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    return parse_label_document(raw, source=str(path))


def parse_label_document(raw, source: str = "<labels>") -> dict:
    if isinstance(raw, list):
        raw = {"transitions": raw}
    if not isinstance(raw, dict):
        raise FormatError(f"{source}: expected an object or array")
    items = raw.get("transitions", raw.get("segments"))
    if items is None:
        raise FormatError(f"{source}: missing 'transitions'")
    try:
        transitions = [
            Segment(float(t["start"]), float(t["end"]), str(t.get("type", "transition")))
            for t in items
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{source}: malformed transition entry: {exc}") from exc
    fps = raw.get("fps")
    return {
        "video": raw.get("video"),
        "fps": as_fps(fps) if fps is not None else None,
        "duration_s": float(raw["duration_s"]) if raw.get("duration_s") is not None else None,
        "transitions": sorted(transitions),
        "wall_time_s": float(raw.get("wall_time_s", 0.0)),
    }


def label_document(video: str, fps, duration_s, transitions: Sequence[Segment]) -> dict:
    fps = as_fps(fps)
    return {
        "video": video,
        "fps": [fps.numerator, fps.denominator],
        "duration_s": float(Fraction(duration_s)) if isinstance(duration_s, Fraction) else float(duration_s),
        "transitions": [t.to_json() for t in transitions],
    }


def write_label_file(path, video: str, fps, duration_s, transitions: Sequence[Segment]) -> None:
    doc = label_document(video, fps, duration_s, transitions)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
