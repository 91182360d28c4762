"""Sliding-window inference over arbitrarily long clips.

The clip is cut into overlapping windows, a detector runs on each one, the
window-local segments are shifted onto the global timeline and duplicates
from the overlaps are resolved by temporal NMS.
"""
from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

from .detectors import DetectionResult, Detector
from .errors import PipelineError, PreconditionError, TransDetectError
from .segments import EPS, Segment, is_point, overlaps, temporal_iou
from .video import VideoClip

log = logging.getLogger(__name__)

DEFAULT_WINDOW = 10.0
DEFAULT_STRIDE = 9.0
DEFAULT_IOU = 0.5


@dataclass(frozen=True)
class Window:
    index: int
    global_start_s: float
    global_end_s: float
    is_last: bool

    @property
    def length(self) -> float:
        return self.global_end_s - self.global_start_s


@dataclass(frozen=True)
class Candidate:
    """A globally placed segment that remembers the window it came from.

    ``cut_start`` / ``cut_end`` mark boundaries that coincide with an
    interior window seam, i.e. the detector may have seen only part of the
    transition.
    """

    segment: Segment
    window_start: float
    window_end: float
    cut_start: bool = False
    cut_end: bool = False

    @property
    def start(self) -> float:
        return self.segment.start

    @property
    def end(self) -> float:
        return self.segment.end

    @property
    def interiority(self) -> float:
        mid = self.segment.midpoint
        return min(mid - self.window_start, self.window_end - mid)


def make_windows(duration_s: float, w: float = DEFAULT_WINDOW, s: float = DEFAULT_STRIDE) -> list[Window]:
    """Windows ``[k*s, min(k*s + w, duration)]`` until one reaches the end."""
    if w <= 0:
        raise PreconditionError(f"window must be positive, got {w}")
    if not 0 < s <= w:
        raise PreconditionError(f"stride must satisfy 0 < stride <= window, got stride={s}, window={w}")
    if duration_s <= 0:
        raise PreconditionError(f"duration must be positive, got {duration_s}")
    duration = Fraction(duration_s)
    fw, fs = Fraction(w), Fraction(s)
    windows = []
    k = 0
    while True:
        start = k * fs
        end = min(start + fw, duration)
        last = end >= duration
        windows.append(Window(k, float(start), float(end), last))
        if last:
            return windows
        k += 1


def project_to_global(window: Window, local: Sequence[Segment], duration_s: float | None = None) -> list[Candidate]:
    """Clamp local segments to the window and shift them by its start."""
    out = []
    length = window.length
    for seg in local:
        if seg.start < -EPS or seg.end > length + EPS:
            log.warning("window %d: segment (%.3f, %.3f) exceeds window length %.3f, clamped",
                        window.index, seg.start, seg.end, length)
        start = min(max(seg.start, 0.0), length)
        end = min(max(seg.end, 0.0), length)
        g = Segment(window.global_start_s + start, window.global_start_s + end, seg.type)
        interior_end = not window.is_last
        out.append(Candidate(
            g,
            window.global_start_s,
            window.global_end_s,
            cut_start=window.index > 0 and start <= EPS,
            cut_end=interior_end and end >= length - EPS,
        ))
    return out


def _rank_key(c: Candidate):
    s = c.segment
    return (-c.interiority, s.start, s.end, c.window_start, c.window_end, s.type, c.cut_start, c.cut_end)


def _seam_fragments(a: Candidate, b: Candidate) -> bool:
    """True when one candidate was truncated at a seam lying inside the other."""
    if (a.window_start, a.window_end) == (b.window_start, b.window_end):
        return False
    for x, y in ((a, b), (b, a)):
        if x.cut_end and y.start - EPS <= x.end <= y.end + EPS and y.end > x.end + EPS:
            return True
        if x.cut_start and y.start - EPS <= x.start <= y.end + EPS and y.start < x.start - EPS:
            return True
    return False


def temporal_nms(candidates: Sequence[Candidate], iou_threshold: float = DEFAULT_IOU) -> list[Candidate]:
    """Suppress duplicates from overlapping windows, then merge fragments.

    Candidates are visited from most to least interior (distance of the
    midpoint to the nearest edge of the source window; ties go to the earlier
    start). One is kept when its IoU with every kept candidate is below
    ``iou_threshold``, or when it and the overlapping kept one are pieces of a
    transition truncated at a window seam. Kept candidates that still overlap
    are then merged into their union. The result is sorted and pairwise
    non-overlapping.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise PreconditionError(f"iou threshold must be in [0, 1], got {iou_threshold}")
    kept: list[Candidate] = []
    for c in sorted(candidates, key=_rank_key):
        suppressed = False
        for k in kept:
            if temporal_iou(c.segment, k.segment) >= iou_threshold and overlaps(c.segment, k.segment):
                if not _seam_fragments(c, k):
                    suppressed = True
                    break
        if not suppressed:
            kept.append(c)
    rank = {id(c): i for i, c in enumerate(kept)}
    groups: list[list[Candidate]] = []
    for c in sorted(kept, key=lambda c: (c.start, c.end, rank[id(c)])):
        if groups and _group_overlaps(groups[-1], c):
            groups[-1].append(c)
        else:
            groups.append([c])
    merged = [_merge(g, rank) for g in groups]
    return sorted(merged, key=lambda c: (c.start, c.end))


def _group_overlaps(group: list[Candidate], c: Candidate) -> bool:
    span = Segment(min(g.start for g in group), max(g.end for g in group))
    return overlaps(span, c.segment)


def _merge(group: list[Candidate], rank: dict) -> Candidate:
    if len(group) == 1:
        return group[0]
    best = min(group, key=lambda c: rank[id(c)])
    first = min(group, key=lambda c: (c.start, rank[id(c)]))
    last = max(group, key=lambda c: (c.end, -rank[id(c)]))
    seg = Segment(first.start, last.end, best.segment.type)
    return replace(best, segment=seg, cut_start=first.cut_start, cut_end=last.cut_end)


@dataclass
class PipelineResult(DetectionResult):
    windows: list[Window] = None
    io_time_s: float = 0.0
    trace: list[dict] = None


def _window_frames(clip: VideoClip, window: Window) -> tuple[int, int]:
    """Frame index range whose timestamps fall inside the closed window."""
    fps = clip.fps
    lo = math.ceil(Fraction(window.global_start_s) * fps - Fraction(1, 10**6))
    hi = math.floor(Fraction(window.global_end_s) * fps + Fraction(1, 10**6))
    return max(lo, 0), min(hi + 1, len(clip))


def run_pipeline(
    clip: VideoClip,
    detector: Detector,
    w: float = DEFAULT_WINDOW,
    s: float = DEFAULT_STRIDE,
    iou: float = DEFAULT_IOU,
    jobs: int = 1,
) -> PipelineResult:
    """Windows -> per-window detection -> projection -> temporal NMS.

    ``wall_time_s`` sums the detector time of every window; the time spent
    slicing windows out of the clip is reported separately as ``io_time_s``.
    """
    if len(clip) == 0:
        raise PreconditionError("empty clip")
    duration = float(clip.duration)
    windows = make_windows(duration, w, s)

    def work(win: Window):
        t0 = time.perf_counter()
        lo, hi = _window_frames(clip, win)
        sub = clip.subclip(lo, hi)
        io = time.perf_counter() - t0
        try:
            res = detector.detect(sub, win)
        except TransDetectError as exc:
            raise PipelineError(win.index, exc) from exc
        except Exception as exc:  # detector bugs surface with their window
            raise PipelineError(win.index, exc) from exc
        return win, res, io + res.extra.get("io_time_s", 0.0)

    if jobs > 1 and len(windows) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, windows))
    else:
        results = [work(win) for win in windows]

    candidates: list[Candidate] = []
    trace = []
    wall = io_total = 0.0
    for win, res, io in results:
        wall += res.wall_time_s
        io_total += io
        projected = project_to_global(win, res.segments)
        candidates.extend(projected)
        trace.append({
            "window": win.index,
            "start": win.global_start_s,
            "end": win.global_end_s,
            "detections": len(res.segments),
            "wall_time_s": res.wall_time_s,
            "segments": [[c.start, c.end] for c in projected],
        })
        log.debug(json.dumps(trace[-1]))
    final = temporal_nms(candidates, iou)
    segments = [
        Segment(min(max(c.start, 0.0), duration), min(max(c.end, 0.0), duration), c.segment.type)
        for c in final
    ]
    return PipelineResult(segments, wall, windows=windows, io_time_s=io_total, trace=trace)
