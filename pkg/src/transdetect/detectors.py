"""Baseline transition detectors.

Heuristic detectors score each frame against its predecessor and turn runs
of above-threshold frames into segments. The oracle detector replays (and
optionally perturbs) ground truth, and the external detector wraps any
program that prints a JSON array of segments for a clip path.
"""
from __future__ import annotations

import json
import logging
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DetectorError,
    DetectorParseError,
    DetectorTimeoutError,
    PreconditionError,
)
from .segments import EPS, Segment, is_point
from .video import VideoClip, as_fps, frame_time, save_rawvid, to_grayscale

log = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = {
    "content": 0.12,
    "hist": 0.35,
    "adaptive": 0.08,
    "threshold": 0.5,
}
DEFAULT_BINS = 16


@dataclass(frozen=True)
class FramePointScores:
    """Per-frame boundary scores in ``[0, 1]`` plus the decision threshold."""

    scores: np.ndarray
    threshold: float

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 1:
            raise PreconditionError("scores must be one-dimensional")
        if not np.all(np.isfinite(s)) or s.min(initial=0.0) < 0 or s.max(initial=0.0) > 1:
            raise PreconditionError("scores must be finite and within [0, 1]")
        if not 0.0 <= self.threshold <= 1.0:
            raise PreconditionError(f"threshold must be in [0, 1], got {self.threshold}")
        object.__setattr__(self, "scores", s)

    def __len__(self):
        return len(self.scores)


@dataclass
class DetectionResult:
    segments: list[Segment]
    wall_time_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "segments": [s.to_json() for s in self.segments],
            "wall_time_s": self.wall_time_s,
        }


def _need_frames(clip: VideoClip):
    if len(clip) < 2:
        raise PreconditionError(f"need at least 2 frames, got {len(clip)}")


def content_scores(clip: VideoClip) -> np.ndarray:
    arr = clip.array.astype(np.int16)
    scores = np.zeros(len(clip))
    scores[1:] = np.abs(np.diff(arr, axis=0)).mean(axis=(1, 2, 3)) / 255.0
    return scores


def content_detector(clip: VideoClip, threshold: float = DEFAULT_THRESHOLDS["content"]) -> FramePointScores:
    """Mean absolute RGB difference to the previous frame, scaled to [0, 1]."""
    _need_frames(clip)
    return FramePointScores(content_scores(clip), threshold)


def _histograms(clip: VideoClip, bins: int) -> np.ndarray:
    gray = to_grayscale(clip.array).reshape(len(clip), -1)
    idx = (gray.astype(np.int64) * bins) // 256
    hist = np.zeros((len(clip), bins))
    for i in range(len(clip)):
        hist[i] = np.bincount(idx[i], minlength=bins)
    return hist / gray.shape[1]


def hist_detector(clip: VideoClip, bins: int = DEFAULT_BINS,
                  threshold: float = DEFAULT_THRESHOLDS["hist"]) -> FramePointScores:
    """Total-variation distance between consecutive luma histograms."""
    _need_frames(clip)
    if not 2 <= bins <= 256:
        raise PreconditionError(f"bins must be in [2, 256], got {bins}")
    hist = _histograms(clip, bins)
    scores = np.zeros(len(clip))
    scores[1:] = 0.5 * np.abs(np.diff(hist, axis=0)).sum(axis=1)
    return FramePointScores(np.clip(scores, 0.0, 1.0), threshold)


def adaptive_detector(clip: VideoClip, threshold: float = DEFAULT_THRESHOLDS["adaptive"],
                      window: int = 2) -> FramePointScores:
    """Content score minus the mean content score of the ``window`` frames on each side."""
    _need_frames(clip)
    c = content_scores(clip)
    n = len(c)
    scores = np.zeros(n)
    for i in range(1, n):
        lo, hi = max(1, i - window), min(n, i + window + 1)
        neighbours = np.concatenate([c[lo:i], c[i + 1 : hi]])
        ref = neighbours.mean() if len(neighbours) else 0.0
        scores[i] = c[i] - ref
    return FramePointScores(np.clip(scores, 0.0, 1.0), threshold)


def fade_detector(clip: VideoClip, threshold: float = DEFAULT_THRESHOLDS["threshold"],
                  level: float = 16.0) -> FramePointScores:
    """Flags frames whose mean luma falls below ``level`` (fades through black)."""
    _need_frames(clip)
    lum = to_grayscale(clip.array).reshape(len(clip), -1).mean(axis=1)
    scores = np.clip(1.0 - lum / level, 0.0, 1.0)
    return FramePointScores(scores, threshold)


def points_to_segments(points: FramePointScores, fps, min_gap_s: float = 0.0) -> list[Segment]:
    """Turn runs of boundary frames into segments.

    A maximal run of frames ``i..j`` scoring at or above the threshold becomes
    ``[time(i - 1), time(j)]``; a run starting at frame 0 starts at 0. With
    ``min_gap_s > 0``, segments separated by less than that gap are merged.
    """
    fps = as_fps(fps)
    hits = np.asarray(points.scores) >= points.threshold
    segments: list[Segment] = []
    i, n = 0, len(hits)
    while i < n:
        if not hits[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and hits[j + 1]:
            j += 1
        start = float(frame_time(max(i - 1, 0), fps))
        segments.append(Segment(start, float(frame_time(j, fps))))
        i = j + 1
    if min_gap_s > 0 and segments:
        merged = [segments[0]]
        for s in segments[1:]:
            if s.start - merged[-1].end < min_gap_s:
                merged[-1] = Segment(merged[-1].start, s.end, merged[-1].type)
            else:
                merged.append(s)
        segments = merged
    return segments


def oracle_detector(labels: Sequence[Segment], jitter_s: float = 0.0, drop_prob: float = 0.0,
                    seed: int = 0, duration: float | None = None) -> DetectionResult:
    """Ground truth with each boundary moved by ``U(-jitter, jitter)`` and random drops.

    Boundaries are clamped so that ``0 <= start <= end <= duration``.
    """
    if jitter_s < 0:
        raise PreconditionError(f"jitter must be >= 0, got {jitter_s}")
    if not 0.0 <= drop_prob <= 1.0:
        raise PreconditionError(f"drop_prob must be in [0, 1], got {drop_prob}")
    rng = np.random.default_rng(seed)
    hi = float("inf") if duration is None else float(duration)
    out = []
    for lab in sorted(labels):
        drop = rng.random() < drop_prob
        ds, de = rng.uniform(-jitter_s, jitter_s, size=2) if jitter_s > 0 else (0.0, 0.0)
        if drop:
            continue
        start = min(max(lab.start + ds, 0.0), hi)
        end = min(max(lab.end + de, 0.0), hi)
        if end < start:
            start = end = 0.5 * (start + end)
        out.append(Segment(start, end, lab.type))
    return DetectionResult(sorted(out), 0.0)


def run_external_detector(command, window_clip, timeout_s: float = 60.0) -> DetectionResult:
    """Run ``command <clip path>`` and parse its stdout JSON array of segments."""
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    path = Path(window_clip)
    if not path.exists():
        raise PreconditionError(f"clip not found: {path}")
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(argv + [str(path)], capture_output=True, timeout=timeout_s)
    except subprocess.TimeoutExpired as exc:
        raise DetectorTimeoutError(f"{argv[0]} exceeded {timeout_s}s on {path}") from exc
    except OSError as exc:
        raise DetectorError(f"cannot run {argv[0]}: {exc}") from exc
    wall = time.perf_counter() - t0
    stderr = proc.stderr.decode("utf-8", "replace")
    if proc.returncode != 0:
        raise DetectorError(
            f"{argv[0]} exited with status {proc.returncode}: {stderr.strip()[:500]}",
            stderr=stderr, returncode=proc.returncode,
        )
    try:
        raw = json.loads(proc.stdout.decode("utf-8"))
        if not isinstance(raw, list):
            raise ValueError("top-level value is not an array")
        segments = []
        for item in raw:
            start, end = float(item["start"]), float(item["end"])
            segments.append(Segment(max(0.0, min(start, end)), max(start, end), str(item.get("type", "transition"))))
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise DetectorParseError(f"{argv[0]}: malformed output: {exc}", stderr=stderr) from exc
    return DetectionResult(sorted(segments), wall)


# -- detector objects used by the sliding-window pipeline

class Detector:
    """Runs on one window clip and returns window-local segments."""

    name = "base"

    def detect(self, clip: VideoClip, window=None) -> DetectionResult:
        raise NotImplementedError


class HeuristicDetector(Detector):
    def __init__(self, name: str = "content", threshold: float | None = None,
                 bins: int = DEFAULT_BINS, min_gap_s: float = 0.0):
        if name not in DEFAULT_THRESHOLDS:
            raise PreconditionError(f"unknown heuristic detector {name!r}")
        self.name = name
        self.threshold = DEFAULT_THRESHOLDS[name] if threshold is None else threshold
        self.bins = bins
        self.min_gap_s = min_gap_s

    def scores(self, clip: VideoClip) -> FramePointScores:
        if self.name == "content":
            return content_detector(clip, self.threshold)
        if self.name == "hist":
            return hist_detector(clip, self.bins, self.threshold)
        if self.name == "adaptive":
            return adaptive_detector(clip, self.threshold)
        return fade_detector(clip, self.threshold)

    def detect(self, clip, window=None):
        t0 = time.perf_counter()
        if len(clip) < 2:
            return DetectionResult([], time.perf_counter() - t0)
        segs = points_to_segments(self.scores(clip), clip.fps, self.min_gap_s)
        return DetectionResult(segs, time.perf_counter() - t0)


class OracleDetector(Detector):
    """Replays perturbed ground truth; the perturbation is drawn once per video,
    so a transition seen by two overlapping windows is reported identically."""

    name = "oracle"

    def __init__(self, labels: Sequence[Segment], jitter_s: float = 0.0, drop_prob: float = 0.0,
                 seed: int = 0, duration: float | None = None):
        self.result = oracle_detector(labels, jitter_s, drop_prob, seed, duration)

    def detect(self, clip, window=None):
        t0 = time.perf_counter()
        if window is None:
            return DetectionResult(list(self.result.segments), time.perf_counter() - t0)
        lo, hi = window.global_start_s, window.global_end_s
        local = []
        for s in self.result.segments:
            if is_point(s):
                if lo - EPS <= s.start <= hi + EPS:
                    t = min(max(s.start, lo), hi) - lo
                    local.append(Segment(t, t, s.type))
            elif min(s.end, hi) - max(s.start, lo) > EPS:
                local.append(Segment(max(s.start, lo) - lo, min(s.end, hi) - lo, s.type))
        return DetectionResult(local, time.perf_counter() - t0)


class ExternalDetector(Detector):
    """Writes each window to a temporary ``.stdv`` file and runs a command on it."""

    name = "external"

    def __init__(self, command, timeout_s: float = 60.0):
        self.command = command
        self.timeout_s = timeout_s

    def detect(self, clip, window=None):
        with tempfile.TemporaryDirectory(prefix="transdetect-") as tmp:
            path = Path(tmp) / "window.stdv"
            t0 = time.perf_counter()
            save_rawvid(clip, path)
            io_time = time.perf_counter() - t0
            result = run_external_detector(self.command, path, self.timeout_s)
        result.extra["io_time_s"] = io_time
        return result


def make_detector(name: str, **options) -> Detector:
    """Build a detector from its CLI name and keyword options."""
    if name in DEFAULT_THRESHOLDS:
        return HeuristicDetector(
            name,
            threshold=options.get("threshold"),
            bins=options.get("bins", DEFAULT_BINS),
            min_gap_s=options.get("min_gap_s", 0.0),
        )
    if name == "oracle":
        return OracleDetector(
            options["labels"],
            options.get("jitter_s", 0.0),
            options.get("drop_prob", 0.0),
            options.get("seed", 0),
            options.get("duration"),
        )
    if name == "external":
        if not options.get("command"):
            raise PreconditionError("external detector needs a command")
        return ExternalDetector(options["command"], options.get("timeout_s", 60.0))
    raise PreconditionError(f"unknown detector {name!r}")
