"""Segment- and frame-level evaluation with temporal tolerance.

For every tolerance ``tau`` both predictions and ground truth are widened by
``tau`` on each side, segments that now overlap within the same list are
unioned, and predictions are paired one-to-one with ground truth by greedy
matching on intersection length. Counts are kept per ``tau`` so reports from
many videos can be pooled before ratios are taken.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import PreconditionError
from .segments import EPS, Segment, intersection, is_point, union_overlapping
from .video import as_fps

DEFAULT_TAU_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
CATEGORIES = ("Cut", "Normal", "Long")


def categorize(label: Segment) -> str:
    """Cut below 0.1 s, Normal up to and including 1 s, Long beyond."""
    d = label.end - label.start
    if d < 0.1 - EPS:
        return "Cut"
    if d <= 1.0 + EPS:
        return "Normal"
    return "Long"


def expand(seg: Segment, tau: float, duration: float) -> Segment:
    if tau < 0:
        raise PreconditionError(f"tau must be >= 0, got {tau}")
    if tau == 0:
        return seg
    return Segment(max(0.0, seg.start - tau), min(duration, seg.end + tau), seg.type)


@dataclass
class MatchSet:
    """Greedy one-to-one pairing; ``pairs`` holds ``(pred, gt, intersection)``."""

    pairs: list[tuple[int, int, float]]
    unmatched_preds: list[int]
    unmatched_gts: list[int]


def _pair_overlap(p: Segment, g: Segment) -> float | None:
    """Intersection length if the pair may match, else None.

    Positive-length intersections qualify; so does a zero-length segment that
    lies within (or touches) the other one, with intersection 0.
    """
    inter = intersection(p, g)
    if inter > EPS:
        return inter
    if (is_point(p) or is_point(g)) and max(p.start, g.start) <= min(p.end, g.end) + EPS:
        return 0.0
    return None


def candidate_pairs(preds: Sequence[Segment], gts: Sequence[Segment]) -> list[tuple[int, int, float]]:
    """All matchable pairs, found with a sweep over predictions sorted by start."""
    order = sorted(range(len(preds)), key=lambda i: preds[i].start)
    starts = [preds[i].start for i in order]
    max_len = max((p.end - p.start for p in preds), default=0.0)
    pairs = []
    for gi, g in enumerate(gts):
        lo = bisect.bisect_left(starts, g.start - max_len - 2 * EPS)
        hi = bisect.bisect_right(starts, g.end + 2 * EPS)
        for k in range(lo, hi):
            pi = order[k]
            inter = _pair_overlap(preds[pi], g)
            if inter is not None:
                pairs.append((pi, gi, inter))
    return pairs


def greedy_match(preds: Sequence[Segment], gts: Sequence[Segment]) -> MatchSet:
    """Pair predictions with ground truth, largest intersection first.

    Ties go to the earlier ground-truth start, then the earlier prediction
    start. Intersections equal up to 1e-9 s are treated as ties.
    """
    pairs = candidate_pairs(preds, gts)
    pairs.sort(key=lambda t: (-round(t[2], 9), gts[t[1]].start, preds[t[0]].start, t[1], t[0]))
    used_p, used_g = set(), set()
    accepted = []
    for pi, gi, inter in pairs:
        if pi in used_p or gi in used_g:
            continue
        used_p.add(pi)
        used_g.add(gi)
        accepted.append((pi, gi, inter))
    return MatchSet(
        accepted,
        [i for i in range(len(preds)) if i not in used_p],
        [i for i in range(len(gts)) if i not in used_g],
    )


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def segment_prf(match: MatchSet) -> tuple[float, float, float]:
    return prf(len(match.pairs), len(match.unmatched_preds), len(match.unmatched_gts))


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def frame_indices(seg: Segment, fps) -> range:
    """Frames ``round(start * fps) .. round(end * fps)`` inclusive."""
    fps = as_fps(fps)
    f = fps.numerator / fps.denominator
    return range(_round_half_up(seg.start * f), _round_half_up(seg.end * f) + 1)


def frame_counts(match: MatchSet, preds: Sequence[Segment], gts: Sequence[Segment], fps,
                 pair_filter=None) -> tuple[int, int, int]:
    """Frame TP/FP/FN. With ``pair_filter``, only the selected pairs and the
    predictions and ground truths they involve are counted."""
    pairs = match.pairs if pair_filter is None else [t for t in match.pairs if pair_filter(t)]
    tp_frames: set[int] = set()
    for pi, gi, _ in pairs:
        tp_frames.update(set(frame_indices(preds[pi], fps)) & set(frame_indices(gts[gi], fps)))
    if pair_filter is None:
        pred_ids, gt_ids = range(len(preds)), range(len(gts))
    else:
        pred_ids = {pi for pi, _, _ in pairs}
        gt_ids = {gi for _, gi, _ in pairs}
    pred_frames: set[int] = set()
    for i in pred_ids:
        pred_frames.update(frame_indices(preds[i], fps))
    gt_frames: set[int] = set()
    for i in gt_ids:
        gt_frames.update(frame_indices(gts[i], fps))
    tp = len(tp_frames)
    return tp, len(pred_frames) - tp, len(gt_frames) - tp


def frame_prf(match: MatchSet, preds: Sequence[Segment], gts: Sequence[Segment], fps) -> tuple[float, float, float]:
    return prf(*frame_counts(match, preds, gts, fps))


def abe_sum(match: MatchSet, original_preds: Sequence[Segment], original_gts: Sequence[Segment]) -> float:
    return sum(
        abs(original_gts[gi].start - original_preds[pi].start) + abs(original_gts[gi].end - original_preds[pi].end)
        for pi, gi, _ in match.pairs
    )


def abe(match: MatchSet, original_preds: Sequence[Segment], original_gts: Sequence[Segment]) -> float | None:
    """Mean absolute boundary offset over matched pairs; None when nothing matched."""
    if not match.pairs:
        return None
    return abe_sum(match, original_preds, original_gts) / (2 * len(match.pairs))


def rtf(inference_s: float, video_s: float) -> float:
    if video_s <= 0:
        raise PreconditionError(f"video duration must be positive, got {video_s}")
    return inference_s / video_s


@dataclass
class TauCounts:
    """Raw counts at one tolerance; additive across videos."""

    tau: float
    seg_tp: int = 0
    seg_fp: int = 0
    seg_fn: int = 0
    frame_tp: int = 0
    frame_fp: int = 0
    frame_fn: int = 0
    abe_sum: float = 0.0
    pairs: int = 0
    cat_total: dict = field(default_factory=lambda: dict.fromkeys(CATEGORIES, 0))
    cat_hit: dict = field(default_factory=lambda: dict.fromkeys(CATEGORIES, 0))
    cat_frames: dict = field(default_factory=lambda: {c: [0, 0, 0] for c in CATEGORIES})

    def __add__(self, other: "TauCounts") -> "TauCounts":
        if abs(self.tau - other.tau) > EPS:
            raise PreconditionError(f"cannot add counts at tau {self.tau} and {other.tau}")
        return TauCounts(
            self.tau,
            self.seg_tp + other.seg_tp,
            self.seg_fp + other.seg_fp,
            self.seg_fn + other.seg_fn,
            self.frame_tp + other.frame_tp,
            self.frame_fp + other.frame_fp,
            self.frame_fn + other.frame_fn,
            self.abe_sum + other.abe_sum,
            self.pairs + other.pairs,
            {c: self.cat_total[c] + other.cat_total[c] for c in CATEGORIES},
            {c: self.cat_hit[c] + other.cat_hit[c] for c in CATEGORIES},
            {c: [a + b for a, b in zip(self.cat_frames[c], other.cat_frames[c])] for c in CATEGORIES},
        )

    @property
    def segment(self) -> tuple[float, float, float]:
        return prf(self.seg_tp, self.seg_fp, self.seg_fn)

    @property
    def frame(self) -> tuple[float, float, float]:
        return prf(self.frame_tp, self.frame_fp, self.frame_fn)

    @property
    def abe(self) -> float | None:
        return self.abe_sum / (2 * self.pairs) if self.pairs else None

    def category_recall(self, category: str) -> float | None:
        total = self.cat_total[category]
        return self.cat_hit[category] / total if total else None

    def category_frame(self, category: str) -> tuple[float, float, float]:
        return prf(*self.cat_frames[category])

    def as_row(self) -> dict:
        sp, sr, sf = self.segment
        fp_, fr, ff = self.frame
        row = {
            "tau": self.tau,
            "seg_p": sp, "seg_r": sr, "seg_f1": sf,
            "frame_p": fp_, "frame_r": fr, "frame_f1": ff,
            "abe": self.abe,
        }
        for c in CATEGORIES:
            row[f"recall_{c.lower()}"] = self.category_recall(c)
        return row


def _mean(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


@dataclass
class MetricsReport:
    rows: list[TauCounts]
    inference_s: float = 0.0
    video_s: float = 0.0
    name: str = ""

    @property
    def taus(self) -> list[float]:
        return [r.tau for r in self.rows]

    @property
    def rtf(self) -> float | None:
        return rtf(self.inference_s, self.video_s) if self.video_s > 0 else None

    def row(self, tau: float) -> TauCounts:
        for r in self.rows:
            if abs(r.tau - tau) <= EPS:
                return r
        raise KeyError(tau)

    def per_tau(self) -> list[dict]:
        return [r.as_row() for r in self.rows]

    def mean(self) -> dict:
        """Arithmetic means over the tau grid; ABE and recalls skip absent values."""
        rows = self.per_tau()
        out = {"tau": "mean"}
        for key in rows[0]:
            if key == "tau":
                continue
            out[key] = _mean(r[key] for r in rows)
        out["rtf"] = self.rtf
        return out

    def category_table(self) -> list[dict]:
        table = []
        for c in CATEGORIES:
            table.append({
                "category": c,
                "count": self.rows[0].cat_total[c] if self.rows else 0,
                "recall": _mean(r.category_recall(c) for r in self.rows),
                "frame_f1": _mean(r.category_frame(c)[2] for r in self.rows),
                "recall_by_tau": {r.tau: r.category_recall(c) for r in self.rows},
            })
        return table

    def __add__(self, other: "MetricsReport") -> "MetricsReport":
        if len(self.rows) != len(other.rows):
            raise PreconditionError("reports use different tau grids")
        return MetricsReport(
            [a + b for a, b in zip(self.rows, other.rows)],
            self.inference_s + other.inference_s,
            self.video_s + other.video_s,
            self.name,
        )


def aggregate(reports: Sequence[MetricsReport], name: str = "micro") -> MetricsReport:
    """Micro-average: pool counts over videos, then compute ratios."""
    if not reports:
        raise PreconditionError("nothing to aggregate")
    total = reports[0]
    for r in reports[1:]:
        total = total + r
    return MetricsReport(total.rows, total.inference_s, total.video_s, name)


def _prepare(segments: Sequence[Segment], tau: float, duration: float):
    """Expand, union overlaps, and keep the unexpanded span of each union."""
    expanded = [expand(s, tau, duration) for s in segments]
    groups = union_overlapping(expanded)
    merged = [g for g, _ in groups]
    originals = [
        Segment(min(segments[i].start for i in m), max(segments[i].end for i in m))
        for _, m in groups
    ]
    members = [m for _, m in groups]
    return merged, originals, members


def evaluate_tau(preds: Sequence[Segment], labels: Sequence[Segment], fps, duration: float,
                 tau: float) -> TauCounts:
    p_exp, p_orig, _ = _prepare(preds, tau, duration)
    g_exp, g_orig, g_members = _prepare(labels, tau, duration)
    match = greedy_match(p_exp, g_exp)
    counts = TauCounts(tau)
    counts.seg_tp = len(match.pairs)
    counts.seg_fp = len(match.unmatched_preds)
    counts.seg_fn = len(match.unmatched_gts)
    counts.frame_tp, counts.frame_fp, counts.frame_fn = frame_counts(match, p_exp, g_exp, fps)
    counts.abe_sum = abe_sum(match, p_orig, g_orig)
    counts.pairs = len(match.pairs)

    matched_g = {gi for _, gi, _ in match.pairs}
    for gi, members in enumerate(g_members):
        for m in members:
            c = categorize(labels[m])
            counts.cat_total[c] += 1
            if gi in matched_g:
                counts.cat_hit[c] += 1
    group_cat = [categorize(s) for s in g_orig]
    for c in CATEGORIES:
        tp, fp, fn_matched = frame_counts(match, p_exp, g_exp, fps, pair_filter=lambda t, c=c: group_cat[t[1]] == c)
        missed = set()
        for gi in match.unmatched_gts:
            if group_cat[gi] == c:
                missed.update(frame_indices(g_exp[gi], fps))
        counts.cat_frames[c] = [tp, fp, fn_matched + len(missed)]
    return counts


def evaluate(preds, labels: Sequence[Segment], fps, duration: float,
             tau_grid: Sequence[float] = DEFAULT_TAU_GRID, name: str = "") -> MetricsReport:
    """Evaluate one video's predictions against its labels at every tolerance.

    ``preds`` is a list of segments or anything with ``segments`` and
    ``wall_time_s`` attributes (a detection result), which also feeds RTF.
    """
    segments = list(getattr(preds, "segments", preds))
    wall = float(getattr(preds, "wall_time_s", 0.0))
    duration = float(duration)
    if duration <= 0:
        raise PreconditionError(f"duration must be positive, got {duration}")
    rows = [evaluate_tau(segments, list(labels), fps, duration, float(t)) for t in tau_grid]
    return MetricsReport(rows, wall, duration, name)


def parse_tau_grid(text: str) -> list[float]:
    """``"0:0.5:0.1"`` (start:stop:step, inclusive) or ``"0,0.1,0.3"``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise PreconditionError(f"tau range must be start:stop:step, got {text!r}")
        start, stop, step = (Fraction(p) for p in parts)
        if step <= 0 or stop < start:
            raise PreconditionError(f"bad tau range {text!r}")
        n = math.floor((stop - start) / step + Fraction(1, 10**6))
        return [float(start + k * step) for k in range(n + 1)]
    values = [float(x) for x in text.split(",") if x.strip()]
    if not values or min(values) < 0:
        raise PreconditionError(f"bad tau list {text!r}")
    return values
