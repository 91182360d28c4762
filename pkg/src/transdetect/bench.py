"""Benchmark corpora: manifests, quality-tier sampling and benchmark runs."""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .detectors import Detector, make_detector
from .errors import FormatError, PreconditionError, TransDetectError
from .metrics import CATEGORIES, DEFAULT_TAU_GRID, MetricsReport, aggregate, categorize, evaluate, prf
from .segments import Segment, load_label_file
from .video import as_fps, load_rawvid
from .windowing import DEFAULT_IOU, DEFAULT_STRIDE, DEFAULT_WINDOW, run_pipeline

log = logging.getLogger(__name__)

TIERS = ("VeryHigh", "High", "Medium")
DEFAULT_TIER_PROBS = {"VeryHigh": 0.7, "High": 0.2, "Medium": 0.1}

__all__ = [
    "TIERS", "DEFAULT_TIER_PROBS", "ManifestEntry", "DatasetManifest", "CategoryBucket",
    "categorize", "load_manifest", "quality_weighted_sampler", "run_benchmark", "BenchmarkResult",
]


@dataclass(frozen=True)
class ManifestEntry:
    video: Path
    labels: Path
    fps: Fraction


@dataclass
class DatasetManifest:
    name: str
    domain: str
    quality: str
    entries: list[ManifestEntry]

    def __post_init__(self):
        if self.quality not in TIERS:
            raise PreconditionError(f"quality tier must be one of {TIERS}, got {self.quality!r}")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "domain": self.domain,
            "quality": self.quality,
            "entries": [
                {"video": str(e.video), "labels": str(e.labels), "fps": [e.fps.numerator, e.fps.denominator]}
                for e in self.entries
            ],
        }


def load_manifest(path, check_paths: bool = True) -> DatasetManifest:
    """Read a manifest JSON; relative paths resolve against the manifest's folder."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    base = path.parent
    entries = []
    for item in raw.get("entries", []):
        video, labels = base / item["video"], base / item["labels"]
        if check_paths:
            for p in (video, labels):
                if not p.exists():
                    raise PreconditionError(f"{path}: missing file {p}")
        entries.append(ManifestEntry(video, labels, as_fps(item.get("fps", [25, 1]))))
    return DatasetManifest(raw.get("name", path.stem), raw.get("domain", ""), raw.get("quality", "Medium"), entries)


def write_manifest(manifest: DatasetManifest, path) -> None:
    Path(path).write_text(json.dumps(manifest.to_json(), indent=2) + "\n", encoding="utf-8")


@dataclass
class CategoryBucket:
    category: str
    count: int = 0
    recalled: int = 0

    @property
    def recall(self) -> float | None:
        return self.recalled / self.count if self.count else None


def category_counts(labels: Sequence[Segment]) -> Counter:
    return Counter(categorize(l) for l in labels)


def quality_weighted_sampler(
    manifests: Sequence[DatasetManifest],
    probs: dict[str, float] | None = None,
    seed: int = 0,
) -> Iterator[tuple[DatasetManifest, ManifestEntry]]:
    """Endless deterministic stream of ``(manifest, entry)`` draws.

    A tier is drawn with the given probabilities (renormalised over the tiers
    that have manifests), then a manifest uniformly within the tier, then an
    entry uniformly within the manifest.
    """
    probs = dict(DEFAULT_TIER_PROBS if probs is None else probs)
    manifests = [m for m in manifests if m.entries]
    if not manifests:
        raise PreconditionError("no non-empty manifests to sample from")
    by_tier = {t: [m for m in manifests if m.quality == t] for t in TIERS}
    present = [t for t in TIERS if by_tier[t]]
    weights = np.array([float(probs.get(t, 0.0)) for t in present])
    if np.any(weights < 0) or weights.sum() <= 0:
        raise PreconditionError(f"tier probabilities {probs} give no mass to present tiers {present}")
    weights = weights / weights.sum()
    rng = np.random.default_rng(seed)
    while True:
        tier = present[int(rng.choice(len(present), p=weights))]
        pool = by_tier[tier]
        manifest = pool[int(rng.integers(len(pool)))]
        yield manifest, manifest.entries[int(rng.integers(len(manifest.entries)))]


@dataclass
class VideoOutcome:
    dataset: str
    video: str
    report: MetricsReport | None = None
    error: str | None = None
    labels: list[Segment] = field(default_factory=list)


@dataclass
class BenchmarkResult:
    outcomes: list[VideoOutcome]
    micro: MetricsReport | None
    per_dataset: dict[str, MetricsReport]

    @property
    def failures(self) -> list[VideoOutcome]:
        return [o for o in self.outcomes if o.error is not None]

    @property
    def exit_status(self) -> int:
        if self.micro is None:
            return 1
        return 2 if self.failures else 0

    def macro(self) -> dict | None:
        """Unweighted mean over datasets of each dataset's micro-averaged means."""
        if len(self.per_dataset) < 2:
            return None
        means = [r.mean() for r in self.per_dataset.values()]
        out = {"tau": "mean"}
        for key in means[0]:
            if key == "tau":
                continue
            vals = [m[key] for m in means if m[key] is not None]
            out[key] = sum(vals) / len(vals) if vals else None
        return out

    def category_table(self) -> list[dict]:
        return self.micro.category_table() if self.micro else []


def run_benchmark(
    manifests: Sequence[DatasetManifest],
    detector: str | Detector = "content",
    window: float = DEFAULT_WINDOW,
    stride: float = DEFAULT_STRIDE,
    iou: float = DEFAULT_IOU,
    tau_grid: Sequence[float] = DEFAULT_TAU_GRID,
    detector_options: dict | None = None,
    jobs: int = 1,
) -> BenchmarkResult:
    """Run the windowed pipeline and evaluation over every manifest entry.

    Counts are pooled across videos (micro-averaging) and RTF is total
    inference time over total video time. Failing videos are recorded and
    excluded. ``detector`` is a detector name or instance; the oracle detector
    is rebuilt per video from that video's labels.
    """
    if not manifests or not any(m.entries for m in manifests):
        raise PreconditionError("no videos to benchmark")
    options = dict(detector_options or {})
    outcomes: list[VideoOutcome] = []
    per_dataset: dict[str, list[MetricsReport]] = {}
    for manifest in manifests:
        for entry in manifest.entries:
            outcome = VideoOutcome(manifest.name, str(entry.video))
            try:
                clip = load_rawvid(entry.video)
                doc = load_label_file(entry.labels)
                labels = doc["transitions"]
                fps = doc["fps"] or entry.fps
                if isinstance(detector, Detector):
                    det = detector
                elif detector == "oracle":
                    det = make_detector("oracle", labels=labels, duration=float(clip.duration), **options)
                else:
                    det = make_detector(detector, **options)
                result = run_pipeline(clip, det, window, stride, iou, jobs=jobs)
                outcome.report = evaluate(result, labels, fps, float(clip.duration), tau_grid, name=str(entry.video))
                outcome.labels = labels
                per_dataset.setdefault(manifest.name, []).append(outcome.report)
            except (TransDetectError, OSError, KeyError, ValueError) as exc:
                log.error("benchmark: %s failed: %s", entry.video, exc)
                outcome.error = f"{type(exc).__name__}: {exc}"
            outcomes.append(outcome)
    reports = [o.report for o in outcomes if o.report is not None]
    micro = aggregate(reports, "micro") if reports else None
    datasets = {name: aggregate(rs, name) for name, rs in per_dataset.items()}
    return BenchmarkResult(outcomes, micro, datasets)


def pooled_segment_prf(counts: Sequence[tuple[int, int, int]]) -> tuple[float, float, float]:
    """Micro P/R/F1 from per-video ``(TP, FP, FN)`` triples."""
    tp = sum(c[0] for c in counts)
    fp = sum(c[1] for c in counts)
    fn = sum(c[2] for c in counts)
    return prf(tp, fp, fn)
