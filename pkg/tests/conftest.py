from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pytest

from transdetect.segments import Segment
from transdetect.synth import CATALOG, procedural_shots, sample_plan, synthesize
from transdetect.video import VideoClip

ACCEPTANCE_LINES: list[str] = []

CORPUS_SIZE = 100
SHOTS_PER_VIDEO = 3
SHOT_SECONDS = 8
FRAME_W, FRAME_H = 80, 48
FPS = Fraction(25)


@dataclass
class CorpusVideo:
    index: int
    shots: list[VideoClip]
    clip: VideoClip
    labels: list[Segment]
    effects: list[str]
    seed: int


def build_corpus(n_videos: int, seed: int = 0, mix=None, cover_catalog: bool = True,
                 width: int = FRAME_W, height: int = FRAME_H) -> list[CorpusVideo]:
    """Seeded synthetic videos; with ``cover_catalog`` the effects cycle the catalog."""
    per = SHOTS_PER_VIDEO - 1
    videos = []
    for v in range(n_videos):
        vseed = seed * 100_003 + v
        shots = procedural_shots(SHOTS_PER_VIDEO, width, height, SHOT_SECONDS, FPS, seed=vseed)
        effects = [CATALOG[(v * per + k) % len(CATALOG)] for k in range(per)] if cover_catalog else None
        plan = sample_plan(shots, vseed, mix=mix, effects=effects)
        clip, labels = synthesize(plan)
        videos.append(CorpusVideo(v, shots, clip, labels, [s.effect for s in plan.specs], vseed))
    return videos


@pytest.fixture(scope="session")
def corpus() -> list[CorpusVideo]:
    return build_corpus(CORPUS_SIZE, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
