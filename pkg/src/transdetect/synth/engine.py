"""Transition planning and overlap splicing with exact labels."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..errors import InconsistencyError, InvariantError, PreconditionError
from ..segments import Segment
from ..video import VideoClip
from .effects import CATALOG, easing, render_transition

DEFAULT_CAP = 3.0
MASK64 = 2**64 - 1

# Duration buckets used by the stratified sampler, matching the evaluation
# categories: Cut < 0.1 s, Normal <= 1 s, Long > 1 s.
CUT_LIMIT = Fraction(1, 10)
NORMAL_LIMIT = Fraction(1)


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def transition_seed(global_seed: int, index: int) -> int:
    return splitmix64(splitmix64(global_seed & MASK64) ^ (index & MASK64))


def compute_tmax(dur_a: float, dur_b: float, cap: float = DEFAULT_CAP):
    """Longest allowed transition between shots of the given durations.

    ``min(cap, dur_a / 2, dur_b / 2)``, so an overlap never uses more than
    half of either shot. Exact when the inputs are Fractions.
    """
    if dur_a <= 0 or dur_b <= 0 or cap <= 0:
        raise PreconditionError(f"durations and cap must be positive: {dur_a}, {dur_b}, {cap}")
    return min(cap, dur_a / 2, dur_b / 2)


@dataclass(frozen=True)
class EffectSpec:
    """One planned transition.

    ``duration_s`` is frame-quantized: it equals ``frames / fps`` exactly.
    """

    effect: str
    duration_s: Fraction
    seed: int
    frames: int
    easing: str = "linear"

    def __post_init__(self):
        if self.effect == "cut" and (self.duration_s != 0 or self.frames != 0):
            raise InvariantError("a cut must have zero duration")
        if self.frames < 0 or self.duration_s < 0:
            raise InvariantError("negative transition duration")


@dataclass
class SynthPlan:
    shots: list[VideoClip]
    specs: list[EffectSpec]
    seed: int
    cap: float = DEFAULT_CAP

    def __post_init__(self):
        if len(self.specs) != len(self.shots) - 1:
            raise InvariantError(f"{len(self.shots)} shots need {len(self.shots) - 1} specs, got {len(self.specs)}")


def _check_shots(shots: Sequence[VideoClip]) -> Fraction:
    if len(shots) < 2:
        raise PreconditionError(f"need at least 2 shots, got {len(shots)}")
    first = shots[0]
    for i, s in enumerate(shots):
        if len(s) == 0:
            raise PreconditionError(f"shot {i} is empty")
        if (s.width, s.height) != (first.width, first.height):
            raise InconsistencyError(f"shot {i} is {s.width}x{s.height}, shot 0 is {first.width}x{first.height}")
        if s.fps != first.fps:
            raise InconsistencyError(f"shot {i} fps {s.fps} differs from {first.fps}")
    return first.fps


def max_transition_frames(len_a: int, len_b: int, fps: Fraction, cap: float) -> int:
    tmax = compute_tmax(Fraction(len_a) / fps, Fraction(len_b) / fps, Fraction(cap))
    return math.floor(tmax * fps)


def _frame_range(lo: Fraction, hi: Fraction | None, fps: Fraction, nmax: int, inclusive_hi: bool):
    """Integer frame counts n >= 1 with lo <= n / fps and n / fps < hi (or <= hi)."""
    first = max(1, math.ceil(lo * fps))
    if hi is None:
        last = nmax
    elif inclusive_hi:
        last = math.floor(hi * fps)
    else:
        last = math.ceil(hi * fps) - 1
    return first, min(last, nmax)


def _draw_frames(rng, fps: Fraction, nmax: int, tmax: Fraction, mix) -> int:
    if nmax <= 0:
        return 0
    if mix is None:
        d = rng.uniform(0.0, float(tmax))
        n = math.floor(d * fps + Fraction(1, 2))
        return min(max(n, 1), nmax)
    bucket = int(rng.choice(3, p=np.asarray(mix, dtype=float) / sum(mix)))
    ranges = [
        _frame_range(Fraction(0), CUT_LIMIT, fps, nmax, inclusive_hi=False),
        _frame_range(CUT_LIMIT, NORMAL_LIMIT, fps, nmax, inclusive_hi=True),
        _frame_range(NORMAL_LIMIT + Fraction(1, 10**9), None, fps, nmax, inclusive_hi=True),
    ]
    # fall back to the next shorter bucket when the shots are too short
    for lo, hi in reversed(ranges[: bucket + 1]):
        if lo <= hi:
            return int(rng.integers(lo, hi + 1))
    return 1


def sample_plan(
    shots: Sequence[VideoClip],
    seed: int,
    cap: float = DEFAULT_CAP,
    mix: tuple[float, float, float] | None = None,
    effects: Sequence[str] | None = None,
) -> SynthPlan:
    """Draw an effect and a duration for each adjacent shot pair.

    Effects are uniform over the 59-entry catalog (or taken from
    ``effects`` when given). Durations are uniform on ``[0, T_max]`` and
    snapped to whole frames; a non-cut effect gets at least one frame when the
    shots allow it, and ``cut`` always gets zero. With ``mix = (cut, normal,
    long)`` the duration bucket is drawn first and the frame count uniformly
    within it. The plan depends only on the shot lengths, fps and ``seed``.
    """
    fps = _check_shots(shots)
    if effects is not None and len(effects) != len(shots) - 1:
        raise PreconditionError(f"need {len(shots) - 1} effects, got {len(effects)}")
    rng = np.random.default_rng(seed & MASK64)
    specs = []
    for i in range(len(shots) - 1):
        la, lb = len(shots[i]), len(shots[i + 1])
        tmax = compute_tmax(Fraction(la) / fps, Fraction(lb) / fps, Fraction(cap))
        nmax = math.floor(tmax * fps)
        effect_idx = int(rng.integers(len(CATALOG)))
        effect = effects[i] if effects is not None else CATALOG[effect_idx]
        n = _draw_frames(rng, fps, nmax, tmax, mix)
        if effect == "cut":
            n = 0
        specs.append(
            EffectSpec(
                effect=effect,
                duration_s=Fraction(n) / fps,
                seed=transition_seed(seed, i),
                frames=n,
                easing=easing(effect),
            )
        )
    return SynthPlan(list(shots), specs, seed, cap)


def progress(k: int, n: int) -> float:
    """Progress of blended frame ``k`` out of ``n``; both ends are pure frames."""
    if n == 1:
        return 0.5
    return k / (n - 1)


def synthesize(plan: SynthPlan) -> tuple[VideoClip, list[Segment]]:
    """Splice the plan's shots, rendering each transition over an overlap.

    For shots A then B with an ``n``-frame transition, the last ``n`` frames
    of A are blended with the first ``n`` frames of B. The label spans from the
    first blended frame to the end of A on the running timeline; a cut is the
    zero-length label at B's first frame.
    """
    shots, specs = plan.shots, plan.specs
    fps = _check_shots(shots)
    for i, spec in enumerate(specs):
        nmax = max_transition_frames(len(shots[i]), len(shots[i + 1]), fps, plan.cap)
        if spec.frames > nmax:
            raise InvariantError(
                f"transition {i} ({spec.effect}) uses {spec.frames} frames, T_max allows {nmax}"
            )
        if spec.duration_s != Fraction(spec.frames) / fps:
            raise InvariantError(f"transition {i}: duration {spec.duration_s} is not {spec.frames} frames")

    pieces: list[np.ndarray] = []
    labels: list[Segment] = []
    consumed = 0  # leading frames of the current shot already used by the previous transition
    offset = 0  # global index of the current shot's first frame
    for i, shot in enumerate(shots):
        tail = specs[i].frames if i < len(specs) else 0
        pieces.append(shot.array[consumed : len(shot) - tail])
        if i == len(specs):
            break
        spec, nxt = specs[i], shots[i + 1]
        end_index = offset + len(shot)
        start_index = end_index - spec.frames
        if spec.frames:
            blended = np.empty((spec.frames,) + shot.array.shape[1:], dtype=np.uint8)
            for k in range(spec.frames):
                blended[k] = render_transition(
                    shot.array[len(shot) - spec.frames + k],
                    nxt.array[k],
                    spec.effect,
                    progress(k, spec.frames),
                    spec.seed,
                ).pixels
            pieces.append(blended)
        labels.append(
            Segment(float(Fraction(start_index) / fps), float(Fraction(end_index) / fps), spec.effect)
        )
        offset = start_index
        consumed = spec.frames
    clip = VideoClip(np.concatenate(pieces), fps)
    expected = sum(s.duration for s in shots) - sum(s.duration_s for s in specs)
    if clip.duration != expected:
        raise InvariantError(f"duration {clip.duration} != {expected}")
    return clip, labels
