from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from transdetect.errors import CatalogError, InvariantError, PreconditionError
from transdetect.synth import (
    CATALOG,
    EffectSpec,
    SynthPlan,
    compute_tmax,
    easing,
    family,
    procedural_shot,
    procedural_shots,
    progress,
    render_transition,
    sample_plan,
    synthesize,
)
from transdetect.video import VideoClip


def _solid(value, n, h=6, w=8, fps=25):
    return VideoClip(np.full((n, h, w, 3), value, dtype=np.uint8), fps)


def _frames(seed=0, h=12, w=16):
    rng = np.random.default_rng(seed)
    return (rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8),
            rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))


# -- T_max

@pytest.mark.parametrize("a, b, want", [(8.0, 6.0, 3.0), (2.0, 10.0, 1.0), (0.2, 0.2, 0.1)])
def test_tmax_examples(a, b, want):
    assert compute_tmax(a, b, 3.0) == pytest.approx(want, abs=1e-15)


def test_tmax_exact_with_fractions():
    assert compute_tmax(Fraction(1, 5), Fraction(1, 5), Fraction(3)) == Fraction(1, 10)


@pytest.mark.parametrize("a, b", [(0, 1), (1, -1)])
def test_tmax_rejects_non_positive(a, b):
    with pytest.raises(PreconditionError):
        compute_tmax(a, b)


# -- catalog and renderers

def test_catalog_has_59_unique_effects():
    assert len(CATALOG) == 59
    assert len(set(CATALOG)) == 59
    assert CATALOG[0] == "cut" and CATALOG[1] == "fade"


def test_unknown_effect_is_catalog_error():
    a, b = _frames()
    with pytest.raises(CatalogError):
        render_transition(a, b, "starwipe", 0.5)
    with pytest.raises(CatalogError):
        family("starwipe")


def test_mismatched_frames_rejected():
    a, _ = _frames()
    with pytest.raises(PreconditionError):
        render_transition(a, a[:-1], "fade", 0.5)


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_progress_out_of_range(p):
    a, b = _frames()
    with pytest.raises(PreconditionError):
        render_transition(a, b, "fade", p)


@pytest.mark.parametrize("effect", CATALOG)
def test_endpoints_exact_for_every_effect(effect):
    a, b = _frames(3)
    assert np.array_equal(render_transition(a, b, effect, 0.0, seed=5).pixels, a)
    assert np.array_equal(render_transition(a, b, effect, 1.0, seed=5).pixels, b)


@pytest.mark.parametrize("effect", CATALOG)
def test_renderers_are_deterministic_and_typed(effect):
    a, b = _frames(4)
    for p in (0.1, 0.5, 0.9):
        x = render_transition(a, b, effect, p, seed=11).pixels
        y = render_transition(a, b, effect, p, seed=11).pixels
        assert x.dtype == np.uint8 and x.shape == a.shape
        assert np.array_equal(x, y)


def test_fade_midpoint_rounds_half_up():
    a = np.zeros((2, 2, 3), dtype=np.uint8)
    b = np.full((2, 2, 3), 255, dtype=np.uint8)
    b[0, 0] = (1, 2, 3)
    out = render_transition(a, b, "fade", 0.5).pixels.astype(int)
    want = (a.astype(int) + b.astype(int) + 1) // 2
    assert np.array_equal(out, want)


def test_wipeleft_boundary_matches_mask_oracle():
    h, w = 4, 100
    a = np.zeros((h, w, 3), dtype=np.uint8)
    b = np.full((h, w, 3), 200, dtype=np.uint8)
    out = render_transition(a, b, "wipeleft", 0.25).pixels
    xs = np.arange(w)
    mask = xs >= w * (1 - 0.25)
    for x in range(w):
        assert np.array_equal(out[:, x], (b if mask[x] else a)[:, x])
    assert mask.sum() == 25


def test_effects_change_monotonically_in_mask_families():
    # for wipes the B-area grows with p
    a = np.zeros((16, 32, 3), dtype=np.uint8)
    b = np.full((16, 32, 3), 255, dtype=np.uint8)
    for effect in ("wipeleft", "wiperight", "wipeup", "wipedown", "wipetl", "diagbr", "circleopen"):
        areas = [(render_transition(a, b, effect, p).pixels == 255).all(axis=2).sum() for p in np.linspace(0, 1, 9)]
        assert all(x <= y for x, y in zip(areas, areas[1:])), effect


def test_easing_labels():
    assert easing("fadefast") == "fast"
    assert easing("fadeslow") == "slow"
    assert easing("smoothleft") == "smooth"
    assert easing("wipeleft") == "linear"


# -- plans

def _shots(lengths=(100, 100), fps=25):
    return [_solid(40 * i, n, fps=fps) for i, n in enumerate(lengths)]


def test_plan_is_deterministic():
    shots = _shots((100, 100, 100))
    assert sample_plan(shots, 42).specs == sample_plan(shots, 42).specs


def test_plan_needs_two_shots():
    with pytest.raises(PreconditionError):
        sample_plan(_shots((100,)), 0)


def test_effect_histogram_is_uniform():
    shots = _shots((100, 100))
    counts = Counter(sample_plan(shots, seed).specs[0].effect for seed in range(10_000))
    observed = np.array([counts[e] for e in CATALOG])
    assert observed.sum() == 10_000
    expected = 10_000 / 59
    sigma = np.sqrt(10_000 * (1 / 59) * (58 / 59))
    assert np.all(np.abs(observed - expected) <= 4 * sigma)
    chi2 = stats.chisquare(observed)
    assert chi2.pvalue > 1e-3


def test_cut_duration_overridden_to_zero():
    shots = _shots((100, 100))
    cuts = [s for seed in range(3000) for s in sample_plan(shots, seed).specs if s.effect == "cut"]
    assert cuts
    assert all(s.duration_s == 0 and s.frames == 0 for s in cuts)


def test_durations_within_tmax_and_frame_quantized():
    shots = _shots((60, 200, 30))
    fps = shots[0].fps
    for seed in range(500):
        plan = sample_plan(shots, seed)
        for i, spec in enumerate(plan.specs):
            tmax = compute_tmax(Fraction(len(shots[i])) / fps, Fraction(len(shots[i + 1])) / fps, Fraction(3))
            assert 0 <= spec.duration_s <= tmax
            assert spec.duration_s * fps == spec.frames
            if spec.effect != "cut":
                assert spec.frames >= 1


def test_duration_distribution_roughly_uniform():
    shots = _shots((200, 200))  # T_max = 3 s
    ds = [float(s.duration_s) for seed in range(4000) for s in sample_plan(shots, seed).specs if s.effect != "cut"]
    assert stats.kstest(ds, stats.uniform(0, 3.0).cdf).statistic < 0.05


def test_mix_controls_duration_buckets():
    shots = _shots((200, 200))
    durations = [
        float(s.duration_s)
        for seed in range(3000)
        for s in sample_plan(shots, seed, mix=(0.0, 0.0, 1.0)).specs
        if s.effect != "cut"
    ]
    assert min(durations) > 1.0
    short = [float(s.duration_s) for seed in range(500) for s in sample_plan(shots, seed, mix=(1, 0, 0)).specs]
    assert max(short) < 0.1


def test_effects_override():
    plan = sample_plan(_shots((100, 100, 100)), 3, effects=["wipeleft", "cut"])
    assert [s.effect for s in plan.specs] == ["wipeleft", "cut"]


def test_cut_spec_with_duration_is_invariant_error():
    with pytest.raises(InvariantError):
        EffectSpec("cut", Fraction(1, 25), 0, 1)


# -- synthesis timeline

def _plan(shots, specs, cap=3.0):
    return SynthPlan(shots, specs, seed=0, cap=cap)


def _spec(effect, seconds, fps=25):
    n = int(Fraction(seconds) * fps)
    return EffectSpec(effect, Fraction(n) / fps, 0, n)


def test_cut_splice():
    shots = _shots((100, 100))
    clip, labels = synthesize(_plan(shots, [_spec("cut", 0)]))
    assert clip.duration == 8
    assert [(l.start, l.end, l.type) for l in labels] == [(4.0, 4.0, "cut")]
    assert np.array_equal(clip.array[99], shots[0].array[99])
    assert np.array_equal(clip.array[100], shots[1].array[0])


def test_fade_splice_timeline():
    shots = _shots((100, 100))
    clip, labels = synthesize(_plan(shots, [_spec("fade", 1)]))
    assert clip.duration == 7
    assert (labels[0].start, labels[0].end) == (3.0, 4.0)
    k = 74  # t = 2.96 s
    assert Fraction(k, 25) == Fraction("2.96")
    assert np.array_equal(clip.array[k], shots[0].array[k])


def test_three_shot_offsets():
    shots = _shots((125, 125, 125))
    clip, labels = synthesize(_plan(shots, [_spec("fade", 1), _spec("cut", 0)]))
    assert clip.duration == 14
    assert [(l.start, l.end) for l in labels] == [(4.0, 5.0), (9.0, 9.0)]


def test_plan_violating_tmax_is_rejected():
    shots = _shots((20, 20))  # T_max = 0.4 s = 10 frames
    with pytest.raises(InvariantError):
        synthesize(_plan(shots, [_spec("fade", Fraction(12, 25))]))


def test_progress_endpoints_are_pure():
    assert progress(0, 5) == 0.0 and progress(4, 5) == 1.0
    assert progress(0, 1) == 0.5


@settings(max_examples=25, deadline=None)
@given(
    lengths=st.lists(st.integers(2, 60), min_size=2, max_size=4),
    seed=st.integers(0, 2**63),
    cap=st.floats(0.05, 3.0),
)
def test_duration_conservation_and_label_order(lengths, seed, cap):
    shots = [_solid(30 * i, n, h=2, w=2) for i, n in enumerate(lengths)]
    plan = sample_plan(shots, seed, cap)
    clip, labels = synthesize(plan)
    assert clip.duration == sum(s.duration for s in shots) - sum(s.duration_s for s in plan.specs)
    assert all(l.start <= l.end for l in labels)
    assert all(a.end <= b.start + 1e-9 for a, b in zip(labels, labels[1:]))
    for lab, spec in zip(labels, plan.specs):
        assert lab.end - lab.start == pytest.approx(float(spec.duration_s), abs=1e-9)


def test_procedural_shots_differ_and_move():
    shot = procedural_shot(32, 24, 10, seed=1)
    other = procedural_shot(32, 24, 10, seed=2)
    assert len(shot) == 10
    assert not np.array_equal(shot.array[0], shot.array[9])
    assert np.abs(shot.array[0].astype(int) - other.array[0].astype(int)).mean() > 10
    assert procedural_shots(2, 8, 8, 1.0, 25, seed=3)[1].duration == 1
