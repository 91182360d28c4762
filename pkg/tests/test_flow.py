import colorsys
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transdetect.errors import PreconditionError
from transdetect.flow import (
    EmbedKernel,
    FlowField,
    estimate_flow,
    extend_kernel_zero_pad,
    flow_clip,
    flow_to_color,
    fuse_channels,
    fuse_clip,
    patch_embed,
    random_kernel,
)
from transdetect.video import VideoClip, to_grayscale


def _texture(h=48, w=64, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def _shift_right(img, k):
    out = np.zeros_like(img)
    out[:, k:] = img[:, :-k]
    return out


# -- block matching

def test_identical_frames_give_zero_flow():
    img = _texture()
    assert np.all(estimate_flow(img, img, 16, 4).vectors == 0)


def _sad_oracle(prev, curr, block, radius):
    """Direct nested-loop SAD search with the documented tie-break."""
    pg, cg = to_grayscale(prev).astype(int), to_grayscale(curr).astype(int)
    h, w = pg.shape
    disp = sorted(((dx, dy) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1)),
                  key=lambda d: (abs(d[0]) + abs(d[1]), d[1], d[0]))
    result = {}
    for ty in range(0, h, block):
        for tx in range(0, w, block):
            best, best_d = None, (0, 0)
            for dx, dy in disp:
                sad = 0
                valid = True
                for y in range(ty, min(ty + block, h)):
                    for x in range(tx, min(tx + block, w)):
                        sy, sx = y - dy, x - dx
                        if not (0 <= sy < h and 0 <= sx < w):
                            valid = False
                            break
                        sad += abs(cg[y, x] - pg[sy, sx])
                    if not valid:
                        break
                if valid and (best is None or sad < best):
                    best, best_d = sad, (dx, dy)
            result[(ty, tx)] = best_d
    return result


def test_three_pixel_shift_on_interior_tiles():
    prev = _texture(48, 64, 1)
    curr = _shift_right(prev, 3)
    flow = estimate_flow(prev, curr, 16, 4).vectors
    oracle = _sad_oracle(prev, curr, 16, 4)
    for (ty, tx), (dx, dy) in oracle.items():
        assert tuple(flow[ty, tx]) == (dx, dy)
    # interior tiles (not touching the border) see the true shift
    for ty in (16,):
        for tx in (16, 32):
            assert tuple(flow[ty, tx]) == (3, 0)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000), dx=st.integers(-3, 3), dy=st.integers(-3, 3), block=st.sampled_from([4, 8]))
def test_block_matching_equals_exhaustive_oracle(seed, dx, dy, block):
    prev = _texture(16, 24, seed)
    curr = np.roll(prev, (dy, dx), axis=(0, 1))
    flow = estimate_flow(prev, curr, block, 2).vectors
    for (ty, tx), d in _sad_oracle(prev, curr, block, 2).items():
        assert tuple(flow[ty, tx]) == d


def test_radius_bounds_magnitude():
    prev = _texture(32, 32, 2)
    curr = _shift_right(prev, 5)
    mag = np.hypot(*np.moveaxis(estimate_flow(prev, curr, 8, 1).vectors, 2, 0))
    assert mag.max() <= math.sqrt(2) + 1e-12


@pytest.mark.parametrize("block, radius", [(3, 2), (8, 0)])
def test_bad_parameters(block, radius):
    img = _texture(16, 16)
    with pytest.raises(PreconditionError):
        estimate_flow(img, img, block, radius)


def test_size_mismatch():
    with pytest.raises(PreconditionError):
        estimate_flow(_texture(16, 16), _texture(16, 20))


# -- colorization

def test_zero_flow_is_white():
    assert np.all(flow_to_color(FlowField(np.zeros((3, 4, 2)))).pixels == 255)


def test_uniform_unit_flow_is_red():
    v = np.zeros((2, 2, 2))
    v[..., 0] = 1.0
    px = flow_to_color(FlowField(v)).pixels
    assert np.all(px == np.array([255, 0, 0], dtype=np.uint8))


def test_hsv_against_colorsys_oracle():
    rng = np.random.default_rng(5)
    v = rng.normal(0, 3, size=(6, 7, 2))
    px = flow_to_color(FlowField(v)).pixels.astype(int)
    mag = np.hypot(v[..., 0], v[..., 1])
    m_ref = max(mag.max(), 1.0)
    for y in range(6):
        for x in range(7):
            hue = (math.degrees(math.atan2(v[y, x, 1], v[y, x, 0])) % 360) / 360
            rgb = colorsys.hsv_to_rgb(hue, min(1.0, mag[y, x] / m_ref), 1.0)
            assert np.all(np.abs(px[y, x] - np.array([math.floor(c * 255 + 0.5) for c in rgb])) <= 1)


def test_negation_rotates_hue_by_half_turn():
    rng = np.random.default_rng(6)
    v = rng.normal(0, 2, size=(5, 5, 2))
    a = flow_to_color(FlowField(v)).pixels / 255.0
    b = flow_to_color(FlowField(-v)).pixels / 255.0
    for y in range(5):
        for x in range(5):
            ha = colorsys.rgb_to_hsv(*a[y, x])[0]
            hb = colorsys.rgb_to_hsv(*b[y, x])[0]
            if colorsys.rgb_to_hsv(*a[y, x])[1] > 0.1:
                d = abs(((hb - ha) % 1.0) - 0.5)
                assert d < 0.02


def test_all_hues_reachable():
    angles = np.linspace(0, 2 * np.pi, 360, endpoint=False)
    v = np.stack([np.cos(angles), np.sin(angles)], axis=-1)[None]
    px = flow_to_color(FlowField(v)).pixels[0] / 255.0
    hues = sorted(colorsys.rgb_to_hsv(*p)[0] for p in px)
    assert hues[0] < 0.01 and hues[-1] > 0.99
    assert max(b - a for a, b in zip(hues, hues[1:])) < 0.01


def test_flow_field_rejects_nan():
    v = np.zeros((2, 2, 2))
    v[0, 0, 0] = np.nan
    with pytest.raises(PreconditionError):
        FlowField(v)


# -- fusion and embedding

def test_fuse_keeps_both_halves():
    color = _texture(2, 2, 7)
    viz = _texture(2, 2, 8)
    fused = fuse_channels(color, viz)
    assert fused.channels.shape == (2, 2, 6)
    assert np.array_equal(fused.color, color)
    assert np.array_equal(fused.channels[..., 3:6], viz)


def test_fuse_size_mismatch():
    with pytest.raises(PreconditionError):
        fuse_channels(_texture(2, 2), _texture(2, 3))


def test_zero_pad_extension():
    k3 = random_kernel(4, (2, 2, 2), seed=1)
    k6 = extend_kernel_zero_pad(k3)
    assert k6.weights.size == 2 * k3.weights.size
    assert np.all(k6.weights[:, 3:] == 0)
    assert np.array_equal(k6.weights[:, :3], k3.weights)
    with pytest.raises(PreconditionError):
        extend_kernel_zero_pad(k6)


def test_patch_embed_zero_input():
    k = random_kernel(3, (1, 2, 2))
    assert np.all(patch_embed(np.zeros((2, 4, 4, 3), dtype=np.uint8), k) == 0)


def test_patch_embed_channel_mismatch():
    k = random_kernel(3, (1, 2, 2))
    with pytest.raises(PreconditionError):
        patch_embed(np.zeros((2, 4, 4, 6), dtype=np.uint8), k)


def test_patch_embed_matches_nested_loop_oracle():
    rng = np.random.default_rng(9)
    x = rng.integers(0, 256, size=(4, 6, 6, 3), dtype=np.uint8)
    k = EmbedKernel(rng.normal(size=(2, 3, 2, 2, 2)))
    out = patch_embed(x, k)
    xs = x.astype(float) / 255.0
    assert out.shape == (2, 2, 3, 3)
    for o in range(2):
        for a in range(2):
            for b in range(3):
                for c in range(3):
                    acc = 0.0
                    for ch in range(3):
                        for d in range(2):
                            for i in range(2):
                                for j in range(2):
                                    acc += k.weights[o, ch, d, i, j] * xs[2 * a + d, 2 * b + i, 2 * c + j, ch]
                    assert out[o, a, b, c] == pytest.approx(acc, rel=1e-12, abs=1e-12)


def test_flow_clip_keeps_length_and_fuses():
    frames = np.stack([np.roll(_texture(16, 16, 3), k, axis=1) for k in range(4)])
    clip = VideoClip(frames, 25)
    viz = flow_clip(clip, 8, 2)
    assert len(viz) == len(clip)
    assert np.all(viz.array[0] == 255)
    fused = fuse_clip(clip, viz)
    assert fused.shape == (4, 16, 16, 6)
    with pytest.raises(PreconditionError):
        flow_clip(clip, 8, 2, pair_stride=0)
