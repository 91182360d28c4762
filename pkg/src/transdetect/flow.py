"""Motion prior: block-matching flow, flow colorization, channel fusion and
the zero-padded patch-embedding extension.

The learned flow network of a full system is replaced here by exhaustive
grayscale block matching, which is deterministic and easy to check against
a brute-force search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .video import Frame, VideoClip, to_grayscale

DEFAULT_BLOCK = 16
DEFAULT_RADIUS = 7


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-pixel displacement ``(dx, dy)`` in pixels, shape ``(H, W, 2)``."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 3 or v.shape[2] != 2:
            raise PreconditionError(f"flow must be (H, W, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("flow contains non-finite values")
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    @property
    def height(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True, eq=False)
class FusedFrame:
    """Color RGB stacked with flow-visualization RGB, shape ``(H, W, 6)``."""

    channels: np.ndarray

    @property
    def width(self) -> int:
        return self.channels.shape[1]

    @property
    def height(self) -> int:
        return self.channels.shape[0]

    @property
    def color(self) -> np.ndarray:
        return self.channels[..., :3]

    @property
    def flow(self) -> np.ndarray:
        return self.channels[..., 3:]


@dataclass(frozen=True, eq=False)
class EmbedKernel:
    """Patch-embedding weights, shape ``(C, in_channels, D_k, H_k, W_k)``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 5:
            raise PreconditionError(f"kernel must be 5-D (C, in, D, H, W), got {w.shape}")
        if w.shape[1] not in (3, 6):
            raise PreconditionError(f"in_channels must be 3 or 6, got {w.shape[1]}")
        object.__setattr__(self, "weights", w)

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def size(self) -> tuple[int, int, int]:
        return tuple(self.weights.shape[2:])


def _pixels(frame) -> np.ndarray:
    return frame.pixels if isinstance(frame, Frame) else np.asarray(frame)


def _displacements(radius: int) -> list[tuple[int, int]]:
    cand = [(dx, dy) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1)]
    # tie-break order: smallest |dx|+|dy|, then dy, then dx
    return sorted(cand, key=lambda d: (abs(d[0]) + abs(d[1]), d[1], d[0]))


def _tile_sums(values: np.ndarray, block: int) -> np.ndarray:
    h, w = values.shape
    ty, tx = -(-h // block), -(-w // block)
    padded = np.zeros((ty * block, tx * block), dtype=values.dtype)
    padded[:h, :w] = values
    return padded.reshape(ty, block, tx, block).sum(axis=(1, 3))


def block_sad(prev_gray: np.ndarray, curr_gray: np.ndarray, block: int, dx: int, dy: int) -> np.ndarray:
    """SAD per tile for one displacement; ``inf`` where the source tile leaves the frame.

    Pixel ``(x, y)`` of ``curr`` is compared with ``(x - dx, y - dy)`` of ``prev``.
    """
    h, w = curr_gray.shape
    valid = np.zeros((h, w), dtype=bool)
    diff = np.zeros((h, w), dtype=np.int64)
    ys = slice(max(0, dy), min(h, h + dy))
    xs = slice(max(0, dx), min(w, w + dx))
    src_y = slice(ys.start - dy, ys.stop - dy)
    src_x = slice(xs.start - dx, xs.stop - dx)
    if ys.start < ys.stop and xs.start < xs.stop:
        valid[ys, xs] = True
        diff[ys, xs] = np.abs(curr_gray[ys, xs].astype(np.int64) - prev_gray[src_y, src_x])
    sad = _tile_sums(diff, block).astype(np.float64)
    invalid = _tile_sums((~valid).astype(np.int64), block)
    sad[invalid > 0] = np.inf
    return sad


def estimate_flow(prev, curr, block: int = DEFAULT_BLOCK, radius: int = DEFAULT_RADIUS) -> FlowField:
    """Exhaustive SAD block matching on luma.

    Each ``block``-sized tile (edge tiles may be smaller) gets the displacement
    within ``[-radius, radius]^2`` minimising the sum of absolute differences,
    assigned to all its pixels.
    """
    a, b = _pixels(prev), _pixels(curr)
    if a.shape != b.shape:
        raise PreconditionError(f"frame sizes differ: {a.shape} vs {b.shape}")
    if block < 4:
        raise PreconditionError(f"block must be >= 4, got {block}")
    if radius < 1:
        raise PreconditionError(f"radius must be >= 1, got {radius}")
    ga, gb = to_grayscale(a), to_grayscale(b)
    h, w = ga.shape
    best = None
    best_d = None
    for dx, dy in _displacements(radius):
        sad = block_sad(ga, gb, block, dx, dy)
        if best is None:
            best = sad
            best_d = np.zeros(sad.shape + (2,), dtype=np.float64)
            continue
        better = sad < best
        best = np.where(better, sad, best)
        best_d[better] = (dx, dy)
    vectors = np.repeat(np.repeat(best_d, block, axis=0), block, axis=1)[:h, :w]
    return FlowField(vectors)


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Standard HSV to RGB with ``h`` in degrees ``[0, 360)`` and ``s, v`` in ``[0, 1]``."""
    hp = (h % 360.0) / 60.0
    sector = np.floor(hp).astype(int) % 6
    f = hp - np.floor(hp)
    p = v * (1 - s)
    q = v * (1 - s * f)
    t = v * (1 - s * (1 - f))
    table = [
        (v, t, p), (q, v, p), (p, v, t),
        (p, q, v), (t, p, v), (v, p, q),
    ]
    rgb = np.zeros(h.shape + (3,))
    for i, (r, g, b) in enumerate(table):
        m = sector == i
        rgb[m, 0], rgb[m, 1], rgb[m, 2] = r[m], g[m], b[m]
    return rgb


def flow_to_color(flow: FlowField) -> Frame:
    """Encode direction as hue and magnitude as saturation (value fixed at 1).

    Saturation is ``|v| / m_ref`` with ``m_ref = max(max |v|, 1)``, so a
    static field renders white.
    """
    v = flow.vectors
    dx, dy = v[..., 0], v[..., 1]
    mag = np.hypot(dx, dy)
    m_ref = max(float(mag.max(initial=0.0)), 1.0)
    hue = np.degrees(np.arctan2(dy, dx)) % 360.0
    hue = np.where(hue >= 360.0, 0.0, hue)
    sat = np.minimum(1.0, mag / m_ref)
    rgb = _hsv_to_rgb(hue, sat, np.ones_like(sat))
    return Frame(np.clip(np.floor(rgb * 255 + 0.5), 0, 255).astype(np.uint8))


def fuse_channels(color, flow_viz) -> FusedFrame:
    """Stack color and flow visualization along the channel axis."""
    a, b = _pixels(color), _pixels(flow_viz)
    if a.shape != b.shape:
        raise PreconditionError(f"frame sizes differ: {a.shape} vs {b.shape}")
    fused = np.concatenate([a, b], axis=2)
    fused.flags.writeable = False
    return FusedFrame(fused)


def extend_kernel_zero_pad(kernel: EmbedKernel) -> EmbedKernel:
    """Append three zero input channels to a 3-channel kernel."""
    if kernel.in_channels != 3:
        raise PreconditionError(f"expected a 3-channel kernel, got {kernel.in_channels}")
    w = kernel.weights
    return EmbedKernel(np.concatenate([w, np.zeros_like(w)], axis=1))


def patch_embed(frames: np.ndarray, kernel: EmbedKernel) -> np.ndarray:
    """Non-overlapping 3-D convolution (stride equals kernel size).

    ``frames`` has shape ``(T, H, W, c)`` with 8-bit values, scaled to
    ``[0, 1]`` first. Returns ``(C, T // D_k, H // H_k, W // W_k)``.
    Channels are accumulated one at a time in index order, so appending
    zero-weight channels leaves every output bit unchanged.
    """
    x = np.asarray(frames)
    if x.ndim != 4:
        raise PreconditionError(f"expected (T, H, W, c) input, got {x.shape}")
    t, h, w, c = x.shape
    if c != kernel.in_channels:
        raise PreconditionError(f"input has {c} channels, kernel expects {kernel.in_channels}")
    dk, hk, wk = kernel.size
    if t < dk:
        raise PreconditionError(f"temporal depth {t} < kernel depth {dk}")
    tp, hp, wp = t // dk, h // hk, w // wk
    x = x[: tp * dk, : hp * hk, : wp * wk].astype(np.float64) / 255.0
    # (tp, dk, hp, hk, wp, wk, c)
    patches = x.reshape(tp, dk, hp, hk, wp, wk, c)
    out = np.zeros((kernel.out_channels, tp, hp, wp))
    for ch in range(c):
        out += np.einsum("adbhcw,odhw->oabc", patches[..., ch], kernel.weights[:, ch])
    return out


def flow_clip(clip: VideoClip, block: int = DEFAULT_BLOCK, radius: int = DEFAULT_RADIUS,
              pair_stride: int = 1) -> VideoClip:
    """Flow visualization for every frame relative to ``pair_stride`` frames earlier.

    The first ``pair_stride`` frames are compared with frame 0, so frame 0
    itself renders as zero motion and the output keeps the input length.
    """
    if pair_stride < 1:
        raise PreconditionError(f"pair_stride must be >= 1, got {pair_stride}")
    out = np.empty_like(clip.array)
    for i in range(len(clip)):
        j = max(0, i - pair_stride)
        out[i] = flow_to_color(estimate_flow(clip.array[j], clip.array[i], block, radius)).pixels
    return VideoClip(out, clip.fps)


def fuse_clip(clip: VideoClip, viz: VideoClip) -> np.ndarray:
    if clip.array.shape != viz.array.shape:
        raise PreconditionError("color and flow clips differ in shape")
    return np.concatenate([clip.array, viz.array], axis=3)


def random_kernel(out_channels: int, size: tuple[int, int, int], seed: int = 0) -> EmbedKernel:
    rng = np.random.default_rng(seed)
    d, h, w = size
    return EmbedKernel(rng.normal(0, 1.0 / math.sqrt(3 * d * h * w), size=(out_channels, 3, d, h, w)))
