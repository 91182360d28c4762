"""The 59 transition effects and their per-frame renderers.

Every renderer maps ``(out, in, p, seed)`` to a blended uint8 image. The
contract shared by all of them: ``p == 0`` yields the outgoing frame and
``p == 1`` the incoming frame, byte for byte, and the output depends only
on the arguments.

Effects are grouped into families that share one piece of math:

* blend: opacity mixes (fade, dissolve, fades through black/white/gray, distance)
* wipe / diag: a straight boundary sweeps the frame
* slide / smooth / cover / reveal: frames translate by ``floor(p * extent)`` pixels
* aperture: circle, rectangle, slit or clock-sweep masks
* slice / wind: 16 px strips with staggered progress, or jittered 1 px lines
* geometric: nearest-neighbour squeeze or zoom of the outgoing frame
* blur: box blur or pixelation whose strength peaks at ``p = 0.5``
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..errors import CatalogError, PreconditionError
from ..video import Frame, to_grayscale

CATALOG: tuple[str, ...] = (
    "cut", "fade", "wipeleft", "wiperight", "wipeup", "wipedown",
    "slideleft", "slideright", "slideup", "slidedown", "circlecrop", "rectcrop",
    "distance", "fadeblack", "fadewhite", "radial", "smoothleft", "smoothright",
    "smoothup", "smoothdown", "circleopen", "circleclose", "vertopen", "vertclose",
    "horzopen", "horzclose", "dissolve", "pixelize", "diagtl", "diagtr",
    "diagbl", "diagbr", "hlslice", "hrslice", "vuslice", "vdslice",
    "hblur", "fadegrays", "wipetl", "wipetr", "wipebl", "wipebr",
    "squeezeh", "squeezev", "zoomin", "fadefast", "fadeslow", "hlwind",
    "hrwind", "vuwind", "vdwind", "coverleft", "coverright", "coverup",
    "coverdown", "revealleft", "revealright", "revealup", "revealdown",
)

SLICE_WIDTH = 16
WIND_JITTER = 0.5


def _u8(x: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def _mix(a: np.ndarray, b: np.ndarray, w) -> np.ndarray:
    """Float blend ``a * (1 - w) + b * w``; ``w`` is a scalar or an (H, W) map."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim == 2:
        w = w[..., None]
    return a.astype(np.float64) * (1.0 - w) + b.astype(np.float64) * w


def _select(mask: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(mask[..., None], b, a)


def _grid(a: np.ndarray):
    h, w = a.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w]
    return h, w, ys, xs


def _smoothstep(p: float) -> float:
    return 3 * p * p - 2 * p ** 3


# -- orientation helpers: every directional family is written for "left" on
# axis 1 and mapped to the other directions by flips and transposes.

def _oriented(fn, direction: str):
    def render(a, b, p, seed):
        if direction == "left":
            return fn(a, b, p, seed)
        if direction == "right":
            return fn(a[:, ::-1], b[:, ::-1], p, seed)[:, ::-1]
        t = (1, 0, 2)
        if direction == "up":
            return fn(a.transpose(t), b.transpose(t), p, seed).transpose(t)
        if direction == "down":
            return fn(a.transpose(t)[:, ::-1], b.transpose(t)[:, ::-1], p, seed)[:, ::-1].transpose(t)
        raise ValueError(direction)

    return render


# -- blend family

def _fade(gamma: float = 1.0):
    def render(a, b, p, seed):
        return _u8(_mix(a, b, p ** gamma))

    return render


def _fade_through(level: int):
    def render(a, b, p, seed):
        solid = np.full_like(a, level)
        if p < 0.5:
            return _u8(_mix(a, solid, 2 * p))
        return _u8(_mix(solid, b, 2 * p - 1))

    return render


def _fadegrays(a, b, p, seed):
    gray = np.repeat(to_grayscale(a)[..., None], 3, axis=2)
    if p < 0.5:
        return _u8(_mix(a, gray, 2 * p))
    return _u8(_mix(gray, b, 2 * p - 1))


def _dissolve(a, b, p, seed):
    u = np.random.default_rng(seed).random(a.shape[:2])
    return _select(u < p, a, b)


def _distance(a, b, p, seed):
    diff = a.astype(np.float64) - b.astype(np.float64)
    dist = np.sqrt((diff ** 2).sum(axis=2)) / (255.0 * math.sqrt(3.0))
    # pixels that differ more switch later
    return _u8(_mix(a, b, p ** (1.0 + 3.0 * dist)))


# -- wipe / diag family

def _wipe(kind: str):
    def render(a, b, p, seed):
        h, w, ys, xs = _grid(a)
        right, below = xs >= w * (1 - p), ys >= h * (1 - p)
        left, above = xs < w * p, ys < h * p
        mask = {
            "left": right, "right": left, "up": below, "down": above,
            # corner wipes grow from the opposite corner towards the named one
            "tl": right & below, "tr": left & below,
            "bl": right & above, "br": left & above,
        }[kind]
        return _select(mask, a, b)

    return render


def _diag(corner: str):
    def render(a, b, p, seed):
        h, w, ys, xs = _grid(a)
        u, v = (xs + 0.5) / w, (ys + 0.5) / h
        if "r" in corner:
            u = 1 - u
        if "b" in corner:
            v = 1 - v
        return _select(u + v < 2 * p, a, b)

    return render


# -- slide / smooth / cover / reveal family

def _translate(mode: str, eased: bool = False):
    def render(a, b, p, seed):
        w = a.shape[1]
        off = int(math.floor((_smoothstep(p) if eased else p) * w))
        off = min(max(off, 0), w)
        out = a.copy()
        if mode in ("push", "reveal"):
            out[:, : w - off] = a[:, off:]
        if mode in ("push", "cover"):
            out[:, w - off :] = b[:, :off]
        else:
            out[:, w - off :] = b[:, w - off :]
        return out

    return render


# -- aperture family

def _polar(a):
    h, w, ys, xs = _grid(a)
    cx, cy = w / 2.0, h / 2.0
    return xs + 0.5 - cx, ys + 0.5 - cy, cx, cy


def _circle(kind: str):
    def render(a, b, p, seed):
        dx, dy, cx, cy = _polar(a)
        dist = np.hypot(dx, dy)
        radius = math.hypot(cx, cy)
        if kind == "open":
            return _select(dist < p * radius, a, b)
        if kind == "close":
            return _select(dist >= (1 - p) * radius, a, b)
        black = np.zeros_like(a)
        if p < 0.5:
            return _select(dist < (1 - 2 * p) * radius, black, a)
        return _select(dist < (2 * p - 1) * radius, black, b)

    return render


def _rectcrop(a, b, p, seed):
    dx, dy, cx, cy = _polar(a)
    r = np.maximum(np.abs(dx) / cx, np.abs(dy) / cy)
    black = np.zeros_like(a)
    if p < 0.5:
        return _select(r < 1 - 2 * p, black, a)
    return _select(r < 2 * p - 1, black, b)


def _slit(axis: str, opening: bool):
    def render(a, b, p, seed):
        dx, dy, cx, cy = _polar(a)
        r = np.abs(dx) / cx if axis == "vert" else np.abs(dy) / cy
        mask = r < p if opening else r >= 1 - p
        return _select(mask, a, b)

    return render


def _radial(a, b, p, seed):
    dx, dy, _, _ = _polar(a)
    theta = np.mod(np.arctan2(dx, -dy), 2 * math.pi)
    theta = np.where(theta >= 2 * math.pi, 0.0, theta)
    return _select(theta < 2 * math.pi * p, a, b)


# -- slice / wind family

def _slice(a, b, p, seed):
    w = a.shape[1]
    k = -(-w // SLICE_WIDTH)
    xs = np.arange(w)
    strip = xs // SLICE_WIDTH
    offset = xs - strip * SLICE_WIDTH
    widths = np.minimum(SLICE_WIDTH, w - strip * SLICE_WIDTH)
    progress = np.clip(2 * p - strip / k, 0.0, 1.0)
    cols = offset < progress * widths
    return _select(np.broadcast_to(cols, a.shape[:2]), a, b)


def _wind(a, b, p, seed):
    h, w = a.shape[:2]
    jitter = np.random.default_rng(seed).random(h)
    bound = np.clip(p * (1 + WIND_JITTER) - WIND_JITTER * jitter, 0.0, 1.0)
    u = (np.arange(w) + 0.5) / w
    return _select(u[None, :] < bound[:, None], a, b)


# -- geometric family

def _squeeze(a, b, p, seed):
    w = a.shape[1]
    width = int(math.floor(w * (1 - p) + 0.5))
    if width <= 0:
        return b.copy()
    x0 = (w - width) // 2
    out = b.copy()
    src = (np.arange(width) * w) // width
    out[:, x0 : x0 + width] = a[:, src]
    return out


def _zoomin(a, b, p, seed):
    h, w = a.shape[:2]
    scale = 1.0 + p
    cx, cy = w / 2.0, h / 2.0
    sx = np.clip(np.floor((np.arange(w) + 0.5 - cx) / scale + cx), 0, w - 1).astype(int)
    sy = np.clip(np.floor((np.arange(h) + 0.5 - cy) / scale + cy), 0, h - 1).astype(int)
    zoomed = a[sy][:, sx]
    return _u8(_mix(zoomed, b, p))


# -- blur family

def _strength(p: float) -> float:
    return 4 * p * (1 - p)


def _hblur(a, b, p, seed):
    base = _mix(a, b, p)
    radius = int(math.ceil(_strength(p) * 16))
    if radius == 0:
        return _u8(base)
    padded = np.pad(base, ((0, 0), (radius + 1, radius), (0, 0)), mode="edge")
    csum = np.cumsum(padded, axis=1)
    window = 2 * radius + 1
    blurred = (csum[:, window:] - csum[:, :-window]) / window
    return _u8(blurred)


def _pixelize(a, b, p, seed):
    base = _mix(a, b, p)
    side = max(1, int(math.ceil(_strength(p) * 32)))
    h, w = base.shape[:2]
    out = np.empty_like(base)
    for y in range(0, h, side):
        for x in range(0, w, side):
            block = base[y : y + side, x : x + side]
            out[y : y + side, x : x + side] = block.mean(axis=(0, 1))
    return _u8(out)


def _cut(a, b, p, seed):
    return a.copy() if p < 0.5 else b.copy()


Renderer = Callable[[np.ndarray, np.ndarray, float, int], np.ndarray]

_RENDERERS: dict[str, tuple[str, Renderer]] = {
    "cut": ("cut", _cut),
    "fade": ("blend", _fade()),
    "fadefast": ("blend", _fade(0.5)),
    "fadeslow": ("blend", _fade(2.0)),
    "fadeblack": ("blend", _fade_through(0)),
    "fadewhite": ("blend", _fade_through(255)),
    "fadegrays": ("blend", _fadegrays),
    "dissolve": ("blend", _dissolve),
    "distance": ("blend", _distance),
    "radial": ("aperture", _radial),
    "circleopen": ("aperture", _circle("open")),
    "circleclose": ("aperture", _circle("close")),
    "circlecrop": ("aperture", _circle("crop")),
    "rectcrop": ("aperture", _rectcrop),
    "vertopen": ("aperture", _slit("vert", True)),
    "vertclose": ("aperture", _slit("vert", False)),
    "horzopen": ("aperture", _slit("horz", True)),
    "horzclose": ("aperture", _slit("horz", False)),
    "pixelize": ("blur", _pixelize),
    "hblur": ("blur", _hblur),
    "squeezeh": ("geometric", _squeeze),
    "squeezev": ("geometric", _oriented(_squeeze, "up")),
    "zoomin": ("geometric", _zoomin),
    "hlslice": ("slice", _slice),
    "hrslice": ("slice", _oriented(_slice, "right")),
    "vuslice": ("slice", _oriented(_slice, "up")),
    "vdslice": ("slice", _oriented(_slice, "down")),
    "hlwind": ("wind", _wind),
    "hrwind": ("wind", _oriented(_wind, "right")),
    "vuwind": ("wind", _oriented(_wind, "down")),
    "vdwind": ("wind", _oriented(_wind, "up")),
}

for _d in ("left", "right", "up", "down"):
    _RENDERERS[f"wipe{_d}"] = ("wipe", _wipe(_d))
    _RENDERERS[f"slide{_d}"] = ("slide", _oriented(_translate("push"), _d))
    _RENDERERS[f"smooth{_d}"] = ("slide", _oriented(_translate("push", eased=True), _d))
    _RENDERERS[f"cover{_d}"] = ("slide", _oriented(_translate("cover"), _d))
    _RENDERERS[f"reveal{_d}"] = ("slide", _oriented(_translate("reveal"), _d))
for _c in ("tl", "tr", "bl", "br"):
    _RENDERERS[f"wipe{_c}"] = ("wipe", _wipe(_c))
    _RENDERERS[f"diag{_c}"] = ("wipe", _diag(_c))

assert set(_RENDERERS) == set(CATALOG) and len(CATALOG) == 59


def family(effect: str) -> str:
    try:
        return _RENDERERS[effect][0]
    except KeyError:
        raise CatalogError(f"unknown effect {effect!r}") from None


def easing(effect: str) -> str:
    """Timing curve label of an effect: linear, fast, slow or smooth."""
    family(effect)
    if effect == "fadefast":
        return "fast"
    if effect == "fadeslow":
        return "slow"
    if effect.startswith("smooth"):
        return "smooth"
    return "linear"


def render_transition(out_frame, in_frame, effect: str, p: float, seed: int = 0) -> Frame:
    """Render one frame of ``effect`` at progress ``p`` between two frames."""
    if effect not in _RENDERERS:
        raise CatalogError(f"unknown effect {effect!r}")
    a = out_frame.pixels if isinstance(out_frame, Frame) else np.asarray(out_frame, dtype=np.uint8)
    b = in_frame.pixels if isinstance(in_frame, Frame) else np.asarray(in_frame, dtype=np.uint8)
    if a.shape != b.shape:
        raise PreconditionError(f"frame sizes differ: {a.shape} vs {b.shape}")
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"progress must be in [0, 1], got {p}")
    if p == 0.0:
        return Frame(a)
    if p == 1.0:
        return Frame(b)
    return Frame(_RENDERERS[effect][1](a, b, float(p), int(seed) & (2**64 - 1)))
