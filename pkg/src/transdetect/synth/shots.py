"""Procedurally generated "pure shots" for synthesis and tests."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..video import VideoClip, as_fps


def procedural_shot(
    width: int,
    height: int,
    n_frames: int,
    fps=25,
    seed: int = 0,
    speed: float = 0.4,
) -> VideoClip:
    """A smooth moving scene: a two-colour gradient under drifting soft blobs.

    Content moves by at most ``speed`` pixels per frame, so consecutive frames
    differ only slightly while different seeds give clearly different palettes.
    """
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    c0, c1 = rng.uniform(0, 255, size=(2, 3))
    angle = rng.uniform(0, 2 * np.pi)
    drift = rng.uniform(-speed, speed, size=2)
    n_blobs = 3
    centers = rng.uniform(0, 1, size=(n_blobs, 2)) * (width, height)
    velocity = rng.uniform(-speed, speed, size=(n_blobs, 2))
    colors = rng.uniform(0, 255, size=(n_blobs, 3))
    radius = rng.uniform(0.15, 0.35, size=n_blobs) * min(width, height)

    frames = np.empty((n_frames, height, width, 3), dtype=np.uint8)
    scale = max(width, height)
    for t in range(n_frames):
        gx = (xs + drift[0] * t) * np.cos(angle) + (ys + drift[1] * t) * np.sin(angle)
        g = 0.5 + 0.5 * np.sin(2 * np.pi * gx / (1.5 * scale))
        img = c0 * (1 - g[..., None]) + c1 * g[..., None]
        for b in range(n_blobs):
            cx, cy = centers[b] + velocity[b] * t
            w = np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * radius[b] ** 2))
            img = img * (1 - 0.8 * w[..., None]) + colors[b] * (0.8 * w[..., None])
        frames[t] = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
    return VideoClip(frames, as_fps(fps))


def procedural_shots(
    count: int,
    width: int,
    height: int,
    seconds,
    fps=25,
    seed: int = 0,
) -> list[VideoClip]:
    """``count`` shots of ``seconds`` each (a number or one value per shot)."""
    fps = as_fps(fps)
    if np.isscalar(seconds):
        seconds = [seconds] * count
    return [
        procedural_shot(width, height, int(Fraction(s) * fps) if isinstance(s, (int, Fraction)) else round(s * fps),
                        fps, seed=seed * 1_000_003 + i)
        for i, s in enumerate(seconds)
    ]
