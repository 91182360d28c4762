"""Frames, clips and the lossless ``.stdv`` raw container.

A ``.stdv`` file is a little-endian header followed by raw RGB24 frames::

    magic      8 bytes  b"STDVID01"
    width      u32
    height     u32
    fps_num    u32
    fps_den    u32
    frames     u64
    payload    frames * height * width * 3 bytes, row-major RGB

The 6-channel variant (magic ``b"STDVF601"``) has the same header and
6 bytes per pixel; it carries color frames fused with flow visualizations.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    FormatError,
    InconsistencyError,
    PreconditionError,
    TruncationError,
    UnsupportedFormatError,
)

MAGIC = b"STDVID01"
FUSED_MAGIC = b"STDVF601"
HEADER = struct.Struct("<8sIIIIQ")


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    array.flags.writeable = False
    return array


def as_fps(fps) -> Fraction:
    """Coerce ``25``, ``"30000/1001"``, ``(25, 1)`` or a Fraction to a Fraction."""
    if isinstance(fps, Fraction):
        value = fps
    elif isinstance(fps, (tuple, list)):
        num, den = fps
        if int(num) <= 0 or int(den) <= 0:
            raise PreconditionError(f"fps must be positive, got {num}/{den}")
        value = Fraction(int(num), int(den))
    elif isinstance(fps, str):
        value = Fraction(fps)
    elif isinstance(fps, float):
        value = Fraction(fps).limit_denominator(1001)
    else:
        value = Fraction(fps)
    if value <= 0:
        raise PreconditionError(f"fps must be positive, got {value}")
    return value


@dataclass(frozen=True, eq=False)
class Frame:
    """One RGB24 image, stored as a read-only ``(height, width, 3)`` array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise PreconditionError(f"frame must be (H, W, 3), got {px.shape}")
        if px.shape[0] <= 0 or px.shape[1] <= 0:
            raise PreconditionError("frame dimensions must be positive")
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


class VideoClip:
    """A fixed-rate sequence of equally sized RGB frames.

    Frames are held as a single read-only ``(N, H, W, 3)`` uint8 array;
    indexing and iteration yield :class:`Frame` views.
    """

    def __init__(self, frames, fps):
        if isinstance(frames, np.ndarray):
            array = frames
        else:
            frames = list(frames)
            if frames and isinstance(frames[0], Frame):
                shapes = {f.pixels.shape for f in frames}
                if len(shapes) > 1:
                    raise InconsistencyError(f"frames differ in size: {sorted(shapes)}")
                array = np.stack([f.pixels for f in frames]) if frames else np.zeros((0, 1, 1, 3))
            else:
                array = np.asarray(frames) if frames else np.zeros((0, 1, 1, 3))
        if array.ndim != 4 or array.shape[3] != 3:
            raise PreconditionError(f"clip array must be (N, H, W, 3), got {array.shape}")
        if array.shape[1] <= 0 or array.shape[2] <= 0:
            raise PreconditionError("frame dimensions must be positive")
        self.array = _frozen(array)
        self.fps = as_fps(fps)

    def __len__(self) -> int:
        return self.array.shape[0]

    def __getitem__(self, index: int) -> Frame:
        return Frame(self.array[index])

    def __iter__(self) -> Iterator[Frame]:
        for i in range(len(self)):
            yield Frame(self.array[i])

    def __eq__(self, other):
        if not isinstance(other, VideoClip):
            return NotImplemented
        return self.fps == other.fps and np.array_equal(self.array, other.array)

    __hash__ = None

    def __repr__(self):
        return (
            f"VideoClip({len(self)} frames, {self.width}x{self.height}, "
            f"fps={self.fps.numerator}/{self.fps.denominator})"
        )

    @property
    def width(self) -> int:
        return self.array.shape[2]

    @property
    def height(self) -> int:
        return self.array.shape[1]

    @property
    def frames(self) -> list[Frame]:
        return list(self)

    @property
    def duration(self) -> Fraction:
        """Exact duration in seconds, ``N / fps``."""
        return len(self) / self.fps

    def frame_time(self, index: int) -> Fraction:
        return frame_time(index, self.fps)

    def subclip(self, start: int, stop: int) -> "VideoClip":
        return VideoClip(self.array[start:stop], self.fps)


def frame_time(index: int, fps) -> Fraction:
    """Timestamp of frame ``index``: exactly ``index * den / num`` seconds."""
    fps = as_fps(fps)
    return Fraction(index * fps.denominator, fps.numerator)


def to_grayscale(frame: Frame | np.ndarray) -> np.ndarray:
    """BT.601 luma, ``round(0.299 R + 0.587 G + 0.114 B)``, as uint8.

    Accepts a Frame or any ``(..., 3)`` uint8 array; integer arithmetic keeps
    the rounding exact (halves round up).
    """
    px = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    rgb = px.astype(np.int32)
    y = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return np.clip(y, 0, 255).astype(np.uint8)


def _write(path, magic: bytes, array: np.ndarray, fps: Fraction) -> None:
    n, h, w, _ = array.shape
    header = HEADER.pack(magic, w, h, fps.numerator, fps.denominator, n)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(array, dtype=np.uint8).tobytes())


def _read(path, magic: bytes, channels: int) -> tuple[np.ndarray, Fraction]:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(magic) or data[: len(magic)] != magic:
        raise FormatError(f"{path}: bad magic {data[:8]!r}, expected {magic!r}")
    if len(data) < HEADER.size:
        raise TruncationError(path, HEADER.size, len(data))
    _, w, h, num, den, n = HEADER.unpack_from(data)
    if w == 0 or h == 0 or num == 0 or den == 0:
        raise FormatError(f"{path}: invalid header ({w}x{h}, fps {num}/{den})")
    expected = n * h * w * channels
    payload = len(data) - HEADER.size
    if payload < expected:
        raise TruncationError(path, expected, payload)
    if payload > expected:
        raise FormatError(f"{path}: {payload - expected} trailing bytes after payload")
    array = np.frombuffer(data, dtype=np.uint8, offset=HEADER.size)
    return array.reshape(n, h, w, channels), Fraction(num, den)


def save_rawvid(clip: VideoClip, path) -> None:
    """Write ``clip`` to ``path`` in the ``.stdv`` container."""
    if len(clip) == 0:
        raise PreconditionError("cannot save an empty clip")
    _write(path, MAGIC, clip.array, clip.fps)


def load_rawvid(path) -> VideoClip:
    """Read a ``.stdv`` file written by :func:`save_rawvid`."""
    array, fps = _read(path, MAGIC, 3)
    return VideoClip(array, fps)


def save_fused_rawvid(frames: np.ndarray, fps, path) -> None:
    """Write ``(N, H, W, 6)`` fused frames with the ``STDVF601`` magic."""
    frames = np.asarray(frames)
    if frames.ndim != 4 or frames.shape[3] != 6:
        raise PreconditionError(f"fused frames must be (N, H, W, 6), got {frames.shape}")
    if frames.shape[0] == 0:
        raise PreconditionError("cannot save an empty clip")
    _write(path, FUSED_MAGIC, frames, as_fps(fps))


def load_fused_rawvid(path) -> tuple[np.ndarray, Fraction]:
    return _read(path, FUSED_MAGIC, 6)


def _ppm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise UnsupportedFormatError("incomplete PPM header")
        tokens.append(data[start:pos])
    return tokens, pos


def read_ppm(path) -> np.ndarray:
    """Read a binary P6 PPM with maxval 255 into an ``(H, W, 3)`` array."""
    data = Path(path).read_bytes()
    if data[:2] != b"P6":
        raise UnsupportedFormatError(f"{path}: only binary P6 PPM is supported, got {data[:2]!r}")
    (magic, w, h, maxval), pos = _ppm_tokens(data, 4)
    if int(maxval) != 255:
        raise UnsupportedFormatError(f"{path}: maxval {int(maxval)} unsupported, need 255")
    w, h = int(w), int(h)
    pos += 1  # single whitespace byte after maxval
    expected = w * h * 3
    if len(data) - pos < expected:
        raise TruncationError(path, expected, len(data) - pos)
    return np.frombuffer(data, dtype=np.uint8, count=expected, offset=pos).reshape(h, w, 3)


def write_ppm(pixels: np.ndarray, path) -> None:
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    h, w, _ = pixels.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(pixels.tobytes())


def import_ppm_sequence(directory, fps) -> VideoClip:
    """Build a clip from the ``*.ppm`` files of ``directory`` in filename order."""
    directory = Path(directory)
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".ppm")
    if not paths:
        raise PreconditionError(f"{directory}: no .ppm files")
    images = [read_ppm(p) for p in paths]
    first = images[0].shape
    for p, img in zip(paths, images):
        if img.shape != first:
            raise InconsistencyError(
                f"{p.name}: {img.shape[1]}x{img.shape[0]} differs from "
                f"{paths[0].name}: {first[1]}x{first[0]}"
            )
    return VideoClip(np.stack(images), fps)


def export_ppm_sequence(clip: VideoClip, directory) -> list[Path]:
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)
    width = max(3, len(str(len(clip) - 1)))
    out = []
    for i in range(len(clip)):
        path = directory / f"{i:0{width}d}.ppm"
        write_ppm(clip.array[i], path)
        out.append(path)
    return out


def concat_clips(clips: Sequence[VideoClip]) -> VideoClip:
    if not clips:
        raise PreconditionError("nothing to concatenate")
    fps = clips[0].fps
    if any(c.fps != fps for c in clips):
        raise InconsistencyError("clips differ in fps")
    return VideoClip(np.concatenate([c.array for c in clips]), fps)
