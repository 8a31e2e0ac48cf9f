"""Frame representation, binary PPM (P6) I/O and synthetic scene generation.

Frames are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np


class PpmFormatError(ValueError):
    """P6 data could not be parsed (bad magic, header, maxval, dimensions or payload)."""


@dataclass(frozen=True)
class HsvPixel:
    hue: float  # degrees in [0, 360); stored as 0 when saturation == 0
    saturation: float  # fraction in [0, 1]
    value: float  # fraction in [0, 1]


@dataclass(frozen=True)
class DiskSpec:
    """Filled disk for synthetic frames.

    Pixel (px, py) is painted iff (px+0.5-cx)^2 + (py+0.5-cy)^2 <= r^2
    (pixel-center sampling, so centroids of fully visible disks are predictable).
    """

    center: tuple[float, float]
    radius: float
    color: tuple[int, int, int]

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"disk radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class Frame:
    """One RGB8 frame: pixels is (height, width, 3) uint8, row-major, top-left origin."""

    width: int
    height: int
    pixels: np.ndarray
    timestamp_ms: float = 0.0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame dimensions must be >= 1, got {self.width}x{self.height}")
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixel buffer shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x3"
            )
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"pixel buffer must be uint8, got {self.pixels.dtype}")
        if self.timestamp_ms < 0:
            raise ValueError("timestamp_ms must be non-negative")
        self.pixels.setflags(write=False)

    @cached_property
    def hsv(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(hue_degrees, saturation, value) float64 planes, computed once per frame.

        Agrees pixelwise with rgb_to_hsv.
        """
        return _hsv_planes(self.pixels)


def rgb_to_hsv(r: int, g: int, b: int) -> HsvPixel:
    """Hexcone RGB8 -> HSV; hue in degrees, v = max/255, s = (max-min)/max (0 if max = 0)."""
    h, s, v = colorsys.rgb_to_hsv(r / 255.0, g / 255.0, b / 255.0)
    return HsvPixel(h * 360.0, s, v)


def hsv_to_rgb(pixel: HsvPixel) -> tuple[int, int, int]:
    """Inverse of rgb_to_hsv, rounded to 8-bit channels."""
    r, g, b = colorsys.hsv_to_rgb(pixel.hue / 360.0, pixel.saturation, pixel.value)
    return round(r * 255), round(g * 255), round(b * 255)


def _hsv_planes(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Same operation sequence as colorsys.rgb_to_hsv on /255-normalized channels,
    # so the vectorized planes match the scalar conversion bit for bit.
    rgb = pixels.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = np.max(rgb, axis=-1)
    minc = np.min(rgb, axis=-1)
    rangec = maxc - minc
    chromatic = rangec > 0.0
    safe_range = np.where(chromatic, rangec, 1.0)
    safe_max = np.where(maxc > 0.0, maxc, 1.0)
    s = np.where(chromatic, rangec / safe_max, 0.0)
    rc = (maxc - r) / safe_range
    gc = (maxc - g) / safe_range
    bc = (maxc - b) / safe_range
    h = np.where(r == maxc, bc - gc, np.where(g == maxc, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(chromatic, (h / 6.0) % 1.0, 0.0)
    return h * 360.0, s, maxc


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":  # comment runs to end of line
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise PpmFormatError("truncated header: expected more header fields")
    return data[start:pos], pos


def load_ppm(data: bytes, timestamp_ms: float = 0.0) -> Frame:
    """Parse a binary P6 pixmap (maxval 255). Timestamps are assigned by the caller."""
    if data[:2] != b"P6":
        raise PpmFormatError("bad magic: not a P6 pixmap")
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _next_token(data, pos)
        if not token.isdigit():
            raise PpmFormatError(f"bad header field {token!r}: expected a decimal integer")
        fields.append(int(token))
    width, height, maxval = fields
    if maxval != 255:
        raise PpmFormatError(f"unsupported maxval {maxval}: only 255 is handled")
    if width < 1 or height < 1:
        raise PpmFormatError(f"bad dimensions {width}x{height}: must be >= 1")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos:]
    expected = width * height * 3
    if len(payload) < expected:
        raise PpmFormatError(f"truncated pixel payload: {len(payload)} bytes, expected {expected}")
    if len(payload) > expected:
        raise PpmFormatError(f"trailing data after pixel payload ({len(payload) - expected} bytes)")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return Frame(width, height, pixels, timestamp_ms)


def save_ppm(frame: Frame) -> bytes:
    """Serialize with the canonical header "P6\\n<w> <h>\\n255\\n"."""
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.pixels.tobytes()


def synth_frame(
    width: int,
    height: int,
    background: tuple[int, int, int],
    disks: Sequence[DiskSpec] = (),
    timestamp_ms: float = 0.0,
) -> Frame:
    """Deterministic synthetic frame: background fill, then disks in list order (painter's order)."""
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:] = background
    for disk in disks:
        cx, cy = disk.center
        r = disk.radius
        x0 = max(0, math.floor(cx - r))
        x1 = min(width, math.ceil(cx + r) + 1)
        y0 = max(0, math.floor(cy - r))
        y1 = min(height, math.ceil(cy + r) + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        dx = np.arange(x0, x1, dtype=np.float64) + 0.5 - cx
        dy = np.arange(y0, y1, dtype=np.float64) + 0.5 - cy
        inside = dx[None, :] ** 2 + dy[:, None] ** 2 <= r * r
        pixels[y0:y1, x0:x1][inside] = disk.color
    return Frame(width, height, pixels, timestamp_ms)


def iter_frame_dir(path: str | Path, fps: float) -> Iterator[Frame]:
    """Read a directory of numbered .ppm files in lexicographic order.

    Frame i (0-based) gets timestamp i * (1000 / fps).
    """
    if fps <= 0:
        raise ValueError(f"fps must be > 0, got {fps}")
    directory = Path(path)
    if not directory.is_dir():
        raise FileNotFoundError(f"frame directory not found: {directory}")
    files = sorted(p for p in directory.iterdir() if p.suffix == ".ppm")
    period = 1000.0 / fps
    for i, file in enumerate(files):
        yield load_ppm(file.read_bytes(), timestamp_ms=i * period)


def write_frame_dir(path: str | Path, frames: Iterable[Frame]) -> int:
    """Write frames as frame_000001.ppm, frame_000002.ppm, ... Returns the count."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    count = 0
    for i, frame in enumerate(frames, start=1):
        (directory / f"frame_{i:06d}.ppm").write_bytes(save_ppm(frame))
        count = i
    return count
