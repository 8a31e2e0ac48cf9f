"""Pixel classification stages.

Three-stage cascade, each stage restricting the next: background subtraction,
histogram-based skin classification (optional), HSV tolerance masking, plus a
box-majority denoise pass over the final binary mask. All operations are pure;
masks, models and histograms are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .imaging import Frame, HsvPixel


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Per-pixel boolean raster, row-major, same dimensions as its source frame."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.bits.shape != (self.height, self.width) or self.bits.dtype != np.bool_:
            raise ValueError(
                f"mask bits must be ({self.height}, {self.width}) bool, "
                f"got {self.bits.shape} {self.bits.dtype}"
            )
        self.bits.setflags(write=False)

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "BinaryMask":
        bits = np.ascontiguousarray(bits, dtype=np.bool_)
        return cls(bits.shape[1], bits.shape[0], bits)

    @property
    def count(self) -> int:
        """Number of set bits."""
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

    def __and__(self, other: "BinaryMask") -> "BinaryMask":
        if (self.width, self.height) != (other.width, other.height):
            raise ValueError("mask dimensions differ")
        return BinaryMask.from_bits(self.bits & other.bits)


@dataclass(frozen=True)
class BackgroundModel:
    """Per-pixel per-channel mean of the startup background frames."""

    width: int
    height: int
    mean: np.ndarray  # (height, width, 3) float64, values in [0, 255]

    def __post_init__(self) -> None:
        if self.mean.shape != (self.height, self.width, 3):
            raise ValueError("background mean shape does not match dimensions")
        self.mean.setflags(write=False)


@dataclass(frozen=True)
class SkinHistogram:
    """3D RGB histograms of skin and non-skin training samples."""

    bins_per_channel: int
    skin_counts: np.ndarray  # (bins, bins, bins) int64
    nonskin_counts: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.bins_per_channel,) * 3
        if self.skin_counts.shape != shape or self.nonskin_counts.shape != shape:
            raise ValueError(f"count arrays must have shape {shape}")
        if (self.skin_counts < 0).any() or (self.nonskin_counts < 0).any():
            raise ValueError("histogram counts must be non-negative")
        self.skin_counts.setflags(write=False)
        self.nonskin_counts.setflags(write=False)

    @property
    def has_samples(self) -> bool:
        """Classification is only permitted once at least one count is positive."""
        return bool(self.skin_counts.any() or self.nonskin_counts.any())


@dataclass(frozen=True)
class ColorTarget:
    """Tolerance window on the HSV hue circle with saturation/value floors.

    Membership: min(|h-c|, 360-|h-c|) <= hue_tol and s >= sat_min and v >= val_min.
    """

    hue_center: float
    hue_tol: float
    sat_min: float
    val_min: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.hue_center < 360.0:
            raise ValueError(f"hue_center must be in [0, 360), got {self.hue_center}")
        if not 0.0 < self.hue_tol <= 180.0:
            raise ValueError(f"hue_tol must be in (0, 180], got {self.hue_tol}")
        if not 0.0 <= self.sat_min <= 1.0 or not 0.0 <= self.val_min <= 1.0:
            raise ValueError("sat_min and val_min must be in [0, 1]")

    def contains(self, pixel: HsvPixel) -> bool:
        dh = abs(pixel.hue - self.hue_center)
        dh = min(dh, 360.0 - dh)
        return dh <= self.hue_tol and pixel.saturation >= self.sat_min and pixel.value >= self.val_min


def _check_same_dims(width: int, height: int, frame: Frame) -> None:
    if (frame.width, frame.height) != (width, height):
        raise ValueError(
            f"dimension mismatch: {frame.width}x{frame.height} vs expected {width}x{height}"
        )


def capture_background(frames: Sequence[Frame]) -> BackgroundModel:
    """Average one or more frames of the static workspace (the startup capture)."""
    if not frames:
        raise ValueError("background capture needs at least one frame")
    first = frames[0]
    acc = np.zeros((first.height, first.width, 3), dtype=np.float64)
    for frame in frames:
        _check_same_dims(first.width, first.height, frame)
        acc += frame.pixels
    acc /= len(frames)
    return BackgroundModel(first.width, first.height, acc)


def subtract_background(frame: Frame, bg: BackgroundModel, threshold: float) -> BinaryMask:
    """Foreground bit iff max over channels of |pixel - mean| exceeds the threshold."""
    _check_same_dims(bg.width, bg.height, frame)
    diff = np.abs(frame.pixels.astype(np.float64) - bg.mean)
    return BinaryMask.from_bits(diff.max(axis=-1) > threshold)


def train_skin_histogram(
    samples: Iterable[tuple[tuple[int, int, int], bool]],
    bins_per_channel: int = 32,
) -> SkinHistogram:
    """Count labeled RGB samples into skin/non-skin bins of width 256/bins per axis."""
    if bins_per_channel < 1 or 256 % bins_per_channel != 0:
        raise ValueError(f"bins_per_channel must divide 256, got {bins_per_channel}")
    width = 256 // bins_per_channel
    shape = (bins_per_channel,) * 3
    skin = np.zeros(shape, dtype=np.int64)
    nonskin = np.zeros(shape, dtype=np.int64)
    for (r, g, b), is_skin in samples:
        target = skin if is_skin else nonskin
        target[r // width, g // width, b // width] += 1
    return SkinHistogram(bins_per_channel, skin, nonskin)


def skin_probability(rgb: tuple[int, int, int], hist: SkinHistogram) -> float:
    """p = s / (s + n) for the pixel's bin; 0 when the bin was never observed."""
    if not hist.has_samples:
        raise ValueError("skin histogram has no samples; train it before classifying")
    width = 256 // hist.bins_per_channel
    r, g, b = rgb
    idx = (r // width, g // width, b // width)
    s = int(hist.skin_counts[idx])
    n = int(hist.nonskin_counts[idx])
    total = s + n
    return s / total if total else 0.0


def skin_mask(frame: Frame, hist: SkinHistogram, theta: float) -> BinaryMask:
    """Bit set iff skin_probability >= theta."""
    if not hist.has_samples:
        raise ValueError("skin histogram has no samples; train it before classifying")
    width = 256 // hist.bins_per_channel
    idx = frame.pixels // width
    ri, gi, bi = idx[..., 0], idx[..., 1], idx[..., 2]
    s = hist.skin_counts[ri, gi, bi].astype(np.float64)
    n = hist.nonskin_counts[ri, gi, bi].astype(np.float64)
    total = s + n
    p = np.divide(s, total, out=np.zeros_like(s), where=total > 0)
    return BinaryMask.from_bits(p >= theta)


def color_mask(frame: Frame, target: ColorTarget, restrict: Optional[BinaryMask] = None) -> BinaryMask:
    """Tolerance mask in the hue/saturation/value planes, optionally ANDed with `restrict`."""
    if restrict is not None and (restrict.width, restrict.height) != (frame.width, frame.height):
        raise ValueError(
            f"restrict mask is {restrict.width}x{restrict.height}, "
            f"frame is {frame.width}x{frame.height}"
        )
    h, s, v = frame.hsv
    dh = np.abs(h - target.hue_center)
    dh = np.minimum(dh, 360.0 - dh)
    bits = (dh <= target.hue_tol) & (s >= target.sat_min) & (v >= target.val_min)
    if restrict is not None:
        bits &= restrict.bits
    return BinaryMask.from_bits(bits)


def denoise(mask: BinaryMask, window: int = 3, majority: float = 0.5) -> BinaryMask:
    """Box-majority vote: output bit iff the window x window neighborhood
    (zero-padded at the borders) holds >= majority * window^2 set bits.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if not 0.0 < majority <= 1.0:
        raise ValueError(f"majority must be in (0, 1], got {majority}")
    h, w = mask.height, mask.width
    summed = np.zeros((h + 1, w + 1), dtype=np.int64)
    summed[1:, 1:] = mask.bits.astype(np.int64).cumsum(axis=0).cumsum(axis=1)
    r = window // 2
    y0 = np.clip(np.arange(h) - r, 0, h)
    y1 = np.clip(np.arange(h) + r + 1, 0, h)
    x0 = np.clip(np.arange(w) - r, 0, w)
    x1 = np.clip(np.arange(w) + r + 1, 0, w)
    counts = (
        summed[np.ix_(y1, x1)]
        - summed[np.ix_(y0, x1)]
        - summed[np.ix_(y1, x0)]
        + summed[np.ix_(y0, x0)]
    )
    return BinaryMask.from_bits(counts >= majority * (window * window))


def render_skin_histogram(hist: SkinHistogram) -> str:
    """Text fixture format: "SKINHIST <bins>" then bins^3 lines "skin nonskin",
    r-major, g, b-minor."""
    lines = [f"SKINHIST {hist.bins_per_channel}"]
    skin = hist.skin_counts.reshape(-1)
    nonskin = hist.nonskin_counts.reshape(-1)
    lines.extend(f"{int(s)} {int(n)}" for s, n in zip(skin, nonskin))
    return "\n".join(lines) + "\n"


def parse_skin_histogram(text: str) -> SkinHistogram:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("SKINHIST "):
        raise ValueError("skin histogram file must start with 'SKINHIST <bins>'")
    bins = int(lines[0].split()[1])
    if bins < 1 or 256 % bins != 0:
        raise ValueError(f"bins_per_channel must divide 256, got {bins}")
    expected = bins**3
    if len(lines) - 1 != expected:
        raise ValueError(f"expected {expected} count lines, got {len(lines) - 1}")
    pairs = np.array([[int(tok) for tok in line.split()] for line in lines[1:]], dtype=np.int64)
    if pairs.shape != (expected, 2):
        raise ValueError("each count line must hold exactly two integers")
    shape = (bins, bins, bins)
    return SkinHistogram(bins, pairs[:, 0].reshape(shape).copy(), pairs[:, 1].reshape(shape).copy())


def load_skin_histogram(path: str | Path) -> SkinHistogram:
    return parse_skin_histogram(Path(path).read_text("ascii"))


def save_skin_histogram(hist: SkinHistogram, path: str | Path) -> None:
    Path(path).write_text(render_skin_histogram(hist), "ascii")
