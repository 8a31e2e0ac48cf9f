"""Blob extraction: connected components, per-color marker observations, tape distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import ndimage

from .segmentation import BinaryMask


class MarkerId(Enum):
    YELLOW = "YELLOW"  # index-finger tape, drives the cursor
    RED = "RED"  # thumb tape


@dataclass(frozen=True)
class Component:
    area: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]  # (xmin, ymin, xmax, ymax), inclusive


@dataclass(frozen=True)
class MarkerObservation:
    marker_id: MarkerId
    present: bool
    centroid: Optional[tuple[float, float]] = None
    area: Optional[int] = None
    bbox: Optional[tuple[int, int, int, int]] = None

    def __post_init__(self) -> None:
        if self.present and (self.centroid is None or self.area is None or self.bbox is None):
            raise ValueError("present observations need centroid, area and bbox")

    @classmethod
    def absent(cls, marker_id: MarkerId) -> "MarkerObservation":
        return cls(marker_id, False)


_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCTURE_8 = np.ones((3, 3), dtype=bool)


def connected_components(mask: BinaryMask, connectivity: int = 8) -> list[Component]:
    """Partition set bits into maximal regions under 4- or 8-adjacency.

    Centroids are means of pixel centers (px+0.5, py+0.5) over member pixels.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = _STRUCTURE_4 if connectivity == 4 else _STRUCTURE_8
    labels, n = ndimage.label(mask.bits, structure=structure)
    if n == 0:
        return []
    flat = labels.ravel()
    areas = np.bincount(flat, minlength=n + 1)
    ys, xs = np.nonzero(mask.bits)
    member = labels[ys, xs]
    sum_x = np.bincount(member, weights=xs + 0.5, minlength=n + 1)
    sum_y = np.bincount(member, weights=ys + 0.5, minlength=n + 1)
    slices = ndimage.find_objects(labels)
    components = []
    for label in range(1, n + 1):
        area = int(areas[label])
        sy, sx = slices[label - 1]
        components.append(
            Component(
                area=area,
                centroid=(sum_x[label] / area, sum_y[label] / area),
                bbox=(sx.start, sy.start, sx.stop - 1, sy.stop - 1),
            )
        )
    return components


def extract_marker(mask: BinaryMask, marker_id: MarkerId, min_blob_area: float) -> MarkerObservation:
    """Largest component with area >= min_blob_area; area ties broken by the
    component whose bbox has the smaller (ymin, xmin)."""
    candidates = [c for c in connected_components(mask) if c.area >= min_blob_area]
    if not candidates:
        return MarkerObservation.absent(marker_id)
    best = min(candidates, key=lambda c: (-c.area, c.bbox[1], c.bbox[0]))
    return MarkerObservation(marker_id, True, best.centroid, best.area, best.bbox)


def marker_distance(a: MarkerObservation, b: MarkerObservation) -> float:
    """Euclidean centroid distance; raises if either marker is absent."""
    if not a.present or not b.present:
        raise ValueError("distance undefined: marker absent")
    assert a.centroid is not None and b.centroid is not None
    return math.hypot(a.centroid[0] - b.centroid[0], a.centroid[1] - b.centroid[1])


_REFERENCE_PIXELS = 640 * 480


def scale_min_blob_area(base_area: float, width: int, height: int) -> float:
    """min_blob_area is configured at 640x480 and scales with the frame pixel count."""
    return base_area * (width * height) / _REFERENCE_PIXELS
