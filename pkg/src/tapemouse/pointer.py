"""Camera-to-screen cursor mapping.

Two methods: absolute position mapping (the default, more accurate) and
weighted-speed control where the cursor delta grows with the inter-frame
finger displacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .tracking import MarkerObservation


@dataclass(frozen=True)
class Resolution:
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"resolution must be positive, got {self.width}x{self.height}")


class PointerMode(Enum):
    ABSOLUTE = "ABSOLUTE"
    SPEED = "SPEED"


@dataclass(frozen=True)
class PointerState:
    """Cursor position in screen pixels plus the previous camera-space marker position."""

    screen_pos: tuple[int, int] = (0, 0)
    prev_cam_pos: Optional[tuple[float, float]] = None


def _clamp(value: float, lo: float, hi: float) -> float:
    return lo if value < lo else hi if value > hi else value


def map_absolute(
    cam_pt: tuple[float, float], cam_res: Resolution, screen_res: Resolution
) -> tuple[int, int]:
    """sx = floor(x * sw / cw), sy likewise, clamped into screen bounds.

    Floor scaling keeps unit camera steps mapping to constant screen jumps
    (e.g. exactly 4 px for 640 -> 2560). Subpixel centroids marginally outside
    the camera bounds are clamped, not rejected.
    """
    x = _clamp(cam_pt[0], 0.0, float(cam_res.width))
    y = _clamp(cam_pt[1], 0.0, float(cam_res.height))
    sx = math.floor(x * screen_res.width / cam_res.width)
    sy = math.floor(y * screen_res.height / cam_res.height)
    sx = int(_clamp(sx, 0, screen_res.width - 1))
    sy = int(_clamp(sy, 0, screen_res.height - 1))
    return sx, sy


def map_weighted_speed(
    prev_cam_pt: tuple[float, float],
    cur_cam_pt: tuple[float, float],
    gain: float,
    exponent: float,
) -> tuple[int, int]:
    """delta = gain * |v|^(exponent-1) * v for displacement v = cur - prev.

    Exponent 1 is linear; larger exponents speed the cursor up for wide gaps.
    Per-axis rounding is round-half-even so delta(-v) == -delta(v).
    """
    vx = cur_cam_pt[0] - prev_cam_pt[0]
    vy = cur_cam_pt[1] - prev_cam_pt[1]
    magnitude = math.hypot(vx, vy)
    if magnitude == 0.0:
        return 0, 0
    scale = gain * magnitude ** (exponent - 1.0)
    return round(scale * vx), round(scale * vy)


def step_pointer(
    state: PointerState,
    yellow_obs: MarkerObservation,
    mode: PointerMode,
    cam_res: Resolution,
    screen_res: Resolution,
    gain: float = 1.5,
    exponent: float = 1.3,
) -> tuple[PointerState, Optional[tuple[int, int]]]:
    """Advance the cursor for one frame; reports a move iff screen_pos changed."""
    if not yellow_obs.present:
        return state, None
    assert yellow_obs.centroid is not None
    cam_pt = yellow_obs.centroid
    if mode is PointerMode.ABSOLUTE:
        new_pos = map_absolute(cam_pt, cam_res, screen_res)
    else:
        if state.prev_cam_pos is None:
            new_pos = state.screen_pos
        else:
            dx, dy = map_weighted_speed(state.prev_cam_pos, cam_pt, gain, exponent)
            new_pos = (
                int(_clamp(state.screen_pos[0] + dx, 0, screen_res.width - 1)),
                int(_clamp(state.screen_pos[1] + dy, 0, screen_res.height - 1)),
            )
    new_state = PointerState(screen_pos=new_pos, prev_cam_pos=cam_pt)
    move = new_pos if new_pos != state.screen_pos else None
    return new_state, move
