"""Distance-threshold gesture rules.

Calibration records the open-hand distance D and the pinched distance D'
(D' < D). With the current inter-tape distance d, the regions are:

    PINCH  d <= D'        left click on entry, double click after the dwell
    MID    D' < d <= D    right click after the dwell
    OPEN   d > D          no gesture

Dwell timers run on stream timestamps, not wall clock, so replays are
deterministic. Left clicks are edge-triggered on entering PINCH; a held pinch
therefore fires LEFT_CLICK at entry and DOUBLE_CLICK once the dwell elapses.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .tracking import MarkerObservation, marker_distance


class Region(Enum):
    OPEN = "OPEN"
    MID = "MID"
    PINCH = "PINCH"
    UNDEFINED = "UNDEFINED"


class EventKind(Enum):
    MOVE = "MOVE"
    LEFT_CLICK = "LEFT_CLICK"
    RIGHT_CLICK = "RIGHT_CLICK"
    DOUBLE_CLICK = "DOUBLE_CLICK"


@dataclass(frozen=True)
class MouseEvent:
    """Engine output record. t_ms is integer milliseconds (frame timestamps truncate)."""

    t_ms: int
    kind: EventKind
    x: int
    y: int


class CalibrationError(ValueError):
    """Calibration could not be completed (too few frames or D' >= D)."""


class CalibrationOrderError(CalibrationError):
    """The pinched distance came out >= the open distance (D' < D violated)."""


@dataclass(frozen=True)
class Calibration:
    D: float  # open-hand distance, pixels
    D_prime: float  # pinched distance, pixels

    def __post_init__(self) -> None:
        if self.D <= 0 or self.D_prime <= 0:
            raise ValueError("calibration distances must be positive")
        if not self.D_prime < self.D:
            raise ValueError(f"D' must be smaller than D, got D'={self.D_prime} D={self.D}")


@dataclass(frozen=True)
class GestureConfig:
    dwell_ms: float = 7000.0
    stationary_radius_px: float = 5.0
    min_calibration_frames: int = 10

    def __post_init__(self) -> None:
        if self.dwell_ms <= 0:
            raise ValueError("dwell_ms must be > 0")
        if self.stationary_radius_px < 0:
            raise ValueError("stationary_radius_px must be >= 0")
        if self.min_calibration_frames < 1:
            raise ValueError("min_calibration_frames must be >= 1")


@dataclass(frozen=True)
class DwellAnchor:
    """Reference positions and start time of the active dwell timer."""

    yellow: tuple[float, float]
    red: tuple[float, float]
    start_ms: float


@dataclass(frozen=True)
class GestureState:
    region: Region = Region.UNDEFINED
    last_region: Region = Region.UNDEFINED
    pinch_latched: bool = False  # double click already fired this pinch episode
    dwell_anchor: Optional[DwellAnchor] = None  # only in MID or PINCH
    dwell_fired: bool = False  # right click already fired for the current MID dwell


ObservationPair = tuple[MarkerObservation, MarkerObservation]


def _median_distance(observations: Iterable[ObservationPair], cfg: GestureConfig) -> float:
    distances = [
        marker_distance(yellow, red)
        for yellow, red in observations
        if yellow.present and red.present
    ]
    if len(distances) < cfg.min_calibration_frames:
        raise CalibrationError(
            f"only {len(distances)} frames with both markers, "
            f"need {cfg.min_calibration_frames}"
        )
    return float(statistics.median(distances))


def calibrate_open(observations: Iterable[ObservationPair], cfg: GestureConfig) -> float:
    """D = median tape distance over the open-hand pose (fingers apart as far as possible)."""
    return _median_distance(observations, cfg)


def calibrate_pinch(observations: Iterable[ObservationPair], cfg: GestureConfig, D: float) -> float:
    """D' = median tape distance over the pinched pose; must come out below D."""
    d_prime = _median_distance(observations, cfg)
    if not d_prime < D:
        raise CalibrationOrderError(f"pinched distance {d_prime} is not smaller than D={D}")
    return d_prime


def classify_region(d: float, cal: Calibration) -> Region:
    """Exactly one region per distance; both paper inequalities are inclusive."""
    if d <= cal.D_prime:
        return Region.PINCH
    if d <= cal.D:
        return Region.MID
    return Region.OPEN


def _moved_beyond(pos: tuple[float, float], anchor: tuple[float, float], radius: float) -> bool:
    return math.hypot(pos[0] - anchor[0], pos[1] - anchor[1]) > radius


def gesture_step(
    state: GestureState,
    yellow: MarkerObservation,
    red: MarkerObservation,
    t_ms: float,
    cal: Calibration,
    cfg: GestureConfig,
    pointer_pos: tuple[int, int],
) -> tuple[GestureState, list[MouseEvent]]:
    """Advance the gesture machine by one frame; click events are stamped at pointer_pos.

    Rules:
      - either marker absent: region UNDEFINED, dwell timers cleared, no clicks;
      - LEFT_CLICK once on any transition into PINCH;
      - DOUBLE_CLICK once per pinch episode after both markers dwell stationary;
      - RIGHT_CLICK after the yellow marker dwells stationary in MID; moving
        beyond the radius restarts the timer and re-arms;
      - a dwell fires at the first frame with t_ms - anchor_start >= dwell_ms.
    """
    events: list[MouseEvent] = []
    if not yellow.present or not red.present:
        return (
            GestureState(region=Region.UNDEFINED, last_region=state.region),
            events,
        )

    assert yellow.centroid is not None and red.centroid is not None
    d = marker_distance(yellow, red)
    region = classify_region(d, cal)
    ypos, rpos = yellow.centroid, red.centroid

    pinch_latched = state.pinch_latched
    dwell_fired = state.dwell_fired
    anchor = state.dwell_anchor

    if region is not state.region:
        if region is Region.PINCH:
            events.append(MouseEvent(int(t_ms), EventKind.LEFT_CLICK, *pointer_pos))
        if state.region is Region.PINCH:
            pinch_latched = False  # the latch re-arms only by leaving PINCH
        dwell_fired = False
        anchor = DwellAnchor(ypos, rpos, t_ms) if region in (Region.MID, Region.PINCH) else None
    elif region in (Region.MID, Region.PINCH):
        if anchor is None:  # defensive: same region but no timer yet
            anchor = DwellAnchor(ypos, rpos, t_ms)
        else:
            moved = _moved_beyond(ypos, anchor.yellow, cfg.stationary_radius_px)
            if region is Region.PINCH:
                moved = moved or _moved_beyond(rpos, anchor.red, cfg.stationary_radius_px)
            if moved:
                anchor = DwellAnchor(ypos, rpos, t_ms)
                if region is Region.MID:
                    dwell_fired = False
            elif t_ms - anchor.start_ms >= cfg.dwell_ms:
                if region is Region.MID and not dwell_fired:
                    events.append(MouseEvent(int(t_ms), EventKind.RIGHT_CLICK, *pointer_pos))
                    dwell_fired = True
                elif region is Region.PINCH and not pinch_latched:
                    events.append(MouseEvent(int(t_ms), EventKind.DOUBLE_CLICK, *pointer_pos))
                    pinch_latched = True

    new_state = GestureState(
        region=region,
        last_region=state.region,
        pinch_latched=pinch_latched,
        dwell_anchor=anchor,
        dwell_fired=dwell_fired,
    )
    return new_state, events
