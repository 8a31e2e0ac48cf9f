"""End-to-end engine.

Per frame, in fixed stage order: background subtraction (model captured from
the first ``bg.frames`` streamed frames), optional skin mask, per-color
tolerance masks, denoise, marker extraction, pointer step, gesture step.
MOVE events precede click events within a frame. Replay and the live service
share this engine, so identical frame sequences yield identical event logs.
"""

from __future__ import annotations

import time
from collections import defaultdict
from contextlib import contextmanager, nullcontext
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .config import ConfigError, PipelineConfig
from .gestures import (
    Calibration,
    CalibrationError,
    EventKind,
    GestureState,
    MouseEvent,
    Region,
    calibrate_open,
    calibrate_pinch,
    gesture_step,
)
from .imaging import Frame
from .pointer import PointerState, step_pointer
from .segmentation import (
    BackgroundModel,
    SkinHistogram,
    capture_background,
    color_mask,
    denoise,
    load_skin_histogram,
    skin_mask,
    subtract_background,
)
from .tracking import (
    MarkerId,
    MarkerObservation,
    extract_marker,
    marker_distance,
    scale_min_blob_area,
)

EventLog = list[MouseEvent]


class StageTimer:
    """Accumulates wall-clock seconds per pipeline stage."""

    def __init__(self) -> None:
        self.totals: dict[str, float] = defaultdict(float)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.totals[name] += time.perf_counter() - start


def _stage(timer: Optional[StageTimer], name: str):
    return timer.stage(name) if timer is not None else nullcontext()


def resolve_skin_histogram(cfg: PipelineConfig) -> Optional[SkinHistogram]:
    if not cfg.skin_enabled:
        return None
    if cfg.skin_histogram_path:
        return load_skin_histogram(cfg.skin_histogram_path)
    raise ConfigError("skin.enabled requires skin.histogram_path")


def detect_markers(
    frame: Frame,
    cfg: PipelineConfig,
    background: Optional[BackgroundModel] = None,
    skin_hist: Optional[SkinHistogram] = None,
    timer: Optional[StageTimer] = None,
) -> tuple[MarkerObservation, MarkerObservation]:
    """Run the segmentation cascade and extract one observation per tape color.

    Each stage's mask restricts the next; calibration callers pass no
    background model (those scenes always contain the hand).
    """
    restrict = None
    if background is not None:
        with _stage(timer, "subtract"):
            restrict = subtract_background(frame, background, cfg.bg_threshold)
    if skin_hist is not None:
        with _stage(timer, "skin"):
            skin = skin_mask(frame, skin_hist, cfg.theta)
            restrict = skin if restrict is None else skin & restrict
    min_area = scale_min_blob_area(cfg.min_blob_area, frame.width, frame.height)
    observations = []
    for marker_id, target in (
        (MarkerId.YELLOW, cfg.yellow_target),
        (MarkerId.RED, cfg.red_target),
    ):
        with _stage(timer, "color"):
            mask = color_mask(frame, target, restrict)
        with _stage(timer, "denoise"):
            mask = denoise(mask, cfg.denoise_window, cfg.denoise_majority)
        with _stage(timer, "track"):
            observations.append(extract_marker(mask, marker_id, min_area))
    return observations[0], observations[1]


@dataclass(frozen=True)
class FrameResult:
    """Per-frame outcome: events plus live readout for UIs (STATE messages)."""

    events: tuple[MouseEvent, ...]
    region: Region
    distance: Optional[float]
    dwell_remaining_ms: Optional[float]
    pointer_pos: tuple[int, int]


class PipelineEngine:
    """One stateful pipeline instance per session or replay.

    Frames must arrive in order with consistent dimensions; the first
    ``bg.frames`` frames feed the background model and produce no events.
    """

    def __init__(
        self,
        cfg: PipelineConfig,
        calibration: Calibration,
        skin_hist: Optional[SkinHistogram] = None,
        timer: Optional[StageTimer] = None,
    ) -> None:
        self._cfg = cfg
        self._cal = calibration
        self._skin = skin_hist if skin_hist is not None else resolve_skin_histogram(cfg)
        self._timer = timer
        self._pending_bg: list[Frame] = []
        self._background: Optional[BackgroundModel] = None
        self._pointer = PointerState()
        self._gesture = GestureState()
        self._dims: Optional[tuple[int, int]] = None

    @property
    def config(self) -> PipelineConfig:
        return self._cfg

    def feed(self, frame: Frame) -> FrameResult:
        cfg = self._cfg
        if self._dims is None:
            self._dims = (frame.width, frame.height)
        elif self._dims != (frame.width, frame.height):
            raise ValueError(
                f"frame dimension drift: stream started at {self._dims[0]}x{self._dims[1]}, "
                f"got {frame.width}x{frame.height}"
            )

        if cfg.bg_frames > 0 and self._background is None:
            self._pending_bg.append(frame)
            if len(self._pending_bg) == cfg.bg_frames:
                self._background = capture_background(self._pending_bg)
                self._pending_bg = []
            return FrameResult((), Region.UNDEFINED, None, None, self._pointer.screen_pos)

        yellow, red = detect_markers(frame, cfg, self._background, self._skin, self._timer)
        events: list[MouseEvent] = []
        t = frame.timestamp_ms

        with _stage(self._timer, "pointer"):
            self._pointer, move = step_pointer(
                self._pointer, yellow, cfg.mode, cfg.camera_res, cfg.screen_res,
                cfg.gain, cfg.exponent,
            )
        if move is not None:
            events.append(MouseEvent(int(t), EventKind.MOVE, move[0], move[1]))

        with _stage(self._timer, "gesture"):
            self._gesture, clicks = gesture_step(
                self._gesture, yellow, red, t, self._cal, cfg.gesture,
                self._pointer.screen_pos,
            )
        events.extend(clicks)

        distance = marker_distance(yellow, red) if yellow.present and red.present else None
        state = self._gesture
        remaining = None
        if state.dwell_anchor is not None:
            armed = (state.region is Region.MID and not state.dwell_fired) or (
                state.region is Region.PINCH and not state.pinch_latched
            )
            if armed:
                remaining = max(0.0, cfg.gesture.dwell_ms - (t - state.dwell_anchor.start_ms))
        return FrameResult(tuple(events), state.region, distance, remaining, self._pointer.screen_pos)


def run_pipeline(
    frame_source: Iterable[Frame],
    cfg: PipelineConfig,
    calibration: Calibration,
    skin_hist: Optional[SkinHistogram] = None,
) -> EventLog:
    """Replay a frame sequence and collect all events in frame order."""
    engine = PipelineEngine(cfg, calibration, skin_hist)
    events: EventLog = []
    for frame in frame_source:
        events.extend(engine.feed(frame).events)
    return events


def run_calibration(
    open_frames: Iterable[Frame],
    pinch_frames: Iterable[Frame],
    cfg: PipelineConfig,
    skin_hist: Optional[SkinHistogram] = None,
) -> Calibration:
    """Detect markers over both pose sets, then derive D and D'."""
    open_list = list(open_frames)
    pinch_list = list(pinch_frames)
    if not open_list or not pinch_list:
        raise CalibrationError("calibration needs non-empty open and pinch frame sets")
    if skin_hist is None:
        skin_hist = resolve_skin_histogram(cfg)
    open_obs = [detect_markers(f, cfg, None, skin_hist) for f in open_list]
    pinch_obs = [detect_markers(f, cfg, None, skin_hist) for f in pinch_list]
    d_open = calibrate_open(open_obs, cfg.gesture)
    d_pinch = calibrate_pinch(pinch_obs, cfg.gesture, d_open)
    return Calibration(D=d_open, D_prime=d_pinch)


@dataclass(frozen=True)
class BenchReport:
    frames: int
    elapsed_s: float
    fps: float
    stage_mean_ms: dict[str, float]

    def render(self) -> str:
        lines = [
            f"frames:  {self.frames}",
            f"elapsed: {self.elapsed_s:.3f} s",
            f"fps:     {self.fps:.1f}",
            "per-stage mean ms:",
        ]
        lines.extend(f"  {name:<9} {ms:8.3f}" for name, ms in self.stage_mean_ms.items())
        return "\n".join(lines) + "\n"


def bench(frame_source: Iterable[Frame], cfg: PipelineConfig, min_frames: int = 100) -> BenchReport:
    """Time the full pipeline per frame. Source consumption is excluded from
    the measurement, so lazy readers don't bill their disk time to the engine."""
    timer = StageTimer()
    cam = cfg.camera_res
    placeholder = Calibration(D=max(2.0, cam.width / 4), D_prime=max(1.0, cam.width / 16))
    engine = PipelineEngine(cfg, placeholder, timer=timer)
    frames = 0
    elapsed = 0.0
    for frame in frame_source:
        start = time.perf_counter()
        engine.feed(frame)
        elapsed += time.perf_counter() - start
        frames += 1
    if frames < min_frames:
        raise ValueError(f"bench needs at least {min_frames} frames for a stable measurement, got {frames}")
    stage_ms = {name: total / frames * 1000.0 for name, total in timer.totals.items()}
    return BenchReport(frames=frames, elapsed_s=elapsed, fps=frames / elapsed, stage_mean_ms=stage_ms)


def render_event_log(events: Iterable[MouseEvent]) -> str:
    """One `<t_ms> <KIND> <x> <y>` line per event, newline-terminated."""
    return "".join(f"{e.t_ms} {e.kind.value} {e.x} {e.y}\n" for e in events)


def parse_event_log(text: str) -> EventLog:
    events: EventLog = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(" ")
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected '<t_ms> <KIND> <x> <y>', got {raw!r}")
        t, kind, x, y = parts
        try:
            events.append(MouseEvent(int(t), EventKind(kind), int(x), int(y)))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return events
