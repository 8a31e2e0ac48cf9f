"""WebSocket frame-stream service.

One pipeline session per connection. Wire protocol:

  binary, client to server:
      [0x01][width u16 BE][height u16 BE][timestamp_ms u64 BE][RGB8 payload]
  text, client to server:
      CALIBRATE_OPEN_BEGIN / CALIBRATE_OPEN_END
      CALIBRATE_PINCH_BEGIN / CALIBRATE_PINCH_END
      STREAM_BEGIN / STREAM_END
  text, server to client:
      CAL_OPEN <D>               open-pose calibration result
      CAL_PINCH <D'>             pinch-pose calibration result
      EVT <t_ms> <KIND> <x> <y>  one per emitted mouse event
      STATE <region> <d> <dwell_ms_remaining>   one per received frame
      ERR <code> <detail>

Calibration failures (ERR CAL_FEW, ERR CAL_ORDER) leave the session open so
the client can retry the pose; protocol violations (ERR PROTOCOL, ERR
BAD_FRAME, ERR NO_CALIBRATION) close the session. Frames arriving outside any
phase are dropped silently; they may be in flight while the client switches
phases. Wire timestamps are integer milliseconds, so replay/live equivalence
is exact whenever the replay timestamps are integral (fps dividing 1000).

In STATE lines, ``d`` is -1 while either marker is undetected and
``dwell_ms_remaining`` is -1 when no dwell countdown is armed.
"""

from __future__ import annotations

import asyncio
from enum import Enum
from typing import Optional

import numpy as np
from websockets.asyncio.server import serve as ws_serve

from .config import PipelineConfig
from .gestures import (
    Calibration,
    CalibrationError,
    CalibrationOrderError,
    Region,
    calibrate_open,
    calibrate_pinch,
)
from .imaging import Frame
from .pipeline import PipelineEngine, detect_markers, resolve_skin_histogram
from .tracking import marker_distance

FRAME_MAGIC = 0x01
FRAME_HEADER_LEN = 13
MAX_MESSAGE_BYTES = 32 * 1024 * 1024

CALIBRATE_OPEN_BEGIN = "CALIBRATE_OPEN_BEGIN"
CALIBRATE_OPEN_END = "CALIBRATE_OPEN_END"
CALIBRATE_PINCH_BEGIN = "CALIBRATE_PINCH_BEGIN"
CALIBRATE_PINCH_END = "CALIBRATE_PINCH_END"
STREAM_BEGIN = "STREAM_BEGIN"
STREAM_END = "STREAM_END"


class ProtocolViolation(Exception):
    """Fatal session error; the server reports ERR <code> <detail> and closes."""

    def __init__(self, code: str, detail: str) -> None:
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


def encode_frame_message(frame: Frame) -> bytes:
    """Pack a frame into the binary wire layout (timestamp truncated to whole ms)."""
    header = (
        bytes([FRAME_MAGIC])
        + frame.width.to_bytes(2, "big")
        + frame.height.to_bytes(2, "big")
        + int(frame.timestamp_ms).to_bytes(8, "big")
    )
    return header + frame.pixels.tobytes()


def decode_frame_message(data: bytes) -> Frame:
    if len(data) < FRAME_HEADER_LEN or data[0] != FRAME_MAGIC:
        raise ProtocolViolation("BAD_FRAME", "binary message too short or bad magic")
    width = int.from_bytes(data[1:3], "big")
    height = int.from_bytes(data[3:5], "big")
    timestamp_ms = int.from_bytes(data[5:13], "big")
    payload = data[FRAME_HEADER_LEN:]
    if width < 1 or height < 1:
        raise ProtocolViolation("BAD_FRAME", f"bad dimensions {width}x{height}")
    if len(payload) != width * height * 3:
        raise ProtocolViolation(
            "BAD_FRAME",
            f"payload is {len(payload)} bytes, header says {width * height * 3}",
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return Frame(width, height, pixels, float(timestamp_ms))


def format_state(region: Region, d: Optional[float], dwell_remaining_ms: Optional[float]) -> str:
    d_text = f"{d:.3f}" if d is not None else "-1"
    rem_text = str(int(dwell_remaining_ms)) if dwell_remaining_ms is not None else "-1"
    return f"STATE {region.value} {d_text} {rem_text}"


class _Phase(Enum):
    IDLE = "IDLE"
    CAL_OPEN = "CAL_OPEN"
    CAL_PINCH = "CAL_PINCH"
    STREAMING = "STREAMING"


class Session:
    """Transport-independent protocol state machine (one per connection)."""

    def __init__(self, cfg: PipelineConfig) -> None:
        self.cfg = cfg
        self.skin = resolve_skin_histogram(cfg)
        self.phase = _Phase.IDLE
        self.cal_obs: list = []
        self.open_distance: Optional[float] = None
        self.pinch_distance: Optional[float] = None
        self.engine: Optional[PipelineEngine] = None

    def handle_text(self, message: str) -> list[str]:
        phase = self.phase
        if message == CALIBRATE_OPEN_BEGIN and phase is _Phase.IDLE:
            self.phase = _Phase.CAL_OPEN
            self.cal_obs = []
            return []
        if message == CALIBRATE_OPEN_END and phase is _Phase.CAL_OPEN:
            self.phase = _Phase.IDLE
            try:
                self.open_distance = calibrate_open(self.cal_obs, self.cfg.gesture)
            except CalibrationError as exc:
                return [f"ERR CAL_FEW {exc}"]
            self.pinch_distance = None  # a fresh D invalidates any earlier D'
            return [f"CAL_OPEN {self.open_distance:.3f}"]
        if message == CALIBRATE_PINCH_BEGIN and phase is _Phase.IDLE:
            if self.open_distance is None:
                raise ProtocolViolation("PROTOCOL", "pinch calibration before open calibration")
            self.phase = _Phase.CAL_PINCH
            self.cal_obs = []
            return []
        if message == CALIBRATE_PINCH_END and phase is _Phase.CAL_PINCH:
            self.phase = _Phase.IDLE
            assert self.open_distance is not None
            try:
                self.pinch_distance = calibrate_pinch(
                    self.cal_obs, self.cfg.gesture, self.open_distance
                )
            except CalibrationOrderError as exc:
                return [f"ERR CAL_ORDER {exc}"]
            except CalibrationError as exc:
                return [f"ERR CAL_FEW {exc}"]
            return [f"CAL_PINCH {self.pinch_distance:.3f}"]
        if message == STREAM_BEGIN and phase is _Phase.IDLE:
            if self.open_distance is None or self.pinch_distance is None:
                raise ProtocolViolation("NO_CALIBRATION", "stream requested before calibration")
            self.engine = PipelineEngine(
                self.cfg,
                Calibration(D=self.open_distance, D_prime=self.pinch_distance),
                skin_hist=self.skin,
            )
            self.phase = _Phase.STREAMING
            return []
        if message == STREAM_END and phase is _Phase.STREAMING:
            self.phase = _Phase.IDLE
            self.engine = None
            return []
        raise ProtocolViolation("PROTOCOL", f"unexpected message {message!r} in phase {phase.value}")

    def handle_binary(self, data: bytes) -> list[str]:
        if self.phase is _Phase.IDLE:
            return []
        frame = decode_frame_message(data)
        cam = self.cfg.camera_res
        if (frame.width, frame.height) != (cam.width, cam.height):
            raise ProtocolViolation(
                "BAD_FRAME",
                f"frame is {frame.width}x{frame.height}, configured camera is "
                f"{cam.width}x{cam.height}",
            )
        if self.phase in (_Phase.CAL_OPEN, _Phase.CAL_PINCH):
            yellow, red = detect_markers(frame, self.cfg, None, self.skin)
            self.cal_obs.append((yellow, red))
            d = marker_distance(yellow, red) if yellow.present and red.present else None
            return [format_state(Region.UNDEFINED, d, None)]
        assert self.engine is not None
        try:
            result = self.engine.feed(frame)
        except ValueError as exc:
            raise ProtocolViolation("BAD_FRAME", str(exc)) from None
        replies = [f"EVT {e.t_ms} {e.kind.value} {e.x} {e.y}" for e in result.events]
        replies.append(format_state(result.region, result.distance, result.dwell_remaining_ms))
        return replies


async def _handle_connection(websocket, cfg: PipelineConfig) -> None:
    session = Session(cfg)
    try:
        async for message in websocket:
            if isinstance(message, (bytes, bytearray, memoryview)):
                replies = session.handle_binary(bytes(message))
            else:
                replies = session.handle_text(message)
            for reply in replies:
                await websocket.send(reply)
    except ProtocolViolation as violation:
        try:
            await websocket.send(f"ERR {violation.code} {violation.detail}")
        finally:
            await websocket.close(code=1002, reason=violation.code)


async def serve_async(cfg: PipelineConfig, host: str, port: int):
    """Start the server; returns the websockets Server (async context manager)."""
    return await ws_serve(
        lambda ws: _handle_connection(ws, cfg), host, port, max_size=MAX_MESSAGE_BYTES
    )


def serve(port: int, cfg: PipelineConfig, host: str = "127.0.0.1") -> None:
    """Run the service until interrupted."""

    async def _run() -> None:
        server = await serve_async(cfg, host, port)
        async with server:
            await server.serve_forever()

    asyncio.run(_run())
