"""Configuration and calibration files.

Config files are plain ``key=value`` lines with ``#`` comments; nested keys are
dotted (``gesture.dwell_ms=7000``). Every default is overridable and ``config
dump`` echoes the merged result in a fixed canonical order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

from .gestures import Calibration, GestureConfig
from .pointer import PointerMode, Resolution
from .segmentation import ColorTarget


class ConfigError(ValueError):
    """Config file could not be parsed (unknown key, bad value)."""


@dataclass(frozen=True)
class PipelineConfig:
    camera_res: Resolution = Resolution(640, 480)
    screen_res: Resolution = Resolution(1920, 1080)
    fps: float = 30.0
    mode: PointerMode = PointerMode.ABSOLUTE
    gain: float = 1.5  # SPEED mode only
    exponent: float = 1.3  # SPEED mode only
    yellow_target: ColorTarget = ColorTarget(60.0, 15.0, 0.4, 0.3)
    red_target: ColorTarget = ColorTarget(0.0, 15.0, 0.4, 0.3)
    bg_threshold: float = 25.0
    bg_frames: int = 2  # startup frames averaged into the background model; 0 disables
    skin_enabled: bool = False
    skin_histogram_path: Optional[str] = None
    theta: float = 0.5
    denoise_window: int = 3
    denoise_majority: float = 0.5
    min_blob_area: float = 20.0  # at 640x480; scales with camera pixel count
    gesture: GestureConfig = GestureConfig()

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ConfigError(f"fps must be > 0, got {self.fps}")
        if not 0 <= self.bg_threshold <= 255:
            raise ConfigError(f"bg.threshold must be in [0, 255], got {self.bg_threshold}")
        if self.bg_frames < 0:
            raise ConfigError(f"bg.frames must be >= 0, got {self.bg_frames}")
        if self.min_blob_area < 0:
            raise ConfigError(f"min_blob_area must be >= 0, got {self.min_blob_area}")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_mode(text: str) -> PointerMode:
    try:
        return PointerMode[text.strip().upper()]
    except KeyError:
        raise ConfigError(f"mode must be ABSOLUTE or SPEED, got {text!r}") from None


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, PointerMode):
        return value.value
    if value is None:
        return ""
    return str(value)


# key -> (getter, parser). Order here is the canonical dump order.
_KEYS: dict[str, tuple[Callable[[PipelineConfig], object], Callable[[str], object]]] = {
    "camera.width": (lambda c: c.camera_res.width, int),
    "camera.height": (lambda c: c.camera_res.height, int),
    "screen.width": (lambda c: c.screen_res.width, int),
    "screen.height": (lambda c: c.screen_res.height, int),
    "fps": (lambda c: c.fps, float),
    "mode": (lambda c: c.mode, _parse_mode),
    "gain": (lambda c: c.gain, float),
    "exponent": (lambda c: c.exponent, float),
    "yellow.hue_center": (lambda c: c.yellow_target.hue_center, float),
    "yellow.hue_tol": (lambda c: c.yellow_target.hue_tol, float),
    "yellow.sat_min": (lambda c: c.yellow_target.sat_min, float),
    "yellow.val_min": (lambda c: c.yellow_target.val_min, float),
    "red.hue_center": (lambda c: c.red_target.hue_center, float),
    "red.hue_tol": (lambda c: c.red_target.hue_tol, float),
    "red.sat_min": (lambda c: c.red_target.sat_min, float),
    "red.val_min": (lambda c: c.red_target.val_min, float),
    "bg.threshold": (lambda c: c.bg_threshold, float),
    "bg.frames": (lambda c: c.bg_frames, int),
    "skin.enabled": (lambda c: c.skin_enabled, _parse_bool),
    "skin.histogram_path": (lambda c: c.skin_histogram_path, lambda s: s or None),
    "skin.theta": (lambda c: c.theta, float),
    "denoise.window": (lambda c: c.denoise_window, int),
    "denoise.majority": (lambda c: c.denoise_majority, float),
    "min_blob_area": (lambda c: c.min_blob_area, float),
    "gesture.dwell_ms": (lambda c: c.gesture.dwell_ms, float),
    "gesture.stationary_radius_px": (lambda c: c.gesture.stationary_radius_px, float),
    "gesture.min_calibration_frames": (lambda c: c.gesture.min_calibration_frames, int),
}


def _build(values: dict[str, object]) -> PipelineConfig:
    v = values
    return PipelineConfig(
        camera_res=Resolution(v["camera.width"], v["camera.height"]),
        screen_res=Resolution(v["screen.width"], v["screen.height"]),
        fps=v["fps"],
        mode=v["mode"],
        gain=v["gain"],
        exponent=v["exponent"],
        yellow_target=ColorTarget(
            v["yellow.hue_center"], v["yellow.hue_tol"], v["yellow.sat_min"], v["yellow.val_min"]
        ),
        red_target=ColorTarget(
            v["red.hue_center"], v["red.hue_tol"], v["red.sat_min"], v["red.val_min"]
        ),
        bg_threshold=v["bg.threshold"],
        bg_frames=v["bg.frames"],
        skin_enabled=v["skin.enabled"],
        skin_histogram_path=v["skin.histogram_path"],
        theta=v["skin.theta"],
        denoise_window=v["denoise.window"],
        denoise_majority=v["denoise.majority"],
        min_blob_area=v["min_blob_area"],
        gesture=GestureConfig(
            dwell_ms=v["gesture.dwell_ms"],
            stationary_radius_px=v["gesture.stationary_radius_px"],
            min_calibration_frames=v["gesture.min_calibration_frames"],
        ),
    )


def parse_config(text: str, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    """Apply key=value overrides on top of `base` (defaults if omitted)."""
    base = base if base is not None else PipelineConfig()
    values = {key: getter(base) for key, (getter, _) in _KEYS.items()}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        _, parser = _KEYS[key]
        try:
            values[key] = parser(value.strip())
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    try:
        return _build(values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def dump_config(cfg: PipelineConfig) -> str:
    """Canonical key=value rendering; parse(dump(cfg)) reproduces cfg."""
    return "".join(f"{key}={_fmt(getter(cfg))}\n" for key, (getter, _) in _KEYS.items())


def load_config(path: str | Path, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    return parse_config(Path(path).read_text("utf-8"), base)


def render_calibration(cal: Calibration) -> str:
    return f"D={cal.D!r}\nD_prime={cal.D_prime!r}\n"


def parse_calibration(text: str) -> Calibration:
    values: dict[str, float] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in ("D", "D_prime"):
            raise ConfigError(f"unknown calibration key {key!r}")
        try:
            values[key] = float(value.strip())
        except ValueError:
            raise ConfigError(f"bad calibration value for {key}: {value!r}") from None
    if set(values) != {"D", "D_prime"}:
        raise ConfigError("calibration file must define both D and D_prime")
    try:
        return Calibration(D=values["D"], D_prime=values["D_prime"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_calibration(path: str | Path) -> Calibration:
    return parse_calibration(Path(path).read_text("utf-8"))


def save_calibration(cal: Calibration, path: str | Path) -> None:
    Path(path).write_text(render_calibration(cal), "utf-8")


def with_overrides(cfg: PipelineConfig, **kwargs: object) -> PipelineConfig:
    """dataclasses.replace passthrough, re-exported for callers."""
    return replace(cfg, **kwargs)
