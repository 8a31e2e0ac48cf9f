"""tapemouse: a virtual mouse driven by two colored finger tapes.

Camera frames go through background subtraction, optional histogram skin
classification and HSV tolerance masking; the two tape blobs are tracked and
their distance drives click gestures while the yellow tape position drives the
cursor. Ships as a library, a replay/benchmark CLI and a WebSocket service.
"""

from .config import (
    ConfigError,
    PipelineConfig,
    dump_config,
    load_calibration,
    load_config,
    parse_calibration,
    parse_config,
    render_calibration,
    save_calibration,
)
from .gestures import (
    Calibration,
    CalibrationError,
    CalibrationOrderError,
    EventKind,
    GestureConfig,
    GestureState,
    MouseEvent,
    Region,
    calibrate_open,
    calibrate_pinch,
    classify_region,
    gesture_step,
)
from .imaging import (
    DiskSpec,
    Frame,
    HsvPixel,
    PpmFormatError,
    hsv_to_rgb,
    iter_frame_dir,
    load_ppm,
    rgb_to_hsv,
    save_ppm,
    synth_frame,
    write_frame_dir,
)
from .pipeline import (
    BenchReport,
    EventLog,
    PipelineEngine,
    bench,
    detect_markers,
    parse_event_log,
    render_event_log,
    run_calibration,
    run_pipeline,
)
from .pointer import (
    PointerMode,
    PointerState,
    Resolution,
    map_absolute,
    map_weighted_speed,
    step_pointer,
)
from .segmentation import (
    BackgroundModel,
    BinaryMask,
    ColorTarget,
    SkinHistogram,
    capture_background,
    color_mask,
    denoise,
    load_skin_histogram,
    save_skin_histogram,
    skin_mask,
    skin_probability,
    subtract_background,
    train_skin_histogram,
)
from .tracking import (
    Component,
    MarkerId,
    MarkerObservation,
    connected_components,
    extract_marker,
    marker_distance,
)

__version__ = "0.1.0"
