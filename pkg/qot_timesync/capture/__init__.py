from .datatypes import CaptureConfig, CaptureMode, ExtendedCounter
from .capture import (
    CaptureChannel,
    capture_event,
    capture_generated_edge,
    double_sample,
    overflow_period,
    quantize_capture,
    read_extended,
)
