from .datatypes import NOISE_SOURCES, ClockParams, NoiseKind, NoiseSpec, TimestampPair
from .clock_core import (
    STREAM_SOURCES,
    NodeClock,
    NoiseStreams,
    node_time_at,
    node_timestamp,
    root_timestamp,
    sample_noise,
)
