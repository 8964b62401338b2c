"""Interrupt generation and timer capture

Interrupts are emitted on the next edge of the generation clock, then latched on
the next edge of the capture clock (ceiling semantics, never nearest edge).
"""
import logging
import math
from typing import Optional, Tuple, Union

import numpy as np

from .. import settings
from ..clock.clock_core import NoiseStreams
from ..exceptions import ConfigurationError
from .datatypes import CaptureConfig, CaptureMode, ExtendedCounter

logger = logging.getLogger(__name__)

TimeLike = Union[float, np.ndarray]


def _ceil(values):
    if np.ndim(values) == 0:
        return int(math.ceil(values))
    return np.ceil(values).astype(np.int64)


def _ceil_div(numerator, denominator: int):
    return -((-numerator) // denominator)


def quantize_capture(event_time: TimeLike, config: CaptureConfig) -> Tuple:
    """First capture clock edge at or after event_time

    Returns (tick, captured_time), the quantization error captured_time - event_time
    lies in [0, 1 / capture_freq_hz)
    """
    tick = _ceil((event_time - config.phase_offset) * config.capture_freq_hz)
    return tick, config.phase_offset + tick / config.capture_freq_hz


def double_sample(event_time: TimeLike, config: CaptureConfig) -> TimeLike:
    """Capture on both rising and falling edges and average the two values

    The falling edge capture sits half a tick away from the rising one, the average
    is corrected by its constant quarter tick offset so the result is the first edge
    of the doubled rate clock.
    """
    if not config.double_sampling:
        raise ConfigurationError("double sampling is disabled for this capture", ["double_sampling"])
    tick = config.tick
    _, rising = quantize_capture(event_time, config)
    falling_phase = (config.phase_offset + tick / 2) % tick
    falling_tick = _ceil((event_time - falling_phase) * config.capture_freq_hz)
    falling = falling_phase + falling_tick / config.capture_freq_hz
    return (rising + falling) / 2 - tick / 4


def capture_event(event_time: TimeLike, config: CaptureConfig) -> TimeLike:
    """Captured time of an event on the capture clock, single or double sampled"""
    if config.double_sampling:
        return double_sample(event_time, config)
    return quantize_capture(event_time, config)[1]


def capture_generated_edge(gen_tick, config: CaptureConfig, offset: TimeLike = 0.0) -> TimeLike:
    """Captured time of an interrupt emitted on generation clock edge gen_tick

    Synchronous capture with an integer prescaler is computed in integer ticks and is
    exact. Otherwise the edge time is mapped onto the capture clock, shifted by offset
    (the wandering phase between the two clocks), then quantized.
    """
    prescaler = config.prescaler
    if config.mode == CaptureMode.synchronous and prescaler is not None:
        phase_ticks = int(round(config.phase_offset * config.gen_freq_hz))
        capture_tick = _ceil_div(gen_tick - phase_ticks, prescaler)
        return (capture_tick * prescaler + phase_ticks) / config.gen_freq_hz
    edge_time = gen_tick / config.gen_freq_hz
    if config.mode == CaptureMode.asynchronous_external:
        edge_time = edge_time * (1 + config.external_phi)
    return capture_event(edge_time + offset, config)


def overflow_period(capture_freq_hz: float) -> float:
    """Time between two wraparounds of the 16-bit hardware counter"""
    if not capture_freq_hz > 0:
        raise ConfigurationError("capture frequency must be > 0", ["capture_freq_hz"])
    return settings.counter_hw_modulo / capture_freq_hz


def read_extended(counter: ExtendedCounter, raw_hw: int, overflow_flag: bool) -> int:
    """Compose the 32-bit timestamp of a capture latched at raw_hw

    A pending overflow with a small latched value means the capture raced past the
    wraparound before the software count caught up
    """
    if not 0 <= raw_hw < settings.counter_hw_modulo:
        raise ValueError(f"latched hardware value out of range : {raw_hw}")
    value = (counter.sw_overflows << settings.counter_hw_bits) + raw_hw
    if overflow_flag and raw_hw < settings.counter_half_range:
        value += settings.counter_hw_modulo
    value %= settings.counter_modulo
    if value < counter.last_value:
        logger.warning(f"extended counter went backwards ({value} < {counter.last_value}), holding previous value")
        value = counter.last_value
    counter.last_value = value
    return value


class CaptureChannel:
    """Capture hardware of one node, holds the wandering phase between clocks"""

    def __init__(self, config: CaptureConfig, streams: NoiseStreams):
        self.config = config
        self.streams = streams
        self._last_time: Optional[float] = None
        self._offset = 0.0

    @property
    def offset(self) -> float:
        """Current phase of the capture clock relative to the generation clock"""
        return self._offset

    def _walk(self, source: str, sigma: float, elapsed: np.ndarray) -> np.ndarray:
        if sigma == 0:
            return np.zeros(elapsed.shape)
        steps = self.streams[source].normal(0.0, 1.0, elapsed.shape) * sigma * np.sqrt(elapsed)
        return np.cumsum(steps)

    def _wander(self, node_times: np.ndarray) -> np.ndarray:
        config = self.config
        start = node_times[0] if self._last_time is None else self._last_time
        # readings of nearly simultaneous events may cross, the walk does not step back
        elapsed = np.maximum(np.diff(node_times, prepend=start), 0.0)
        offsets = np.full(node_times.shape, self._offset)
        offsets = offsets + self._walk("phase_wander", config.phase_wander, elapsed)
        if config.mode == CaptureMode.asynchronous_external:
            offsets = offsets + self._walk("external_wander", config.external_wander, elapsed)
        self._last_time = max(start, float(node_times.max()))
        self._offset = float(offsets[-1])
        return offsets

    def capture(self, node_time: TimeLike) -> TimeLike:
        """Timestamp latched by the node for events at node_time (scalar or ndarray)"""
        if not self.config.enabled:
            return node_time
        times = np.atleast_1d(np.asarray(node_time, dtype=float))
        gen_ticks = np.ceil(times * self.config.gen_freq_hz).astype(np.int64)
        offsets = self._wander(times) if self.config.is_asynchronous else 0.0
        captured = capture_generated_edge(gen_ticks, self.config, offsets)
        return float(captured[0]) if np.ndim(node_time) == 0 else captured
