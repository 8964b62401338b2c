import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .. import settings
from ..exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class CaptureMode(Enum):
    synchronous = "synchronous"
    asynchronous_shared_type = "asynchronous_shared_type"
    asynchronous_external = "asynchronous_external"


@dataclass(frozen=True)
class CaptureConfig:
    """Interrupt generation and timer capture hardware of one node

    enabled = False models an ideal capture, node readings are not quantized.
    phase_wander, external_phi and external_wander only apply to the asynchronous modes.
    """

    capture_freq_hz: float = settings.capture_freq_hz
    gen_freq_hz: float = settings.gen_freq_hz
    mode: CaptureMode = CaptureMode.synchronous
    double_sampling: bool = False
    phase_offset: float = 0.0
    enabled: bool = True
    phase_wander: float = settings.capture_phase_wander
    external_phi: float = settings.capture_external_phi
    external_wander: float = settings.capture_external_wander

    def __post_init__(self):
        if isinstance(self.mode, str):
            try:
                object.__setattr__(self, "mode", CaptureMode(self.mode))
            except ValueError:
                raise ConfigurationError(f"unknown capture mode {self.mode!r}", ["mode"])
        offending = []
        for name in ("capture_freq_hz", "gen_freq_hz"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                offending.append(name)
        if "capture_freq_hz" not in offending and not 0 <= self.phase_offset < 1 / self.capture_freq_hz:
            offending.append("phase_offset")
        for name in ("phase_wander", "external_wander"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                offending.append(name)
        if not math.isfinite(self.external_phi) or abs(self.external_phi) >= settings.MAX_ABS_PHI:
            offending.append("external_phi")
        if offending:
            raise ConfigurationError("invalid capture configuration", offending)

    @property
    def tick(self) -> float:
        """Capture clock period in seconds"""
        return 1 / self.capture_freq_hz

    @property
    def effective_freq_hz(self) -> float:
        """Capture rate seen by the timestamps, doubled when both edges are sampled"""
        return self.capture_freq_hz * (2 if self.double_sampling else 1)

    @property
    def prescaler(self) -> Optional[int]:
        """Integer ratio between generation and effective capture clocks, None if not integer"""
        ratio = self.gen_freq_hz / self.effective_freq_hz
        nearest = round(ratio)
        if nearest >= 1 and abs(ratio - nearest) < settings.capture_edge_tolerance_ticks:
            return nearest
        return None

    @property
    def is_asynchronous(self) -> bool:
        return self.mode != CaptureMode.synchronous

    @classmethod
    def ideal(cls) -> "CaptureConfig":
        return cls(enabled=False)


class ExtendedCounter:
    """16-bit hardware counter extended by a 16-bit software overflow count

    The composed value is sw_overflows * 2**16 + hw_bits, modulo 2**32
    """

    def __init__(self, hw_bits: int = 0, sw_overflows: int = 0, overflow_pending: bool = False) -> None:
        self._hw_bits = 0
        self._sw_overflows = 0
        self.hw_bits = hw_bits
        self.sw_overflows = sw_overflows
        self.overflow_pending = overflow_pending
        self.last_value = 0

    def __str__(self) -> str:
        return (
            f"sw : 0x{self.sw_overflows:04X} | hw : 0x{self.hw_bits:04X} | "
            f"pending : {self.overflow_pending} | value : 0x{self.value:08X}"
        )

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.hw_bits!r}, {self.sw_overflows!r}, {self.overflow_pending!r})"

    @property
    def hw_bits(self) -> int:
        return self._hw_bits

    @hw_bits.setter
    def hw_bits(self, raw_value: int):
        if 0 <= raw_value < settings.counter_hw_modulo:
            self._hw_bits = raw_value
        else:
            raise ValueError(f"hardware counter value out of range : {raw_value}")

    @property
    def sw_overflows(self) -> int:
        return self._sw_overflows

    @sw_overflows.setter
    def sw_overflows(self, raw_value: int):
        if 0 <= raw_value < 1 << settings.counter_sw_bits:
            self._sw_overflows = raw_value
        else:
            raise ValueError(f"software overflow count out of range : {raw_value}")

    @property
    def value(self) -> int:
        return (self.sw_overflows << settings.counter_hw_bits | self.hw_bits) % settings.counter_modulo

    def increment(self, ticks: int = 1) -> None:
        """Advance the hardware counter, raising the overflow flag on wraparound"""
        total = self.hw_bits + ticks
        if total >= settings.counter_hw_modulo:
            if self.overflow_pending or total >= 2 * settings.counter_hw_modulo:
                logger.warning("hardware counter wrapped while an overflow was still pending")
            self.overflow_pending = True
        self.hw_bits = total % settings.counter_hw_modulo

    def service_overflow(self) -> None:
        """Overflow interrupt handler, increments the software part"""
        if not self.overflow_pending:
            return
        self.sw_overflows = (self.sw_overflows + 1) % (1 << settings.counter_sw_bits)
        self.overflow_pending = False
