import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Deque, Optional

from .. import settings
from ..capture.datatypes import CaptureConfig, CaptureMode
from ..clock.datatypes import ClockParams, TimestampPair
from ..exceptions import ConfigurationError


class EngineType(Enum):
    lw_kalman = "lw_kalman"
    ftsp = "ftsp"
    both = "both"

    @property
    def members(self):
        """Concrete engines run for this selection"""
        if self == EngineType.both:
            return (EngineType.lw_kalman, EngineType.ftsp)
        return (self,)


@dataclass
class KalmanState:
    """Scalar filter on the frequency offset, A = H = 1 and B = 0

    last_pair is the anchor global time projections start from
    """

    x_hat: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 1.0
    last_pair: Optional[TimestampPair] = None

    def __post_init__(self):
        offending = []
        if not math.isfinite(self.q) or self.q < 0:
            offending.append("q")
        if not math.isfinite(self.r) or self.r <= 0:
            offending.append("r")
        if not math.isfinite(self.p) or self.p < 0:
            offending.append("p")
        if offending:
            raise ConfigurationError("invalid Kalman state", offending)


class RegressionTable:
    """Sliding window of timestamp pairs and its least squares line node -> root"""

    def __init__(self, capacity: int = settings.ftsp_window) -> None:
        if capacity < 1:
            raise ConfigurationError(f"regression window must hold at least one pair, got {capacity}", ["window"])
        self.window: Deque[TimestampPair] = deque(maxlen=capacity)
        self.fitted_skew = 0.0
        self.fitted_offset = 0.0

    def __len__(self) -> int:
        return len(self.window)

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(capacity={self.capacity}, size={len(self)}, "
            f"skew={self.fitted_skew!r}, offset={self.fitted_offset!r})"
        )

    @property
    def capacity(self) -> int:
        return self.window.maxlen

    @property
    def last_k(self) -> Optional[int]:
        return self.window[-1].k if self.window else None


@dataclass(frozen=True)
class MeasurementModel:
    """Statistics of the frequency offset measurement and of the drift state

    e_q_var feeds the measurement noise r, e_rd_var the model noise q
    """

    mu_q: float = 0.0
    e_q_var: float = 0.0
    mu_rd: float = 0.0
    e_rd_var: float = 0.0

    def __post_init__(self):
        offending = [name for name in ("e_q_var", "e_rd_var") if not getattr(self, name) >= 0]
        offending += [name for name in ("mu_q", "mu_rd") if not math.isfinite(getattr(self, name))]
        if offending:
            raise ConfigurationError("invalid measurement model", offending)

    @property
    def q(self) -> float:
        return self.e_rd_var

    @property
    def r(self) -> float:
        return self.e_q_var if self.e_q_var > 0 else settings.kalman_r_floor

    @staticmethod
    def capture_variance(capture: CaptureConfig, sync_period: float) -> float:
        """Timestamp variance added by interrupt generation and capture"""
        if not capture.enabled:
            return 0.0
        variance = (1 / capture.gen_freq_hz) ** 2 / 12
        prescaler = capture.prescaler
        if capture.mode == CaptureMode.synchronous and prescaler is not None:
            variance += (prescaler**2 - 1) / 12 / capture.gen_freq_hz**2
        else:
            variance += (1 / capture.effective_freq_hz) ** 2 / 12
        if capture.is_asynchronous:
            wander = capture.phase_wander**2
            if capture.mode == CaptureMode.asynchronous_external:
                wander += capture.external_wander**2
            # half of the per period increment, the other half lands on the next timestamp
            variance += wander * sync_period / 2
        return variance

    @classmethod
    def from_clock(
        cls,
        params: ClockParams,
        capture: CaptureConfig,
        sync_period: float,
        mu_q: float = 0.0,
        mu_rd: float = 0.0,
    ) -> "MeasurementModel":
        """Measurement and drift statistics implied by a noise configuration

        A frequency offset measurement differences two timestamps over one sync period,
        the drift state moves by the frequency random walk accumulated over that period
        """
        if not sync_period > 0:
            raise ConfigurationError(f"sync period must be > 0, got {sync_period}", ["sync_period"])
        timestamp_variance = params.timestamp_variance + cls.capture_variance(capture, sync_period)
        return cls(
            mu_q=mu_q,
            e_q_var=2 * timestamp_variance / sync_period**2,
            mu_rd=mu_rd,
            e_rd_var=params.drift_walk**2 * sync_period,
        )
