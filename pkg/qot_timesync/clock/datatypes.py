import math
from dataclasses import dataclass, field, fields
from enum import Enum

from .. import settings
from ..exceptions import ConfigurationError


class NoiseKind(Enum):
    none = "none"
    constant = "constant"
    uniform = "uniform"
    triangular = "triangular"
    gaussian = "gaussian"


# Noise sources of one root/node pair, in the order their random streams are spawned
NOISE_SOURCES = ("drift_noise", "prop_noise", "gen_noise", "cap_noise", "read_jitter")


@dataclass(frozen=True)
class NoiseSpec:
    """Distribution of one timing uncertainty source, values in seconds

    param_a / param_b meaning depends on kind :
        constant   : param_a is the value
        uniform    : support [param_a, param_b]
        triangular : symmetric support [param_a, param_b], mode at the midpoint
        gaussian   : param_a is the standard deviation (zero mean)
    mean_shift declares a known bias of the source, it is compensated before sync
    """

    kind: NoiseKind = NoiseKind.none
    param_a: float = 0.0
    param_b: float = 0.0
    mean_shift: float = 0.0

    def __post_init__(self):
        if isinstance(self.kind, str):
            try:
                object.__setattr__(self, "kind", NoiseKind(self.kind))
            except ValueError:
                raise ConfigurationError(f"unknown noise kind {self.kind!r}", ["kind"])
        self.validate()

    def validate(self) -> None:
        offending = [
            f.name for f in fields(self) if f.name != "kind" and not math.isfinite(getattr(self, f.name))
        ]
        if offending:
            raise ConfigurationError("noise parameters must be finite", offending)
        if self.kind in (NoiseKind.uniform, NoiseKind.triangular) and not self.param_a < self.param_b:
            raise ConfigurationError(
                f"{self.kind.value} noise requires param_a < param_b, got [{self.param_a}, {self.param_b}]",
                ["param_a", "param_b"],
            )
        if self.kind == NoiseKind.gaussian and self.param_a < 0:
            raise ConfigurationError("gaussian standard deviation must be >= 0", ["param_a"])

    @property
    def is_none(self) -> bool:
        return self.kind == NoiseKind.none

    @property
    def analytic_mean(self) -> float:
        if self.kind == NoiseKind.constant:
            return self.param_a
        if self.kind in (NoiseKind.uniform, NoiseKind.triangular):
            return (self.param_a + self.param_b) / 2
        return 0.0

    @property
    def analytic_variance(self) -> float:
        width = self.param_b - self.param_a
        if self.kind == NoiseKind.uniform:
            return width**2 / 12
        if self.kind == NoiseKind.triangular:
            return width**2 / 24
        if self.kind == NoiseKind.gaussian:
            return self.param_a**2
        return 0.0

    @classmethod
    def uniform(cls, low: float, high: float, mean_shift: float = 0.0) -> "NoiseSpec":
        return cls(NoiseKind.uniform, low, high, mean_shift)

    @classmethod
    def triangular(cls, low: float, high: float, mean_shift: float = 0.0) -> "NoiseSpec":
        return cls(NoiseKind.triangular, low, high, mean_shift)

    @classmethod
    def gaussian(cls, sigma: float) -> "NoiseSpec":
        return cls(NoiseKind.gaussian, sigma)

    @classmethod
    def constant(cls, value: float) -> "NoiseSpec":
        return cls(NoiseKind.constant, value, mean_shift=value)


@dataclass(frozen=True)
class ClockParams:
    """Drift, constant offsets and noise sources of one root <-> node pair

    drift_walk is the standard deviation of the frequency random walk (1/s per sqrt(s)),
    zero keeps the node exactly on the average relative drift phi
    """

    phi: float = 0.0
    offset_nr: float = 0.0
    prop_delay_mean: float = 0.0
    drift_noise: NoiseSpec = field(default_factory=NoiseSpec)
    prop_noise: NoiseSpec = field(default_factory=NoiseSpec)
    gen_noise: NoiseSpec = field(default_factory=NoiseSpec)
    cap_noise: NoiseSpec = field(default_factory=NoiseSpec)
    read_jitter: NoiseSpec = field(default_factory=NoiseSpec)
    drift_walk: float = 0.0

    def __post_init__(self):
        offending = []
        if not math.isfinite(self.phi) or abs(self.phi) >= settings.MAX_ABS_PHI:
            offending.append("phi")
        if not math.isfinite(self.offset_nr):
            offending.append("offset_nr")
        if not math.isfinite(self.prop_delay_mean) or self.prop_delay_mean < 0:
            offending.append("prop_delay_mean")
        if not math.isfinite(self.drift_walk) or self.drift_walk < 0:
            offending.append("drift_walk")
        if offending:
            raise ConfigurationError("invalid clock parameters", offending)

    @property
    def known_bias(self) -> float:
        """Bias that can be estimated beforehand and removed from captured node readings

        read_jitter is left out, it only affects software reads
        """
        return self.prop_delay_mean + sum(
            getattr(self, name).mean_shift for name in NOISE_SOURCES if name != "read_jitter"
        )

    @property
    def timestamp_variance(self) -> float:
        """Variance of one node timestamp around its model value, capture excluded"""
        return sum(getattr(self, name).analytic_variance for name in NOISE_SOURCES if name != "read_jitter")

    @classmethod
    def calibrated(cls) -> "ClockParams":
        """Noise sources calibrated on the bench measurements"""
        return cls(
            phi=settings.clock_phi,
            offset_nr=settings.clock_offset_nr,
            prop_delay_mean=settings.clock_prop_delay_mean,
            drift_noise=NoiseSpec.gaussian(settings.clock_drift_noise_sigma),
            gen_noise=NoiseSpec.uniform(
                0.0, settings.clock_gen_noise_width, mean_shift=settings.clock_gen_noise_width / 2
            ),
            drift_walk=settings.clock_drift_walk_sigma,
        )


@dataclass(frozen=True)
class TimestampPair:
    """Root and node timestamps of synchronization event k"""

    k: int
    root_time: float
    node_time: float

    def as_tuple(self):
        return (self.k, self.root_time, self.node_time)
