"""Slope series statistics and FEC based drift estimation"""
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import settings
from .clock.datatypes import TimestampPair
from .exceptions import ConfigurationError, DegenerateIntervalError, OutOfOrderError, StatisticsError

PPM = 1e6


@dataclass(frozen=True)
class SlopeStats:
    """Mean, standard deviation and variance of a slope series"""

    m_s: float
    std_s: float
    var_s: float
    n: int

    def __str__(self) -> str:
        return f"m_s={self.m_s:.12g} std_s={self.std_s:.6g} var_s={self.var_s:.6g} (n={self.n})"

    @property
    def drift_ppm(self) -> float:
        return (self.m_s - 1) * PPM


def slopes_from_times(root_times, node_times) -> np.ndarray:
    """s(k) = (N(k) - N(k-1)) / (R(k) - R(k-1)) from aligned timestamp arrays"""
    root_times = np.asarray(root_times, dtype=float)
    node_times = np.asarray(node_times, dtype=float)
    if root_times.shape != node_times.shape or root_times.ndim != 1:
        raise ValueError("root and node timestamps must be aligned 1-D sequences")
    if root_times.size < 2:
        raise StatisticsError(f"a slope needs two timestamp pairs, got {root_times.size}")
    delta_root = np.diff(root_times)
    if np.any(delta_root == 0):
        index = int(np.flatnonzero(delta_root == 0)[0]) + 1
        raise DegenerateIntervalError(f"duplicate root timestamp {root_times[index]} at position {index}")
    if np.any(delta_root < 0):
        index = int(np.flatnonzero(delta_root < 0)[0]) + 1
        raise OutOfOrderError(f"root timestamp {root_times[index]} at position {index} goes backwards")
    return np.diff(node_times) / delta_root


def slope_series(pairs: Sequence[TimestampPair]) -> np.ndarray:
    """Instantaneous rate of change of node timestamps against root timestamps"""
    return slopes_from_times([pair.root_time for pair in pairs], [pair.node_time for pair in pairs])


def slope_stats(slopes) -> SlopeStats:
    """Sample statistics of a slope series, variance with the n - 1 denominator"""
    slopes = np.asarray(slopes, dtype=float)
    if slopes.size == 0:
        raise StatisticsError("no slope to summarize")
    if slopes.size == 1:
        raise StatisticsError("variance is undefined for a single slope")
    var_s = float(np.var(slopes, ddof=1))
    return SlopeStats(m_s=float(np.mean(slopes)), std_s=float(np.sqrt(var_s)), var_s=var_s, n=int(slopes.size))


def fec_to_ppm(fec: float, f_rf_mhz: float = settings.fec_rf_mhz) -> float:
    """Crystal drift in ppm from a (signed) FEC register value at carrier f_rf_mhz"""
    if not f_rf_mhz > 0:
        raise ConfigurationError(f"carrier frequency must be > 0 MHz, got {f_rf_mhz}", ["f_rf_mhz"])
    if not settings.fec_min <= fec <= settings.fec_max:
        raise ConfigurationError(
            f"FEC value {fec} outside [{settings.fec_min}, {settings.fec_max}], decode the raw byte first", ["fec"]
        )
    return fec * settings.fec_scale / f_rf_mhz


def ppm_to_slope_mean(f_crystal_ppm: float) -> float:
    return 1 + f_crystal_ppm / PPM


def decode_twos_complement(raw: Union[int, np.ndarray]):
    """Signed value of an 8-bit two's complement register byte"""
    values = np.asarray(raw)
    if np.any(values < 0) or np.any(values > 0xFF):
        raise ValueError(f"register byte out of range [0, 255] : {raw}")
    if values.ndim == 0:
        raw = int(raw)
        return raw - 0x100 if raw & 0x80 else raw
    values = values.astype(np.int16)
    return np.where(values >= 0x80, values - 0x100, values)


def sample_fec_register(
    f_crystal_ppm: float,
    f_rf_mhz: float,
    jitter_lsb: float,
    rng: np.random.Generator,
    size: Optional[int] = None,
):
    """Raw FEC register bytes reported by the transceiver for a crystal drift

    Each frame reports the drift plus gaussian jitter (in register LSB), rounded and
    saturated to the signed 8-bit range, then encoded as two's complement
    """
    if not f_rf_mhz > 0:
        raise ConfigurationError(f"carrier frequency must be > 0 MHz, got {f_rf_mhz}", ["f_rf_mhz"])
    if jitter_lsb < 0:
        raise ConfigurationError("FEC jitter must be >= 0", ["jitter_lsb"])
    expected = f_crystal_ppm * f_rf_mhz / settings.fec_scale
    signed = np.clip(np.rint(expected + rng.normal(0.0, jitter_lsb, size)), settings.fec_min, settings.fec_max)
    raw = signed.astype(np.int16) & 0xFF
    return int(raw) if size is None else raw.astype(np.uint8)


def fec_mean_to_ppm(fec_values, f_rf_mhz: float = settings.fec_rf_mhz) -> float:
    """Crystal drift estimated from the average of many signed FEC readings"""
    fec_values = np.asarray(fec_values, dtype=float)
    if fec_values.size == 0:
        raise StatisticsError("no FEC sample to average")
    return fec_to_ppm(float(np.mean(fec_values)), f_rf_mhz)
