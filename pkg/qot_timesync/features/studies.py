"""Timing uncertainty studies run on the clock and capture models

Every study is deterministic given its seed. Studies that compare configurations
reuse the same seed for each of them so only the studied parameter changes.
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import verboselogs

from .. import settings
from ..capture import CaptureChannel, CaptureConfig, CaptureMode, ExtendedCounter, read_extended
from ..clock import NoiseSpec, NoiseStreams, node_time_at, root_timestamp, sample_noise
from ..estimation import (
    SlopeStats,
    decode_twos_complement,
    fec_mean_to_ppm,
    ppm_to_slope_mean,
    sample_fec_register,
    slope_stats,
    slopes_from_times,
)
from ..exceptions import ConfigurationError
from ..simulator import ExperimentConfig, NodeConfig, Topology
from .histogram import HistogramSummary

verboselogs.install()
logger = logging.getLogger(__name__)


def _root_times(config: ExperimentConfig, events: int) -> np.ndarray:
    if events < 2:
        raise ConfigurationError(f"a study needs at least two events, got {events}", ["events"])
    # validates the spacing
    root_timestamp(0, config.sync_period)
    return np.arange(events) * config.sync_period


def _node_times(node: NodeConfig, root_times: np.ndarray, seed: int, index: int) -> np.ndarray:
    return node_time_at(root_times, node.clock, NoiseStreams(seed, index))


def run_tx_rx_study(config: ExperimentConfig, samples: int = settings.study_samples) -> HistogramSummary:
    """Deviation of receiver timestamps from the deterministic part of the clock model"""
    root = _root_times(config, samples)
    clock = config.node1.clock
    node = _node_times(config.node1, root, config.seed, 1)
    deviation = node - root * (1 + clock.phi) - clock.offset_nr - clock.prop_delay_mean
    summary = HistogramSummary.from_samples(deviation)
    logger.verbose(f"TX -> RX uncertainty over {samples} events :{summary}")
    return summary


def run_rx_rx_study(config: ExperimentConfig, samples: int = settings.study_samples) -> HistogramSummary:
    """Difference between the timestamps two receivers put on the same broadcast"""
    if config.topology != Topology.one_tx_two_rx:
        raise ConfigurationError("the RX -> RX study needs topology one_tx_two_rx", ["topology"])
    root = _root_times(config, samples)
    difference = _node_times(config.node1, root, config.seed, 1) - _node_times(config.node2, root, config.seed, 2)
    summary = HistogramSummary.from_samples(difference)
    logger.verbose(f"RX -> RX uncertainty over {samples} events :{summary}")
    return summary


def _captured_slope_stats(capture: CaptureConfig, root: np.ndarray, node_times: np.ndarray, seed: int) -> SlopeStats:
    captured = CaptureChannel(capture, NoiseStreams(seed, 1)).capture(node_times)
    return slope_stats(slopes_from_times(root, captured))


def _capture_at(capture: CaptureConfig, freq: float, **changes) -> CaptureConfig:
    if not freq > 0:
        raise ConfigurationError(f"capture frequency must be > 0, got {freq}", ["capture_freq_hz"])
    return replace(capture, capture_freq_hz=freq, phase_offset=capture.phase_offset % (1 / freq), enabled=True, **changes)


def run_capture_freq_study(
    base: ExperimentConfig,
    freqs: Sequence[float] = settings.study_capture_freqs,
    events: int = settings.study_events,
    double_sampling: Optional[bool] = None,
) -> List[Tuple[float, SlopeStats]]:
    """Slope statistics of captured timestamps for each capture frequency, same noise draws"""
    if len(freqs) == 0:
        raise ConfigurationError("no capture frequency to study", ["freqs"])
    changes = {} if double_sampling is None else {"double_sampling": double_sampling}
    captures = [(freq, _capture_at(base.node1.capture, freq, **changes)) for freq in sorted(freqs)]
    root = _root_times(base, events)
    node_times = _node_times(base.node1, root, base.seed, 1)
    results = []
    for freq, capture in captures:
        stats = _captured_slope_stats(capture, root, node_times, base.seed)
        logger.verbose(f"capture at {freq / 1e6:g} MHz : {stats}")
        results.append((freq, stats))
    return results


@dataclass(frozen=True)
class CaptureModeResult:
    mode: CaptureMode
    stats: Tuple[SlopeStats, ...]

    @property
    def mean_var_s(self) -> float:
        return float(np.mean([stats.var_s for stats in self.stats]))

    @property
    def mean_m_s(self) -> float:
        return float(np.mean([stats.m_s for stats in self.stats]))


def run_capture_mode_study(
    base: ExperimentConfig,
    freq: float = settings.gen_freq_hz,
    repetitions: int = settings.study_mode_repetitions,
    events: int = settings.study_events,
) -> List[CaptureModeResult]:
    """Slope statistics of every capture type, seeds base.seed .. base.seed + repetitions - 1"""
    if repetitions < 1:
        raise ConfigurationError(f"at least one repetition is needed, got {repetitions}", ["repetitions"])
    captures = {mode: _capture_at(base.node1.capture, freq, mode=mode) for mode in CaptureMode}
    root = _root_times(base, events)
    stats: Dict[CaptureMode, List[SlopeStats]] = {mode: [] for mode in CaptureMode}
    for repetition in range(repetitions):
        seed = base.seed + repetition
        node_times = _node_times(base.node1, root, seed, 1)
        for mode, capture in captures.items():
            stats[mode].append(_captured_slope_stats(capture, root, node_times, seed))
    results = [CaptureModeResult(mode, tuple(mode_stats)) for mode, mode_stats in stats.items()]
    for result in results:
        logger.verbose(f"{result.mode.value} : mean var_s {result.mean_var_s:.5g}")
    return results


def run_os_jitter_probe(
    read_jitter: NoiseSpec,
    window: float = settings.os_probe_window,
    rate: float = settings.os_probe_rate,
    seed: int = settings.seed,
) -> HistogramSummary:
    """Differences of consecutive clock reads in a tight loop, each read perturbed by the OS"""
    offending = (["rate"] if not rate > 0 else []) + (["window"] if not window > 0 else [])
    if offending:
        raise ConfigurationError("invalid OS jitter probe", offending)
    reads = int(window * rate)
    if reads < 3:
        raise ConfigurationError(f"the probe window holds only {reads} reads", ["window", "rate"])
    read_times = np.arange(reads) / rate
    observed = read_times + sample_noise(read_jitter, NoiseStreams(seed, 0)["read_jitter"], reads)
    summary = HistogramSummary.from_samples(np.diff(observed))
    logger.verbose(f"OS read interval over {reads} reads :{summary}")
    return summary


@dataclass(frozen=True)
class FecStudyResult:
    samples: int
    value_counts: Dict[int, int]
    mean_fec: float
    estimated_ppm: float
    slope_mean: float

    @property
    def dominant_value(self) -> int:
        return max(self.value_counts, key=lambda value: (self.value_counts[value], -abs(value)))

    @property
    def dominant_fraction(self) -> float:
        return self.value_counts[self.dominant_value] / self.samples


def run_fec_study(
    f_crystal_ppm: float = settings.clock_phi * 1e6,
    f_rf_mhz: float = settings.fec_rf_mhz,
    jitter_lsb: float = settings.fec_jitter_lsb,
    samples: int = settings.study_samples,
    seed: int = settings.seed,
) -> FecStudyResult:
    """Drift estimated from the FEC register of many received frames"""
    if samples < 1:
        raise ConfigurationError(f"at least one FEC sample is needed, got {samples}", ["samples"])
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    fec = decode_twos_complement(sample_fec_register(f_crystal_ppm, f_rf_mhz, jitter_lsb, rng, samples))
    values, counts = np.unique(fec, return_counts=True)
    estimated_ppm = fec_mean_to_ppm(fec, f_rf_mhz)
    return FecStudyResult(
        samples=samples,
        value_counts={int(value): int(count) for value, count in zip(values, counts)},
        mean_fec=float(np.mean(fec)),
        estimated_ppm=estimated_ppm,
        slope_mean=ppm_to_slope_mean(estimated_ppm),
    )


class CounterSimulation:
    """Free running 16-bit counter whose overflow interrupt is serviced after a latency"""

    def __init__(self, isr_latency_ticks: int) -> None:
        if not 0 <= isr_latency_ticks < settings.counter_half_range:
            raise ConfigurationError("overflow interrupt latency must stay below half the counter range", ["latency"])
        self.counter = ExtendedCounter()
        self.latency = isr_latency_ticks
        self.now = 0
        self._service_due = 0

    def advance_to(self, tick: int) -> None:
        modulo = settings.counter_hw_modulo
        while True:
            next_wrap = (self.now // modulo + 1) * modulo
            next_event = min(next_wrap, self._service_due) if self.counter.overflow_pending else next_wrap
            if next_event > tick:
                break
            self.counter.increment(next_event - self.now)
            self.now = next_event
            if self.counter.overflow_pending and next_event == self._service_due and next_event != next_wrap:
                self.counter.service_overflow()
            elif next_event == next_wrap:
                self._service_due = next_wrap + self.latency
                if self.latency == 0:
                    self.counter.service_overflow()
        self.counter.increment(tick - self.now)
        self.now = tick

    def capture(self, tick: int, read_delay_ticks: int) -> Tuple[int, bool]:
        """Latch the counter at tick, the software checks the overflow flag read_delay_ticks later

        Interrupts stay masked in between, a wrap in that window only raises the flag
        """
        self.advance_to(tick)
        wrapped_late = (tick + read_delay_ticks) // settings.counter_hw_modulo > tick // settings.counter_hw_modulo
        return self.counter.hw_bits, self.counter.overflow_pending or wrapped_late


@dataclass(frozen=True)
class CounterRaceResult:
    reads: int
    naive_mismatches: int
    corrected_mismatches: int
    max_naive_error: int


def run_counter_race_study(
    ticks: int = 1_000_000,
    isr_latency_ticks: int = settings.counter_isr_latency_ticks,
    read_delay_ticks: int = settings.counter_read_delay_ticks,
    random_reads: int = 10000,
    seed: int = settings.seed,
) -> CounterRaceResult:
    """Compare naive and race corrected extended reads against a wide shadow counter

    Captures are placed at random plus around every wraparound, where the overflow
    interrupt has not been serviced yet
    """
    if ticks < 1:
        raise ConfigurationError(f"at least one tick must be simulated, got {ticks}", ["ticks"])
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    modulo = settings.counter_hw_modulo
    adversarial = [
        wrap + delta
        for wrap in range(modulo, ticks, modulo)
        for delta in range(-read_delay_ticks - 2, isr_latency_ticks + 3)
    ]
    random_ticks = rng.integers(0, ticks, random_reads).tolist()
    capture_ticks = sorted({tick for tick in adversarial + random_ticks if 0 <= tick < ticks})

    simulation = CounterSimulation(isr_latency_ticks)
    naive_mismatches = corrected_mismatches = max_naive_error = 0
    for tick in capture_ticks:
        raw, pending = simulation.capture(tick, read_delay_ticks)
        naive = (simulation.counter.sw_overflows << settings.counter_hw_bits) + raw
        corrected = read_extended(simulation.counter, raw, pending)
        if naive != tick:
            naive_mismatches += 1
            max_naive_error = max(max_naive_error, abs(naive - tick))
        if corrected != tick:
            corrected_mismatches += 1
    logger.verbose(
        f"{len(capture_ticks)} reads : {naive_mismatches} naive mismatches, {corrected_mismatches} corrected"
    )
    return CounterRaceResult(len(capture_ticks), naive_mismatches, corrected_mismatches, max_naive_error)
