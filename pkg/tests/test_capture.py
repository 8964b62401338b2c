import numpy as np
import pytest

from qot_timesync import settings
from qot_timesync.capture import (
    CaptureChannel,
    CaptureConfig,
    CaptureMode,
    ExtendedCounter,
    capture_event,
    capture_generated_edge,
    double_sample,
    overflow_period,
    quantize_capture,
    read_extended,
)
from qot_timesync.clock import NoiseStreams
from qot_timesync.exceptions import ConfigurationError
from qot_timesync.features import CounterSimulation, run_counter_race_study

CAPTURE_2MHZ = CaptureConfig(capture_freq_hz=2e6)
TICK = 0.5e-6


def test_quantize_on_an_edge():
    tick, captured = quantize_capture(1.0e-6, CAPTURE_2MHZ)
    assert tick == 2
    assert captured == pytest.approx(1.0e-6, abs=1e-18)


def test_quantize_rounds_up_to_the_next_edge():
    tick, captured = quantize_capture(1.3e-6, CAPTURE_2MHZ)
    assert tick == 3
    assert captured == pytest.approx(1.5e-6, abs=1e-18)
    assert captured - 1.3e-6 == pytest.approx(0.2e-6, abs=1e-15)


def test_quantize_error_within_one_tick(rng):
    events = rng.uniform(0.0, 1.0, 100000)
    _, captured = quantize_capture(events, CAPTURE_2MHZ)
    error = captured - events
    assert error.min() >= -1e-15
    assert error.max() < TICK
    assert error.mean() == pytest.approx(TICK / 2, rel=0.01)


def test_double_sampling_halves_worst_case(rng):
    config = CaptureConfig(capture_freq_hz=2e6, double_sampling=True)
    events = rng.uniform(0.0, 1.0, 100000)
    single_error = quantize_capture(events, CAPTURE_2MHZ)[1] - events
    double_error = double_sample(events, config) - events
    assert double_error.min() >= -1e-15
    assert double_error.max() < TICK / 2 + 1e-15
    assert double_error.max() == pytest.approx(single_error.max() / 2, rel=0.01)
    assert np.all(double_error <= single_error + 1e-15)


def test_double_sampling_keeps_edge_events():
    config = CaptureConfig(capture_freq_hz=2e6, double_sampling=True)
    assert double_sample(1.0e-6, config) == pytest.approx(1.0e-6, abs=1e-15)
    assert capture_event(1.3e-6, config) == pytest.approx(1.5e-6, abs=1e-15)
    assert capture_event(1.1e-6, config) == pytest.approx(1.25e-6, abs=1e-15)


def test_double_sample_requires_the_option():
    with pytest.raises(ConfigurationError):
        double_sample(1e-6, CAPTURE_2MHZ)


def test_capture_config_validation():
    with pytest.raises(ConfigurationError) as error:
        CaptureConfig(capture_freq_hz=0.0, phase_wander=-1.0)
    assert set(error.value.fields) == {"capture_freq_hz", "phase_wander"}
    with pytest.raises(ConfigurationError):
        CaptureConfig(mode="asynchronous_weird")
    assert CaptureConfig(mode="asynchronous_external").mode == CaptureMode.asynchronous_external


def test_prescaler():
    assert CaptureConfig(capture_freq_hz=2e6).prescaler == 8
    assert CaptureConfig(capture_freq_hz=2e6, double_sampling=True).prescaler == 4
    assert CaptureConfig(capture_freq_hz=3e6).prescaler is None


def test_synchronous_generated_edges_are_exact():
    config = CaptureConfig(capture_freq_hz=2e6)
    gen_ticks = np.array([0, 1, 7, 8, 9, 16_000_001])
    expected = np.array([0, 8, 8, 8, 16, 16_000_008]) / 16e6
    np.testing.assert_array_equal(capture_generated_edge(gen_ticks, config), expected)


def test_overflow_period():
    assert overflow_period(16e6) == pytest.approx(4.096e-3)
    with pytest.raises(ConfigurationError):
        overflow_period(0.0)


def test_disabled_capture_is_ideal():
    channel = CaptureChannel(CaptureConfig.ideal(), NoiseStreams(1, 1))
    assert channel.capture(1.2345678e-3) == 1.2345678e-3


def test_synchronous_channel_error_is_bounded(rng):
    config = CaptureConfig(capture_freq_hz=2e6)
    channel = CaptureChannel(config, NoiseStreams(1, 1))
    times = np.sort(rng.uniform(0.0, 10.0, 10000))
    error = channel.capture(times) - times
    assert error.min() >= -1e-12
    assert error.max() < 1 / 16e6 + TICK + 1e-12


def test_asynchronous_channel_wanders():
    config = CaptureConfig(capture_freq_hz=16e6, mode=CaptureMode.asynchronous_shared_type)
    channel = CaptureChannel(config, NoiseStreams(1, 1))
    channel.capture(np.arange(1, 100) * 30.0)
    assert channel.offset != 0.0


def test_read_extended_examples():
    assert read_extended(ExtendedCounter(), 0x00FF, False) == 0x000000FF
    assert read_extended(ExtendedCounter(sw_overflows=3), 0xFFFE, False) == 3 * 65536 + 65534
    assert read_extended(ExtendedCounter(sw_overflows=3), 0x0002, True) == 4 * 65536 + 2


def test_read_extended_ignores_flag_for_late_values():
    counter = ExtendedCounter(sw_overflows=3, overflow_pending=True)
    assert read_extended(counter, 0xFFF0, True) == 3 * 65536 + 0xFFF0


def test_read_extended_never_goes_backwards():
    counter = ExtendedCounter(sw_overflows=3)
    read_extended(counter, 0x1000, False)
    assert read_extended(counter, 0x0FFF, False) == 3 * 65536 + 0x1000


def test_read_extended_wraps_at_32_bits():
    counter = ExtendedCounter(sw_overflows=0xFFFF)
    assert read_extended(counter, 0x0001, True) == 1


def test_extended_counter_overflow_flag():
    counter = ExtendedCounter(hw_bits=0xFFFF)
    counter.increment()
    assert counter.hw_bits == 0 and counter.overflow_pending
    counter.service_overflow()
    assert counter.sw_overflows == 1 and not counter.overflow_pending
    assert counter.value == 65536
    with pytest.raises(ValueError):
        counter.hw_bits = 1 << 16


def test_counter_simulation_tracks_time():
    simulation = CounterSimulation(isr_latency_ticks=200)
    simulation.advance_to(3 * settings.counter_hw_modulo + 500)
    assert simulation.counter.sw_overflows == 3
    assert simulation.counter.hw_bits == 500
    assert not simulation.counter.overflow_pending


def test_extended_reads_match_shadow_counter():
    result = run_counter_race_study(ticks=1_000_000, seed=3)
    assert result.reads > 10000
    assert result.corrected_mismatches == 0
    assert result.naive_mismatches > 0
