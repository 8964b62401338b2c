import csv
from dataclasses import replace

import numpy as np
import pytest

from qot_timesync.capture import CaptureMode
from qot_timesync.clock import ClockParams, NoiseSpec
from qot_timesync.exceptions import ConfigurationError, StatisticsError
from qot_timesync.features import (
    HistogramSummary,
    run_capture_freq_study,
    run_capture_mode_study,
    run_os_jitter_probe,
    run_rx_rx_study,
    run_tx_rx_study,
)
from qot_timesync.simulator import ExperimentConfig, NodeConfig, Topology

WIDTH = 1.031e-6


@pytest.fixture
def rx_rx_config(gen_only_clock):
    return ExperimentConfig(
        sync_period=1.0,
        topology=Topology.one_tx_two_rx,
        node1=NodeConfig(clock=gen_only_clock),
        seed=8,
    )


def test_rx_rx_difference_is_triangular(rx_rx_config):
    summary = run_rx_rx_study(rx_rx_config, samples=100000)
    assert summary.variance == pytest.approx(WIDTH**2 / 6, rel=0.05)
    assert 1.6 * WIDTH <= summary.range <= 2 * WIDTH
    assert abs(summary.mean) < 0.05 * WIDTH


def test_rx_rx_noiseless_receivers_agree():
    config = ExperimentConfig(sync_period=1.0, topology=Topology.one_tx_two_rx, node1=NodeConfig(clock=ClockParams()))
    summary = run_rx_rx_study(config, samples=1000)
    assert summary.range == 0.0
    assert summary.variance == 0.0


def test_rx_rx_needs_two_receivers(gen_only_clock):
    with pytest.raises(ConfigurationError):
        run_rx_rx_study(ExperimentConfig(node1=NodeConfig(clock=gen_only_clock)), samples=100)


def test_tx_rx_is_half_the_rx_rx_variance(rx_rx_config):
    tx_rx = run_tx_rx_study(rx_rx_config, samples=100000)
    assert tx_rx.variance == pytest.approx(WIDTH**2 / 12, rel=0.05)
    assert tx_rx.mean == pytest.approx(WIDTH / 2, rel=0.02)
    assert tx_rx.range <= WIDTH * (1 + 1e-3)


def test_variance_decreases_with_capture_frequency():
    results = run_capture_freq_study(ExperimentConfig(seed=3), events=200000)
    assert [freq for freq, _ in results] == [2e6, 4e6, 16e6]
    variances = [stats.var_s for _, stats in results]
    assert variances[0] > variances[1] > variances[2]


def test_edge_aligned_noiseless_capture_has_no_variance():
    config = ExperimentConfig(node1=NodeConfig(clock=ClockParams()))
    results = run_capture_freq_study(config, freqs=[2e6], events=1000)
    assert results[0][1].var_s == 0.0
    assert results[0][1].m_s == 1.0


def test_double_sampling_lowers_the_variance():
    config = ExperimentConfig(seed=3)
    single = run_capture_freq_study(config, freqs=[2e6], events=200000, double_sampling=False)[0][1]
    double = run_capture_freq_study(config, freqs=[2e6], events=200000, double_sampling=True)[0][1]
    assert double.var_s <= single.var_s


def test_capture_freq_study_rejects_bad_frequencies():
    with pytest.raises(ConfigurationError):
        run_capture_freq_study(ExperimentConfig(), freqs=[0.0], events=100)
    with pytest.raises(ConfigurationError):
        run_capture_freq_study(ExperimentConfig(), freqs=[], events=100)


def test_capture_mode_ordering():
    results = {result.mode: result for result in run_capture_mode_study(ExperimentConfig(seed=3))}
    assert len(results[CaptureMode.synchronous].stats) == 10
    synchronous = results[CaptureMode.synchronous].mean_var_s
    shared = results[CaptureMode.asynchronous_shared_type].mean_var_s
    external = results[CaptureMode.asynchronous_external].mean_var_s
    assert synchronous <= shared <= external


def test_os_probe_without_jitter():
    summary = run_os_jitter_probe(NoiseSpec(), window=1.0, rate=1000.0)
    assert summary.mean == pytest.approx(1e-3)
    assert summary.range < 1e-15


def test_os_probe_constant_jitter_cancels():
    summary = run_os_jitter_probe(NoiseSpec.constant(5e-6), window=1.0, rate=1000.0)
    assert summary.mean == pytest.approx(1e-3)
    assert summary.range < 1e-15


def test_os_probe_gaussian_jitter_doubles_variance():
    sigma = 2e-6
    summary = run_os_jitter_probe(NoiseSpec.gaussian(sigma), window=10.0, rate=10000.0, seed=12)
    assert summary.count == 100000 - 1
    assert summary.variance == pytest.approx(2 * sigma**2, rel=0.05)


def test_os_probe_validation():
    with pytest.raises(ConfigurationError) as error:
        run_os_jitter_probe(NoiseSpec(), window=0.0, rate=-1.0)
    assert set(error.value.fields) == {"window", "rate"}


def test_histogram_summary(tmp_path):
    summary = HistogramSummary.from_samples([0.0, 1e-6, 2e-6, 3e-6], bins=3)
    assert summary.count == 4
    assert summary.range == pytest.approx(3e-6)
    assert sum(summary.bin_counts) == 4
    assert "samples : 4" in str(summary)
    assert "range : 3 us" in str(summary)
    output = tmp_path / "histogram.csv"
    summary.export_csv(output)
    with open(output, newline="") as infile:
        rows = list(csv.reader(infile))
    assert rows[0] == ["Bin low (s)", "Bin high (s)", "Count"]
    assert len(rows) == 4
    with pytest.raises(StatisticsError):
        HistogramSummary.from_samples([1.0])


def test_studies_are_paired_on_the_seed(rx_rx_config):
    first = run_tx_rx_study(rx_rx_config, samples=1000)
    second = run_tx_rx_study(replace(rx_rx_config, seed=8), samples=1000)
    assert first == second
