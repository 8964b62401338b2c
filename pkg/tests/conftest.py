import numpy as np
import pytest

from qot_timesync.capture import CaptureConfig
from qot_timesync.clock import ClockParams, NoiseSpec, NoiseStreams, TimestampPair
from qot_timesync.simulator import ExperimentConfig, NodeConfig

PHI = 1.57e-6


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def streams():
    return NoiseStreams(7, 1)


@pytest.fixture
def noiseless_clock():
    return ClockParams(phi=PHI)


@pytest.fixture
def noiseless_config(noiseless_clock):
    """Constant drift, no noise, ideal capture"""
    return ExperimentConfig(
        sync_period=30.0,
        duration=600.0,
        node1=NodeConfig(clock=noiseless_clock, capture=CaptureConfig.ideal()),
        warmup_syncs=2,
        seed=3,
    )


@pytest.fixture
def short_config():
    return ExperimentConfig(sync_period=30.0, duration=600.0, seed=5)


@pytest.fixture
def gen_only_clock():
    """Only the interrupt generation jitter, uniform over 1.031 us"""
    width = 1.031e-6
    return ClockParams(phi=PHI, gen_noise=NoiseSpec.uniform(0.0, width, mean_shift=width / 2))


@pytest.fixture
def make_pairs():
    """Noiseless pairs drifting at phi, R(k) = k * spacing"""

    def drifting_pairs(count: int, spacing: float = 30.0, phi: float = PHI, offset: float = 0.0):
        return [TimestampPair(k, k * spacing, k * spacing * (1 + phi) + offset) for k in range(count)]

    return drifting_pairs
