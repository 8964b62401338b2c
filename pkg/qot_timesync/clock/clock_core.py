"""Virtual root and node clocks

The node reading of the common event k follows

    R(k) = k * spacing
    N(k) = R(k) + phi * R(k) + n_r(k) + offset_nr + prop_delay_mean + d(k) + g(k) + c(k)

where every lower-case term is a fresh draw from its NoiseSpec. The root timestamps
the event perfectly, all the noise sits at the node.
"""
import logging
import math
from typing import Dict, Optional, Tuple, Union

import numpy as np

from ..exceptions import ConfigurationError, OutOfOrderError
from .datatypes import NOISE_SOURCES, ClockParams, NoiseKind, NoiseSpec

logger = logging.getLogger(__name__)

# Stream order is part of the reproducibility contract, append only
STREAM_SOURCES = NOISE_SOURCES + ("drift_walk", "phase_wander", "external_wander")

Size = Optional[Union[int, Tuple[int, ...]]]


class NoiseStreams:
    """Independent random streams, one per (node, noise source)

    Toggling one source never perturbs the draws of another one
    """

    def __init__(self, seed: int, node: int = 0):
        self.seed = seed
        self.node = node
        self._generators: Dict[str, np.random.Generator] = {
            name: np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(node, index)))
            for index, name in enumerate(STREAM_SOURCES)
        }

    @classmethod
    def shared(cls, rng: np.random.Generator) -> "NoiseStreams":
        """All sources draw from one generator, in a fixed order"""
        streams = cls.__new__(cls)
        streams.seed = None
        streams.node = 0
        streams._generators = {name: rng for name in STREAM_SOURCES}
        return streams

    def __getitem__(self, source: str) -> np.random.Generator:
        return self._generators[source]


def _as_streams(rng: Union[np.random.Generator, NoiseStreams]) -> NoiseStreams:
    return rng if isinstance(rng, NoiseStreams) else NoiseStreams.shared(rng)


def sample_noise(spec: NoiseSpec, rng: np.random.Generator, size: Size = None):
    """Draw from the configured distribution, deterministic given the rng state

    Returns a float when size is None, an ndarray otherwise
    """
    kind = spec.kind
    if kind == NoiseKind.none:
        return 0.0 if size is None else np.zeros(size)
    if kind == NoiseKind.constant:
        return spec.param_a if size is None else np.full(size, spec.param_a)
    if kind == NoiseKind.uniform:
        if not spec.param_a < spec.param_b:
            raise ConfigurationError("uniform noise requires param_a < param_b", ["param_a", "param_b"])
        value = rng.uniform(spec.param_a, spec.param_b, size)
    elif kind == NoiseKind.triangular:
        if not spec.param_a < spec.param_b:
            raise ConfigurationError("triangular noise requires param_a < param_b", ["param_a", "param_b"])
        value = rng.triangular(spec.param_a, (spec.param_a + spec.param_b) / 2, spec.param_b, size)
    elif kind == NoiseKind.gaussian:
        if spec.param_a < 0:
            raise ConfigurationError("gaussian standard deviation must be >= 0", ["param_a"])
        value = rng.normal(0.0, spec.param_a, size)
    else:
        raise ConfigurationError(f"unsupported noise kind {kind}", ["kind"])
    return float(value) if size is None else value


def root_timestamp(k: int, event_spacing: float) -> float:
    """Root timestamp of event k, the root is noiseless"""
    if k < 0:
        raise OutOfOrderError(f"event index must be >= 0, got {k}")
    if not event_spacing > 0:
        raise ConfigurationError(f"event spacing must be > 0, got {event_spacing}", ["event_spacing"])
    return k * event_spacing


def node_time_at(root_time, params: ClockParams, rng: Union[np.random.Generator, NoiseStreams]):
    """Node reading of a common event happening at root time root_time

    Accepts a scalar or an ndarray of root times, draws one value per event and source
    """
    streams = _as_streams(rng)
    size = None if np.ndim(root_time) == 0 else np.shape(root_time)
    node_time = root_time + params.phi * root_time + params.offset_nr + params.prop_delay_mean
    node_time = node_time + sample_noise(params.drift_noise, streams["drift_noise"], size)
    node_time = node_time + sample_noise(params.prop_noise, streams["prop_noise"], size)
    node_time = node_time + sample_noise(params.gen_noise, streams["gen_noise"], size)
    node_time = node_time + sample_noise(params.cap_noise, streams["cap_noise"], size)
    return node_time


def node_timestamp(
    k: int,
    event_spacing: float,
    params: ClockParams,
    rng: Union[np.random.Generator, NoiseStreams],
) -> float:
    """Noisy node timestamp of event k"""
    return node_time_at(root_timestamp(k, event_spacing), params, rng)


class NodeClock:
    """Stateful node clock owned by one simulated node

    Adds to the event model a frequency random walk (params.drift_walk) integrated
    between consecutive reads. Reads must come in nondecreasing root time.
    """

    def __init__(self, params: ClockParams, streams: NoiseStreams):
        self.params = params
        self.streams = streams
        self._last_root_time = 0.0
        self._freq_offset = 0.0
        self._phase = 0.0

    @property
    def freq_offset(self) -> float:
        """Current deviation of the node rate from 1 + phi"""
        return self._freq_offset

    def _advance(self, root_time: float) -> None:
        elapsed = root_time - self._last_root_time
        if elapsed < 0:
            raise OutOfOrderError(f"clock read at {root_time} precedes previous read at {self._last_root_time}")
        if elapsed > 0 and self.params.drift_walk > 0:
            step = self.streams["drift_walk"].normal(0.0, self.params.drift_walk * math.sqrt(elapsed))
            # midpoint rule for the integral of the walk over the interval
            self._phase += (self._freq_offset + step / 2) * elapsed
            self._freq_offset += step
        self._last_root_time = root_time

    def read(self, root_time: float) -> float:
        """Node timestamp of an event occurring at root_time"""
        self._advance(root_time)
        return node_time_at(root_time, self.params, self.streams) + self._phase
