"""Discrete event simulation of root -> node synchronization

The root broadcasts a sync message every sync_period and a query message every
query_period. Both sides timestamp the common event, the node feeds the sync pairs
to its engines and answers every query with its estimate of the root time.
"""
import concurrent.futures
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import simpy
import verboselogs

from . import settings
from .capture import CaptureChannel, CaptureConfig
from .clock import ClockParams, NodeClock, NoiseStreams, TimestampPair, sample_noise
from .exceptions import (
    ConfigurationError,
    DegenerateIntervalError,
    NotInitializedError,
    OutOfOrderError,
    SimulationInvariantError,
)
from .sync import EngineType, FtspEngine, LWKalmanEngine, MeasurementModel, SyncEngine, sync_error

verboselogs.install()
logger = logging.getLogger(__name__)

SEED_LIMIT = 1 << 64


def to_ns(seconds: float) -> int:
    return int(round(seconds * settings.NS_PER_S))


def _is_schedulable(period: float) -> bool:
    """Finite period of at least one nanosecond once rounded"""
    return math.isfinite(period) and period > 0 and to_ns(period) >= 1


class Topology(Enum):
    tx_rx_pair = "tx_rx_pair"
    one_tx_two_rx = "one_tx_two_rx"


@dataclass(frozen=True)
class NodeConfig:
    """Clock and capture hardware of one simulated receiver"""

    clock: ClockParams = field(default_factory=ClockParams.calibrated)
    capture: CaptureConfig = field(default_factory=CaptureConfig)


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one simulation run

    With topology one_tx_two_rx the second receiver synchronizes on the readings of the
    first one (reference broadcast), node2 defaults to a copy of node1.
    kalman_q / kalman_r default to the values of the measurement model.
    """

    sync_period: float = settings.sync_period
    query_period: float = settings.query_period
    duration: float = settings.duration
    topology: Topology = Topology.tx_rx_pair
    node1: NodeConfig = field(default_factory=NodeConfig)
    node2: Optional[NodeConfig] = None
    engine: EngineType = EngineType.both
    kalman_q: Optional[float] = None
    kalman_r: Optional[float] = None
    mu_q: float = 0.0
    mu_rd: float = 0.0
    ftsp_window: int = settings.ftsp_window
    seed: int = settings.seed
    periods: Tuple[float, ...] = ()
    warmup_syncs: int = settings.warmup_syncs

    def __post_init__(self):
        offending = []
        for name, enum_cls in (("topology", Topology), ("engine", EngineType)):
            value = getattr(self, name)
            if isinstance(value, str):
                try:
                    object.__setattr__(self, name, enum_cls(value))
                except ValueError:
                    offending.append(name)
        object.__setattr__(self, "periods", tuple(float(period) for period in self.periods))
        if not _is_schedulable(self.duration):
            offending.append("duration")
        if not _is_schedulable(self.sync_period) or self.sync_period > self.duration:
            offending.append("sync_period")
        if not _is_schedulable(self.query_period):
            offending.append("query_period")
        if any(not _is_schedulable(period) or period > self.duration for period in self.periods):
            offending.append("periods")
        if self.kalman_q is not None and not self.kalman_q >= 0:
            offending.append("kalman_q")
        if self.kalman_r is not None and not self.kalman_r > 0:
            offending.append("kalman_r")
        if not isinstance(self.ftsp_window, int) or self.ftsp_window < 1:
            offending.append("ftsp_window")
        if not isinstance(self.seed, int) or not 0 <= self.seed < SEED_LIMIT:
            offending.append("seed")
        if not isinstance(self.warmup_syncs, int) or self.warmup_syncs < 0:
            offending.append("warmup_syncs")
        if offending:
            raise ConfigurationError("invalid experiment configuration", offending)
        if self.topology == Topology.one_tx_two_rx and self.node2 is None:
            object.__setattr__(self, "node2", self.node1)

    @property
    def sweep_periods(self) -> Tuple[float, ...]:
        return self.periods if self.periods else (self.sync_period,)

    def with_period(self, sync_period: float) -> "ExperimentConfig":
        return replace(self, sync_period=sync_period, periods=())

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def measurement_model(self) -> MeasurementModel:
        """Model of the pairs fed to the engines, both receivers add up in reference broadcast"""
        nodes = [self.node1] if self.topology == Topology.tx_rx_pair else [self.node1, self.node2]
        models = [MeasurementModel.from_clock(node.clock, node.capture, self.sync_period) for node in nodes]
        return MeasurementModel(
            mu_q=self.mu_q,
            e_q_var=sum(model.e_q_var for model in models),
            mu_rd=self.mu_rd,
            e_rd_var=sum(model.e_rd_var for model in models),
        )

    def covariances(self) -> Tuple[float, float]:
        model = self.measurement_model()
        q = self.kalman_q if self.kalman_q is not None else model.q
        r = self.kalman_r if self.kalman_r is not None else model.r
        return q, r


@dataclass(frozen=True)
class SyncErrorRecord:
    """Sync error of one engine at one query message"""

    query_time: float
    engine: EngineType
    error: float
    run_seed: int

    @property
    def sort_key(self):
        return (self.run_seed, self.query_time, self.engine.value)


class SimulatedNode:
    """Clock and capture hardware of one receiver, readings are bias compensated"""

    def __init__(self, index: int, config: NodeConfig, seed: int) -> None:
        self.index = index
        self.params = config.clock
        self.streams = NoiseStreams(seed, index)
        self.clock = NodeClock(config.clock, self.streams)
        self.channel = CaptureChannel(config.capture, self.streams)

    def timestamp(self, root_time: float) -> float:
        """Captured reading of an event at root_time, known biases removed"""
        return self.channel.capture(self.clock.read(root_time)) - self.params.known_bias

    def query_timestamp(self, root_time: float) -> float:
        """Reading of a query event, the software read adds the OS jitter"""
        jitter = self.params.read_jitter
        return self.timestamp(root_time) + sample_noise(jitter, self.streams["read_jitter"]) - jitter.mean_shift


class Simulator:
    """Event loop of one run, time is kept in integer nanoseconds"""

    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config
        self.receivers = [SimulatedNode(1, config.node1, config.seed)]
        if config.topology == Topology.one_tx_two_rx:
            self.receivers.append(SimulatedNode(2, config.node2, config.seed))
        self.engines: Dict[EngineType, SyncEngine] = {
            engine_type: self._create_engine(engine_type) for engine_type in config.engine.members
        }
        self.pairs: List[TimestampPair] = []
        self.records: List[SyncErrorRecord] = []
        self.uncertainties: List[float] = []
        self._now_ns = 0

    def _create_engine(self, engine_type: EngineType) -> SyncEngine:
        if engine_type == EngineType.lw_kalman:
            q, r = self.config.covariances()
            return LWKalmanEngine(q, r, self.config.measurement_model())
        return FtspEngine(self.config.ftsp_window)

    def _sync_pair(self, k: int, root_time: float) -> TimestampPair:
        if len(self.receivers) == 1:
            return TimestampPair(k, root_time, self.receivers[0].timestamp(root_time))
        reference, node = self.receivers
        return TimestampPair(k, reference.timestamp(root_time), node.timestamp(root_time))

    def _handle_sync(self, k: int, root_time: float) -> None:
        pair = self._sync_pair(k, root_time)
        self.pairs.append(pair)
        for engine in self.engines.values():
            engine.ingest_sync(pair)

    def _handle_query(self, root_time: float) -> None:
        if len(self.receivers) == 1:
            true_time = root_time
            reading = self.receivers[0].query_timestamp(root_time)
        else:
            reference, node = self.receivers
            true_time = reference.timestamp(root_time)
            reading = node.query_timestamp(root_time)
        ready_after = max(1, self.config.warmup_syncs)
        for engine_type, engine in self.engines.items():
            if engine.syncs < ready_after:
                continue
            estimate = engine.project(reading)
            self.records.append(SyncErrorRecord(root_time, engine_type, sync_error(true_time, estimate), self.config.seed))
            if isinstance(engine, LWKalmanEngine):
                self.uncertainties.append(engine.uncertainty(reading))

    def _root_time(self, env: simpy.Environment) -> float:
        if env.now < self._now_ns:
            raise SimulationInvariantError(f"event at {env.now} ns handled after {self._now_ns} ns")
        self._now_ns = env.now
        return env.now / settings.NS_PER_S

    def _sync_process(self, env: simpy.Environment, period_ns: int, duration_ns: int):
        k = 0
        while k * period_ns <= duration_ns:
            yield env.timeout(k * period_ns - env.now)
            # queries of the same instant still project from the previous sync
            yield env.timeout(0)
            self._handle_sync(k, self._root_time(env))
            k += 1

    def _query_process(self, env: simpy.Environment, period_ns: int, duration_ns: int):
        index = 1
        while index * period_ns <= duration_ns:
            yield env.timeout(index * period_ns - env.now)
            self._handle_query(self._root_time(env))
            index += 1

    def run(self) -> List[SyncErrorRecord]:
        config = self.config
        duration_ns = to_ns(config.duration)
        env = simpy.Environment(initial_time=0)
        env.process(self._query_process(env, to_ns(config.query_period), duration_ns))
        env.process(self._sync_process(env, to_ns(config.sync_period), duration_ns))
        try:
            env.run()
        except (OutOfOrderError, DegenerateIntervalError, NotInitializedError) as e:
            raise SimulationInvariantError(f"seed {config.seed}: {e}") from e
        self._check_fairness()
        logger.verbose(
            f"seed {config.seed}, period {config.sync_period:g} s : {len(self.pairs)} sync messages, "
            f"{len(self.records)} records"
        )
        if self.uncertainties:
            logger.debug(f"mean projected uncertainty {sum(self.uncertainties) / len(self.uncertainties):.4g} s")
        return self.records

    def _check_fairness(self) -> None:
        digests = {engine.stream_digest for engine in self.engines.values()}
        if len(digests) > 1:
            raise SimulationInvariantError(f"seed {self.config.seed}: engines ingested different timestamp streams")


def run_experiment(config: ExperimentConfig) -> List[SyncErrorRecord]:
    return Simulator(config).run()


def run_seeds(config: ExperimentConfig, seeds: Sequence[int], jobs: Optional[int] = None) -> List[SyncErrorRecord]:
    """Independent runs over seeds, in parallel, records concatenated in seed order"""
    if not seeds:
        raise ConfigurationError("at least one seed is needed", ["seeds"])
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(run_experiment, config.with_seed(seed)) for seed in seeds]
        results = [future.result() for future in futures]
    return [record for records in results for record in records]


def collect_traces(config: ExperimentConfig, seeds: Iterable[int]) -> List[List[TimestampPair]]:
    """Sync pair streams the engines would see, one per seed, used for training"""
    traces = []
    for seed in seeds:
        simulator = Simulator(config.with_seed(seed))
        simulator.run()
        traces.append(simulator.pairs)
    return traces


def expand_sweep(config: ExperimentConfig) -> List[ExperimentConfig]:
    """One configuration per swept sync period"""
    return [config.with_period(period) for period in config.sweep_periods]
