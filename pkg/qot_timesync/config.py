"""TOML experiment configuration

    [experiment]                  sync_period, query_period, duration, topology, engine,
                                  seed, periods, warmup_syncs
    [kalman]                      q, r, mu_q, mu_rd
    [ftsp]                        window
    [nodeN.clock]                 phi, offset_nr, prop_delay_mean, drift_walk
    [nodeN.clock.<noise source>]  kind, param_a, param_b, mean_shift
    [nodeN.capture]               capture_freq_hz, gen_freq_hz, mode, double_sampling,
                                  phase_offset, enabled, phase_wander, external_phi,
                                  external_wander

N is 1 or 2, absent keys take the calibrated defaults. Every offending key of a file
is reported at once.
"""
import logging
import pathlib
from dataclasses import asdict, fields
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Union

import toml

from .capture import CaptureConfig
from .clock import NOISE_SOURCES, ClockParams, NoiseSpec
from .exceptions import ConfigurationError
from .simulator import ExperimentConfig, NodeConfig

logger = logging.getLogger(__name__)

EXPERIMENT_KEYS = {
    "sync_period": float,
    "query_period": float,
    "duration": float,
    "topology": str,
    "engine": str,
    "seed": int,
    "warmup_syncs": int,
}
KALMAN_KEYS = {"q": "kalman_q", "r": "kalman_r", "mu_q": "mu_q", "mu_rd": "mu_rd"}
CLOCK_SCALARS = ("phi", "offset_nr", "prop_delay_mean", "drift_walk")
NOISE_KEYS = ("kind", "param_a", "param_b", "mean_shift")
CAPTURE_KEYS = tuple(f.name for f in fields(CaptureConfig))
NODE_SECTIONS = ("node1", "node2")


class _Collector:
    """Accumulates offending keys while a whole file is validated"""

    def __init__(self) -> None:
        self.offending: List[str] = []

    def unknown(self, section: str, table: Dict, allowed) -> None:
        self.offending += [f"{section}.{key}" for key in table if key not in allowed]

    def table(self, section: str, parent: Dict, key: str) -> Dict:
        value = parent.get(key, {})
        if not isinstance(value, dict):
            self.offending.append(section)
            return {}
        return value

    def convert(self, section: str, key: str, value: Any, converter: Callable) -> Any:
        try:
            if converter is float and isinstance(value, bool):
                raise TypeError
            if converter is int and (isinstance(value, bool) or not isinstance(value, int)):
                raise TypeError
            return converter(value)
        except (TypeError, ValueError):
            self.offending.append(f"{section}.{key}")
            return None

    def build(self, section: str, factory: Callable, **kwargs) -> Any:
        try:
            return factory(**kwargs)
        except ConfigurationError as e:
            self.offending += [f"{section}.{name}" for name in e.fields] or [section]
            return None

    def build_partial(self, section: str, factory: Callable, default: Any, kwargs: Dict) -> Any:
        """Validate the readable values against the defaults, None if any value was unreadable"""
        unreadable = [key for key, value in kwargs.items() if value is None]
        complete = {key: getattr(default, key) if value is None else value for key, value in kwargs.items()}
        built = self.build(section, factory, **complete)
        return None if unreadable else built


def _parse_noise(collector: _Collector, section: str, table: Dict, default: NoiseSpec) -> Optional[NoiseSpec]:
    collector.unknown(section, table, NOISE_KEYS)
    kwargs = {"kind": table.get("kind", default.kind)}
    for key in NOISE_KEYS[1:]:
        kwargs[key] = collector.convert(section, key, table.get(key, getattr(default, key)), float)
    return collector.build_partial(section, NoiseSpec, default, kwargs)


def _parse_clock(collector: _Collector, section: str, table: Dict) -> Optional[ClockParams]:
    default = ClockParams.calibrated()
    collector.unknown(section, table, CLOCK_SCALARS + NOISE_SOURCES)
    kwargs = {}
    for key in CLOCK_SCALARS:
        kwargs[key] = collector.convert(section, key, table.get(key, getattr(default, key)), float)
    for source in NOISE_SOURCES:
        noise_table = collector.table(f"{section}.{source}", table, source)
        kwargs[source] = _parse_noise(collector, f"{section}.{source}", noise_table, getattr(default, source))
    return collector.build_partial(section, ClockParams, default, kwargs)


def _parse_capture(collector: _Collector, section: str, table: Dict) -> Optional[CaptureConfig]:
    default = CaptureConfig()
    collector.unknown(section, table, CAPTURE_KEYS)
    kwargs = {}
    for key in CAPTURE_KEYS:
        value = table.get(key, getattr(default, key))
        if isinstance(value, Enum) or key == "mode":
            kwargs[key] = value
        elif isinstance(getattr(default, key), bool):
            if not isinstance(value, bool):
                collector.offending.append(f"{section}.{key}")
                value = None
            kwargs[key] = value
        else:
            kwargs[key] = collector.convert(section, key, value, float)
    return collector.build_partial(section, CaptureConfig, default, kwargs)


def _parse_node(collector: _Collector, name: str, data: Dict) -> Optional[NodeConfig]:
    node_table = collector.table(name, data, name)
    collector.unknown(name, node_table, ("clock", "capture"))
    clock = _parse_clock(collector, f"{name}.clock", collector.table(f"{name}.clock", node_table, "clock"))
    capture = _parse_capture(collector, f"{name}.capture", collector.table(f"{name}.capture", node_table, "capture"))
    if clock is None or capture is None:
        return None
    return NodeConfig(clock=clock, capture=capture)


def config_from_dict(data: Dict) -> ExperimentConfig:
    """Validated experiment configuration from a parsed TOML document"""
    collector = _Collector()
    collector.unknown("", data, ("experiment", "kalman", "ftsp") + NODE_SECTIONS)
    collector.offending = [key.lstrip(".") for key in collector.offending]
    kwargs: Dict[str, Any] = {}

    experiment = collector.table("experiment", data, "experiment")
    collector.unknown("experiment", experiment, tuple(EXPERIMENT_KEYS) + ("periods",))
    for key, converter in EXPERIMENT_KEYS.items():
        if key in experiment:
            kwargs[key] = collector.convert("experiment", key, experiment[key], converter)
    if "periods" in experiment:
        periods = experiment["periods"]
        if isinstance(periods, list):
            periods = [collector.convert("experiment", "periods", period, float) for period in periods]
            kwargs["periods"] = tuple(periods) if None not in periods else None
        else:
            collector.offending.append("experiment.periods")

    kalman = collector.table("kalman", data, "kalman")
    collector.unknown("kalman", kalman, KALMAN_KEYS)
    for key, field_name in KALMAN_KEYS.items():
        if key in kalman:
            kwargs[field_name] = collector.convert("kalman", key, kalman[key], float)

    ftsp = collector.table("ftsp", data, "ftsp")
    collector.unknown("ftsp", ftsp, ("window",))
    if "window" in ftsp:
        kwargs["ftsp_window"] = collector.convert("ftsp", "window", ftsp["window"], int)

    kwargs["node1"] = _parse_node(collector, "node1", data)
    if "node2" in data:
        kwargs["node2"] = _parse_node(collector, "node2", data)

    offending = list(collector.offending)
    try:
        config = ExperimentConfig(**{key: value for key, value in kwargs.items() if value is not None})
    except ConfigurationError as e:
        offending += [_experiment_key(name) for name in e.fields]
    if offending:
        raise ConfigurationError("invalid configuration", list(dict.fromkeys(offending)))
    logger.debug(f"configuration loaded : {config}")
    return config


def _experiment_key(field_name: str) -> str:
    reverse = {value: key for key, value in KALMAN_KEYS.items()}
    if field_name in reverse:
        return f"kalman.{reverse[field_name]}"
    if field_name == "ftsp_window":
        return "ftsp.window"
    return f"experiment.{field_name}"


def parse_config_text(text: str) -> ExperimentConfig:
    try:
        data = toml.loads(text)
    except toml.TomlDecodeError as e:
        raise ConfigurationError(f"configuration is not valid TOML : {e}") from e
    return config_from_dict(data)


def parse_config(path: Union[str, pathlib.Path]) -> ExperimentConfig:
    """Read and validate a configuration file, OSError when it cannot be read"""
    path = pathlib.Path(path)
    with open(path, "r") as infile:
        text = infile.read()
    logger.info(f"loading configuration {path}")
    return parse_config_text(text)


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items() if item is not None}
    if isinstance(value, tuple):
        return [_plain(item) for item in value]
    return value


def config_to_dict(config: ExperimentConfig) -> Dict:
    data = {
        "experiment": {
            "sync_period": config.sync_period,
            "query_period": config.query_period,
            "duration": config.duration,
            "topology": config.topology,
            "engine": config.engine,
            "seed": config.seed,
            "periods": config.periods,
            "warmup_syncs": config.warmup_syncs,
        },
        "kalman": {key: getattr(config, field_name) for key, field_name in KALMAN_KEYS.items()},
        "ftsp": {"window": config.ftsp_window},
        "node1": asdict(config.node1),
    }
    if config.node2 is not None:
        data["node2"] = asdict(config.node2)
    return _plain(data)


def serialize_config(config: ExperimentConfig) -> str:
    """TOML text that parses back to an equal configuration"""
    return toml.dumps(config_to_dict(config))
