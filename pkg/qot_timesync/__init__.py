from ._version import __version__
from .config import parse_config, parse_config_text, serialize_config
from .exceptions import QoTError
from .records import compute_error_stats, read_records, stats_command, write_records
from .simulator import ExperimentConfig, NodeConfig, Simulator, SyncErrorRecord, Topology, run_experiment, run_seeds
