"""Command line front end

    python -m qot_timesync run --config configs/period_sweep.toml --out results --seeds 20
    python -m qot_timesync stats results

Every command writes a manifest.toml next to its results. The exit code is 0 on
success, 1 on a validation error, 2 on an I/O error and 3 when a simulation broke
one of its invariants.
"""
import argparse
import concurrent.futures
import logging
import os
import pathlib
import sys
import tempfile
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence

import prettytable
import toml
import verboselogs

from . import settings
from ._version import __version__
from .config import parse_config, serialize_config
from .exceptions import EXIT_MESSAGES, EXIT_SUCCESS, ConfigurationError, exit_code_for
from .features import (
    run_capture_freq_study,
    run_capture_mode_study,
    run_counter_race_study,
    run_fec_study,
    run_os_jitter_probe,
    run_rx_rx_study,
    run_tx_rx_study,
)
from .records import (
    format_number,
    read_records,
    records_filename,
    stats_command,
    write_csv,
    write_records,
)
from .simulator import ExperimentConfig, Topology, collect_traces, expand_sweep, run_experiment
from .sync import covariance_grid, evaluate_candidates, select_candidate
from .ui import BaseUI, UITerminalAdapter
from .utils import get_valid_filename, parse_float_list, parse_seeds

verboselogs.install()
logger = logging.getLogger(__name__)

MANIFEST_FILENAME = "manifest.toml"
STATS_FILENAME = "stats.csv"


class Command(Enum):
    run = "run"
    study_rxrx = "study-rxrx"
    study_txrx = "study-txrx"
    study_capture = "study-capture"
    study_mode = "study-mode"
    study_os = "study-os"
    study_fec = "study-fec"
    study_counter = "study-counter"
    train = "train"
    stats = "stats"


SEEDED_COMMANDS = (Command.run, Command.train)


@dataclass
class RunManifest:
    """Provenance of a result set, written as manifest.toml in its output directory"""

    command: Command
    output_dir: pathlib.Path
    config_path: Optional[pathlib.Path] = None
    seeds: List[int] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.command = Command(self.command)
        self.output_dir = pathlib.Path(self.output_dir)
        if self.command in SEEDED_COMMANDS and not self.seeds:
            raise ConfigurationError(f"command {self.command.value} needs at least one seed", ["seeds"])
        if any(not 0 <= seed < 1 << 64 for seed in self.seeds):
            raise ConfigurationError("seeds must be 64-bit unsigned integers", ["seeds"])

    def prepare_output_dir(self) -> None:
        """Create the output directory, PermissionError when it cannot be written"""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(self.output_dir, os.W_OK):
            raise PermissionError(f"output directory {self.output_dir} is not writable")

    def to_dict(self) -> Dict:
        data = {
            "version": __version__,
            "command": self.command.value,
            "output_dir": str(self.output_dir),
            "seeds": list(self.seeds),
            "outputs": sorted(self.outputs),
        }
        if self.config_path is not None:
            data["config_path"] = str(self.config_path)
        return data

    def write(self) -> pathlib.Path:
        path = self.output_dir / MANIFEST_FILENAME
        with open(path, "w") as outfile:
            toml.dump(self.to_dict(), outfile)
        return path


def load_config(args) -> ExperimentConfig:
    config = parse_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "period", None) is not None:
        config = config.with_period(args.period)
    return config


def _run_period(config: ExperimentConfig, seeds: Sequence[int], args, ui: BaseUI, parts_dir: pathlib.Path) -> List:
    """Every seed writes its own part file, parts are merged in seed order"""
    stem = pathlib.Path(records_filename(config.sync_period)).stem

    def run_seed(seed: int) -> pathlib.Path:
        part = parts_dir / f"{stem}_seed{seed}.csv"
        write_records(run_experiment(config.with_seed(seed)), part)
        return part

    with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as executor:
        futures = [executor.submit(run_seed, seed) for seed in seeds]
        for done, _ in enumerate(concurrent.futures.as_completed(futures), start=1):
            if args.verbosity >= 0:
                ui.display_progress(done, len(futures), prefix=f"period {config.sync_period:g} s")
        parts = [future.result() for future in futures]
    return [record for part in parts for record in read_records(part)]


def command_run(args, ui: BaseUI, manifest: RunManifest) -> None:
    config = load_config(args)
    written = []
    with tempfile.TemporaryDirectory(dir=manifest.output_dir, prefix=".parts_") as parts_dir:
        for period_config in expand_sweep(config):
            records = _run_period(period_config, manifest.seeds, args, ui, pathlib.Path(parts_dir))
            path = manifest.output_dir / records_filename(period_config.sync_period)
            rows = write_records(records, path)
            logger.verbose(f"{rows} records written to {path}")
            written.append(path)
    error_stats = stats_command(written)
    _write_error_stats(manifest.output_dir / STATS_FILENAME, error_stats)
    ui.display_error_stats(error_stats)
    manifest.outputs += [path.name for path in written] + [STATS_FILENAME]
    logger.success(f"{len(written)} sync period(s) x {len(manifest.seeds)} seed(s) simulated")


def _write_error_stats(path: pathlib.Path, error_stats) -> None:
    write_csv(
        path,
        ["period", "engine", "mean", "std", "count"],
        [
            ["" if stats.period is None else format_number(stats.period), stats.engine.value,
             format_number(stats.mean), format_number(stats.std), stats.count]
            for stats in error_stats
        ],
    )


def command_stats(args, ui: BaseUI, manifest: RunManifest) -> None:
    paths = []
    for path in map(pathlib.Path, args.paths):
        paths += sorted(path.glob("period_*s.csv")) if path.is_dir() else [path]
    if not paths:
        raise ConfigurationError("no records file to summarize", ["paths"])
    error_stats = stats_command(paths)
    ui.display_error_stats(error_stats)
    if args.out:
        _write_error_stats(manifest.output_dir / STATS_FILENAME, error_stats)
        manifest.outputs.append(STATS_FILENAME)


def command_train(args, ui: BaseUI, manifest: RunManifest) -> None:
    config = load_config(args)
    rows = []
    for period_config in expand_sweep(config):
        model = period_config.measurement_model()
        r_center = model.r
        q_center = model.q
        if not q_center > 0:
            q_center = r_center * settings.training_q_fallback_ratio
            logger.notice(f"no drift walk configured, q grid centered on {q_center:.4g}")
        traces = collect_traces(period_config, manifest.seeds)
        scores = evaluate_candidates(traces, covariance_grid(q_center, r_center, args.grid_size))
        selected = select_candidate(scores)
        ui.display_training(period_config.sync_period, scores, selected)
        trained = replace(period_config, kalman_q=selected.q, kalman_r=selected.r)
        name = get_valid_filename(f"trained_period_{period_config.sync_period:g}s.toml")
        with open(manifest.output_dir / name, "w") as outfile:
            outfile.write(serialize_config(trained))
        manifest.outputs.append(name)
        rows.append([format_number(period_config.sync_period), format_number(selected.q), format_number(selected.r),
                     format_number(selected.mean_abs_error), format_number(selected.mean_nis)])
    write_csv(manifest.output_dir / "training.csv", ["period", "q", "r", "mean_abs_error", "mean_nis"], rows)
    manifest.outputs.append("training.csv")


def _export_histogram(ui: BaseUI, manifest: RunManifest, title: str, summary, name: str) -> None:
    ui.display_histogram(title, summary)
    summary.export_csv(manifest.output_dir / name)
    manifest.outputs.append(name)


def command_study_rxrx(args, ui: BaseUI, manifest: RunManifest) -> None:
    config = load_config(args)
    if config.topology != Topology.one_tx_two_rx:
        logger.notice("RX -> RX study, second receiver copied from node1")
        config = replace(config, topology=Topology.one_tx_two_rx, node2=None)
    _export_histogram(ui, manifest, "RX -> RX", run_rx_rx_study(config, args.samples), "rx_rx_histogram.csv")


def command_study_txrx(args, ui: BaseUI, manifest: RunManifest) -> None:
    config = load_config(args)
    _export_histogram(ui, manifest, "TX -> RX", run_tx_rx_study(config, args.samples), "tx_rx_histogram.csv")


def _slope_row(label: str, stats) -> List:
    return [label, format_number(stats.m_s), format_number(stats.std_s), format_number(stats.var_s), stats.n]


def command_study_capture(args, ui: BaseUI, manifest: RunManifest) -> None:
    config = load_config(args)
    double_sampling = True if args.double_sampling else None
    results = run_capture_freq_study(config, parse_float_list(args.freqs, "freqs"), args.events, double_sampling)
    ui.display_slope_stats("Capture (MHz)", [(f"{freq / 1e6:g}", stats) for freq, stats in results])
    write_csv(
        manifest.output_dir / "capture_freq.csv",
        ["capture_freq_hz", "m_s", "std_s", "var_s", "n"],
        [_slope_row(format_number(freq), stats) for freq, stats in results],
    )
    manifest.outputs.append("capture_freq.csv")


def command_study_mode(args, ui: BaseUI, manifest: RunManifest) -> None:
    config = load_config(args)
    results = run_capture_mode_study(config, args.freq, args.repetitions, args.events)
    ui.display_rows(
        ["Capture mode", "Mean m_s", "Mean var_s"],
        [[result.mode.value, f"{result.mean_m_s:.12f}", f"{result.mean_var_s:.5g}"] for result in results],
    )
    write_csv(
        manifest.output_dir / "capture_mode.csv",
        ["mode", "repetition", "m_s", "std_s", "var_s", "n"],
        [
            [result.mode.value] + _slope_row(str(repetition), stats)
            for result in results
            for repetition, stats in enumerate(result.stats)
        ],
    )
    manifest.outputs.append("capture_mode.csv")


def command_study_os(args, ui: BaseUI, manifest: RunManifest) -> None:
    config = load_config(args)
    summary = run_os_jitter_probe(config.node1.clock.read_jitter, args.window, args.rate, config.seed)
    _export_histogram(ui, manifest, "OS read", summary, "os_jitter_histogram.csv")


def command_study_fec(args, ui: BaseUI, manifest: RunManifest) -> None:
    config = load_config(args)
    ppm = args.ppm if args.ppm is not None else config.node1.clock.phi * 1e6
    result = run_fec_study(ppm, args.rf, args.jitter, args.samples, config.seed)
    ui.display_rows(
        ["Crystal (ppm)", "Mean FEC", "Estimated (ppm)", "Slope mean", "Dominant value", "Dominant share"],
        [[f"{ppm:g}", f"{result.mean_fec:.4f}", f"{result.estimated_ppm:.5f}", f"{result.slope_mean:.10f}",
          result.dominant_value, f"{result.dominant_fraction:.3f}"]],
    )
    write_csv(manifest.output_dir / "fec_values.csv", ["fec", "count"], sorted(result.value_counts.items()))
    manifest.outputs.append("fec_values.csv")


def command_study_counter(args, ui: BaseUI, manifest: RunManifest) -> None:
    config = load_config(args)
    result = run_counter_race_study(args.ticks, args.latency, args.read_delay, seed=config.seed)
    row = [result.reads, result.naive_mismatches, result.corrected_mismatches, result.max_naive_error]
    ui.display_rows(["Reads", "Naive mismatches", "Corrected mismatches", "Max naive error (ticks)"], [row])
    write_csv(manifest.output_dir / "counter_race.csv", ["reads", "naive_mismatches", "corrected_mismatches",
                                                        "max_naive_error"], [row])
    manifest.outputs.append("counter_race.csv")
    if result.corrected_mismatches:
        logger.error(f"{result.corrected_mismatches} corrected reads disagree with the shadow counter")


COMMAND_HANDLERS = {
    Command.run: command_run,
    Command.study_rxrx: command_study_rxrx,
    Command.study_txrx: command_study_txrx,
    Command.study_capture: command_study_capture,
    Command.study_mode: command_study_mode,
    Command.study_os: command_study_os,
    Command.study_fec: command_study_fec,
    Command.study_counter: command_study_counter,
    Command.train: command_train,
    Command.stats: command_stats,
}


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration (TOML)")
    common.add_argument("--out", help="output directory", default="results")
    common.add_argument("-v", "--verbose", dest="verbosity", action="store_const", const=1, default=0)
    common.add_argument("-q", "--quiet", dest="verbosity", action="store_const", const=-1)

    parser = argparse.ArgumentParser(
        prog="qot_timesync",
        description="Simulate clock synchronization and timing uncertainty studies",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    for command in SEEDED_COMMANDS:
        sub = commands.add_parser(command.value, parents=[common])
        sub.add_argument("--seeds", help="number of seeds from the config seed, or a comma separated list", default="1")
        sub.add_argument("--period", help="sync period override (s), disables the sweep", type=float)
        sub.add_argument("--jobs", help="parallel runs", type=int, default=None)
        if command == Command.train:
            sub.add_argument("--grid-size", type=int, default=settings.training_grid_size)

    for command in (Command.study_rxrx, Command.study_txrx):
        sub = commands.add_parser(command.value, parents=[common])
        sub.add_argument("--period", help="event spacing (s)", type=float)
        sub.add_argument("--samples", type=int, default=settings.study_samples)

    sub = commands.add_parser(Command.study_capture.value, parents=[common])
    sub.add_argument("--period", help="event spacing (s)", type=float)
    sub.add_argument("--freqs", default=",".join(f"{freq:g}" for freq in settings.study_capture_freqs))
    sub.add_argument("--events", type=int, default=settings.study_events)
    sub.add_argument("--double-sampling", action="store_true")

    sub = commands.add_parser(Command.study_mode.value, parents=[common])
    sub.add_argument("--period", help="event spacing (s)", type=float)
    sub.add_argument("--freq", type=float, default=settings.gen_freq_hz)
    sub.add_argument("--repetitions", type=int, default=settings.study_mode_repetitions)
    sub.add_argument("--events", type=int, default=settings.study_events)

    sub = commands.add_parser(Command.study_os.value, parents=[common])
    sub.add_argument("--window", type=float, default=settings.os_probe_window)
    sub.add_argument("--rate", type=float, default=settings.os_probe_rate)

    sub = commands.add_parser(Command.study_fec.value, parents=[common])
    sub.add_argument("--ppm", help="crystal drift, defaults to the node1 clock", type=float)
    sub.add_argument("--rf", help="carrier frequency (MHz)", type=float, default=settings.fec_rf_mhz)
    sub.add_argument("--jitter", help="register noise (LSB)", type=float, default=settings.fec_jitter_lsb)
    sub.add_argument("--samples", type=int, default=settings.study_samples)

    sub = commands.add_parser(Command.study_counter.value, parents=[common])
    sub.add_argument("--ticks", type=int, default=1_000_000)
    sub.add_argument("--latency", type=int, default=settings.counter_isr_latency_ticks)
    sub.add_argument("--read-delay", type=int, default=settings.counter_read_delay_ticks)

    sub = commands.add_parser(Command.stats.value, parents=[common])
    sub.add_argument("paths", nargs="+", help="records files or directories holding period_<g>s.csv files")
    sub.set_defaults(out=None)
    return parser.parse_args(argv)


def _log_level(verbosity: int) -> int:
    if verbosity > 0:
        return verboselogs.VERBOSE
    if verbosity < 0:
        return logging.WARNING
    return logging.INFO


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=_log_level(args.verbosity), format="%(levelname)s %(name)s : %(message)s")
    ui = BaseUI(UITerminalAdapter(), prettytable.PrettyTable)
    command = Command(args.command)
    try:
        if command in SEEDED_COMMANDS:
            base_seed = parse_config(args.config).seed if args.config else settings.seed
            seeds = parse_seeds(args.seeds, base_seed)
        else:
            seeds = []
        manifest = RunManifest(
            command=command,
            output_dir=pathlib.Path(args.out) if args.out else pathlib.Path.cwd(),
            config_path=pathlib.Path(args.config) if getattr(args, "config", None) else None,
            seeds=seeds,
        )
        if args.out:
            manifest.prepare_output_dir()
        COMMAND_HANDLERS[command](args, ui, manifest)
        if args.out:
            manifest.write()
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"{EXIT_MESSAGES[code]} : {e}")
        return code
    return EXIT_SUCCESS


if __name__ == "__main__":
    sys.exit(main())
