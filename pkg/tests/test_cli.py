import pytest
import toml

from qot_timesync.__main__ import Command, RunManifest, main
from qot_timesync.config import parse_config
from qot_timesync.exceptions import EXIT_IO_ERROR, EXIT_SUCCESS, EXIT_VALIDATION_ERROR, ConfigurationError

SHORT_RUN = """
[experiment]
sync_period = 30.0
duration = 600.0
seed = 1
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "short.toml"
    path.write_text(SHORT_RUN)
    return path


def test_run_writes_records_stats_and_manifest(tmp_path, config_file):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--out", str(out), "--seeds", "2", "-q"]) == EXIT_SUCCESS
    assert sorted(path.name for path in out.iterdir()) == ["manifest.toml", "period_30s.csv", "stats.csv"]
    manifest = toml.load(out / "manifest.toml")
    assert manifest["command"] == "run"
    assert manifest["seeds"] == [1, 2]
    assert manifest["config_path"] == str(config_file)
    seeds = {line.split(",")[-1] for line in (out / "period_30s.csv").read_text().splitlines()[1:]}
    assert seeds == {"1", "2"}


def test_identical_runs_give_identical_files(tmp_path, config_file):
    for name in ("first", "second"):
        assert main(["run", "--config", str(config_file), "--out", str(tmp_path / name), "--seeds", "1,3", "--jobs", "2", "-q"]) == 0
    for name in ("period_30s.csv", "stats.csv"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()


def test_sweep_writes_one_file_per_period(tmp_path):
    config = tmp_path / "sweep.toml"
    config.write_text("[experiment]\nduration = 600.0\nperiods = [30.0, 60.0]\n")
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out), "-q"]) == EXIT_SUCCESS
    assert (out / "period_30s.csv").exists() and (out / "period_60s.csv").exists()


def test_period_override(tmp_path, config_file):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--out", str(out), "--period", "60", "-q"]) == EXIT_SUCCESS
    assert (out / "period_60s.csv").exists()


def test_invalid_config_exits_with_validation_error(tmp_path):
    config = tmp_path / "bad.toml"
    config.write_text("[experiment]\nsync_period = 0\n")
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "out"), "-q"]) == EXIT_VALIDATION_ERROR


def test_missing_config_exits_with_io_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.toml"), "--out", str(tmp_path), "-q"]) == EXIT_IO_ERROR


def test_stats_command(tmp_path, config_file, capsys):
    out = tmp_path / "out"
    main(["run", "--config", str(config_file), "--out", str(out), "-q"])
    capsys.readouterr()
    assert main(["stats", str(out)]) == EXIT_SUCCESS
    assert "lw_kalman" in capsys.readouterr().out


def test_stats_on_malformed_records(tmp_path):
    path = tmp_path / "period_30s.csv"
    path.write_text("query_time,engine,error,seed\n18,ftsp,x,1\n")
    assert main(["stats", str(path)]) == EXIT_VALIDATION_ERROR


def test_train_writes_a_trained_config(tmp_path, config_file):
    out = tmp_path / "out"
    assert main(["train", "--config", str(config_file), "--out", str(out), "--seeds", "2", "--grid-size", "3", "-q"]) == 0
    trained = parse_config(out / "trained_period_30s.toml")
    assert trained.kalman_q is not None and trained.kalman_r is not None
    assert (out / "training.csv").exists()


def test_study_commands(tmp_path):
    out = tmp_path / "out"
    assert main(["study-rxrx", "--out", str(out), "--samples", "2000", "-q"]) == EXIT_SUCCESS
    assert main(["study-txrx", "--out", str(out), "--samples", "2000", "-q"]) == EXIT_SUCCESS
    assert main(["study-capture", "--out", str(out), "--events", "1000", "-q"]) == EXIT_SUCCESS
    assert main(["study-mode", "--out", str(out), "--events", "500", "--repetitions", "2", "-q"]) == EXIT_SUCCESS
    assert main(["study-os", "--out", str(out), "--window", "0.1", "-q"]) == EXIT_SUCCESS
    assert main(["study-fec", "--out", str(out), "--samples", "1000", "-q"]) == EXIT_SUCCESS
    assert main(["study-counter", "--out", str(out), "--ticks", "200000", "-q"]) == EXIT_SUCCESS
    for name in ("rx_rx_histogram.csv", "tx_rx_histogram.csv", "capture_freq.csv", "capture_mode.csv",
                 "os_jitter_histogram.csv", "fec_values.csv", "counter_race.csv", "manifest.toml"):
        assert (out / name).exists()


def test_study_validation_error(tmp_path):
    assert main(["study-capture", "--out", str(tmp_path), "--freqs", "2e6,-1", "-q"]) == EXIT_VALIDATION_ERROR


def test_manifest_requires_seeds_for_runs(tmp_path):
    with pytest.raises(ConfigurationError):
        RunManifest(command=Command.run, output_dir=tmp_path)
    manifest = RunManifest(command="stats", output_dir=tmp_path)
    assert manifest.command == Command.stats
