"""Sync error records as CSV and their per (period, engine) statistics"""
import csv
import logging
import math
import pathlib
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Union

from . import settings
from .estimation import slope_stats
from .exceptions import RecordParseError, StatisticsError
from .simulator import SyncErrorRecord
from .sync import EngineType

logger = logging.getLogger(__name__)

RECORD_HEADER = ["query_time", "engine", "error", "seed"]
PERIOD_PATTERN = r"period_(?P<period>[0-9.eE+-]+)s\.csv$"


def format_number(value: float) -> str:
    return f"{value:.{settings.csv_significant_digits}g}"


def records_filename(sync_period: float) -> str:
    return f"period_{sync_period:g}s.csv"


def extract_period(filename: Union[str, pathlib.Path]) -> Optional[float]:
    """Sync period encoded in a records file name, None when absent"""
    match = re.search(PERIOD_PATTERN, pathlib.Path(filename).name)
    if not match:
        return None
    try:
        return float(match.group("period"))
    except ValueError:
        return None


def write_records(records: Sequence[SyncErrorRecord], path: Union[str, pathlib.Path]) -> int:
    """Write records sorted by (seed, query_time, engine), returns the number of rows"""
    if not records:
        raise StatisticsError("no sync error record to write")
    rows = sorted(records, key=lambda record: record.sort_key)
    with open(path, "w", newline="") as outfile:
        writer = csv.writer(outfile, lineterminator="\n")
        writer.writerow(RECORD_HEADER)
        for record in rows:
            writer.writerow(
                [format_number(record.query_time), record.engine.value, format_number(record.error), record.run_seed]
            )
    logger.debug(f"wrote {len(rows)} records to {path}")
    return len(rows)


def read_records(path: Union[str, pathlib.Path]) -> List[SyncErrorRecord]:
    records = []
    with open(path, "r", newline="") as infile:
        reader = csv.reader(infile)
        header = next(reader, None)
        if header != RECORD_HEADER:
            raise RecordParseError(f"expected header {','.join(RECORD_HEADER)}, got {header}", 1)
        for line_number, row in enumerate(reader, start=2):
            if len(row) != len(RECORD_HEADER):
                raise RecordParseError(f"expected {len(RECORD_HEADER)} fields, got {len(row)}", line_number)
            try:
                query_time, error = float(row[0]), float(row[2])
                engine = EngineType(row[1])
                seed = int(row[3])
            except ValueError as e:
                raise RecordParseError(str(e), line_number) from e
            if engine == EngineType.both or not math.isfinite(query_time) or not math.isfinite(error):
                raise RecordParseError(f"invalid record {row}", line_number)
            records.append(SyncErrorRecord(query_time, engine, error, seed))
    return records


@dataclass(frozen=True)
class ErrorStats:
    period: Optional[float]
    engine: EngineType
    mean: float
    std: float
    count: int


def compute_error_stats(records: Iterable[SyncErrorRecord], period: Optional[float] = None) -> List[ErrorStats]:
    """Sample mean and standard deviation (n - 1) of the error of every engine"""
    grouped: Dict[EngineType, List[float]] = {}
    for record in records:
        grouped.setdefault(record.engine, []).append(record.error)
    results = []
    for engine in sorted(grouped, key=lambda engine: engine.value):
        errors = grouped[engine]
        if len(errors) < 2:
            raise StatisticsError(f"engine {engine.value} has a single record, its deviation is undefined")
        stats = slope_stats(errors)
        results.append(ErrorStats(period, engine, stats.m_s, stats.std_s, stats.n))
    return results


def stats_command(csv_paths: Sequence[Union[str, pathlib.Path]]) -> List[ErrorStats]:
    """Statistics of every records file, grouped by (period, engine) across files"""
    by_period: Dict[Optional[float], List[SyncErrorRecord]] = {}
    for path in csv_paths:
        period = extract_period(path)
        if period is None:
            logger.warning(f"{path} carries no sync period in its name")
        by_period.setdefault(period, []).extend(read_records(path))
    results = []
    for period, records in by_period.items():
        results += compute_error_stats(records, period)
    return sorted(results, key=lambda stats: (math.inf if stats.period is None else stats.period, stats.engine.value))


def write_csv(path: Union[str, pathlib.Path], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Plain CSV export of a study table"""
    with open(path, "w", newline="") as outfile:
        writer = csv.writer(outfile, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
