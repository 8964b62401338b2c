from typing import Iterable, List, Optional


class QoTError(Exception):
    """Base exception of the timing stack"""


class ConfigurationError(QoTError, ValueError):
    """Configuration is invalid, lists every offending key"""

    def __init__(self, message: str, fields: Optional[Iterable[str]] = None):
        self.fields: List[str] = list(fields) if fields is not None else []
        if self.fields:
            message = f"{message} (offending keys : {', '.join(self.fields)})"
        super().__init__(message)


class DegenerateIntervalError(QoTError, ZeroDivisionError):
    """Two timestamps delimit an empty interval"""


class OutOfOrderError(QoTError, ValueError):
    """Timestamp or event index is not after its predecessor"""


class NotInitializedError(QoTError, RuntimeError):
    """Engine has not ingested any synchronization message yet"""


class StatisticsError(QoTError, ValueError):
    """Not enough samples for the requested statistic"""


class RecordParseError(QoTError, ValueError):
    """Malformed record file"""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class SimulationInvariantError(QoTError, RuntimeError):
    """A simulation run broke one of its invariants"""


(
    EXIT_SUCCESS,
    EXIT_VALIDATION_ERROR,
    EXIT_IO_ERROR,
    EXIT_INVARIANT_VIOLATION,
) = range(4)

EXIT_MESSAGES = {
    EXIT_SUCCESS: "Command completed successfully",
    EXIT_VALIDATION_ERROR: "Configuration or input validation failed",
    EXIT_IO_ERROR: "Could not read or write a file",
    EXIT_INVARIANT_VIOLATION: "Simulation invariant violated, results are not trustworthy",
}


def exit_code_for(error: BaseException) -> int:
    """Map an exception raised by a command to the process exit code"""
    if isinstance(error, SimulationInvariantError):
        return EXIT_INVARIANT_VIOLATION
    if isinstance(error, (ConfigurationError, RecordParseError, StatisticsError)):
        return EXIT_VALIDATION_ERROR
    if isinstance(error, OSError):
        return EXIT_IO_ERROR
    if isinstance(error, QoTError):
        return EXIT_VALIDATION_ERROR
    raise error
