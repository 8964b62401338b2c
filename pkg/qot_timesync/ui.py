from abc import ABC
import logging
from typing import Iterable, List, Sequence, Tuple

from .utils import generate_progress_bar

logger = logging.getLogger(__name__)

S_TO_US = 1e6


class UIAdapter(ABC):
    def display(self, text: str, *args, **kwargs) -> None:
        raise NotImplementedError

    def display_no_nl(self, text: str, *args, **kwargs) -> None:
        raise NotImplementedError


class UITerminalAdapter(UIAdapter):
    def display(self, text: str, *args, **kwargs) -> None:
        logger.debug(text)
        print(text)

    def display_no_nl(self, text: str, *args, **kwargs) -> None:
        print(text, end="", flush=True)


class BaseUI:
    """Displays command results as tables"""

    def __init__(self, adapter: UIAdapter, table_cls) -> None:
        self.adapter = adapter
        self.table_cls = table_cls

    def display_error_stats(self, error_stats) -> None:
        table = self.table_cls(["Period (s)", "Engine", "Mean (us)", "Std (us)", "Records"])
        for stats in error_stats:
            table.add_row(
                [
                    "-" if stats.period is None else f"{stats.period:g}",
                    stats.engine.value,
                    f"{stats.mean * S_TO_US:.4f}",
                    f"{stats.std * S_TO_US:.4f}",
                    stats.count,
                ]
            )
        self.adapter.display(table)

    def display_slope_stats(self, label: str, rows: Iterable[Tuple[str, object]]) -> None:
        table = self.table_cls([label, "m_s", "std_s", "var_s", "n"])
        for name, stats in rows:
            table.add_row([name, f"{stats.m_s:.12f}", f"{stats.std_s:.5g}", f"{stats.var_s:.5g}", stats.n])
        self.adapter.display(table)

    def display_histogram(self, title: str, summary) -> None:
        table = self.table_cls(["Study", "Samples", "Range (us)", "Mean (us)", "Std (us)"])
        table.add_row(
            [
                title,
                summary.count,
                f"{summary.range * S_TO_US:.4f}",
                f"{summary.mean * S_TO_US:.4f}",
                f"{summary.std * S_TO_US:.4f}",
            ]
        )
        self.adapter.display(table)

    def display_training(self, period: float, scores: Sequence, selected, top: int = 5) -> None:
        table = self.table_cls(["Period (s)", "q", "r", "Mean |error| (us)", "Mean NIS", "Selected"])
        ranked: List = sorted(scores, key=lambda score: (score.mean_abs_error, score.consistency))[:top]
        if selected not in ranked:
            ranked.append(selected)
        for score in ranked:
            table.add_row(
                [
                    f"{period:g}",
                    f"{score.q:.4g}",
                    f"{score.r:.4g}",
                    f"{score.mean_abs_error * S_TO_US:.4f}",
                    f"{score.mean_nis:.3f}",
                    "*" if score == selected else "",
                ]
            )
        self.adapter.display(table)

    def display_rows(self, header: Sequence[str], rows: Iterable[Sequence]) -> None:
        table = self.table_cls(list(header))
        for row in rows:
            table.add_row(list(row))
        self.adapter.display(table)

    def display_progress(self, iteration: int, total: int, prefix: str, suffix: str = ""):
        """Generate and display a progress bar"""
        progress_str = generate_progress_bar(iteration, total, prefix=prefix, suffix=suffix, length=50)
        self.adapter.display_no_nl("\r" + progress_str + ("\n" if iteration >= total else ""))
