import csv
import pathlib
from dataclasses import dataclass
from typing import Any, List, Tuple

import numpy as np

from .. import settings
from ..exceptions import StatisticsError

S_TO_US = 1e6


@dataclass(frozen=True)
class HistogramSummary:
    """Distribution summary of a timing uncertainty, values in seconds"""

    count: int
    minimum: float
    maximum: float
    mean: float
    variance: float
    bin_edges: Tuple[float, ...]
    bin_counts: Tuple[int, ...]

    @classmethod
    def from_samples(cls, samples, bins: int = settings.histogram_bins) -> "HistogramSummary":
        samples = np.asarray(samples, dtype=float).ravel()
        if samples.size < 2:
            raise StatisticsError(f"a histogram summary needs at least two samples, got {samples.size}")
        counts, edges = np.histogram(samples, bins=bins)
        return cls(
            count=int(samples.size),
            minimum=float(samples.min()),
            maximum=float(samples.max()),
            mean=float(samples.mean()),
            variance=float(samples.var(ddof=1)),
            bin_edges=tuple(edges.tolist()),
            bin_counts=tuple(int(count) for count in counts),
        )

    @property
    def range(self) -> float:
        return self.maximum - self.minimum

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))

    def __str__(self):
        return f"""
Histogram summary :
    samples : {self.count}
    range : {self.range * S_TO_US:.6g} us [{self.minimum * S_TO_US:.6g}, {self.maximum * S_TO_US:.6g}]
    mean : {self.mean * S_TO_US:.6g} us
    std : {self.std * S_TO_US:.6g} us
    variance : {self.variance:.6g} s^2
        """

    def as_lines(self) -> List[List[Any]]:
        """Export as lines for easy csv integration"""
        lines = [["Bin low (s)", "Bin high (s)", "Count"]]
        for low, high, count in zip(self.bin_edges[:-1], self.bin_edges[1:], self.bin_counts):
            lines.append([f"{low:.{settings.csv_significant_digits}g}", f"{high:.{settings.csv_significant_digits}g}", count])
        return lines

    def export_csv(self, output_file: pathlib.Path) -> None:
        with open(output_file, "w", newline="") as outfile:
            writer = csv.writer(outfile, lineterminator="\n")
            writer.writerows(self.as_lines())
