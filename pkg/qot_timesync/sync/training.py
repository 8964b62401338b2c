"""Offline selection of the Kalman covariances for one sync period

Every candidate (q, r) replays the training traces. The score is the mean absolute
one-step-ahead projection error on each pair not yet ingested. That score depends
on q / r only, so candidates tied on it are separated by the consistency of the
filter covariance (mean normalized innovation squared closest to 1), then by
smaller q, then by smaller r.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .. import settings
from ..clock.datatypes import TimestampPair
from ..exceptions import ConfigurationError
from .kalman import kalman_gain, measure_fo

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateScore:
    q: float
    r: float
    mean_abs_error: float
    mean_nis: float

    @property
    def consistency(self) -> float:
        return abs(self.mean_nis - 1)


def log_grid(center: float, size: int = settings.training_grid_size, step_decades: float = settings.training_grid_step_decades) -> np.ndarray:
    """size values spaced step_decades apart, center included"""
    if not center > 0:
        raise ConfigurationError(f"grid center must be > 0, got {center}", ["center"])
    if size < 1:
        raise ConfigurationError(f"grid size must be >= 1, got {size}", ["size"])
    exponents = (np.arange(size) - size // 2) * step_decades
    return center * 10.0**exponents


def covariance_grid(q_center: float, r_center: float, size: int = settings.training_grid_size) -> List[Tuple[float, float]]:
    return list(itertools.product(log_grid(q_center, size).tolist(), log_grid(r_center, size).tolist()))


def _trace_measurements(trace: Sequence[TimestampPair]) -> Tuple[np.ndarray, np.ndarray]:
    z = np.array([measure_fo(prev, cur) for prev, cur in zip(trace[:-1], trace[1:])])
    delta_node = np.array([cur.node_time - prev.node_time for prev, cur in zip(trace[:-1], trace[1:])])
    return z, delta_node


def evaluate_candidates(
    traces: Sequence[Sequence[TimestampPair]],
    candidate_grid: Sequence[Tuple[float, float]],
) -> List[CandidateScore]:
    """Replay every trace through every candidate at once, one filter per column"""
    if len(candidate_grid) == 0:
        raise ConfigurationError("covariance candidate grid is empty", ["candidate_grid"])
    if len(traces) == 0:
        raise ConfigurationError("no training trace", ["traces"])
    q = np.array([candidate[0] for candidate in candidate_grid], dtype=float)
    r = np.array([candidate[1] for candidate in candidate_grid], dtype=float)
    offending = (["q"] if np.any(q < 0) else []) + (["r"] if np.any(r <= 0) else [])
    if offending:
        raise ConfigurationError("invalid covariance candidates", offending)

    abs_error_sum = np.zeros(q.shape)
    nis_sum = np.zeros(q.shape)
    count = 0
    for trace in traces:
        if len(trace) < 3:
            logger.warning(f"skipping a training trace of {len(trace)} pairs, at least 3 are needed")
            continue
        z, delta_node = _trace_measurements(trace)
        x = np.full(q.shape, z[0])
        p = r.copy()
        for z_k, delta_k in zip(z[1:], delta_node[1:]):
            innovation = z_k - x
            p_prior = p + q
            abs_error_sum += np.abs(delta_k * innovation)
            nis_sum += innovation**2 / (p_prior + r)
            gain = kalman_gain(p_prior, r)
            x = x + gain * innovation
            p = (1 - gain) * p_prior
            count += 1
    if count == 0:
        raise ConfigurationError("training traces hold no held-out pair", ["traces"])
    return [
        CandidateScore(float(q_i), float(r_i), float(error / count), float(nis / count))
        for q_i, r_i, error, nis in zip(q, r, abs_error_sum, nis_sum)
    ]


def select_candidate(scores: Sequence[CandidateScore]) -> CandidateScore:
    best = min(score.mean_abs_error for score in scores)
    tolerance = settings.training_tie_tolerance * best + settings.training_tie_abs_tolerance
    tied = [score for score in scores if score.mean_abs_error - best <= tolerance]
    return min(tied, key=lambda score: (score.consistency, score.q, score.r))


def train_covariances(
    traces: Sequence[Sequence[TimestampPair]],
    candidate_grid: Sequence[Tuple[float, float]],
) -> Tuple[float, float]:
    """Best (q, r) of the grid for the given training traces

    Candidates score by mean |one step ahead projection error|. The score only depends on
    the ratio q / r, so candidates tied within the tolerance are told apart by the mean
    normalised innovation squared closest to 1, then by smaller q, then by smaller r.
    """
    selected = select_candidate(evaluate_candidates(traces, candidate_grid))
    logger.info(
        f"selected q={selected.q:.4g} r={selected.r:.4g} "
        f"(mean |error| {selected.mean_abs_error:.4g} s, mean NIS {selected.mean_nis:.3f})"
    )
    return selected.q, selected.r
