"""Regression baseline: least squares line over the last W sync pairs"""
import logging

import numpy as np

from .. import settings
from ..clock.datatypes import TimestampPair
from ..exceptions import DegenerateIntervalError, NotInitializedError, OutOfOrderError
from .base import SyncEngine
from .datatypes import EngineType, RegressionTable

logger = logging.getLogger(__name__)


def ftsp_update(table: RegressionTable, pair: TimestampPair) -> RegressionTable:
    """Append a pair (evicting the oldest at capacity) and refit root = a + b * node

    fitted_offset holds a and fitted_skew holds b - 1. A single pair passes through
    with unit rate.
    """
    if table.last_k is not None and pair.k <= table.last_k:
        raise OutOfOrderError(f"pair {pair.k} does not follow pair {table.last_k}")
    table.window.append(pair)
    if len(table) == 1:
        table.fitted_skew = 0.0
        table.fitted_offset = pair.root_time - pair.node_time
        return table
    node = np.array([entry.node_time for entry in table.window])
    root = np.array([entry.root_time for entry in table.window])
    node_mean = node.mean()
    root_mean = root.mean()
    node_centered = node - node_mean
    spread = np.dot(node_centered, node_centered)
    if spread == 0:
        raise DegenerateIntervalError(f"all {len(table)} pairs share the node timestamp {node_mean}")
    slope = np.dot(node_centered, root - root_mean) / spread
    table.fitted_skew = float(slope - 1)
    table.fitted_offset = float(root_mean - slope * node_mean)
    return table


def ftsp_project(table: RegressionTable, node_now: float) -> float:
    if len(table) == 0:
        raise NotInitializedError("regression table is empty")
    return node_now + table.fitted_offset + table.fitted_skew * node_now


class FtspEngine(SyncEngine):
    engine_type = EngineType.ftsp

    def __init__(self, window: int = settings.ftsp_window) -> None:
        super().__init__()
        self.table = RegressionTable(window)

    def _ingest(self, pair: TimestampPair) -> None:
        ftsp_update(self.table, pair)

    def project(self, node_now: float) -> float:
        return ftsp_project(self.table, node_now)
