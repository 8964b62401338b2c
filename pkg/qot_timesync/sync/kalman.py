"""Lightweight scalar Kalman filter on the relative frequency offset

The state is the frequency offset f_o, with A = H = 1 and no control input:

    predict : x' = x + mu_rd          p' = p + q
    gain    : K = p' / (p' + r)
    update  : x = x' + K (z - x')     p = (1 - K) p'

The measurement z is (dR - dN) / dN over one sync period.
"""
import logging
import math
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np

from ..clock.datatypes import TimestampPair
from ..exceptions import ConfigurationError, DegenerateIntervalError, NotInitializedError, OutOfOrderError
from .base import SyncEngine
from .datatypes import EngineType, KalmanState, MeasurementModel

logger = logging.getLogger(__name__)


def measure_fo(prev: TimestampPair, cur: TimestampPair) -> float:
    """Frequency offset measured between two consecutive sync pairs"""
    if cur.k <= prev.k:
        raise OutOfOrderError(f"pair {cur.k} does not follow pair {prev.k}")
    delta_node = cur.node_time - prev.node_time
    if delta_node == 0:
        raise DegenerateIntervalError(f"pairs {prev.k} and {cur.k} share the node timestamp {cur.node_time}")
    return ((cur.root_time - prev.root_time) - delta_node) / delta_node


def kalman_predict(state: KalmanState, mu_rd: float = 0.0) -> Tuple[float, float]:
    return state.x_hat + mu_rd, state.p + state.q


def kalman_gain(p_prior, r):
    """Accepts scalars or ndarrays of candidate covariances"""
    if np.any(np.asarray(r) <= 0):
        raise ConfigurationError("measurement noise r must be > 0", ["r"])
    if np.any(np.asarray(p_prior) < 0):
        raise ConfigurationError("prior covariance must be >= 0", ["p"])
    return p_prior / (p_prior + r)


def kalman_update(state: KalmanState, z: float, mu_rd: float = 0.0) -> KalmanState:
    x_prior, p_prior = kalman_predict(state, mu_rd)
    gain = kalman_gain(p_prior, state.r)
    return replace(state, x_hat=x_prior + gain * (z - x_prior), p=(1 - gain) * p_prior)


def steady_state_covariance(q: float, r: float) -> float:
    """Positive root of p = (p + q) r / (p + q + r), the limit of iterated updates"""
    return (-q + math.sqrt(q * q + 4 * q * r)) / 2


def _anchor(state: KalmanState, node_now: float) -> TimestampPair:
    anchor = state.last_pair
    if anchor is None:
        raise NotInitializedError("no sync pair to project from")
    if node_now < anchor.node_time:
        raise OutOfOrderError(f"node time {node_now} precedes the anchor {anchor.node_time}")
    return anchor


def project_global(state: KalmanState, node_now: float) -> float:
    """Root time estimate N_g = R(k) + (N(m) - N(k)) (x + 1)"""
    anchor = _anchor(state, node_now)
    return anchor.root_time + (node_now - anchor.node_time) * (state.x_hat + 1)


def project_uncertainty(state: KalmanState, node_now: float) -> float:
    """Standard deviation of the projection implied by the filter covariance"""
    anchor = _anchor(state, node_now)
    return (node_now - anchor.node_time) * math.sqrt(state.p)


def sync_error(true_root: float, estimated: float) -> float:
    return true_root - estimated


class LWKalmanEngine(SyncEngine):
    """Node side Kalman engine

    The anchor moves to every accepted sync pair. The first measurement initializes
    x to itself and p to r, before it the node runs at unit rate from the anchor.
    """

    engine_type = EngineType.lw_kalman

    def __init__(self, q: float, r: float, model: Optional[MeasurementModel] = None) -> None:
        super().__init__()
        self.model = model if model is not None else MeasurementModel()
        self.state = KalmanState(q=q, r=r)
        self.measurements = 0

    @classmethod
    def from_model(cls, model: MeasurementModel) -> "LWKalmanEngine":
        return cls(model.q, model.r, model)

    def _ingest(self, pair: TimestampPair) -> None:
        anchor = self.state.last_pair
        if anchor is None:
            self.state = replace(self.state, last_pair=pair)
            logger.debug(f"kalman anchored on pair {pair.k}")
            return
        z = measure_fo(anchor, pair) - self.model.mu_q
        if self.measurements == 0:
            self.state = replace(self.state, x_hat=z, p=self.state.r, last_pair=pair)
            logger.debug(f"kalman initialized with f_o = {z:.6g}")
        else:
            self.state = replace(kalman_update(self.state, z, self.model.mu_rd), last_pair=pair)
        self.measurements += 1

    def project(self, node_now: float) -> float:
        return project_global(self.state, node_now)

    def uncertainty(self, node_now: float) -> float:
        return project_uncertainty(self.state, node_now)
