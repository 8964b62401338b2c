import hashlib
import logging
import struct
from abc import ABC, abstractmethod
from typing import Optional

from ..clock.datatypes import TimestampPair
from ..exceptions import OutOfOrderError
from .datatypes import EngineType

logger = logging.getLogger(__name__)


class SyncEngine(ABC):
    """Base class of the node side synchronization engines

    Keeps a digest of every ingested pair so parallel engines can prove they saw the
    same timestamp stream
    """

    engine_type: EngineType = None

    def __init__(self) -> None:
        self.syncs = 0
        self._last_pair: Optional[TimestampPair] = None
        self._digest = hashlib.sha256()

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(syncs={self.syncs})"

    @property
    def stream_digest(self) -> str:
        return self._digest.hexdigest()

    @property
    def is_initialized(self) -> bool:
        return self.syncs > 0

    def ingest_sync(self, pair: TimestampPair) -> None:
        """Ingest the (root, node) timestamps of a synchronization message"""
        if self._last_pair is not None and pair.k <= self._last_pair.k:
            raise OutOfOrderError(f"sync pair {pair.k} does not follow pair {self._last_pair.k}")
        self._digest.update(struct.pack("<qdd", *pair.as_tuple()))
        self._ingest(pair)
        self._last_pair = pair
        self.syncs += 1

    @abstractmethod
    def _ingest(self, pair: TimestampPair) -> None:
        raise NotImplementedError

    @abstractmethod
    def project(self, node_now: float) -> float:
        """Estimate of the root time at node reading node_now"""
        raise NotImplementedError
