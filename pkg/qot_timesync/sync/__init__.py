from .datatypes import EngineType, KalmanState, MeasurementModel, RegressionTable
from .base import SyncEngine
from .kalman import (
    LWKalmanEngine,
    kalman_gain,
    kalman_predict,
    kalman_update,
    measure_fo,
    project_global,
    project_uncertainty,
    steady_state_covariance,
    sync_error,
)
from .ftsp import FtspEngine, ftsp_project, ftsp_update
from .training import (
    CandidateScore,
    covariance_grid,
    evaluate_candidates,
    log_grid,
    select_candidate,
    train_covariances,
)
