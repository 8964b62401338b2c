from .histogram import HistogramSummary
from .studies import (
    CaptureModeResult,
    CounterRaceResult,
    CounterSimulation,
    FecStudyResult,
    run_capture_freq_study,
    run_capture_mode_study,
    run_counter_race_study,
    run_fec_study,
    run_os_jitter_probe,
    run_rx_rx_study,
    run_tx_rx_study,
)
