# ? CLOCK MODEL DEFAULTS (calibrated on the TX/RX bench measurements)
clock_phi = 1.57e-6  # average relative drift, 1.57 ppm
clock_offset_nr = 0.0
clock_prop_delay_mean = 0.0  # bench-scale distances
clock_drift_noise_sigma = 1e-9  # ñ_r, zero-mean per-event wander
clock_gen_noise_width = 1.031e-6  # TX to RX interrupt generation uncertainty
clock_drift_walk_sigma = 1e-9  # frequency random walk, 1/s per sqrt(s)

# ? CAPTURE DEFAULTS
capture_freq_hz = 2e6
gen_freq_hz = 16e6
capture_phase_wander = 3.5e-8  # s per sqrt(s), asynchronous modes only
capture_external_phi = 7.5e-6  # drift of an external capture crystal
capture_external_wander = 5.5e-8  # s per sqrt(s), asynchronous_external only
capture_edge_tolerance_ticks = 1e-6

# ? EXTENDED COUNTER
counter_hw_bits = 16
counter_sw_bits = 16
counter_hw_modulo = 1 << counter_hw_bits
counter_half_range = counter_hw_modulo >> 1
counter_modulo = 1 << (counter_hw_bits + counter_sw_bits)

# ? EXPERIMENT DEFAULTS
sync_period = 30.0
query_period = 18.0  # root sends a query message every 18 seconds
duration = 3600.0
topology = "tx_rx_pair"
engine = "both"
ftsp_window = 8
warmup_syncs = 0
seed = 1

# ? TRANSCEIVER
fec_rf_mhz = 2405.0
fec_scale = 5e5 / 128
fec_min = -128
fec_max = 127

# ? KALMAN
kalman_r_floor = 1e-30  # measurement noise used when the model predicts none

# ? TRAINING GRID (decades around the model-derived covariances)
training_grid_size = 10
training_grid_step_decades = 1.0
training_tie_tolerance = 1e-6
training_tie_abs_tolerance = 1e-12  # seconds
training_q_fallback_ratio = 1e-3  # q grid center relative to r without a drift walk

# ? STUDIES
study_events = 20000
study_capture_freqs = (2e6, 4e6, 16e6)
study_mode_repetitions = 10
study_samples = 100000
os_probe_window = 10.0
os_probe_rate = 10000.0
fec_jitter_lsb = 0.5
counter_isr_latency_ticks = 200
counter_read_delay_ticks = 8

# ? OUTPUT
csv_significant_digits = 12
histogram_bins = 50

NS_PER_S = 1_000_000_000
MAX_ABS_PHI = 1e-3

