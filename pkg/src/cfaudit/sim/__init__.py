from .calibrate import CALIBRATION_FIXED, CalibrationFailed, calibrate_preset
from .engine import ConfigError, Mode, SimResult, run_simulation
from .metrics import Metrics, Outcome, compute_overhead, compute_utilization_gain, trace_hash
from .sizing import SizingParams, Unbounded, contention_threshold, min_contention_free_log_size
from .workload import PRESETS, Cfg, Workload, preset
