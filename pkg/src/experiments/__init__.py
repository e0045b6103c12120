from .harness import (
    CALIBRATION_BAND,
    PROFILE_SIZES,
    desk_profile,
    full_profile,
    regenerate_trial,
    run_experiment,
    run_trials,
    summarize_noise,
    trial_inputs,
    trial_seed_sequence,
)
from .report import (
    format_table,
    load_covariance_matrix,
    load_report,
    read_covariance_csv,
    save_report,
    summary_table,
    write_covariance_csv,
)
from .schemas import ExperimentConfig, NoiseReport

__all__ = [
    "CALIBRATION_BAND",
    "PROFILE_SIZES",
    "ExperimentConfig",
    "NoiseReport",
    "desk_profile",
    "format_table",
    "full_profile",
    "load_covariance_matrix",
    "load_report",
    "read_covariance_csv",
    "regenerate_trial",
    "run_experiment",
    "run_trials",
    "save_report",
    "summarize_noise",
    "summary_table",
    "trial_inputs",
    "trial_seed_sequence",
    "write_covariance_csv",
]
