//! Experiment orchestration: synthesis, metrics, phase-transition grids, RIP probes
//! and result export.

mod config;
mod export;
mod metrics;
mod rip;
mod trial;

pub use config::{Cell, ExperimentConfig, MuPolicy, Snr, Subsample};
pub use export::{
    export_grid_csv, export_trials_csv, fmt_g6, gray_level, grid_csv_string, grid_rows, heatmap_svg, import_grid_csv,
    render_heatmap, trials_csv_string, write_grid_rows, GridRow, GRID_HEADER, TRIAL_HEADER,
};
pub use metrics::{make_noise, rsdr_db, snr_db, RSDR_CAP_DB};
pub use rip::{estimate_rip_distortion, RipEstimate, RipKind};
pub use trial::{phase_transition, run_grid, run_trial, synthesize, trial_seed, CellSummary, GridRun, Instance, SuccessGrid, TrialResult};
