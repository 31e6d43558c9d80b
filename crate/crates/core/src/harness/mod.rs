//! Experiment orchestration: config files, multi-seed runs, grid search and
//! self-checks.

mod config;
mod experiment;
mod grid;
mod selftest;

pub use config::{
    ExperimentConfig, Method, MethodConfig, NoiseLevel, ProblemConfig, ProblemKind, QuadraticDomain, RunConfig,
    ScheduleChoice,
};
pub use experiment::{
    build_problem, fo_mirror_descent, mean_abs_value_near, output_file_name, plan_cell, run_cell, run_experiment,
    CellPlan, CellReport, PreparedProblem, CALIBRATION_PROBES, CALIBRATION_RADIUS,
};
pub use grid::{grid_search, median, GridCell, GridOutcome, DIVERGENCE_FACTOR, GRID_COLUMNS, MIN_GRID_SEEDS};
pub use selftest::{selftest, simplex_threshold_bisect, Check};
