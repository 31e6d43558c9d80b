//! Grid search over constant step sizes and smoothing radii.

use std::fmt::Write as _;

use super::config::{ExperimentConfig, ScheduleChoice};
use super::experiment::{build_problem, par_map, plan_cell, run_cell};
use crate::error::{Error, Result};
use crate::solvers::RunOptions;

/// A cell is disqualified once its gap exceeds this multiple of the gap at
/// the start.
pub const DIVERGENCE_FACTOR: f64 = 10.0;
pub const MIN_GRID_SEEDS: usize = 3;
pub const GRID_COLUMNS: &str = "gamma,tau,median_final_gap,stable";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub gamma: f64,
    pub tau: f64,
    /// Median over seeds of the final gap; NaN when a run could not start.
    pub median_final_gap: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub best_gamma: f64,
    pub best_tau: f64,
    /// Cells in gamma-major order.
    pub cells: Vec<GridCell>,
}

impl GridOutcome {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(GRID_COLUMNS);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(out, "{:e},{:e},{:e},{}", c.gamma, c.tau, c.median_final_gap, c.stable);
        }
        out
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("empty {name} grid")));
    }
    if let Some(v) = grid.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Config(format!("{name} grid value {v} is not positive")));
    }
    Ok(())
}

/// Runs the config's single method with constant `(gamma, tau)` for every
/// grid pair and every seed, scoring a pair by the median final gap. A pair
/// is unstable if any seed fails, produces a non-finite gap, or ever logs a
/// gap above [`DIVERGENCE_FACTOR`] times the gap at the start. Every
/// iteration is inspected regardless of `log_every`.
pub fn grid_search(cfg: &ExperimentConfig, gamma_grid: &[f64], tau_grid: &[f64]) -> Result<GridOutcome> {
    check_grid("gamma", gamma_grid)?;
    check_grid("tau", tau_grid)?;
    let [mcfg] = cfg.methods.as_slice() else {
        return Err(Error::Config(format!("grid search tunes one method, config lists {}", cfg.methods.len())));
    };
    if cfg.run.seeds.len() < MIN_GRID_SEEDS {
        return Err(Error::Config(format!("grid search needs at least {MIN_GRID_SEEDS} seeds")));
    }
    let prepared = build_problem(&cfg.problem)?;
    let start = prepared.spec.domain().canonical_start();
    let initial = prepared
        .spec
        .gap(&start)
        .ok_or_else(|| Error::Unsupported("grid search needs a problem with an accuracy measure".into()))?;

    let pairs: Vec<(f64, f64)> = gamma_grid
        .iter()
        .flat_map(|&g| tau_grid.iter().map(move |&t| (g, t)))
        .collect();
    let jobs: Vec<(usize, u64)> = (0..pairs.len())
        .flat_map(|p| cfg.run.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let opts = RunOptions::default();
    let finals: Vec<Option<f64>> = par_map(&jobs, cfg.run.threads, |&(p, seed)| {
        let (gamma, tau) = pairs[p];
        let mut m = mcfg.clone();
        m.schedule = ScheduleChoice::Constant;
        m.gamma = Some(gamma);
        m.tau = Some(tau);
        m.gamma_mult = 1.0;
        m.tau_mult = 1.0;
        let plan = plan_cell(&prepared, &m, cfg.run.n_iters).ok()?;
        let out = run_cell(&plan, &prepared.noise, cfg.run.n_iters, seed, &opts).ok()?;
        let rows = out.log.rows();
        let diverged = rows
            .iter()
            .any(|r| !r.gap.is_finite() || r.gap > DIVERGENCE_FACTOR * initial);
        if diverged {
            None
        } else {
            rows.last().map(|r| r.gap)
        }
    });

    let per_pair = cfg.run.seeds.len();
    let cells: Vec<GridCell> = pairs
        .iter()
        .enumerate()
        .map(|(p, &(gamma, tau))| {
            let chunk = &finals[p * per_pair..(p + 1) * per_pair];
            let stable = chunk.iter().all(Option::is_some);
            let mut gaps: Vec<f64> = chunk.iter().flatten().copied().collect();
            GridCell { gamma, tau, median_final_gap: median(&mut gaps), stable }
        })
        .collect();
    let best = cells
        .iter()
        .filter(|c| c.stable)
        .min_by(|a, b| a.median_final_gap.total_cmp(&b.median_final_gap))
        .ok_or(Error::NoStableConfiguration)?;
    Ok(GridOutcome { best_gamma: best.gamma, best_tau: best.tau, cells })
}
