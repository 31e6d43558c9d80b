//! First-order mirror descent baseline using exact gradients.

use super::{common_header, start_point, RunOptions, RunOutput, StepSchedule, Tracker};
use crate::error::{Error, Result};
use crate::geometry::{prox_step, GeometrySetup};
use crate::oracle::ProblemSpec;

/// Mirror descent with the exact `(grad_x, -grad_y)`, averaging
/// `z_0, ..., z_N` like [`super::run_zoopmd`]. Each step counts as one
/// gradient call; the `tau_k` column is 0.
pub fn run_first_order(
    problem: &ProblemSpec,
    geometry: &GeometrySetup,
    schedule: &StepSchedule,
    n_iters: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutput> {
    let grad = problem
        .saddle_grad_fn()
        .ok_or_else(|| Error::Unsupported(format!("problem `{}` has no gradient", problem.name())))?
        .clone();
    if geometry.domain() != problem.domain() {
        return Err(Error::Config("geometry domain differs from the problem domain".into()));
    }
    let z0 = start_point(problem.domain(), opts)?;
    let mut header = common_header("fo", problem, None, n_iters, seed, &z0);
    header.push(("geometry".into(), format!("{:?}", geometry.kind())));
    header.push(("schedule".into(), schedule.formula().to_string()));
    let mut tracker = Tracker::new(problem, opts, header)?;

    let mut z = z0;
    let mut calls = 0u64;
    let mut steps = || -> Result<()> {
        for k in 0..=n_iters {
            tracker.add(&z)?;
            let gamma = schedule.gamma_at(k);
            let g = grad(&z);
            calls += 1;
            tracker.maybe_log(k as u64, k == n_iters, calls, gamma, 0.0);
            if k < n_iters {
                z = prox_step(geometry, &z, &g, gamma)?;
            }
        }
        Ok(())
    };
    let outcome = steps();
    match outcome {
        Ok(()) => Ok(tracker.finish(z, calls)),
        Err(e) => Err(tracker.interrupted(e, calls)),
    }
}
