//! Zero-order mirror descent with averaging.

use super::{check_tau_reach, common_header, start_point, RunOptions, RunOutput, StepSchedule, Tracker};
use crate::error::{Error, Result};
use crate::estimators::{estimate_residual, estimate_standard, ResidualState};
use crate::geometry::{a_q_report, prox_step, GeometryKind, GeometrySetup};
use crate::oracle::{NoiseModel, NoisyOracle, ProblemSpec};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Two queries per step at `z +- tau e`.
    Standard,
    /// One query per step, differenced against the previous step.
    Residual,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Standard => "zo-std",
            Self::Residual => "zo-rf",
        }
    }
}

/// Largest `6 gamma_k^2 n^2 M^2 / tau_k^2` over `k = 0..=N`; residual
/// feedback needs it below 1.
pub fn residual_alpha(schedule: &StepSchedule, n: usize, m: f64, n_iters: usize) -> f64 {
    (0..=n_iters)
        .map(|k| 6.0 * (schedule.gamma_at(k) * n as f64 * m / schedule.tau_at(k)).powi(2))
        .fold(0.0, f64::max)
}

/// Rejects residual-feedback configurations with `alpha >= 1`.
pub fn check_residual_alpha(problem: &ProblemSpec, schedule: &StepSchedule, n_iters: usize) -> Result<()> {
    let m = problem.meta().require_lipschitz()?;
    let worst = residual_alpha(schedule, problem.dim(), m, n_iters);
    if !(worst < 1.0) {
        return Err(Error::Config(format!(
            "residual feedback needs 6 gamma^2 n^2 M^2 / tau^2 < 1, got {worst:e}"
        )));
    }
    Ok(())
}

/// Runs `N + 1` estimator and prox steps from `z_0` and returns the average
/// of `z_0, ..., z_N`. Row `k` reports the average of `z_0, ..., z_k`.
///
/// Oracle calls: `2(N + 1)` for the standard estimator, `N + 2` for residual
/// feedback (one warm-up query at `z_0`).
#[allow(clippy::too_many_arguments)]
pub fn run_zoopmd(
    problem: &ProblemSpec,
    noise: &NoiseModel,
    geometry: &GeometrySetup,
    estimator: EstimatorKind,
    schedule: &StepSchedule,
    n_iters: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutput> {
    if geometry.domain() != problem.domain() {
        return Err(Error::Config("geometry domain differs from the problem domain".into()));
    }
    let n = problem.dim();
    if estimator == EstimatorKind::Residual {
        if geometry.kind() != GeometryKind::Euclidean {
            return Err(Error::Config("residual feedback requires the Euclidean geometry".into()));
        }
        check_residual_alpha(problem, schedule, n_iters)?;
    }
    check_tau_reach(problem, schedule.max_tau().max(schedule.tau_at(0)))?;
    let z0 = start_point(problem.domain(), opts)?;

    let aq = a_q_report(n, geometry.q());
    let mut header = common_header(estimator.name(), problem, Some(noise), n_iters, seed, &z0);
    header.push(("geometry".into(), format!("{:?}", geometry.kind())));
    header.push(("q".into(), format!("{}", geometry.q().as_f64())));
    header.push(("a_q_sq".into(), format!("{:e}", aq.value)));
    header.push(("a_q_sq_generic".into(), format!("{:e}", aq.generic)));
    header.push(("schedule".into(), schedule.formula().to_string()));
    let mut tracker = Tracker::new(problem, opts, header)?;

    let mut rng = SeededRng::new(seed);
    let mut oracle = NoisyOracle::new(problem, noise);
    let mut state = ResidualState::new();
    if estimator == EstimatorKind::Residual {
        let (_, s) = estimate_residual(&mut oracle, &state, &z0, schedule.tau_at(0), &mut rng)?;
        state = s;
    }

    let mut z = z0;
    let mut steps = || -> Result<()> {
        for k in 0..=n_iters {
            tracker.add(&z)?;
            let (gamma, tau) = (schedule.gamma_at(k), schedule.tau_at(k));
            let g = match estimator {
                EstimatorKind::Standard => estimate_standard(&mut oracle, &z, tau, &mut rng)?.g,
                EstimatorKind::Residual => {
                    let (est, s) = estimate_residual(&mut oracle, &state, &z, tau, &mut rng)?;
                    state = s;
                    est.g
                }
            };
            tracker.maybe_log(k as u64, k == n_iters, oracle.calls(), gamma, tau);
            if k < n_iters {
                z = prox_step(geometry, &z, &g, gamma)?;
            }
        }
        Ok(())
    };
    let outcome = steps();
    match outcome {
        Ok(()) => Ok(tracker.finish(z, oracle.calls())),
        Err(e) => Err(tracker.interrupted(e, oracle.calls())),
    }
}
