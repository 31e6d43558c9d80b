//! Zero-order stochastic projected gradient with kernel smoothing.

use super::schedule::{derive_schedule, ScheduleCase, ScheduleParams};
use super::{check_tau_reach, common_header, start_point, RunOptions, RunOutput, StepSchedule, Tracker};
use crate::error::{Error, Result};
use crate::estimators::estimate_kernel;
use crate::geometry::{prox_step, DualExponent, GeometrySetup};
use crate::kernels::SmoothingKernel;
use crate::oracle::{NoiseModel, NoisyOracle, ProblemSpec};
use crate::rng::SeededRng;

fn check_kernel_order(problem: &ProblemSpec, kernel: &SmoothingKernel) -> Result<()> {
    let beta = problem.meta().beta.ok_or(Error::MissingConstant("beta"))?;
    if kernel.beta() > beta + 1e-12 {
        return Err(Error::Config(format!(
            "kernel order {} exceeds the problem's smoothness order {beta}",
            kernel.beta()
        )));
    }
    Ok(())
}

fn smoothness_const(problem: &ProblemSpec) -> Result<f64> {
    let meta = problem.meta();
    meta.holder_const
        .or(meta.grad_lipschitz)
        .ok_or(Error::MissingConstant("L"))
}

/// Runs the method with the step `2/(mu k)` and the decaying smoothing
/// radius derived from the problem's constants and the noise level.
#[allow(clippy::too_many_arguments)]
pub fn run_kernel_zospg(
    problem: &ProblemSpec,
    noise: &NoiseModel,
    kernel: &SmoothingKernel,
    mu: f64,
    n_iters: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutput> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Config(format!(
            "the kernel method needs mu > 0 (regularize merely convex-concave problems), got {mu}"
        )));
    }
    check_kernel_order(problem, kernel)?;
    let l = smoothness_const(problem)?;
    if !(noise.sigma() > 0.0) {
        return Err(Error::Config("the derived smoothing radius needs sigma > 0".into()));
    }
    let mut params = ScheduleParams::new(problem.dim(), DualExponent::Two);
    params.grad_lipschitz = Some(l);
    params.mu = Some(mu);
    params.sigma = Some(noise.sigma());
    params.beta = Some(kernel.beta());
    params.kappa = Some(kernel.kappa());
    params.kappa_beta = Some(kernel.kappa_beta());
    let schedule = derive_schedule(ScheduleCase::KernelScsc, &params)?;
    run_kernel_zospg_with_schedule(problem, noise, kernel, &schedule, n_iters, seed, opts)
}

/// Iterates `z_k = P(z_{k-1} - gamma_k g_k)` for `k = 1..=N` under any
/// schedule and returns the average of `z_1, ..., z_N`. Rows are numbered
/// from 1; oracle calls total `2N`.
#[allow(clippy::too_many_arguments)]
pub fn run_kernel_zospg_with_schedule(
    problem: &ProblemSpec,
    noise: &NoiseModel,
    kernel: &SmoothingKernel,
    schedule: &StepSchedule,
    n_iters: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutput> {
    if n_iters == 0 {
        return Err(Error::Config("the kernel method needs N >= 1".into()));
    }
    check_kernel_order(problem, kernel)?;
    check_tau_reach(problem, schedule.max_tau())?;
    let z0 = start_point(problem.domain(), opts)?;
    let geometry = GeometrySetup::euclidean(problem.domain().clone());

    let mut header = common_header("zo-ker", problem, Some(noise), n_iters, seed, &z0);
    header.push(("kernel_beta".into(), format!("{}", kernel.beta())));
    header.push(("kappa".into(), format!("{:e}", kernel.kappa())));
    header.push(("kappa_beta".into(), format!("{:e}", kernel.kappa_beta())));
    header.push(("schedule".into(), schedule.formula().to_string()));
    let mut tracker = Tracker::new(problem, opts, header)?;

    let mut rng = SeededRng::new(seed);
    let mut oracle = NoisyOracle::new(problem, noise);
    let mut z = z0;
    let mut steps = || -> Result<()> {
        for k in 1..=n_iters {
            let (gamma, tau) = (schedule.gamma_at(k), schedule.tau_at(k));
            let est = estimate_kernel(&mut oracle, kernel, &z, tau, &mut rng)?;
            z = prox_step(&geometry, &z, &est.g, gamma)?;
            tracker.add(&z)?;
            tracker.maybe_log(k as u64, k == n_iters, oracle.calls(), gamma, tau);
        }
        Ok(())
    };
    let outcome = steps();
    match outcome {
        Ok(()) => Ok(tracker.finish(z, oracle.calls())),
        Err(e) => Err(tracker.interrupted(e, oracle.calls())),
    }
}

/// Terms of the expected-error bound for the kernel method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEnvelope {
    pub a1: f64,
    pub a2: f64,
    pub bound: f64,
}

/// `(1/mu) (n^(2-1/beta) A1 / N^((beta-1)/beta) + A2 n (1 + ln N) / N)` with
/// `A1 = 3 beta (kappa sigma^2)^((beta-1)/beta) (kappa_beta L)^(2/beta)` and
/// `A2 = 9 kappa M^2`.
pub fn kernel_error_envelope(
    kernel: &SmoothingKernel,
    n: usize,
    n_iters: usize,
    mu: f64,
    l: f64,
    sigma: f64,
    m: f64,
) -> KernelEnvelope {
    let beta = kernel.beta();
    let (nf, big_n) = (n as f64, n_iters as f64);
    let a1 = 3.0 * beta * (kernel.kappa() * sigma * sigma).powf((beta - 1.0) / beta) * (kernel.kappa_beta() * l).powf(2.0 / beta);
    let a2 = 9.0 * kernel.kappa() * m * m;
    let bound = (nf.powf(2.0 - 1.0 / beta) * a1 / big_n.powf((beta - 1.0) / beta)
        + a2 * nf * (1.0 + big_n.ln()) / big_n)
        / mu;
    KernelEnvelope { a1, a2, bound }
}
