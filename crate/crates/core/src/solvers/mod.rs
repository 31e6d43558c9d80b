//! Saddle-point solvers: zero-order mirror descent, the kernel projected
//! gradient method, a first-order baseline and the regularization wrapper.

mod first_order;
mod kernel_spg;
mod regularize;
mod runlog;
mod schedule;
mod zoopmd;

pub use first_order::run_first_order;
pub use kernel_spg::{kernel_error_envelope, run_kernel_zospg, run_kernel_zospg_with_schedule, KernelEnvelope};
pub use regularize::regularize;
pub use runlog::{LogRow, RunLog, CSV_COLUMNS};
pub use schedule::{derive_schedule, GammaRule, ScheduleCase, ScheduleParams, StepSchedule, TauRule};
pub use zoopmd::{check_residual_alpha, residual_alpha, run_zoopmd, EstimatorKind};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::oracle::{NoiseModel, ProblemSpec};
use crate::point::BlockPoint;
use crate::rng::{NORMAL_TRANSFORM, RNG_ALGORITHM};

/// Knobs shared by all solvers.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Log every `log_every`-th iteration; the last one is always logged.
    pub log_every: usize,
    /// Keep every iterate entering the average.
    pub record_iterates: bool,
    /// Starting point; the domain's canonical start when `None`.
    pub z0: Option<BlockPoint>,
    /// Extra `key: value` header lines, echoed before the solver's own.
    pub extra_header: Vec<(String, String)>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            log_every: 1,
            record_iterates: false,
            z0: None,
            extra_header: Vec::new(),
        }
    }
}

/// Result of a solver run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: RunLog,
    /// The averaged point returned by the method.
    pub average: BlockPoint,
    pub last_iterate: BlockPoint,
    /// Iterates entering the average, when requested.
    pub iterates: Vec<BlockPoint>,
    pub oracle_calls: u64,
}

fn start_point(domain: &DomainSpec, opts: &RunOptions) -> Result<BlockPoint> {
    let z0 = match &opts.z0 {
        Some(z) => z.clone(),
        None => domain.canonical_start(),
    };
    if z0.dim() != domain.dim() || z0.nx() != domain.nx() {
        return Err(Error::InvalidDimension("starting point does not match the domain".into()));
    }
    if !domain.contains(z0.as_slice()) {
        return Err(Error::Config("starting point lies outside the domain".into()));
    }
    Ok(z0)
}

fn check_tau_reach(problem: &ProblemSpec, max_tau: f64) -> Result<()> {
    if max_tau > problem.neighborhood_radius() {
        return Err(Error::Config(format!(
            "smoothing radius {max_tau:e} exceeds the problem's neighborhood radius {:e}",
            problem.neighborhood_radius()
        )));
    }
    Ok(())
}

/// Streams iterates into the running average and the log.
struct Tracker<'a> {
    problem: &'a ProblemSpec,
    sum: Vec<f64>,
    count: u64,
    log_every: u64,
    record: bool,
    iterates: Vec<BlockPoint>,
    log: RunLog,
    nx: usize,
}

impl<'a> Tracker<'a> {
    fn new(problem: &'a ProblemSpec, opts: &RunOptions, header: Vec<(String, String)>) -> Result<Self> {
        if opts.log_every == 0 {
            return Err(Error::Config("log_every must be >= 1".into()));
        }
        let mut log = RunLog::new();
        for (k, v) in opts.extra_header.iter().chain(header.iter()) {
            log.set_header(k.clone(), v.clone());
        }
        Ok(Self {
            problem,
            sum: vec![0.0; problem.dim()],
            count: 0,
            log_every: opts.log_every as u64,
            record: opts.record_iterates,
            iterates: Vec::new(),
            log,
            nx: problem.nx(),
        })
    }

    fn average(&self) -> BlockPoint {
        let c = self.count.max(1) as f64;
        BlockPoint::from_concat(self.sum.iter().map(|s| s / c).collect(), self.nx)
            .expect("sum has the problem's dimension")
    }

    fn add(&mut self, z: &BlockPoint) -> Result<()> {
        if !self.problem.domain().contains(z.as_slice()) {
            return Err(Error::Precondition("iterate left the domain".into()));
        }
        for (s, v) in self.sum.iter_mut().zip(z.as_slice()) {
            *s += v;
        }
        self.count += 1;
        if self.record {
            self.iterates.push(z.clone());
        }
        Ok(())
    }

    fn maybe_log(&mut self, k: u64, last: bool, calls: u64, gamma: f64, tau: f64) {
        if !k.is_multiple_of(self.log_every) && !last {
            return;
        }
        let avg = self.average();
        self.log.push(LogRow {
            k,
            oracle_calls: calls,
            gap: self.problem.gap(&avg).unwrap_or(f64::NAN),
            f_value: self.problem.value(&avg),
            gamma_k: gamma,
            tau_k: tau,
        });
    }

    fn interrupted(mut self, cause: Error, calls: u64) -> Error {
        self.log.set_header("oracle_calls", calls.to_string());
        self.log.set_header("status", format!("failed: {cause}"));
        Error::Interrupted {
            partial: Box::new(self.log),
            cause: Box::new(cause),
        }
    }

    fn finish(mut self, last_iterate: BlockPoint, calls: u64) -> RunOutput {
        let average = self.average();
        self.log.set_header("oracle_calls", calls.to_string());
        self.log.set_header("average_checksum", format!("{:016x}", average.checksum()));
        RunOutput {
            log: self.log,
            average,
            last_iterate,
            iterates: self.iterates,
            oracle_calls: calls,
        }
    }
}

fn common_header(
    method: &str,
    problem: &ProblemSpec,
    noise: Option<&NoiseModel>,
    n_iters: usize,
    seed: u64,
    z0: &BlockPoint,
) -> Vec<(String, String)> {
    let mut h = vec![
        ("method".to_string(), method.to_string()),
        ("problem".to_string(), problem.name().to_string()),
        ("nx".to_string(), problem.nx().to_string()),
        ("ny".to_string(), problem.ny().to_string()),
        ("n_iters".to_string(), n_iters.to_string()),
        ("seed".to_string(), seed.to_string()),
        ("rng".to_string(), RNG_ALGORITHM.to_string()),
        ("normal_transform".to_string(), NORMAL_TRANSFORM.to_string()),
        ("z0_checksum".to_string(), format!("{:016x}", z0.checksum())),
    ];
    if let Some(noise) = noise {
        h.push(("sigma".to_string(), format!("{:e}", noise.sigma())));
        h.push(("xi_distribution".to_string(), noise.distribution().name().to_string()));
        h.push(("delta".to_string(), format!("{:e}", noise.delta_bound())));
    }
    h
}
