//! Building problems from configs and running (method, seed) cells.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::config::{ExperimentConfig, Method, MethodConfig, NoiseLevel, ProblemConfig, ProblemKind, QuadraticDomain, ScheduleChoice};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, GeometryKind, GeometrySetup};
use crate::kernels::{build_legendre_kernel, SmoothingKernel};
use crate::oracle::{NoiseModel, ProblemSpec};
use crate::point::BlockPoint;
use crate::problems::{gen_matrix_game, make_quadratic_saddle, MatrixGame};
use crate::rng::{sample_sphere, SeededRng};
use crate::solvers::{
    check_residual_alpha, derive_schedule, regularize, run_first_order, run_kernel_zospg_with_schedule, run_zoopmd,
    EstimatorKind, GammaRule, RunOptions, RunOutput, ScheduleCase, ScheduleParams, StepSchedule, TauRule,
};

/// Probes averaged by the relative noise calibration.
pub const CALIBRATION_PROBES: usize = 100;
/// Distance of the calibration probes from the start.
pub const CALIBRATION_RADIUS: f64 = 0.01;
const CALIBRATION_STREAM: u64 = 0x6361_6c69_6272_6174;

/// A problem instance with its noise model, shared by every cell.
#[derive(Clone)]
pub struct PreparedProblem {
    pub spec: ProblemSpec,
    pub noise: NoiseModel,
    pub matrix: Option<MatrixGame>,
    /// `sigma_calibration` and `matrix_checksum` header entries.
    pub header: Vec<(String, String)>,
}

/// Mean `|phi|` over [`CALIBRATION_PROBES`] points at distance
/// [`CALIBRATION_RADIUS`] from `z0`, with a stream derived from `seed`.
pub fn mean_abs_value_near(spec: &ProblemSpec, z0: &BlockPoint, seed: u64) -> Result<f64> {
    let mut rng = SeededRng::new(seed ^ CALIBRATION_STREAM);
    let mut total = 0.0;
    for _ in 0..CALIBRATION_PROBES {
        let e = sample_sphere(&mut rng, z0.dim())?;
        total += spec.value(&z0.shifted(e.as_slice(), CALIBRATION_RADIUS)).abs();
    }
    Ok(total / CALIBRATION_PROBES as f64)
}

pub fn build_problem(cfg: &ProblemConfig) -> Result<PreparedProblem> {
    let mut header = Vec::new();
    let (spec, matrix) = match &cfg.kind {
        ProblemKind::MatGame { n, k, normalization } => {
            let game = gen_matrix_game(*n, *k, cfg.seed, *normalization)?;
            (game.to_problem(), Some(game))
        }
        ProblemKind::MatrixFile { path } => {
            let game = MatrixGame::load(path)?;
            (game.to_problem(), Some(game))
        }
        ProblemKind::Quadratic { nx, ny, mu, l, domain, radius, shift } => {
            let q = make_quadratic_saddle(*nx, *ny, *mu, *l, cfg.seed)?.with_solution(&vec![*shift; nx + ny])?;
            let dom = match domain {
                QuadraticDomain::Ball => DomainSpec::ball(*nx, *ny, *radius)?,
                QuadraticDomain::Box => DomainSpec::cube(*nx, *ny, -radius, *radius)?,
                QuadraticDomain::Whole => DomainSpec::Whole { nx: *nx, ny: *ny },
            };
            (q.to_problem(dom, *radius)?.with_neighborhood_radius(*radius)?, None)
        }
    };
    if let Some(game) = &matrix {
        header.push(("matrix_checksum".to_string(), format!("{:016x}", game.checksum())));
    }
    let sigma = match cfg.noise {
        NoiseLevel::Absolute(s) => {
            header.push(("sigma_calibration".to_string(), format!("absolute sigma {s:e}")));
            s
        }
        NoiseLevel::Relative(level) => {
            let scale = mean_abs_value_near(&spec, &spec.domain().canonical_start(), cfg.seed)?;
            let s = level * scale;
            header.push((
                "sigma_calibration".to_string(),
                format!(
                    "relative level {level} x mean|phi| {scale:e} over {CALIBRATION_PROBES} probes at radius {CALIBRATION_RADIUS} from z0 = sigma {s:e}"
                ),
            ));
            s
        }
    };
    let mut noise = NoiseModel::new(sigma, cfg.xi)?;
    if cfg.delta > 0.0 {
        noise = noise.with_sign_pattern_bias(cfg.delta)?;
    }
    Ok(PreparedProblem { spec, noise, matrix, header })
}

/// Everything a cell needs, validated before any run starts.
#[derive(Clone)]
pub struct CellPlan {
    pub method: Method,
    pub problem: ProblemSpec,
    pub geometry: GeometrySetup,
    pub schedule: StepSchedule,
    pub kernel: Option<SmoothingKernel>,
}

fn resolve_geometry(mcfg: &MethodConfig, domain: &DomainSpec) -> Result<GeometrySetup> {
    let kind = match mcfg.method {
        Method::ZoRf | Method::ZoKer => GeometryKind::Euclidean,
        Method::ZoStd | Method::Fo => mcfg.geometry.unwrap_or(match domain {
            DomainSpec::SimplexPair { .. } => GeometryKind::EntropySimplexPair,
            _ => GeometryKind::Euclidean,
        }),
    };
    GeometrySetup::new(kind, domain.clone())
}

fn schedule_for(
    mcfg: &MethodConfig,
    problem: &ProblemSpec,
    geometry: &GeometrySetup,
    noise: &NoiseModel,
    kernel: Option<&SmoothingKernel>,
    n_iters: usize,
) -> Result<StepSchedule> {
    match mcfg.schedule {
        ScheduleChoice::Constant => {
            let gamma = mcfg.gamma.ok_or(Error::MissingConstant("gamma"))? * mcfg.gamma_mult;
            if mcfg.method == Method::Fo {
                StepSchedule::new(GammaRule::Constant(gamma), TauRule::Constant(1.0), format!("constant gamma = {gamma:e}"))
            } else {
                let tau = mcfg.tau.ok_or(Error::MissingConstant("tau"))? * mcfg.tau_mult;
                StepSchedule::constant(gamma, tau)
            }
        }
        ScheduleChoice::Derived(case) => {
            let meta = problem.meta();
            let mut p = ScheduleParams::new(problem.dim(), geometry.q());
            p.lipschitz = meta.lipschitz;
            p.grad_lipschitz = meta.grad_lipschitz;
            p.mu = mcfg.mu.or((meta.mu > 0.0).then_some(meta.mu));
            p.sigma = (noise.sigma() > 0.0).then_some(noise.sigma());
            p.omega = geometry.omega().ok();
            p.n_iters = Some(n_iters);
            p.gamma_mult = mcfg.gamma_mult;
            p.tau_mult = mcfg.tau_mult;
            if let Some(k) = kernel {
                p.grad_lipschitz = meta.holder_const.or(meta.grad_lipschitz);
                p.beta = Some(k.beta());
                p.kappa = Some(k.kappa());
                p.kappa_beta = Some(k.kappa_beta());
            }
            if case == ScheduleCase::KernelScsc && p.mu.is_none() {
                return Err(Error::Config("zo-ker with `kernel_scsc` needs mu > 0: set `mu` or `regularize`".into()));
            }
            derive_schedule(case, &p)
        }
    }
}

/// Builds and validates the run of one method without executing it.
pub fn plan_cell(prepared: &PreparedProblem, mcfg: &MethodConfig, n_iters: usize) -> Result<CellPlan> {
    let tag = |e: Error| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", mcfg.method)),
        other => other,
    };
    let mut problem = prepared.spec.clone();
    if let Some(mu) = mcfg.regularize {
        problem = regularize(&problem, mu, &problem.domain().canonical_start()).map_err(tag)?;
    }
    let geometry = resolve_geometry(mcfg, problem.domain()).map_err(tag)?;
    let kernel = match mcfg.method {
        Method::ZoKer => {
            let k = build_legendre_kernel(mcfg.beta)?;
            let beta = problem.meta().beta.ok_or(Error::MissingConstant("beta"))?;
            if k.beta() > beta {
                return Err(tag(Error::Config(format!("kernel order {} exceeds the problem's order {beta}", k.beta()))));
            }
            Some(k)
        }
        _ => None,
    };
    let schedule = schedule_for(mcfg, &problem, &geometry, &prepared.noise, kernel.as_ref(), n_iters).map_err(tag)?;
    match mcfg.method {
        Method::ZoRf => check_residual_alpha(&problem, &schedule, n_iters).map_err(tag)?,
        Method::ZoKer if n_iters == 0 => return Err(tag(Error::Config("needs n_iters >= 1".into()))),
        Method::Fo if problem.saddle_grad_fn().is_none() => {
            return Err(Error::Unsupported("fo needs a problem with an exact gradient".into()))
        }
        _ => {}
    }
    if mcfg.method != Method::Fo && schedule.max_tau().max(schedule.tau_at(0)) > problem.neighborhood_radius() {
        return Err(tag(Error::Config(format!(
            "smoothing radius {:e} exceeds the neighborhood radius {:e}",
            schedule.max_tau(),
            problem.neighborhood_radius()
        ))));
    }
    Ok(CellPlan { method: mcfg.method, problem, geometry, schedule, kernel })
}

pub fn run_cell(plan: &CellPlan, noise: &NoiseModel, n_iters: usize, seed: u64, opts: &RunOptions) -> Result<RunOutput> {
    match plan.method {
        Method::ZoStd => run_zoopmd(&plan.problem, noise, &plan.geometry, EstimatorKind::Standard, &plan.schedule, n_iters, seed, opts),
        Method::ZoRf => run_zoopmd(&plan.problem, noise, &plan.geometry, EstimatorKind::Residual, &plan.schedule, n_iters, seed, opts),
        Method::ZoKer => {
            let kernel = plan.kernel.as_ref().expect("planned with a kernel");
            run_kernel_zospg_with_schedule(&plan.problem, noise, kernel, &plan.schedule, n_iters, seed, opts)
        }
        Method::Fo => run_first_order(&plan.problem, &plan.geometry, &plan.schedule, n_iters, seed, opts),
    }
}

/// Exact-gradient entropic mirror descent on a simplex-pair problem.
pub fn fo_mirror_descent(problem: &ProblemSpec, gamma: f64, n_iters: usize, seed: u64, opts: &RunOptions) -> Result<RunOutput> {
    let DomainSpec::SimplexPair { nx, ny } = *problem.domain() else {
        return Err(Error::Unsupported("the mirror descent baseline expects a game on a simplex pair".into()));
    };
    if problem.saddle_grad_fn().is_none() {
        return Err(Error::Unsupported(format!("problem `{}` has no gradient", problem.name())));
    }
    let geometry = GeometrySetup::entropy(nx, ny)?;
    let schedule = StepSchedule::new(GammaRule::Constant(gamma), TauRule::Constant(1.0), format!("constant gamma = {gamma:e}"))?;
    run_first_order(problem, &geometry, &schedule, n_iters, seed, opts)
}

/// Maps `f` over `items` on up to `threads` scoped workers (0 = all cores),
/// keeping the input order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = if threads == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        threads
    }
    .min(items.len())
    .max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every item mapped"))
        .collect()
}

/// Outcome of one (method, seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub method: Method,
    pub seed: u64,
    pub path: PathBuf,
    pub final_gap: f64,
    pub oracle_calls: u64,
}

pub fn output_file_name(method: Method, seed: u64) -> String {
    format!("{}_seed{seed}.csv", method.name())
}

/// Validates every cell, then runs all of them and writes one CSV per
/// (method, seed) into the output directory. A failing run still writes the
/// rows logged before the failure; the first failure is returned after all
/// cells finish.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<CellReport>> {
    let prepared = build_problem(&cfg.problem)?;
    let plans = cfg
        .methods
        .iter()
        .map(|m| plan_cell(&prepared, m, cfg.run.n_iters))
        .collect::<Result<Vec<_>>>()?;
    let dir = &cfg.run.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;

    let cells: Vec<(usize, u64)> = (0..plans.len())
        .flat_map(|p| cfg.run.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let mut header: Vec<(String, String)> = cfg.echo().to_vec();
    header.extend(prepared.header.iter().cloned());
    let results = par_map(&cells, cfg.run.threads, |&(p, seed)| {
        let plan = &plans[p];
        let opts = RunOptions {
            log_every: cfg.run.log_every,
            extra_header: header.clone(),
            ..RunOptions::default()
        };
        let path = dir.join(output_file_name(plan.method, seed));
        match run_cell(plan, &prepared.noise, cfg.run.n_iters, seed, &opts) {
            Ok(out) => {
                out.log.write(&path)?;
                Ok(CellReport {
                    method: plan.method,
                    seed,
                    path,
                    final_gap: out.log.last().map_or(f64::NAN, |r| r.gap),
                    oracle_calls: out.oracle_calls,
                })
            }
            Err(e) => {
                if let Error::Interrupted { partial, .. } = &e {
                    partial.write(&path)?;
                }
                Err(e)
            }
        }
    });
    results.into_iter().collect()
}
