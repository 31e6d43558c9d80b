//! Acceptance suite. Prints one verdict line per criterion and exits
//! nonzero on any unexpected failure.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use zoosaddle::estimators::{smoothed_grad_mc, smoothed_value_mc, RunningMoments};
use zoosaddle::geometry::{dual_norm, project_simplex};
use zoosaddle::harness::{build_problem, grid_search, median, run_experiment, ExperimentConfig};
use zoosaddle::kernels::kernel_moment;
use zoosaddle::problems::{error_to_solution, matgame_gap};
use zoosaddle::solvers::{derive_schedule, kernel_error_envelope, ScheduleParams};
use zoosaddle::*;

const DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Verdict {
    Pass,
    Advisory,
    KnownRed,
    Fail,
}

struct Outcome {
    name: &'static str,
    verdict: Verdict,
    detail: String,
}

impl Outcome {
    fn new(name: &'static str, ok: bool, detail: String) -> Self {
        let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        Self { name, verdict, detail }
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    out.detail = format!("{} [{:.2?}]", out.detail, took);
    if let Some(limit) = limit {
        if took > limit && out.verdict == Verdict::Pass {
            out.verdict = Verdict::Fail;
            out.detail = format!("{} exceeds {:?}", out.detail, limit);
        }
    }
    out
}

fn lipschitz_problem() -> ProblemSpec {
    let a = [0.3, -0.2, 0.1];
    let b = [-0.1, 0.4, 0.2];
    let value = move |z: &BlockPoint| {
        let dx: f64 = z.x().iter().zip(&a).map(|(v, c)| (v - c).powi(2)).sum();
        let dy: f64 = z.y().iter().zip(&b).map(|(v, c)| (v - c).powi(2)).sum();
        (1.0 + dx).sqrt() - (1.0 + dy).sqrt()
    };
    ProblemSpec::new("soft distance", DomainSpec::ball(3, 3, 2.0).unwrap(), Arc::new(value))
        .with_meta(ProblemMeta {
            lipschitz: Some(2f64.sqrt()),
            ..Default::default()
        })
        .unwrap()
}

fn quadratic(seed: u64) -> ProblemSpec {
    make_quadratic_saddle(2, 2, 1.0, 4.0, seed)
        .unwrap()
        .to_problem(DomainSpec::Whole { nx: 2, ny: 2 }, 0.0)
        .unwrap()
}

fn unit_quadratic() -> QuadraticSaddle {
    let one = || DMatrix::from_element(1, 1, 1.0);
    QuadraticSaddle::new(one(), one(), one())
        .unwrap()
        .with_solution(&[0.4, -0.3])
        .unwrap()
}

fn kernel_certificates() -> Outcome {
    let mut detail = Vec::new();
    let mut moments_ok = true;
    let mut kappa_beta_ok = true;
    let mut kappa_red = Vec::new();
    for beta in [2.5, 3.0, 3.5, 5.0, 7.0] {
        let k = build_legendre_kernel(beta).unwrap();
        let c = k.coeffs();
        // E[r^j K(r)] for r ~ U[-1, 1], integrated monomial by monomial
        let moment = |j: usize| -> f64 {
            c.iter()
                .enumerate()
                .filter(|(i, _)| (i + j).is_multiple_of(2))
                .map(|(i, a)| a / (i + j + 1) as f64)
                .sum()
        };
        let residual = (0..=k.l())
            .map(|j| (moment(j) - if j == 1 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        let lib_gap = (0..=k.l()).map(|j| (moment(j) - kernel_moment(&k, j)).abs()).fold(0.0, f64::max);
        moments_ok &= residual <= 1e-10 && lib_gap <= 1e-12;
        let kappa: f64 = c
            .iter()
            .enumerate()
            .flat_map(|(i, a)| c.iter().enumerate().map(move |(j, b)| (i + j, a * b)))
            .filter(|(p, _)| p.is_multiple_of(2))
            .map(|(p, ab)| ab / (p + 1) as f64)
            .sum();
        let steps = 400_000;
        let h = 2.0 / steps as f64;
        let kappa_beta: f64 = (0..steps)
            .map(|i| {
                let r = -1.0 + (i as f64 + 0.5) * h;
                0.5 * h * r.abs().powf(beta) * k.eval(r).abs()
            })
            .sum();
        let kappa_bound = 3f64.sqrt() * beta.powf(1.5);
        let kappa_beta_bound = 2.0 * 2f64.sqrt() * (beta - 1.0);
        kappa_beta_ok &= kappa_beta <= kappa_beta_bound
            && (kappa - k.kappa()).abs() <= 1e-9 * kappa
            && (kappa_beta - k.kappa_beta()).abs() <= 1e-6;
        if kappa > kappa_bound {
            kappa_red.push(beta);
        }
        detail.push(format!(
            "beta {beta}: residual {residual:.1e} kappa {kappa:.4} (<= {kappa_bound:.4}) kappa_beta {kappa_beta:.4} (<= {kappa_beta_bound:.4})"
        ));
    }
    let ok = moments_ok && kappa_beta_ok && kappa_red.is_empty();
    let mut out = Outcome::new("kernel certificates", ok, detail.join("; "));
    if !ok && moments_ok && kappa_beta_ok && kappa_red == [3.5, 7.0] {
        out.verdict = Verdict::KnownRed;
        out.detail = format!(
            "kappa <= sqrt(3) beta^1.5 fails at beta {:?}; exact kappa exceeds the stated constant; {}",
            kappa_red, out.detail
        );
    }
    out
}

fn closed_forms() -> Outcome {
    let s = 105.0 / 64.0;
    let cases: [(f64, Vec<f64>); 3] = [
        (2.5, vec![0.0, 3.0]),
        (4.0, vec![0.0, 75.0 / 4.0, 0.0, -105.0 / 4.0]),
        (6.0, vec![0.0, 35.0 * s, 0.0, -126.0 * s, 0.0, 99.0 * s]),
    ];
    let mut worst: f64 = 0.0;
    let mut shapes = true;
    for (beta, want) in &cases {
        let got = build_legendre_kernel(*beta).unwrap().coeffs().to_vec();
        shapes &= got.len() == want.len();
        for (g, w) in got.iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
    }
    Outcome::new("closed-form kernels", shapes && worst <= 1e-12, format!("max coefficient error {worst:.1e}"))
}

fn mean_of_standard(problem: &ProblemSpec, noise: &NoiseModel, z: &BlockPoint, tau: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut oracle = NoisyOracle::new(problem, noise);
    let mut rng = SeededRng::new(seed);
    let mut acc = RunningMoments::new(z.dim());
    for _ in 0..DRAWS {
        acc.push(&estimate_standard(&mut oracle, z, tau, &mut rng).unwrap().g);
    }
    let r = acc.finish();
    (r.mean, r.stderr)
}

fn unbiasedness() -> Outcome {
    let p = quadratic(7);
    let noise = NoiseModel::gaussian(0.1).unwrap();
    let z = BlockPoint::new(vec![0.3, -0.5], vec![0.2, 0.1]).unwrap();
    let tau = 0.1;
    let (mean, se) = mean_of_standard(&p, &noise, &z, tau, 11);
    let mc = smoothed_grad_mc(&p, &z, tau, DRAWS, &mut SeededRng::new(12)).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..z.dim() {
        let combined = (se[i].powi(2) + mc.stderr[i].powi(2)).sqrt();
        worst = worst.max((mean[i] - mc.mean[i]).abs() / combined);
    }
    Outcome::new("estimator unbiasedness", worst <= 4.0, format!("max deviation {worst:.2} combined stderr over {DRAWS} draws"))
}

fn bias_bound() -> Outcome {
    let p = quadratic(8);
    let delta = 0.01;
    let tau = 0.05;
    let noise = NoiseModel::gaussian(0.1).unwrap().with_sign_pattern_bias(delta).unwrap();
    let z = BlockPoint::new(vec![-0.2, 0.4], vec![0.5, -0.1]).unwrap();
    let n = z.dim();
    let (mean, se) = mean_of_standard(&p, &noise, &z, tau, 21);
    let mc = smoothed_grad_mc(&p, &z, tau, DRAWS, &mut SeededRng::new(22)).unwrap();
    let diff: Vec<f64> = mean.iter().zip(&mc.mean).map(|(a, b)| a - b).collect();
    let combined: Vec<f64> = se.iter().zip(&mc.stderr).map(|(a, b)| (a * a + b * b).sqrt()).collect();
    let mut ok = true;
    let mut detail = Vec::new();
    for q in [DualExponent::Two, DualExponent::Infinity] {
        let lhs = dual_norm(&diff, q);
        let rhs = delta * n as f64 * a_q_squared(n, q).sqrt() / tau + 4.0 * dual_norm(&combined, q);
        ok &= lhs <= rhs;
        detail.push(format!("q {}: {lhs:.3e} <= {rhs:.3e}", q.as_f64()));
    }
    Outcome::new("bias bound", ok, detail.join(", "))
}

fn second_moments() -> Outcome {
    let p = lipschitz_problem();
    let n = p.dim();
    let nf = n as f64;
    let m = p.meta().lipschitz.unwrap();
    let (sigma, delta, tau) = (0.1, 0.01, 0.1);
    let noise = NoiseModel::gaussian(sigma).unwrap().with_sign_pattern_bias(delta).unwrap();
    let z = BlockPoint::new(vec![0.5, 0.2, -0.4], vec![-0.3, 0.6, 0.1]).unwrap();
    let mut detail = Vec::new();
    let mut ok = true;

    for q in [DualExponent::Two, DualExponent::Infinity] {
        let mut oracle = NoisyOracle::new(&p, &noise);
        let mut rng = SeededRng::new(31);
        let mut sum = 0.0;
        for _ in 0..DRAWS {
            let g = estimate_standard(&mut oracle, &z, tau, &mut rng).unwrap().g;
            sum += dual_norm(&g, q).powi(2);
        }
        let empirical = sum / DRAWS as f64;
        let bound = 3.0 * a_q_squared(n, q) * (3.0 * nf * m * m + nf * nf * (sigma * sigma + delta * delta) / (tau * tau));
        ok &= empirical <= 2.0 * bound;
        detail.push(format!("standard q {}: {empirical:.3e} vs {bound:.3e}", q.as_f64()));
    }

    // residual feedback along prox trajectories with alpha = 1/2
    let alpha = 0.5;
    let gamma = tau * (alpha / 6.0f64).sqrt() / (nf * m);
    let geometry = GeometrySetup::euclidean(p.domain().clone());
    let (trajectories, steps) = (1000, DRAWS / 1000);
    let mut sq = vec![0.0; steps];
    for t in 0..trajectories {
        let mut oracle = NoisyOracle::new(&p, &noise);
        let mut rng = SeededRng::new(1000 + t as u64);
        let mut z = p.domain().canonical_start();
        let (_, mut state) = estimate_residual(&mut oracle, &ResidualState::new(), &z, tau, &mut rng).unwrap();
        for s in sq.iter_mut() {
            let (est, next) = estimate_residual(&mut oracle, &state, &z, tau, &mut rng).unwrap();
            state = next;
            *s += dual_norm(&est.g, DualExponent::Two).powi(2) / trajectories as f64;
            z = prox_step(&geometry, &z, &est.g, gamma).unwrap();
        }
    }
    let floor = (12.0 * nf * nf * (sigma * sigma + delta * delta) / (tau * tau) + 12.0 * nf * nf * m * m) / (1.0 - alpha);
    let worst = sq
        .iter()
        .enumerate()
        .map(|(k, v)| v / (alpha.powi(k as i32) * sq[0] + floor))
        .fold(0.0, f64::max);
    ok &= worst <= 2.0;
    detail.push(format!("residual: max ratio to envelope {worst:.3} over {steps} steps"));

    for beta in [3.0, 5.0] {
        let kernel = build_legendre_kernel(beta).unwrap();
        let mut oracle = NoisyOracle::new(&p, &noise);
        let mut rng = SeededRng::new(41);
        let mut sum = 0.0;
        for _ in 0..DRAWS {
            let g = estimate_kernel(&mut oracle, &kernel, &z, tau, &mut rng).unwrap().g;
            sum += dual_norm(&g, DualExponent::Two).powi(2);
        }
        let empirical = sum / DRAWS as f64;
        let bound = kernel.kappa() * (9.0 * nf * m * m + 3.0 * (nf * sigma).powi(2) / (2.0 * tau * tau));
        ok &= empirical <= 2.0 * bound;
        detail.push(format!("kernel beta {beta}: {empirical:.3e} vs {bound:.3e}"));
    }
    Outcome::new("second-moment bounds", ok, detail.join(", "))
}

fn smoothing_bias() -> Outcome {
    let value = |z: &BlockPoint| (z.x()[0].powi(2) + z.x()[1].powi(2)).sqrt() + z.y()[0].abs();
    let lip = ProblemSpec::new("kinked", DomainSpec::Whole { nx: 2, ny: 1 }, Arc::new(value));
    let m = 2f64.sqrt();
    let smooth = quadratic(9);
    let l = smooth.meta().grad_lipschitz.unwrap();
    let mut ok = true;
    let mut worst_lip: f64 = 0.0;
    let mut worst_smooth: f64 = 0.0;
    let mut rng = SeededRng::new(51);
    for tau in [0.01, 0.1, 0.5] {
        for z in [vec![0.0, 0.0, 0.0], vec![0.05, -0.02, 0.01], vec![1.0, 0.5, -0.3]] {
            let z = BlockPoint::from_concat(z, 2).unwrap();
            let mc = smoothed_value_mc(&lip, &z, tau, DRAWS, &mut rng).unwrap();
            let dev = (mc.mean - lip.value(&z)).abs();
            ok &= dev <= tau * m + 3.0 * mc.stderr;
            worst_lip = worst_lip.max(dev / (tau * m));
        }
        for z in [vec![0.0; 4], vec![0.3, -0.2, 0.5, 0.1]] {
            let z = BlockPoint::from_concat(z, 2).unwrap();
            let mc = smoothed_value_mc(&smooth, &z, tau, DRAWS, &mut rng).unwrap();
            let dev = (mc.mean - smooth.value(&z)).abs();
            ok &= dev <= l * tau * tau / 2.0 + 3.0 * mc.stderr;
            worst_smooth = worst_smooth.max(dev / (l * tau * tau / 2.0));
        }
    }
    Outcome::new(
        "smoothing bias",
        ok,
        format!("max deviation / tau M = {worst_lip:.3}, max deviation / (L tau^2 / 2) = {worst_smooth:.3}"),
    )
}

fn oracle_accounting() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let game = gen_matrix_game(6, 5, 3, Normalization::MaxAbs).unwrap();
    let problem = game.to_problem();
    let noise = NoiseModel::gaussian(0.01).unwrap();
    let entropy = GeometrySetup::entropy(6, 5).unwrap();
    let euclid = GeometrySetup::euclidean(problem.domain().clone());
    let n_iters = 500;
    let std_sched = StepSchedule::constant(0.1, 0.05).unwrap();
    let rf_sched = StepSchedule::constant(1e-4, 0.05).unwrap();
    let opts = RunOptions::default();
    let std_run = run_zoopmd(&problem, &noise, &entropy, EstimatorKind::Standard, &std_sched, n_iters, 1, &opts).unwrap();
    let rf_run = run_zoopmd(&problem, &noise, &euclid, EstimatorKind::Residual, &rf_sched, n_iters, 1, &opts).unwrap();
    let n = n_iters as u64;
    ok &= std_run.oracle_calls == 2 * (n + 1) && std_run.log.rows().iter().all(|r| r.oracle_calls == 2 * (r.k + 1));
    ok &= rf_run.oracle_calls == n + 2 && rf_run.log.rows().iter().all(|r| r.oracle_calls == r.k + 2);
    detail.push(format!("standard {} of {}, residual {} of {}", std_run.oracle_calls, 2 * (n + 1), rf_run.oracle_calls, n + 2));

    let quad = unit_quadratic().to_problem(DomainSpec::ball(1, 1, 1.0).unwrap(), 0.5).unwrap();
    let kernel = build_legendre_kernel(3.0).unwrap();
    let ker_run = run_kernel_zospg(&quad, &NoiseModel::gaussian(0.1).unwrap(), &kernel, 1.0, n_iters, 1, &opts).unwrap();
    ok &= ker_run.oracle_calls == 2 * n && ker_run.log.rows().iter().all(|r| r.oracle_calls == 2 * r.k);
    detail.push(format!("kernel {} of {}", ker_run.oracle_calls, 2 * n));

    let z = problem.domain().canonical_start();
    let mut oracle = NoisyOracle::new(&problem, &noise);
    let mut rng = SeededRng::new(5);
    let mut state = ResidualState::new();
    let mut per_call = true;
    for _ in 0..100 {
        let before = oracle.calls();
        let e = estimate_standard(&mut oracle, &z, 0.05, &mut rng).unwrap();
        per_call &= e.calls_used == 2 && oracle.calls() - before == 2;
        let before = oracle.calls();
        let e = estimate_kernel(&mut oracle, &kernel, &z, 0.05, &mut rng).unwrap();
        per_call &= e.calls_used == 2 && oracle.calls() - before == 2;
        let before = oracle.calls();
        let (e, next) = estimate_residual(&mut oracle, &state, &z, 0.05, &mut rng).unwrap();
        state = next;
        per_call &= e.calls_used == 1 && oracle.calls() - before == 1;
    }
    ok &= per_call;
    detail.push(format!("per-estimate counts exact: {per_call}"));
    Outcome::new("oracle-call accounting", ok, detail.join(", "))
}

struct KernelRuns {
    mean_error: BTreeMap<usize, f64>,
    envelope: BTreeMap<usize, f64>,
}

fn kernel_runs() -> KernelRuns {
    let p = unit_quadratic().to_problem(DomainSpec::ball(1, 1, 1.0).unwrap(), 0.5).unwrap();
    let noise = NoiseModel::gaussian(0.1).unwrap();
    let kernel = build_legendre_kernel(3.0).unwrap();
    let (m, l) = (p.meta().lipschitz.unwrap(), p.meta().grad_lipschitz.unwrap());
    let checkpoints: Vec<usize> = (0..=10).map(|i| (10f64.powf(2.0 + 0.3 * i as f64)).round() as usize).chain([1000, 10_000, 100_000]).collect();
    let seeds = 10;
    let mut mean_error = BTreeMap::new();
    for seed in 1..=seeds {
        let out = run_kernel_zospg(&p, &noise, &kernel, 1.0, 100_000, seed, &RunOptions::default()).unwrap();
        let rows = out.log.rows();
        for &n in &checkpoints {
            let row = &rows[n - 1];
            assert_eq!(row.k as usize, n);
            *mean_error.entry(n).or_insert(0.0) += row.gap / seeds as f64;
        }
    }
    let envelope = checkpoints
        .iter()
        .map(|&n| (n, kernel_error_envelope(&kernel, p.dim(), n, 1.0, l, 0.1, m).bound))
        .collect();
    KernelRuns { mean_error, envelope }
}

fn quadratic_convergence(runs: &KernelRuns) -> Outcome {
    let q = unit_quadratic();
    let p = q.to_problem(DomainSpec::ball(1, 1, 1.0).unwrap(), 0.5).unwrap();
    let noise = NoiseModel::gaussian(0.1).unwrap();
    let geometry = GeometrySetup::euclidean(p.domain().clone());
    let n_iters = 100_000;
    let mut params = ScheduleParams::new(p.dim(), DualExponent::Two);
    params.lipschitz = p.meta().lipschitz;
    params.mu = Some(1.0);
    params.sigma = Some(0.1);
    params.n_iters = Some(n_iters);
    let schedule = derive_schedule(ScheduleCase::NonsmoothScsc, &params).unwrap();
    let opts = RunOptions {
        log_every: n_iters,
        ..Default::default()
    };
    let mut errors: Vec<f64> = (1..=5)
        .map(|seed| {
            let out = run_zoopmd(&p, &noise, &geometry, EstimatorKind::Standard, &schedule, n_iters, seed, &opts).unwrap();
            let e = error_to_solution(&q, &out.average);
            assert!((e - out.log.last().unwrap().gap).abs() < 1e-12);
            e
        })
        .collect();
    let med = median(&mut errors);
    let mut ok = med < 0.05;
    let mut detail = vec![format!("zoopMD median error {med:.2e} at N = {n_iters}")];
    for n in [100, 1000, 10_000] {
        let (e, env) = (runs.mean_error[&n], runs.envelope[&n]);
        ok &= e <= env;
        detail.push(format!("kernel N {n}: {e:.2e} <= {env:.3}"));
    }
    Outcome::new("quadratic convergence", ok, detail.join(", "))
}

fn rate_slope(runs: &KernelRuns) -> Outcome {
    let pts: Vec<(f64, f64)> = runs
        .mean_error
        .iter()
        .filter(|(n, _)| (1000..=100_000).contains(*n))
        .map(|(n, e)| ((*n as f64).ln(), e.ln()))
        .collect();
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / pts.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
    let verdict = if slope <= -0.4 {
        Verdict::Pass
    } else if slope <= -0.3 {
        Verdict::Advisory
    } else {
        Verdict::Fail
    };
    Outcome {
        name: "rate diagnostic",
        verdict,
        detail: format!("log-error slope {slope:.3} over {} points in N = 1e3..1e5 (theory -0.667)", pts.len()),
    }
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("zoosaddle-acceptance-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn game_config(level: f64, method: &str, gamma: f64, tau: f64, n_iters: usize, seeds: &str, extra: &str) -> ExperimentConfig {
    let text = format!(
        "[problem]\ntype = matgame\nn = 50\nk = 50\nseed = 2024\nnoise = {level}\n\
         [method]\nmethods = {method}\ngamma = {gamma}\ntau = {tau}\n\
         [run]\nn_iters = {n_iters}\nseeds = {seeds}\n{extra}"
    );
    ExperimentConfig::parse(&text).unwrap()
}

fn reproduction() -> Outcome {
    let grids: [(&str, Vec<f64>, Vec<f64>); 4] = [
        ("zo-std", vec![0.03, 0.1, 0.3, 1.0, 3.0], vec![0.01, 0.03, 0.1, 0.3]),
        ("zo-rf", vec![1e-5, 3e-5, 1e-4, 3e-4], vec![0.03, 0.1, 0.3, 1.0]),
        ("zo-ker", vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2], vec![0.03, 0.1, 0.3, 1.0]),
        ("fo", vec![0.01, 0.03, 0.1, 0.3, 1.0], vec![1.0]),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for level in [0.05, 0.10] {
        let mut finals = BTreeMap::new();
        let mut start = f64::NAN;
        for (method, gammas, taus) in &grids {
            let probe = game_config(level, method, 1.0, 1.0, 2000, "101, 102, 103", "");
            let best = grid_search(&probe, gammas, taus).unwrap();
            let dir = scratch_dir(&format!("{method}-{level}"));
            let extra = format!("log_every = 1000\noutput_dir = {}\n", dir.display());
            let cfg = game_config(level, method, best.best_gamma, best.best_tau, 20_000, "1, 2, 3, 4, 5", &extra);
            let prepared = build_problem(&cfg.problem).unwrap();
            start = prepared.spec.gap(&prepared.spec.domain().canonical_start()).unwrap();
            let mut gaps: Vec<f64> = run_experiment(&cfg).unwrap().iter().map(|r| r.final_gap).collect();
            let _ = std::fs::remove_dir_all(&dir);
            finals.insert(*method, (median(&mut gaps), best.best_gamma, best.best_tau));
        }
        let fo = finals["fo"].0;
        let mut parts = vec![format!("{:.0}% noise: start {start:.4}", level * 100.0)];
        for (method, (gap, gamma, tau)) in &finals {
            if *method != "fo" {
                ok &= *gap < start && fo <= *gap;
            }
            parts.push(format!("{method} {gap:.4} (gamma {gamma:e}, tau {tau:e})"));
        }
        detail.push(parts.join(" "));
    }
    Outcome::new("game reproduction", ok, detail.join("; "))
}

fn determinism() -> Outcome {
    let read_all = |dir: &PathBuf| -> BTreeMap<String, Vec<u8>> {
        std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect()
    };
    let run = |threads: usize| -> BTreeMap<String, Vec<u8>> {
        let dir = scratch_dir("determinism");
        let text = format!(
            "[problem]\ntype = matgame\nn = 8\nk = 6\nseed = 5\nnoise = 0.05\n\
             [method]\nmethods = zo-std, zo-rf, zo-ker, fo\ngamma = 0.1\ntau = 0.05\ngamma.zo-rf = 1e-4\n\
             [run]\nn_iters = 2000\nseeds = 1, 2\nthreads = {threads}\noutput_dir = {}\n",
            dir.display()
        );
        run_experiment(&ExperimentConfig::parse(&text).unwrap()).unwrap();
        let files = read_all(&dir);
        let _ = std::fs::remove_dir_all(&dir);
        files
    };
    let without_run_echo = |files: &BTreeMap<String, Vec<u8>>| -> BTreeMap<String, String> {
        files
            .iter()
            .map(|(k, v)| {
                let text = String::from_utf8_lossy(v);
                (k.clone(), text.lines().filter(|l| !l.starts_with("# config.run:")).collect::<Vec<_>>().join("\n"))
            })
            .collect()
    };
    let first = run(4);
    let second = run(4);
    let serial = run(1);
    let rerun_ok = first.len() == 8 && first == second;
    let threads_ok = without_run_echo(&first) == without_run_echo(&serial);
    let bytes: usize = first.values().map(Vec::len).sum();
    Outcome::new(
        "determinism",
        rerun_ok && threads_ok,
        format!("{} CSVs, {bytes} bytes; rerun byte-identical: {rerun_ok}; 1 vs 4 threads identical apart from the run echo: {threads_ok}", first.len()),
    )
}

/// All simplex points with coordinates on the grid `i / res`.
fn simplex_grid(dim: usize, res: usize) -> Vec<Vec<f64>> {
    fn compositions(dim: usize, total: usize) -> Vec<Vec<usize>> {
        if dim == 1 {
            return vec![vec![total]];
        }
        (0..=total)
            .flat_map(|i| {
                compositions(dim - 1, total - i).into_iter().map(move |mut rest| {
                    rest.push(i);
                    rest
                })
            })
            .collect()
    }
    compositions(dim, res)
        .into_iter()
        .map(|c| c.into_iter().map(|i| i as f64 / res as f64).collect())
        .collect()
}

fn zooming_projection(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let cost = |free: &[f64]| -> f64 {
        let last = 1.0 - free.iter().sum::<f64>();
        free.iter().chain([last].iter()).zip(v).map(|(p, a)| (p - a).powi(2)).sum()
    };
    let feasible = |free: &[f64]| free.iter().all(|&p| p >= 0.0) && free.iter().sum::<f64>() <= 1.0;
    let mut center = vec![1.0 / n as f64; n - 1];
    let mut half = 1.0;
    let ticks = 20i64;
    while half > 1e-10 {
        let step = half / ticks as f64;
        let mut best = (cost(&center), center.clone());
        let mut idx = vec![-ticks; n - 1];
        loop {
            let cand: Vec<f64> = center.iter().zip(&idx).map(|(c, i)| c + *i as f64 * step).collect();
            if feasible(&cand) {
                let c = cost(&cand);
                if c < best.0 {
                    best = (c, cand);
                }
            }
            let mut d = 0;
            while d < idx.len() && idx[d] == ticks {
                idx[d] = -ticks;
                d += 1;
            }
            if d == idx.len() {
                break;
            }
            idx[d] += 1;
        }
        center = best.1;
        half /= 4.0;
    }
    let last = 1.0 - center.iter().sum::<f64>();
    center.push(last);
    center
}

fn brute_force() -> Outcome {
    let mut rng = SeededRng::new(61);
    let mut worst_gap: f64 = 0.0;
    for (n, k) in [(2, 2), (3, 3), (2, 3), (3, 2)] {
        let grid_x = simplex_grid(n, 60);
        let grid_y = simplex_grid(k, 60);
        for seed in 0..3 {
            let game = gen_matrix_game(n, k, 100 + seed, Normalization::MaxAbs).unwrap();
            let c = game.matrix();
            let phi = |x: &[f64], y: &[f64]| -> f64 { (0..k).map(|i| y[i] * (0..n).map(|j| c[(i, j)] * x[j]).sum::<f64>()).sum() };
            for _ in 0..5 {
                let x = project_simplex(&(0..n).map(|_| rng.uniform(0.0, 1.0)).collect::<Vec<_>>());
                let y = project_simplex(&(0..k).map(|_| rng.uniform(0.0, 1.0)).collect::<Vec<_>>());
                let best_y = grid_y.iter().map(|yy| phi(&x, yy)).fold(f64::NEG_INFINITY, f64::max);
                let best_x = grid_x.iter().map(|xx| phi(xx, &y)).fold(f64::INFINITY, f64::min);
                worst_gap = worst_gap.max((best_y - best_x - matgame_gap(&game, &x, &y).unwrap()).abs());
            }
        }
    }
    let mut worst_proj: f64 = 0.0;
    for dim in [2, 3] {
        for _ in 0..20 {
            let v: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.5, 1.5)).collect();
            let fast = project_simplex(&v);
            let slow = zooming_projection(&v);
            worst_proj = worst_proj.max(fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    Outcome::new(
        "brute-force oracles",
        worst_gap <= 1e-3 && worst_proj <= 1e-6,
        format!("gap vs grid {worst_gap:.1e}, projection vs grid {worst_proj:.1e}"),
    )
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut outcomes = vec![
        timed(Some(Duration::from_secs(1)), kernel_certificates),
        timed(None, closed_forms),
        timed(Some(Duration::from_secs(30)), unbiasedness),
        timed(None, bias_bound),
        timed(None, second_moments),
        timed(None, smoothing_bias),
        timed(None, oracle_accounting),
    ];
    let start = Instant::now();
    let runs = kernel_runs();
    let shared = start.elapsed();
    let mut conv = timed(Some(Duration::from_secs(120).saturating_sub(shared)), || quadratic_convergence(&runs));
    conv.detail = format!("{} plus {shared:.2?} of shared kernel runs", conv.detail);
    outcomes.push(conv);
    outcomes.push(rate_slope(&runs));
    outcomes.push(timed(Some(Duration::from_secs(300)), reproduction));
    outcomes.push(timed(None, determinism));
    outcomes.push(timed(None, brute_force));

    let mut unexpected = 0;
    for o in &outcomes {
        let tag = match o.verdict {
            Verdict::Pass => "PASS",
            Verdict::Advisory => "ADVISORY",
            Verdict::KnownRed => "FAIL (known)",
            Verdict::Fail => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("{tag} {}: {}", o.name, o.detail);
    }
    println!("acceptance: {} criteria, {unexpected} unexpected failures", outcomes.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
