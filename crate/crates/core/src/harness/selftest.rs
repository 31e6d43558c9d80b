//! Fast self-checks of the numerical building blocks.

use std::sync::Arc;

use crate::estimators::{estimate_standard, RunningMoments};
use crate::geometry::{project_simplex, DomainSpec};
use crate::kernels::{build_legendre_kernel, MOMENT_TOL};
use crate::oracle::{NoiseModel, NoisyOracle, ProblemSpec};
use crate::point::BlockPoint;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Threshold `theta` with `sum max(v - theta, 0) = 1`, by bisection.
pub fn simplex_threshold_bisect(v: &[f64]) -> f64 {
    let excess = |t: f64| v.iter().map(|x| (x - t).max(0.0)).sum::<f64>() - 1.0;
    let hi0 = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (hi0 - 1.0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn kernel_moments() -> Check {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for beta in [2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0] {
        match build_legendre_kernel(beta) {
            Ok(k) => worst = worst.max(k.max_moment_residual()),
            Err(e) => failures.push(format!("beta {beta}: {e}")),
        }
    }
    Check {
        name: "kernel moments",
        passed: failures.is_empty() && worst <= MOMENT_TOL,
        detail: if failures.is_empty() {
            format!("max moment residual {worst:e} (tolerance {MOMENT_TOL:e})")
        } else {
            failures.join("; ")
        },
    }
}

fn simplex_projection() -> Check {
    let mut rng = SeededRng::new(17);
    let mut worst: f64 = 0.0;
    for trial in 0..300 {
        let n = 1 + trial % 12;
        let v: Vec<f64> = (0..n).map(|_| 3.0 * rng.normal()).collect();
        let theta = simplex_threshold_bisect(&v);
        let p = project_simplex(&v);
        for (pi, vi) in p.iter().zip(&v) {
            worst = worst.max((pi - (vi - theta).max(0.0)).abs());
        }
    }
    Check {
        name: "simplex projection",
        passed: worst <= 1e-9,
        detail: format!("max deviation from bisection oracle {worst:e}"),
    }
}

fn estimator_unbiasedness() -> Check {
    let problem = ProblemSpec::new(
        "x^2 - y^2",
        DomainSpec::Whole { nx: 1, ny: 1 },
        Arc::new(|z: &BlockPoint| z.x()[0].powi(2) - z.y()[0].powi(2)),
    );
    let noise = NoiseModel::noiseless();
    let mut oracle = NoisyOracle::new(&problem, &noise);
    let mut rng = SeededRng::new(5);
    let z = BlockPoint::new(vec![1.0], vec![1.0]).expect("1+1 point");
    let mut moments = RunningMoments::new(2);
    for _ in 0..20_000 {
        match estimate_standard(&mut oracle, &z, 1e-3, &mut rng) {
            Ok(est) => moments.push(&est.g),
            Err(e) => {
                return Check { name: "estimator unbiasedness", passed: false, detail: e.to_string() };
            }
        }
    }
    let mc = moments.finish();
    let want = [2.0, 2.0];
    let passed = (0..2).all(|i| (mc.mean[i] - want[i]).abs() <= 4.0 * mc.stderr[i]);
    Check {
        name: "estimator unbiasedness",
        passed,
        detail: format!(
            "mean ({:.4}, {:.4}) vs (2, 2), stderr ({:.4}, {:.4})",
            mc.mean[0], mc.mean[1], mc.stderr[0], mc.stderr[1]
        ),
    }
}

/// Kernel moment certificates, simplex projection against a bisection
/// oracle, and a Monte-Carlo unbiasedness check of the two-query estimator.
pub fn selftest() -> Vec<Check> {
    vec![kernel_moments(), simplex_projection(), estimator_unbiasedness()]
}
