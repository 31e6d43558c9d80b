//! One-point gradient estimators and Monte-Carlo references for the smoothed
//! function `phi_hat(z) = E_e[phi(z + tau e)]`.

use crate::error::{Error, Result};
use crate::kernels::SmoothingKernel;
use crate::oracle::{NoisyOracle, ProblemSpec};
use crate::point::BlockPoint;
use crate::rng::{sample_sphere, Direction, SeededRng};

/// Output of one estimator call.
#[derive(Debug, Clone, PartialEq)]
pub struct GradEstimate {
    pub g: Vec<f64>,
    pub calls_used: u32,
    pub direction: Direction,
    /// Kernel radius draw `r`, for the kernel estimator only.
    pub r_used: Option<f64>,
}

/// The previous noisy query carried by the residual-feedback estimator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidualState {
    prev_value: Option<f64>,
}

impl ResidualState {
    pub fn new() -> Self {
        Self::default()
    }

    /// A state carrying a known previous query value.
    pub fn with_previous(value: f64) -> Self {
        Self {
            prev_value: Some(value),
        }
    }

    pub fn is_initialized(&self) -> bool {
        self.prev_value.is_some()
    }

    pub fn prev_value(&self) -> Option<f64> {
        self.prev_value
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("smoothing radius tau must be positive, got {tau}")))
    }
}

/// `scale * (e_x, -e_y)`.
fn flipped_direction(e: &Direction, nx: usize, scale: f64) -> Vec<f64> {
    e.as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| if i < nx { scale * v } else { -scale * v })
        .collect()
}

fn check_direction(e: &Direction, z: &BlockPoint) -> Result<()> {
    if e.dim() != z.dim() {
        return Err(Error::InvalidDimension(format!(
            "direction of length {} for a point of length {}",
            e.dim(),
            z.dim()
        )));
    }
    Ok(())
}

/// Two-query estimator with independent noise at `z + tau e` and `z - tau e`:
/// `g = n/(2 tau) (f+ - f-) (e_x, -e_y)`.
pub fn estimate_standard(
    oracle: &mut NoisyOracle<'_>,
    z: &BlockPoint,
    tau: f64,
    rng: &mut SeededRng,
) -> Result<GradEstimate> {
    check_tau(tau)?;
    let e = sample_sphere(rng, z.dim())?;
    estimate_standard_along(oracle, z, tau, e, rng)
}

/// [`estimate_standard`] with the direction supplied by the caller.
pub fn estimate_standard_along(
    oracle: &mut NoisyOracle<'_>,
    z: &BlockPoint,
    tau: f64,
    e: Direction,
    rng: &mut SeededRng,
) -> Result<GradEstimate> {
    check_tau(tau)?;
    check_direction(&e, z)?;
    let plus = oracle.query(&z.shifted(e.as_slice(), tau), rng)?;
    let minus = oracle.query(&z.shifted(e.as_slice(), -tau), rng)?;
    let scale = z.dim() as f64 * (plus - minus) / (2.0 * tau);
    Ok(GradEstimate {
        g: flipped_direction(&e, z.nx(), scale),
        calls_used: 2,
        direction: e,
        r_used: None,
    })
}

/// Residual-feedback estimator: one query per call, differenced against the
/// previous call's query, `g = n/tau (f_k - f_{k-1}) (e_x, -e_y)`.
///
/// An uninitialized state spends its query on warm-up and returns `g = 0`.
pub fn estimate_residual(
    oracle: &mut NoisyOracle<'_>,
    state: &ResidualState,
    z: &BlockPoint,
    tau: f64,
    rng: &mut SeededRng,
) -> Result<(GradEstimate, ResidualState)> {
    check_tau(tau)?;
    let e = sample_sphere(rng, z.dim())?;
    estimate_residual_along(oracle, state, z, tau, e, rng)
}

pub fn estimate_residual_along(
    oracle: &mut NoisyOracle<'_>,
    state: &ResidualState,
    z: &BlockPoint,
    tau: f64,
    e: Direction,
    rng: &mut SeededRng,
) -> Result<(GradEstimate, ResidualState)> {
    check_tau(tau)?;
    check_direction(&e, z)?;
    let value = oracle.query(&z.shifted(e.as_slice(), tau), rng)?;
    let g = match state.prev_value {
        Some(prev) => {
            let scale = z.dim() as f64 * (value - prev) / tau;
            flipped_direction(&e, z.nx(), scale)
        }
        None => vec![0.0; z.dim()],
    };
    Ok((
        GradEstimate {
            g,
            calls_used: 1,
            direction: e,
            r_used: None,
        },
        ResidualState::with_previous(value),
    ))
}

/// Kernel-smoothed estimator: queries at `z +- tau r e` with `r ~ U[-1, 1]`
/// drawn independently of `e`, `g = n/(2 tau) (f+ - f-) (e_x, -e_y) K(r)`.
pub fn estimate_kernel(
    oracle: &mut NoisyOracle<'_>,
    kernel: &SmoothingKernel,
    z: &BlockPoint,
    tau: f64,
    rng: &mut SeededRng,
) -> Result<GradEstimate> {
    check_tau(tau)?;
    let r = rng.uniform(-1.0, 1.0);
    let e = sample_sphere(rng, z.dim())?;
    estimate_kernel_along(oracle, kernel, z, tau, e, r, rng)
}

pub fn estimate_kernel_along(
    oracle: &mut NoisyOracle<'_>,
    kernel: &SmoothingKernel,
    z: &BlockPoint,
    tau: f64,
    e: Direction,
    r: f64,
    rng: &mut SeededRng,
) -> Result<GradEstimate> {
    check_tau(tau)?;
    check_direction(&e, z)?;
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::Precondition(format!("kernel radius r = {r} outside [-1, 1]")));
    }
    let plus = oracle.query(&z.shifted(e.as_slice(), tau * r), rng)?;
    let minus = oracle.query(&z.shifted(e.as_slice(), -tau * r), rng)?;
    let scale = z.dim() as f64 * (plus - minus) / (2.0 * tau) * kernel.eval(r);
    Ok(GradEstimate {
        g: flipped_direction(&e, z.nx(), scale),
        calls_used: 2,
        direction: e,
        r_used: Some(r),
    })
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct McScalar {
    pub mean: f64,
    pub stderr: f64,
}

/// Coordinatewise Monte-Carlo mean with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McVector {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Streaming mean and variance (Welford) over vectors.
#[derive(Debug, Clone)]
pub struct RunningMoments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningMoments {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, v: &[f64]) {
        self.count += 1;
        let c = self.count as f64;
        for ((m, s), x) in self.mean.iter_mut().zip(&mut self.m2).zip(v) {
            let d = x - *m;
            *m += d / c;
            *s += d * (x - *m);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(&self) -> McVector {
        let c = self.count as f64;
        let stderr = self
            .m2
            .iter()
            .map(|s| {
                if self.count > 1 {
                    (s / (c - 1.0) / c).sqrt()
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        McVector {
            mean: self.mean.clone(),
            stderr,
        }
    }
}

fn check_samples(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Config("Monte-Carlo sample count must be >= 1".into()));
    }
    Ok(())
}

/// Monte-Carlo estimate of `phi_hat(z) = E_e[phi(z + tau e)]` from clean values.
pub fn smoothed_value_mc(
    problem: &ProblemSpec,
    z: &BlockPoint,
    tau: f64,
    m_samples: usize,
    rng: &mut SeededRng,
) -> Result<McScalar> {
    check_tau(tau)?;
    check_samples(m_samples)?;
    let mut acc = RunningMoments::new(1);
    for _ in 0..m_samples {
        let e = sample_sphere(rng, z.dim())?;
        let p = z.shifted(e.as_slice(), tau);
        problem.check_defined_at(&p)?;
        acc.push(&[problem.value(&p)]);
    }
    let r = acc.finish();
    Ok(McScalar {
        mean: r.mean[0],
        stderr: r.stderr[0],
    })
}

/// Monte-Carlo estimate of the smoothed saddle gradient
/// `E_e[n/(2 tau) (phi(z + tau e) - phi(z - tau e)) (e_x, -e_y)]`.
pub fn smoothed_grad_mc(
    problem: &ProblemSpec,
    z: &BlockPoint,
    tau: f64,
    m_samples: usize,
    rng: &mut SeededRng,
) -> Result<McVector> {
    check_tau(tau)?;
    check_samples(m_samples)?;
    let n = z.dim() as f64;
    let mut acc = RunningMoments::new(z.dim());
    for _ in 0..m_samples {
        let e = sample_sphere(rng, z.dim())?;
        let plus = z.shifted(e.as_slice(), tau);
        let minus = z.shifted(e.as_slice(), -tau);
        problem.check_defined_at(&plus)?;
        problem.check_defined_at(&minus)?;
        let scale = n * (problem.value(&plus) - problem.value(&minus)) / (2.0 * tau);
        acc.push(&flipped_direction(&e, z.nx(), scale));
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::kernels::build_legendre_kernel;
    use crate::oracle::NoiseModel;
    use std::sync::Arc;

    fn problem(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> ProblemSpec {
        ProblemSpec::new(
            "test",
            DomainSpec::Whole { nx: 1, ny: 1 },
            Arc::new(move |z: &BlockPoint| f(z.x()[0], z.y()[0])),
        )
    }

    fn at(x: f64, y: f64) -> BlockPoint {
        BlockPoint::new(vec![x], vec![y]).unwrap()
    }

    fn dir(v: &[f64]) -> Direction {
        Direction::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn standard_on_linear_function() {
        let p = problem(|x, y| x + y);
        let noise = NoiseModel::noiseless();
        let mut o = NoisyOracle::new(&p, &noise);
        let mut rng = SeededRng::new(0);
        for tau in [1e-3, 0.5, 3.0] {
            let est =
                estimate_standard_along(&mut o, &at(0.3, -0.2), tau, dir(&[1.0, 0.0]), &mut rng)
                    .unwrap();
            assert!((est.g[0] - 2.0).abs() < 1e-12);
            assert_eq!(est.g[1], 0.0);
            assert_eq!(est.calls_used, 2);
        }
        assert_eq!(o.calls(), 6);
    }

    #[test]
    fn constant_function_gives_zero() {
        let p = problem(|_, _| 4.2);
        let noise = NoiseModel::noiseless();
        let mut o = NoisyOracle::new(&p, &noise);
        let mut rng = SeededRng::new(1);
        let k = build_legendre_kernel(3.0).unwrap();
        let s = estimate_standard(&mut o, &at(1.0, 2.0), 0.1, &mut rng).unwrap();
        let kk = estimate_kernel(&mut o, &k, &at(1.0, 2.0), 0.1, &mut rng).unwrap();
        let (r, _) = estimate_residual(
            &mut o,
            &ResidualState::with_previous(4.2),
            &at(1.0, 2.0),
            0.1,
            &mut rng,
        )
        .unwrap();
        for g in [s.g, kk.g, r.g] {
            assert!(g.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn nonpositive_tau_rejected() {
        let p = problem(|x, _| x);
        let noise = NoiseModel::noiseless();
        let mut o = NoisyOracle::new(&p, &noise);
        let mut rng = SeededRng::new(2);
        for tau in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                estimate_standard(&mut o, &at(0.0, 0.0), tau, &mut rng),
                Err(Error::Config(_))
            ));
        }
        assert_eq!(o.calls(), 0);
    }

    #[test]
    fn residual_warm_up() {
        let p = problem(|x, _| x);
        let noise = NoiseModel::noiseless();
        let mut o = NoisyOracle::new(&p, &noise);
        let mut rng = SeededRng::new(3);
        let (est, state) =
            estimate_residual(&mut o, &ResidualState::new(), &at(0.0, 0.0), 0.1, &mut rng).unwrap();
        assert_eq!(est.g, vec![0.0, 0.0]);
        assert_eq!(est.calls_used, 1);
        assert!(state.is_initialized());
        assert_eq!(o.calls(), 1);
    }

    #[test]
    fn residual_substitution() {
        let p = problem(|x, _| x);
        let noise = NoiseModel::noiseless();
        let mut o = NoisyOracle::new(&p, &noise);
        let mut rng = SeededRng::new(4);
        let (est, state) = estimate_residual_along(
            &mut o,
            &ResidualState::with_previous(0.0),
            &at(0.0, 0.0),
            0.1,
            dir(&[1.0, 0.0]),
            &mut rng,
        )
        .unwrap();
        assert!((est.g[0] - 2.0).abs() < 1e-12);
        assert_eq!(est.g[1], 0.0);
        assert!((state.prev_value().unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn kernel_hand_substitution() {
        let p = problem(|x, y| x + y);
        let noise = NoiseModel::noiseless();
        let mut o = NoisyOracle::new(&p, &noise);
        let k = build_legendre_kernel(2.5).unwrap();
        let est = estimate_kernel_along(
            &mut o,
            &k,
            &at(0.0, 0.0),
            0.2,
            dir(&[1.0, 0.0]),
            0.5,
            &mut SeededRng::new(5),
        )
        .unwrap();
        // (2 / 0.4) * (0.1 - (-0.1)) * K(0.5) = 1 * 1.5
        assert!((est.g[0] - 1.5).abs() < 1e-12);
        assert_eq!(est.g[1], 0.0);
        assert_eq!(est.r_used, Some(0.5));
    }

    #[test]
    fn out_of_neighborhood_query_fails() {
        let p = ProblemSpec::new(
            "boxed",
            DomainSpec::cube(1, 1, 0.0, 1.0).unwrap(),
            Arc::new(|z: &BlockPoint| z.x()[0]),
        )
        .with_neighborhood_radius(0.05)
        .unwrap();
        let noise = NoiseModel::noiseless();
        let mut o = NoisyOracle::new(&p, &noise);
        let res = estimate_standard(&mut o, &at(0.5, 0.5), 1.0, &mut SeededRng::new(6));
        assert!(matches!(res, Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn smoothed_value_of_linear_and_quadratic() {
        let lin = problem(|x, y| 2.0 * x - y);
        let v = smoothed_value_mc(&lin, &at(0.5, 0.25), 0.3, 20_000, &mut SeededRng::new(7)).unwrap();
        assert!((v.mean - 0.75).abs() <= 3.0 * v.stderr);

        let quad = problem(|x, y| x * x + y * y);
        let z = at(0.6, -0.8);
        let v = smoothed_value_mc(&quad, &z, 0.1, 20_000, &mut SeededRng::new(8)).unwrap();
        // phi(z) + tau^2 E||e||^2
        assert!((v.mean - 1.01).abs() <= 3.0 * v.stderr + 1e-12, "{v:?}");
    }

    #[test]
    fn smoothed_grad_of_linear_is_exact() {
        let lin = problem(|x, y| 3.0 * x - 2.0 * y);
        let r = smoothed_grad_mc(&lin, &at(0.1, 0.2), 0.5, 50_000, &mut SeededRng::new(9)).unwrap();
        // (a, -b) = (3, 2)
        assert!((r.mean[0] - 3.0).abs() <= 4.0 * r.stderr[0] + 1e-9);
        assert!((r.mean[1] - 2.0).abs() <= 4.0 * r.stderr[1] + 1e-9);
    }

    #[test]
    fn running_moments_match_two_pass() {
        let data = [[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [2.0, 7.0]];
        let mut acc = RunningMoments::new(2);
        for d in &data {
            acc.push(d);
        }
        let r = acc.finish();
        let mean0 = data.iter().map(|d| d[0]).sum::<f64>() / 4.0;
        let var0 = data.iter().map(|d| (d[0] - mean0).powi(2)).sum::<f64>() / 3.0;
        assert!((r.mean[0] - mean0).abs() < 1e-15);
        assert!((r.stderr[0] - (var0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
