//! The noisy zeroth-order oracle `phi(z) + xi + delta(z)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::point::BlockPoint;
use crate::rng::SeededRng;

pub type ValueFn = Arc<dyn Fn(&BlockPoint) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&BlockPoint) -> Vec<f64> + Send + Sync>;

/// Distribution of the unbiased stochastic noise `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiDistribution {
    Gaussian,
    /// Uniform on `[-sqrt(3) sigma, sqrt(3) sigma]`, variance `sigma^2`.
    Uniform,
    None,
}

impl XiDistribution {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "uniform" => Ok(Self::Uniform),
            "none" => Ok(Self::None),
            other => Err(Error::Config(format!("unknown noise distribution `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Uniform => "uniform",
            Self::None => "none",
        }
    }
}

/// Noise model: stochastic `xi` with standard deviation `sigma` and a
/// deterministic bias `delta(z)` bounded by `delta_bound`.
#[derive(Clone)]
pub struct NoiseModel {
    sigma: f64,
    delta_bound: f64,
    bias: Option<ValueFn>,
    distribution: XiDistribution,
}

impl fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseModel")
            .field("sigma", &self.sigma)
            .field("delta_bound", &self.delta_bound)
            .field("has_bias", &self.bias.is_some())
            .field("distribution", &self.distribution)
            .finish()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            sigma: 0.0,
            delta_bound: 0.0,
            bias: None,
            distribution: XiDistribution::None,
        }
    }

    pub fn new(sigma: f64, distribution: XiDistribution) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(Self {
            sigma,
            delta_bound: 0.0,
            bias: None,
            distribution,
        })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(sigma, XiDistribution::Gaussian)
    }

    /// Attaches a deterministic bias. Every query checks `|bias(z)| <= delta_bound`.
    pub fn with_bias(mut self, delta_bound: f64, bias: ValueFn) -> Result<Self> {
        if !(delta_bound >= 0.0 && delta_bound.is_finite()) {
            return Err(Error::Config(format!("delta bound must be finite and >= 0, got {delta_bound}")));
        }
        self.delta_bound = delta_bound;
        self.bias = Some(bias);
        Ok(self)
    }

    /// Bias `delta(z) = +-delta` with a sign pattern that flips across a
    /// fine grid of `sum_i (i+1) z_i`.
    pub fn with_sign_pattern_bias(self, delta: f64) -> Result<Self> {
        self.with_bias(delta, Arc::new(move |z: &BlockPoint| delta * sign_pattern(z)))
    }

    pub fn with_constant_bias(self, delta: f64) -> Result<Self> {
        self.with_bias(delta.abs(), Arc::new(move |_: &BlockPoint| delta))
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta_bound(&self) -> f64 {
        self.delta_bound
    }

    pub fn distribution(&self) -> XiDistribution {
        self.distribution
    }

    pub fn bias_at(&self, z: &BlockPoint) -> f64 {
        self.bias.as_ref().map_or(0.0, |b| b(z))
    }

    /// One draw of `xi`.
    pub fn draw_xi(&self, rng: &mut SeededRng) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        match self.distribution {
            XiDistribution::Gaussian => self.sigma * rng.normal(),
            XiDistribution::Uniform => {
                let h = 3f64.sqrt() * self.sigma;
                rng.uniform(-h, h)
            }
            XiDistribution::None => 0.0,
        }
    }
}

fn sign_pattern(z: &BlockPoint) -> f64 {
    let s: f64 = z
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1) as f64 * v)
        .sum();
    if (1e3 * s).rem_euclid(2.0) < 1.0 {
        1.0
    } else {
        -1.0
    }
}

/// Regularity constants of a test problem. `None` means unknown.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemMeta {
    /// Lipschitz constant of `phi` on the neighborhood of the domain.
    pub lipschitz: Option<f64>,
    /// Lipschitz constant of the gradient.
    pub grad_lipschitz: Option<f64>,
    /// Strong convexity-concavity modulus, 0 when merely convex-concave.
    pub mu: f64,
    /// Hoelder order.
    pub beta: Option<f64>,
    pub holder_const: Option<f64>,
}

impl ProblemMeta {
    pub fn require_lipschitz(&self) -> Result<f64> {
        self.lipschitz.ok_or(Error::MissingConstant("M"))
    }

    pub fn require_grad_lipschitz(&self) -> Result<f64> {
        self.grad_lipschitz.ok_or(Error::MissingConstant("L"))
    }
}

/// A saddle-point problem `min_x max_y phi(x, y)` over a domain.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    domain: DomainSpec,
    value: ValueFn,
    saddle_grad: Option<GradFn>,
    gap: Option<ValueFn>,
    meta: ProblemMeta,
    neighborhood_radius: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("meta", &self.meta)
            .field("neighborhood_radius", &self.neighborhood_radius)
            .finish()
    }
}

impl ProblemSpec {
    /// A problem with globally defined `phi`.
    pub fn new(name: impl Into<String>, domain: DomainSpec, value: ValueFn) -> Self {
        Self {
            name: name.into(),
            domain,
            value,
            saddle_grad: None,
            gap: None,
            meta: ProblemMeta::default(),
            neighborhood_radius: f64::INFINITY,
        }
    }

    /// `grad` returns the block vector `(grad_x phi, -grad_y phi)`.
    pub fn with_saddle_grad(mut self, grad: GradFn) -> Self {
        self.saddle_grad = Some(grad);
        self
    }

    /// Exact optimality diagnostic reported in run logs.
    pub fn with_gap(mut self, gap: ValueFn) -> Self {
        self.gap = Some(gap);
        self
    }

    pub fn with_meta(mut self, meta: ProblemMeta) -> Result<Self> {
        let positive = |v: Option<f64>, name: &'static str| match v {
            Some(c) if !(c > 0.0 && c.is_finite()) => {
                Err(Error::Config(format!("metadata {name} must be positive, got {c}")))
            }
            _ => Ok(()),
        };
        positive(meta.lipschitz, "M")?;
        positive(meta.grad_lipschitz, "L")?;
        positive(meta.beta, "beta")?;
        positive(meta.holder_const, "L_beta")?;
        if !(meta.mu >= 0.0 && meta.mu.is_finite()) {
            return Err(Error::Config(format!("metadata mu must be >= 0, got {}", meta.mu)));
        }
        self.meta = meta;
        Ok(self)
    }

    pub fn with_neighborhood_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config("neighborhood radius must be positive".into()));
        }
        self.neighborhood_radius = radius;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nx(&self) -> usize {
        self.domain.nx()
    }

    pub fn ny(&self) -> usize {
        self.domain.ny()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn meta(&self) -> &ProblemMeta {
        &self.meta
    }

    pub fn neighborhood_radius(&self) -> f64 {
        self.neighborhood_radius
    }

    /// Clean value `phi(z)`; never counted as an oracle call.
    pub fn value(&self, z: &BlockPoint) -> f64 {
        (self.value)(z)
    }

    pub fn value_fn(&self) -> &ValueFn {
        &self.value
    }

    pub fn saddle_grad(&self, z: &BlockPoint) -> Option<Vec<f64>> {
        self.saddle_grad.as_ref().map(|g| g(z))
    }

    pub fn saddle_grad_fn(&self) -> Option<&GradFn> {
        self.saddle_grad.as_ref()
    }

    pub fn gap(&self, z: &BlockPoint) -> Option<f64> {
        self.gap.as_ref().map(|g| g(z))
    }

    pub fn gap_fn(&self) -> Option<&ValueFn> {
        self.gap.as_ref()
    }

    /// Fails unless `z` lies within the neighborhood on which `phi` is defined.
    pub fn check_defined_at(&self, z: &BlockPoint) -> Result<()> {
        if z.dim() != self.dim() || z.nx() != self.nx() {
            return Err(Error::InvalidDimension(format!(
                "problem has dimensions ({}, {}), point has ({}, {})",
                self.nx(),
                self.ny(),
                z.nx(),
                z.ny()
            )));
        }
        if self.neighborhood_radius.is_infinite() {
            return Ok(());
        }
        let distance = self.domain.distance(z.as_slice());
        if distance > self.neighborhood_radius + 1e-12 {
            return Err(Error::OutOfDomain {
                distance,
                radius: self.neighborhood_radius,
            });
        }
        Ok(())
    }
}

/// Oracle handle for one run: owns the call counter.
#[derive(Debug)]
pub struct NoisyOracle<'a> {
    problem: &'a ProblemSpec,
    noise: &'a NoiseModel,
    calls: u64,
}

impl<'a> NoisyOracle<'a> {
    pub fn new(problem: &'a ProblemSpec, noise: &'a NoiseModel) -> Self {
        Self {
            problem,
            noise,
            calls: 0,
        }
    }

    pub fn problem(&self) -> &'a ProblemSpec {
        self.problem
    }

    pub fn noise(&self) -> &'a NoiseModel {
        self.noise
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// `phi(z) + xi + delta(z)` with a fresh `xi`.
    pub fn query(&mut self, z: &BlockPoint, rng: &mut SeededRng) -> Result<f64> {
        self.problem.check_defined_at(z)?;
        let bias = self.noise.bias_at(z);
        if bias.abs() > self.noise.delta_bound * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "bias {bias} exceeds its declared bound {}",
                self.noise.delta_bound
            )));
        }
        let xi = self.noise.draw_xi(rng);
        self.calls += 1;
        Ok(self.problem.value(z) + xi + bias)
    }
}
