//! Step-size and smoothing-radius schedules.

use crate::error::{Error, Result};
use crate::geometry::DualExponent;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    Constant(f64),
    /// `1 / (mu (k + 1))`, for iterations counted from 0.
    InvMuK { mu: f64 },
    /// `2 / (mu k)`, for iterations counted from 1.
    TwoOverMuK { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    Constant(f64),
    /// `base * k^(-1 / (2 beta))`, for iterations counted from 1.
    PowerDecay { base: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    gamma: GammaRule,
    tau: TauRule,
    formula: String,
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{what} must be positive and finite, got {v}")))
    }
}

impl StepSchedule {
    pub fn new(gamma: GammaRule, tau: TauRule, formula: impl Into<String>) -> Result<Self> {
        match gamma {
            GammaRule::Constant(g) => positive(g, "gamma")?,
            GammaRule::InvMuK { mu } | GammaRule::TwoOverMuK { mu } => positive(mu, "mu")?,
        };
        match tau {
            TauRule::Constant(t) => positive(t, "tau")?,
            TauRule::PowerDecay { base, beta } => {
                positive(beta, "beta")?;
                positive(base, "tau base")?
            }
        };
        Ok(Self {
            gamma,
            tau,
            formula: formula.into(),
        })
    }

    pub fn constant(gamma: f64, tau: f64) -> Result<Self> {
        Self::new(
            GammaRule::Constant(gamma),
            TauRule::Constant(tau),
            format!("constant gamma = {gamma:e}, tau = {tau:e}"),
        )
    }

    pub fn gamma_rule(&self) -> GammaRule {
        self.gamma
    }

    pub fn tau_rule(&self) -> TauRule {
        self.tau
    }

    /// Human-readable description echoed into log headers.
    pub fn formula(&self) -> &str {
        &self.formula
    }

    /// Rules defined from `k = 1` treat `k = 0` as `k = 1`.
    pub fn gamma_at(&self, k: usize) -> f64 {
        match self.gamma {
            GammaRule::Constant(g) => g,
            GammaRule::InvMuK { mu } => 1.0 / (mu * (k + 1) as f64),
            GammaRule::TwoOverMuK { mu } => 2.0 / (mu * k.max(1) as f64),
        }
    }

    pub fn tau_at(&self, k: usize) -> f64 {
        match self.tau {
            TauRule::Constant(t) => t,
            TauRule::PowerDecay { base, beta } => base * (k.max(1) as f64).powf(-1.0 / (2.0 * beta)),
        }
    }

    /// Largest smoothing radius the schedule ever uses.
    pub fn max_tau(&self) -> f64 {
        self.tau_at(1)
    }
}

/// Which theorem-prescribed parameter rule to instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleCase {
    /// Convex-concave, Lipschitz `phi`, two-query estimator, constant step.
    NonsmoothCc,
    /// Strongly convex-concave, Lipschitz `phi`, step `1/(mu(k+1))`.
    NonsmoothScsc,
    /// Convex-concave, residual-feedback estimator, constant step.
    ResidualCc,
    /// Convex-concave with Lipschitz gradient, constant step.
    SmoothCc,
    /// Strongly convex-concave with Lipschitz gradient, step `1/(mu(k+1))`.
    SmoothScsc,
    /// Kernel projected gradient for higher-order smoothness.
    KernelScsc,
}

impl ScheduleCase {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "nonsmooth_cc" => Self::NonsmoothCc,
            "nonsmooth_scsc" => Self::NonsmoothScsc,
            "residual_cc" => Self::ResidualCc,
            "smooth_cc" => Self::SmoothCc,
            "smooth_scsc" => Self::SmoothScsc,
            "kernel_scsc" => Self::KernelScsc,
            other => return Err(Error::Config(format!("unknown schedule case `{other}`"))),
        })
    }
}

/// Constants feeding [`derive_schedule`]. Orders-of-magnitude rules are
/// instantiated with unit constants scaled by the two multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleParams {
    pub n: usize,
    pub q: DualExponent,
    pub lipschitz: Option<f64>,
    pub grad_lipschitz: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub omega: Option<f64>,
    pub n_iters: Option<usize>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_beta: Option<f64>,
    pub gamma_mult: f64,
    pub tau_mult: f64,
}

impl ScheduleParams {
    pub fn new(n: usize, q: DualExponent) -> Self {
        Self {
            n,
            q,
            lipschitz: None,
            grad_lipschitz: None,
            mu: None,
            sigma: None,
            omega: None,
            n_iters: None,
            beta: None,
            kappa: None,
            kappa_beta: None,
            gamma_mult: 1.0,
            tau_mult: 1.0,
        }
    }
}

fn need(v: Option<f64>, symbol: &'static str) -> Result<f64> {
    let v = v.ok_or(Error::MissingConstant(symbol))?;
    positive(v, symbol)
}

/// Smoothing-radius and step rules for each supported case.
///
/// | case            | gamma                                   | tau                                          |
/// |-----------------|-----------------------------------------|----------------------------------------------|
/// | `NonsmoothCc`   | `Omega / (n^(1/4+1/(2q)) M N^(3/4))`    | `(sigma/M) n^(1/4+1/(2q)) / N^(1/4)`         |
/// | `NonsmoothScsc` | `1 / (mu (k+1))`                        | `(sigma^2/(mu M))^(1/3) (n^2/N)^(1/3)`       |
/// | `ResidualCc`    | `Omega tau / (6 n M N^(1/2))`           | `(sigma/M) n^(1/2) / N^(1/4)`                |
/// | `SmoothCc`      | `Omega / (n^(1/3+2/(3q)) M N^(2/3))`    | `(sigma/M) n^(1/6+1/(3q)) / N^(1/6)`         |
/// | `SmoothScsc`    | `1 / (mu (k+1))`                        | `(sigma^2/(mu L))^(1/4) n^(1/2) / N^(1/4)`   |
/// | `KernelScsc`    | `2 / (mu k)`                            | `(3 kappa sigma^2 n / (2 (beta-1) (kappa_beta L)^2))^(1/(2 beta)) k^(-1/(2 beta))` |
pub fn derive_schedule(case: ScheduleCase, p: &ScheduleParams) -> Result<StepSchedule> {
    if p.n == 0 {
        return Err(Error::InvalidDimension("n must be >= 1".into()));
    }
    let n = p.n as f64;
    let inv_q = p.q.recip();
    let iters = || -> Result<f64> {
        match p.n_iters {
            Some(v) if v >= 1 => Ok(v as f64),
            Some(_) => Err(Error::Config("N must be >= 1".into())),
            None => Err(Error::MissingConstant("N")),
        }
    };
    let (gm, tm) = (positive(p.gamma_mult, "gamma multiplier")?, positive(p.tau_mult, "tau multiplier")?);
    match case {
        ScheduleCase::NonsmoothCc => {
            let (m, omega, sigma, big_n) = (need(p.lipschitz, "M")?, need(p.omega, "Omega")?, need(p.sigma, "sigma")?, iters()?);
            let e = 0.25 + 0.5 * inv_q;
            let gamma = gm * omega / (n.powf(e) * m * big_n.powf(0.75));
            let tau = tm * (sigma / m) * n.powf(e) / big_n.powf(0.25);
            StepSchedule::new(
                GammaRule::Constant(gamma),
                TauRule::Constant(tau),
                format!("nonsmooth_cc: gamma = Omega/(n^(1/4+1/(2q)) M N^(3/4)) = {gamma:e}; tau = (sigma/M) n^(1/4+1/(2q))/N^(1/4) = {tau:e}"),
            )
        }
        ScheduleCase::NonsmoothScsc => {
            let (m, mu, sigma, big_n) = (need(p.lipschitz, "M")?, need(p.mu, "mu")?, need(p.sigma, "sigma")?, iters()?);
            let tau = tm * (sigma * sigma / (mu * m)).cbrt() * (n * n / big_n).cbrt();
            StepSchedule::new(
                GammaRule::InvMuK { mu: mu / gm },
                TauRule::Constant(tau),
                format!("nonsmooth_scsc: gamma_k = 1/(mu(k+1)), mu = {mu:e}; tau = (sigma^2/(mu M))^(1/3) (n^2/N)^(1/3) = {tau:e}"),
            )
        }
        ScheduleCase::ResidualCc => {
            let (m, omega, sigma, big_n) = (need(p.lipschitz, "M")?, need(p.omega, "Omega")?, need(p.sigma, "sigma")?, iters()?);
            let tau = tm * (sigma / m) * n.sqrt() / big_n.powf(0.25);
            let gamma = gm * omega * tau / (6.0 * n * m * big_n.sqrt());
            StepSchedule::new(
                GammaRule::Constant(gamma),
                TauRule::Constant(tau),
                format!("residual_cc: gamma = Omega tau/(6 n M N^(1/2)) = {gamma:e}; tau = (sigma/M) n^(1/2)/N^(1/4) = {tau:e}"),
            )
        }
        ScheduleCase::SmoothCc => {
            let (m, omega, sigma, big_n) = (need(p.lipschitz, "M")?, need(p.omega, "Omega")?, need(p.sigma, "sigma")?, iters()?);
            let gamma = gm * omega / (n.powf(1.0 / 3.0 + 2.0 * inv_q / 3.0) * m * big_n.powf(2.0 / 3.0));
            let tau = tm * (sigma / m) * n.powf(1.0 / 6.0 + inv_q / 3.0) / big_n.powf(1.0 / 6.0);
            StepSchedule::new(
                GammaRule::Constant(gamma),
                TauRule::Constant(tau),
                format!("smooth_cc: gamma = Omega/(n^(1/3+2/(3q)) M N^(2/3)) = {gamma:e}; tau = (sigma/M) n^(1/6+1/(3q))/N^(1/6) = {tau:e}"),
            )
        }
        ScheduleCase::SmoothScsc => {
            let (l, mu, sigma, big_n) = (need(p.grad_lipschitz, "L")?, need(p.mu, "mu")?, need(p.sigma, "sigma")?, iters()?);
            let tau = tm * (sigma * sigma / (mu * l)).powf(0.25) * n.sqrt() / big_n.powf(0.25);
            StepSchedule::new(
                GammaRule::InvMuK { mu: mu / gm },
                TauRule::Constant(tau),
                format!("smooth_scsc: gamma_k = 1/(mu(k+1)), mu = {mu:e}; tau = (sigma^2/(mu L))^(1/4) n^(1/2)/N^(1/4) = {tau:e}"),
            )
        }
        ScheduleCase::KernelScsc => {
            let (l, mu, sigma) = (need(p.grad_lipschitz, "L")?, need(p.mu, "mu")?, need(p.sigma, "sigma")?);
            let (beta, kappa, kappa_beta) = (need(p.beta, "beta")?, need(p.kappa, "kappa")?, need(p.kappa_beta, "kappa_beta")?);
            let base = tm
                * (3.0 * kappa * sigma * sigma * n / (2.0 * (beta - 1.0) * (kappa_beta * l).powi(2)))
                    .powf(1.0 / (2.0 * beta));
            StepSchedule::new(
                GammaRule::TwoOverMuK { mu: mu / gm },
                TauRule::PowerDecay { base, beta },
                format!("kernel_scsc: gamma_k = 2/(mu k), mu = {mu:e}; tau_k = {base:e} k^(-1/(2 beta)), beta = {beta}"),
            )
        }
    }
}
