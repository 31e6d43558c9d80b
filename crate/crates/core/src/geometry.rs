//! Norms, feasible sets and the two prox operators (Euclidean projection and
//! the entropic multiplicative step on a product of simplices).

use crate::error::{Error, Result};
use crate::point::{dist2, norm2, BlockPoint};

/// Membership tolerance for feasibility checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Entropic iterates are floored here before renormalization.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// Dual norm exponent `q` (with `1/p + 1/q = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualExponent {
    Two,
    Infinity,
}

impl DualExponent {
    pub fn from_f64(q: f64) -> Result<Self> {
        if q == 2.0 {
            Ok(Self::Two)
        } else if q == f64::INFINITY {
            Ok(Self::Infinity)
        } else {
            Err(Error::Config(format!("unsupported dual exponent q = {q} (use 2 or inf)")))
        }
    }

    /// `1/q`, with `1/inf = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Self::Two => 0.5,
            Self::Infinity => 0.0,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Self::Two => 2.0,
            Self::Infinity => f64::INFINITY,
        }
    }
}

pub fn dual_norm(v: &[f64], q: DualExponent) -> f64 {
    match q {
        DualExponent::Two => norm2(v),
        DualExponent::Infinity => v.iter().fold(0.0, |m, a| m.max(a.abs())),
    }
}

/// `a_q^2` together with the generic bound it may override, for logging.
#[derive(Debug, Clone, PartialEq)]
pub struct AqReport {
    pub value: f64,
    /// `min{2q - 1, 32 ln n - 8} n^(2/q - 1)`, or `NaN` when `n < 3`.
    pub generic: f64,
    pub note: &'static str,
}

/// Second-moment constant of the sphere direction in the dual norm.
///
/// For `q = 2` this is exactly 1 because `||e||_2 = 1`; the generic bound
/// (which gives 3) is reported alongside. For `q = inf` the `2q - 1` branch
/// is infinite, so the value is `(32 ln n - 8) / n`.
pub fn a_q_report(n: usize, q: DualExponent) -> AqReport {
    let nf = n as f64;
    let generic = if n >= 3 {
        let c = match q {
            DualExponent::Two => 3.0f64.min(32.0 * nf.ln() - 8.0),
            DualExponent::Infinity => 32.0 * nf.ln() - 8.0,
        };
        c * nf.powf(2.0 * q.recip() - 1.0)
    } else {
        f64::NAN
    };
    match q {
        DualExponent::Two => AqReport {
            value: 1.0,
            generic,
            note: "euclidean: exact value 1 used",
        },
        DualExponent::Infinity if n >= 3 => AqReport {
            value: generic,
            generic,
            note: "(32 ln n - 8)/n",
        },
        DualExponent::Infinity => AqReport {
            value: ((32.0 * 3.0f64.ln() - 8.0) / nf).max(1.0),
            generic,
            note: "n < 3: substituted (32 ln 3 - 8)/n, at least 1",
        },
    }
}

pub fn a_q_squared(n: usize, q: DualExponent) -> f64 {
    a_q_report(n, q).value
}

/// Euclidean projection onto the probability simplex `{w >= 0, sum w = 1}`
/// by sorting and thresholding.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "project_simplex on an empty vector");
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&a| (a - theta).max(0.0)).collect()
}

fn simplex_distance(v: &[f64]) -> f64 {
    dist2(v, &project_simplex(v))
}

/// The feasible set `Z = X x Y`.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    /// Per-coordinate box over the whole of `z`.
    Box { lo: Vec<f64>, hi: Vec<f64>, nx: usize },
    /// Euclidean ball over the whole of `z`.
    Ball { center: Vec<f64>, radius: f64, nx: usize },
    /// `Delta_{nx} x Delta_{ny}`.
    SimplexPair { nx: usize, ny: usize },
    /// All of `R^n`. Not compact; only the Euclidean prox accepts it.
    Whole { nx: usize, ny: usize },
}

impl DomainSpec {
    pub fn cube(nx: usize, ny: usize, lo: f64, hi: f64) -> Result<Self> {
        let n = nx + ny;
        Self::Box {
            lo: vec![lo; n],
            hi: vec![hi; n],
            nx,
        }
        .validated()
    }

    pub fn ball(nx: usize, ny: usize, radius: f64) -> Result<Self> {
        Self::Ball {
            center: vec![0.0; nx + ny],
            radius,
            nx,
        }
        .validated()
    }

    pub fn simplex_pair(nx: usize, ny: usize) -> Result<Self> {
        Self::SimplexPair { nx, ny }.validated()
    }

    /// Checks nonemptiness and dimensions.
    pub fn validated(self) -> Result<Self> {
        let (nx, ny) = (self.nx(), self.ny());
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidDimension(format!(
                "domain blocks must be nonempty (n_x = {nx}, n_y = {ny})"
            )));
        }
        match &self {
            Self::Box { lo, hi, nx } => {
                if lo.len() != hi.len() || lo.len() <= *nx {
                    return Err(Error::InvalidDimension("box bounds length mismatch".into()));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
                    return Err(Error::Config("box needs finite bounds with lo <= hi".into()));
                }
            }
            Self::Ball { center, radius, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite())
                {
                    return Err(Error::Config("ball needs a finite positive radius".into()));
                }
            }
            Self::SimplexPair { .. } | Self::Whole { .. } => {}
        }
        Ok(self)
    }

    pub fn nx(&self) -> usize {
        match self {
            Self::Box { nx, .. } | Self::Ball { nx, .. } => *nx,
            Self::SimplexPair { nx, .. } | Self::Whole { nx, .. } => *nx,
        }
    }

    pub fn ny(&self) -> usize {
        match self {
            Self::Box { lo, nx, .. } => lo.len() - nx,
            Self::Ball { center, nx, .. } => center.len() - nx,
            Self::SimplexPair { ny, .. } | Self::Whole { ny, .. } => *ny,
        }
    }

    pub fn dim(&self) -> usize {
        self.nx() + self.ny()
    }

    /// Euclidean distance from `z` to the set.
    pub fn distance(&self, z: &[f64]) -> f64 {
        match self {
            Self::Box { lo, hi, .. } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| {
                    let d = (l - v).max(v - h).max(0.0);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            Self::Ball { center, radius, .. } => (dist2(z, center) - radius).max(0.0),
            Self::SimplexPair { nx, .. } => {
                let dx = simplex_distance(&z[..*nx]);
                let dy = simplex_distance(&z[*nx..]);
                (dx * dx + dy * dy).sqrt()
            }
            Self::Whole { .. } => 0.0,
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        if z.len() != self.dim() {
            return false;
        }
        match self {
            Self::SimplexPair { nx, .. } => {
                let ok = |b: &[f64]| {
                    b.iter().all(|&v| v >= -FEASIBILITY_TOL)
                        && (b.iter().sum::<f64>() - 1.0).abs() <= FEASIBILITY_TOL
                };
                ok(&z[..*nx]) && ok(&z[*nx..])
            }
            _ => self.distance(z) <= FEASIBILITY_TOL,
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Self::Box { lo, hi, .. } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect(),
            Self::Ball { center, radius, .. } => {
                let d = dist2(z, center);
                if d <= *radius {
                    z.to_vec()
                } else {
                    let s = radius / d;
                    z.iter().zip(center).map(|(v, c)| c + s * (v - c)).collect()
                }
            }
            Self::SimplexPair { nx, .. } => {
                let mut out = project_simplex(&z[..*nx]);
                out.extend(project_simplex(&z[*nx..]));
                out
            }
            Self::Whole { .. } => z.to_vec(),
        }
    }

    /// Canonical starting point: uniform distributions on simplices, the
    /// center of a box or ball, the origin otherwise.
    pub fn canonical_start(&self) -> BlockPoint {
        let (nx, ny) = (self.nx(), self.ny());
        let z = match self {
            Self::Box { lo, hi, .. } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            Self::Ball { center, .. } => center.clone(),
            Self::SimplexPair { .. } => {
                let mut z = vec![1.0 / nx as f64; nx];
                z.extend(std::iter::repeat_n(1.0 / ny as f64, ny));
                z
            }
            Self::Whole { .. } => vec![0.0; nx + ny],
        };
        BlockPoint::from_concat(z, nx).expect("validated domain yields a valid point")
    }

    /// Euclidean diameter.
    pub fn euclidean_diameter(&self) -> Result<f64> {
        match self {
            Self::Box { lo, hi, .. } => Ok(dist2(lo, hi)),
            Self::Ball { radius, .. } => Ok(2.0 * radius),
            Self::SimplexPair { nx, ny } => {
                let d = |m: usize| if m > 1 { 2.0f64.sqrt() } else { 0.0 };
                Ok((d(*nx).powi(2) + d(*ny).powi(2)).sqrt())
            }
            Self::Whole { .. } => Err(Error::Config("unbounded domain has no diameter".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Euclidean,
    EntropySimplexPair,
}

/// A prox geometry: the norm pair and Bregman setup over a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySetup {
    kind: GeometryKind,
    domain: DomainSpec,
}

impl GeometrySetup {
    pub fn euclidean(domain: DomainSpec) -> Self {
        Self {
            kind: GeometryKind::Euclidean,
            domain,
        }
    }

    pub fn entropy(nx: usize, ny: usize) -> Result<Self> {
        Ok(Self {
            kind: GeometryKind::EntropySimplexPair,
            domain: DomainSpec::simplex_pair(nx, ny)?,
        })
    }

    pub fn new(kind: GeometryKind, domain: DomainSpec) -> Result<Self> {
        if kind == GeometryKind::EntropySimplexPair
            && !matches!(domain, DomainSpec::SimplexPair { .. })
        {
            return Err(Error::Config(
                "the entropic geometry needs a simplex-pair domain".into(),
            ));
        }
        Ok(Self { kind, domain })
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Primal norm exponent.
    pub fn p(&self) -> f64 {
        match self.kind {
            GeometryKind::Euclidean => 2.0,
            GeometryKind::EntropySimplexPair => 1.0,
        }
    }

    pub fn q(&self) -> DualExponent {
        match self.kind {
            GeometryKind::Euclidean => DualExponent::Two,
            GeometryKind::EntropySimplexPair => DualExponent::Infinity,
        }
    }

    pub fn a_q_sq(&self) -> f64 {
        a_q_squared(self.domain.dim(), self.q())
    }

    pub fn omega(&self) -> Result<f64> {
        bregman_diameter(self)
    }
}

/// Bregman diameter of the geometry's domain.
pub fn bregman_diameter(geometry: &GeometrySetup) -> Result<f64> {
    match geometry.kind {
        GeometryKind::Euclidean => geometry.domain.euclidean_diameter(),
        GeometryKind::EntropySimplexPair => {
            let d = geometry.domain();
            // max KL divergence from the uniform start to a vertex is ln m
            Ok((2.0 * (d.nx() as f64).ln() + 2.0 * (d.ny() as f64).ln()).sqrt())
        }
    }
}

fn entropic_block(x: &[f64], g: &[f64], gamma: f64) -> Vec<f64> {
    let logits: Vec<f64> = x
        .iter()
        .zip(g)
        .map(|(&xi, &gi)| xi.max(ENTROPY_FLOOR).ln() - gamma * gi)
        .collect();
    let shift = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let w: Vec<f64> = logits
        .iter()
        .map(|&v| (v - shift).exp().max(ENTROPY_FLOOR))
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// One mirror step `prox_z(gamma * g)` in the given geometry.
///
/// `g` is the estimator output with the y-block sign already flipped, so
/// both blocks take a descent step.
pub fn prox_step(
    geometry: &GeometrySetup,
    z: &BlockPoint,
    g: &[f64],
    gamma: f64,
) -> Result<BlockPoint> {
    let domain = &geometry.domain;
    if z.dim() != domain.dim() || g.len() != z.dim() || z.nx() != domain.nx() {
        return Err(Error::InvalidDimension(format!(
            "prox on a {}-dimensional domain got z of length {} and g of length {}",
            domain.dim(),
            z.dim(),
            g.len()
        )));
    }
    if !domain.contains(z.as_slice()) {
        return Err(Error::Precondition("prox_step called at an infeasible point".into()));
    }
    if g.iter().any(|v| !v.is_finite()) || !gamma.is_finite() {
        return Err(Error::NonFinite("prox step direction"));
    }
    let nx = z.nx();
    let out = match geometry.kind {
        GeometryKind::Euclidean => {
            let moved: Vec<f64> = z.as_slice().iter().zip(g).map(|(a, b)| a - gamma * b).collect();
            domain.project(&moved)
        }
        GeometryKind::EntropySimplexPair => {
            let mut out = entropic_block(z.x(), &g[..nx], gamma);
            out.extend(entropic_block(z.y(), &g[nx..], gamma));
            out
        }
    };
    debug_assert!(domain.contains(&out));
    BlockPoint::from_concat(out, nx)
}
