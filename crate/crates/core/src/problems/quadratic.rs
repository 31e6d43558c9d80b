use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::oracle::{ProblemMeta, ProblemSpec};
use crate::point::BlockPoint;
use crate::rng::SeededRng;

/// `phi(x, y) = 1/2 x^T A x - 1/2 y^T B y + x^T D y + p^T x + q^T y` with
/// `A, B` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSaddle {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    d: DMatrix<f64>,
    p: DVector<f64>,
    q: DVector<f64>,
    mu: f64,
    z_star: Vec<f64>,
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

impl QuadraticSaddle {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let (nx, ny) = (a.nrows(), b.nrows());
        if nx == 0 || ny == 0 || !a.is_square() || !b.is_square() || d.shape() != (nx, ny) {
            return Err(Error::InvalidDimension("inconsistent quadratic blocks".into()));
        }
        let sym = |m: &DMatrix<f64>| (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0);
        if !sym(&a) || !sym(&b) {
            return Err(Error::Config("A and B must be symmetric".into()));
        }
        let mu = min_eigenvalue(&a).min(min_eigenvalue(&b));
        if !(mu > 0.0) {
            return Err(Error::Config(format!("A and B must be positive definite (min eigenvalue {mu})")));
        }
        let mut out = Self {
            a,
            b,
            d,
            p: DVector::zeros(nx),
            q: DVector::zeros(ny),
            mu,
            z_star: vec![0.0; nx + ny],
        };
        out.z_star = out.solve_stationary()?;
        Ok(out)
    }

    /// Chooses the linear terms so that the saddle point sits at `z_star`.
    pub fn with_solution(mut self, z_star: &[f64]) -> Result<Self> {
        let nx = self.nx();
        if z_star.len() != nx + self.ny() {
            return Err(Error::InvalidDimension("solution length mismatch".into()));
        }
        let xs = DVector::from_column_slice(&z_star[..nx]);
        let ys = DVector::from_column_slice(&z_star[nx..]);
        // grad_x = A x + D y + p = 0, grad_y = -B y + D^T x + q = 0
        self.p = -(&self.a * &xs + &self.d * &ys);
        self.q = &self.b * &ys - self.d.tr_mul(&xs);
        self.z_star = self.solve_stationary()?;
        Ok(self)
    }

    /// Solves the first-order conditions for the stationary point.
    fn solve_stationary(&self) -> Result<Vec<f64>> {
        let (nx, ny) = (self.nx(), self.ny());
        let mut sys = DMatrix::zeros(nx + ny, nx + ny);
        sys.view_mut((0, 0), (nx, nx)).copy_from(&self.a);
        sys.view_mut((0, nx), (nx, ny)).copy_from(&self.d);
        sys.view_mut((nx, 0), (ny, nx)).copy_from(&self.d.transpose());
        sys.view_mut((nx, nx), (ny, ny)).copy_from(&(-&self.b));
        let rhs = DVector::from_iterator(nx + ny, self.p.iter().chain(self.q.iter()).map(|v| -v));
        sys.lu()
            .solve(&rhs)
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| Error::Precondition("singular saddle system".into()))
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn ny(&self) -> usize {
        self.b.nrows()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn z_star(&self) -> &[f64] {
        &self.z_star
    }

    /// Spectral norm of the full Hessian, the Lipschitz constant of the gradient.
    pub fn grad_lipschitz(&self) -> f64 {
        SymmetricEigen::new(self.hessian())
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn hessian(&self) -> DMatrix<f64> {
        let (nx, ny) = (self.nx(), self.ny());
        let mut h = DMatrix::zeros(nx + ny, nx + ny);
        h.view_mut((0, 0), (nx, nx)).copy_from(&self.a);
        h.view_mut((0, nx), (nx, ny)).copy_from(&self.d);
        h.view_mut((nx, 0), (ny, nx)).copy_from(&self.d.transpose());
        h.view_mut((nx, nx), (ny, ny)).copy_from(&(-&self.b));
        h
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let y = DVector::from_column_slice(y);
        0.5 * x.dot(&(&self.a * &x)) - 0.5 * y.dot(&(&self.b * &y))
            + x.dot(&(&self.d * &y))
            + self.p.dot(&x)
            + self.q.dot(&y)
    }

    /// `(grad_x phi, -grad_y phi)`.
    pub fn saddle_grad(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let xv = DVector::from_column_slice(x);
        let yv = DVector::from_column_slice(y);
        let gx = &self.a * &xv + &self.d * &yv + &self.p;
        let gy = -(&self.b * &yv) + self.d.tr_mul(&xv) + &self.q;
        gx.iter().copied().chain(gy.iter().map(|v| -v)).collect()
    }

    /// Problem view over `domain`. `M` is the gradient bound on the domain
    /// enlarged by `margin`, where the estimators may query; it is unknown
    /// on the whole space.
    pub fn to_problem(&self, domain: DomainSpec, margin: f64) -> Result<ProblemSpec> {
        if domain.nx() != self.nx() || domain.ny() != self.ny() {
            return Err(Error::InvalidDimension("domain does not match the quadratic".into()));
        }
        if !domain.contains(&self.z_star) {
            return Err(Error::Config("the saddle point lies outside the domain".into()));
        }
        let reach = match &domain {
            DomainSpec::Box { lo, hi, .. } => lo
                .iter()
                .zip(hi)
                .zip(&self.z_star)
                .map(|((l, h), s)| (s - l).abs().max((h - s).abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            DomainSpec::Ball { center, radius, .. } => {
                crate::point::dist2(center, &self.z_star) + radius
            }
            DomainSpec::Whole { .. } => f64::INFINITY,
            _ => domain.euclidean_diameter()?,
        };
        let l = self.grad_lipschitz();
        let meta = ProblemMeta {
            lipschitz: reach.is_finite().then_some(l * (reach + margin)),
            grad_lipschitz: Some(l),
            mu: self.mu,
            // quadratic: the second-order Taylor expansion is exact
            beta: Some(crate::kernels::MAX_BETA),
            holder_const: None,
        };
        let (v, g, e) = (Arc::new(self.clone()), Arc::new(self.clone()), Arc::new(self.clone()));
        ProblemSpec::new(
            format!("quadratic {}+{}", self.nx(), self.ny()),
            domain,
            Arc::new(move |z: &BlockPoint| v.value(z.x(), z.y())),
        )
        .with_saddle_grad(Arc::new(move |z: &BlockPoint| g.saddle_grad(z.x(), z.y())))
        .with_gap(Arc::new(move |z: &BlockPoint| error_to_solution(&e, z)))
        .with_meta(meta)
    }
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
fn random_orthogonal(n: usize, rng: &mut SeededRng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.normal());
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn random_spd(n: usize, mu: f64, l: f64, rng: &mut SeededRng) -> DMatrix<f64> {
    let q = random_orthogonal(n, rng);
    let spectrum: Vec<f64> = (0..n)
        .map(|i| if i == 0 { mu } else { rng.uniform(mu, l) })
        .collect();
    let m = &q * DMatrix::from_diagonal(&DVector::from_vec(spectrum)) * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Random strongly-convex-strongly-concave quadratic with spectra of `A`
/// and `B` in `[mu, L]` and a coupling of spectral norm `L / 2`.
pub fn make_quadratic_saddle(
    nx: usize,
    ny: usize,
    mu: f64,
    l: f64,
    seed: u64,
) -> Result<QuadraticSaddle> {
    if !(mu > 0.0 && mu <= l && l.is_finite()) {
        return Err(Error::Config(format!("need 0 < mu <= L, got mu = {mu}, L = {l}")));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidDimension("n_x and n_y must be >= 1".into()));
    }
    let mut rng = SeededRng::new(seed);
    let a = random_spd(nx, mu, l, &mut rng);
    let b = random_spd(ny, mu, l, &mut rng);
    let g = DMatrix::from_fn(nx, ny, |_, _| rng.normal());
    let norm = g.clone().svd(false, false).singular_values.max();
    let d = g * (0.5 * l / norm);
    QuadraticSaddle::new(a, b, d)
}

/// `phi(x_bar, y*) - phi(x*, y_bar)`.
pub fn error_to_solution(problem: &QuadraticSaddle, z_bar: &BlockPoint) -> f64 {
    let nx = problem.nx();
    let (xs, ys) = problem.z_star.split_at(nx);
    problem.value(z_bar.x(), ys) - problem.value(xs, z_bar.y())
}
