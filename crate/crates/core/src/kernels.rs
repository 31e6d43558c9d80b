//! Legendre smoothing kernels `K` on `[-1, 1]` for higher-order smooth
//! objectives, with their moment certificates and the constants `kappa`
//! and `kappa_beta`.
//!
//! All expectations are taken under `r ~ Uniform[-1, 1]`, so
//! `E[f(r)] = (1/2) * int_{-1}^{1} f(r) dr`. The constants `kappa` and
//! `kappa_beta` follow the same convention.

use crate::error::{Error, Result};

/// Tolerance for the moment certificates `E[K] = 0`, `E[rK] = 1`,
/// `E[r^j K] = 0` for `2 <= j <= l`.
pub const MOMENT_TOL: f64 = 1e-10;

/// Absolute accuracy of the `kappa_beta` quadrature.
pub const KAPPA_BETA_TOL: f64 = 1e-9;

pub const MAX_BETA: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelConstant {
    Kappa,
    KappaBeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingKernel {
    beta: f64,
    l: usize,
    /// Monomial coefficients, `coeffs[i]` multiplies `r^i`.
    coeffs: Vec<f64>,
    kappa: f64,
    kappa_beta: f64,
}

impl SmoothingKernel {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Largest integer strictly below `beta`.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kappa_beta(&self) -> f64 {
        self.kappa_beta
    }

    pub fn eval(&self, r: f64) -> f64 {
        horner(&self.coeffs, r)
    }

    /// Largest deviation of the moments `E[r^j K]`, `0 <= j <= l`, from
    /// their required values.
    pub fn max_moment_residual(&self) -> f64 {
        (0..=self.l)
            .map(|j| {
                let target = if j == 1 { 1.0 } else { 0.0 };
                (kernel_moment(self, j) - target).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn horner(coeffs: &[f64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
}

/// Largest integer strictly below `beta`.
pub fn order_below(beta: f64) -> usize {
    (beta.ceil() - 1.0) as usize
}

/// Monomial coefficients of the Legendre polynomials `L_0 ..= L_m` from
/// `(k+1) L_{k+1} = (2k+1) r L_k - k L_{k-1}`.
pub fn legendre_coeffs(max_degree: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![vec![1.0]];
    if max_degree == 0 {
        return out;
    }
    out.push(vec![0.0, 1.0]);
    for k in 1..max_degree {
        let mut next = vec![0.0; k + 2];
        for (i, c) in out[k].iter().enumerate() {
            next[i + 1] += (2 * k + 1) as f64 * c;
        }
        for (i, c) in out[k - 1].iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        let denom = (k + 1) as f64;
        out.push(next.into_iter().map(|c| c / denom).collect());
    }
    out
}

/// `K_beta(r) = sum_{m=0}^{l} p_m'(0) p_m(r)` with `p_m = sqrt(2m+1) L_m`,
/// so each term is `(2m+1) L_m'(0) L_m(r)`.
pub fn build_legendre_kernel(beta: f64) -> Result<SmoothingKernel> {
    if !(beta > 2.0 && beta <= MAX_BETA) {
        return Err(Error::UnsupportedOrder(beta));
    }
    let l = order_below(beta);
    let legendre = legendre_coeffs(l);
    let mut coeffs = vec![0.0; l + 1];
    for (m, poly) in legendre.iter().enumerate() {
        // L_m'(0) is the linear coefficient
        let slope_at_zero = poly.get(1).copied().unwrap_or(0.0);
        let weight = (2 * m + 1) as f64 * slope_at_zero;
        for (i, c) in poly.iter().enumerate() {
            coeffs[i] += weight * c;
        }
    }
    while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    let mut kernel = SmoothingKernel {
        beta,
        l,
        coeffs,
        kappa: f64::NAN,
        kappa_beta: f64::NAN,
    };
    kernel.kappa = kernel_constant(&kernel, KernelConstant::Kappa)?;
    kernel.kappa_beta = kernel_constant(&kernel, KernelConstant::KappaBeta)?;
    let residual = kernel.max_moment_residual();
    if residual > MOMENT_TOL {
        return Err(Error::Precondition(format!(
            "kernel for beta = {beta} fails its moment certificate by {residual:e}"
        )));
    }
    Ok(kernel)
}

/// `E[r^p]` for `r ~ Uniform[-1, 1]`.
fn uniform_monomial_mean(p: usize) -> f64 {
    if p % 2 == 1 {
        0.0
    } else {
        1.0 / (p + 1) as f64
    }
}

/// Exact `E[r^j K(r)]` by monomial integration.
pub fn kernel_moment(kernel: &SmoothingKernel, j: usize) -> f64 {
    kernel
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c * uniform_monomial_mean(i + j))
        .sum()
}

pub fn kernel_constant(kernel: &SmoothingKernel, which: KernelConstant) -> Result<f64> {
    match which {
        KernelConstant::Kappa => {
            let c = &kernel.coeffs;
            let mut total = 0.0;
            for (i, a) in c.iter().enumerate() {
                for (j, b) in c.iter().enumerate() {
                    total += a * b * uniform_monomial_mean(i + j);
                }
            }
            Ok(total)
        }
        KernelConstant::KappaBeta => {
            let beta = kernel.beta;
            let f = |r: f64| 0.5 * r.abs().powf(beta) * kernel.eval(r).abs();
            // |K| has kinks at the roots of K and |r|^beta at 0
            let mut breaks = real_roots_in_unit_interval(&kernel.coeffs);
            breaks.extend([-1.0, 0.0, 1.0]);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            let tol_per_piece = KAPPA_BETA_TOL / breaks.len() as f64;
            let mut total = 0.0;
            for w in breaks.windows(2) {
                total += adaptive_simpson(&f, w[0], w[1], tol_per_piece)?;
            }
            Ok(total)
        }
    }
}

/// Roots of the polynomial in `[-1, 1]` by sign scanning and bisection.
fn real_roots_in_unit_interval(coeffs: &[f64]) -> Vec<f64> {
    const GRID: usize = 4000;
    let mut roots = Vec::new();
    let at = |i: usize| -1.0 + 2.0 * i as f64 / GRID as f64;
    for i in 0..GRID {
        let (mut a, mut b) = (at(i), at(i + 1));
        let (fa, fb) = (horner(coeffs, a), horner(coeffs, b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        let mut fa = fa;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let fm = horner(coeffs, mid);
            if fm == 0.0 || b - a < 1e-16 {
                a = mid;
                b = mid;
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        worst: &mut f64,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let err = (left + right - whole) / 15.0;
        if err.abs() <= tol || depth == 0 {
            if depth == 0 {
                *worst = worst.max(err.abs());
            }
            return left + right + err;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst)
    }
    if a == b {
        return Ok(0.0);
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    let mut worst = 0.0;
    let value = recurse(f, a, b, fa, fm, fb, whole, tol, 40, &mut worst);
    if worst > tol {
        return Err(Error::Integration {
            achieved: worst,
            target: tol,
        });
    }
    Ok(value)
}
