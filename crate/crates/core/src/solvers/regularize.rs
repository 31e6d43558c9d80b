//! Strongly convex-concave regularization of a saddle problem.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oracle::{ProblemMeta, ProblemSpec};
use crate::point::{dist2, BlockPoint};

/// `phi(z) + (mu/2) |x - x0|^2 - (mu/2) |y - y0|^2`.
///
/// The modulus and the gradient Lipschitz constant grow by `mu`; the
/// Lipschitz constant grows by `mu` times the reach of the domain from
/// `z0`. The accuracy measure of the original problem is kept.
pub fn regularize(problem: &ProblemSpec, mu: f64, z0: &BlockPoint) -> Result<ProblemSpec> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Config(format!("regularization needs mu > 0, got {mu}")));
    }
    if z0.dim() != problem.dim() || z0.nx() != problem.nx() {
        return Err(Error::InvalidDimension("anchor does not match the problem".into()));
    }
    if !problem.domain().contains(z0.as_slice()) {
        return Err(Error::Config("anchor lies outside the domain".into()));
    }
    let nx = problem.nx();
    let anchor = Arc::new(z0.as_slice().to_vec());

    let (value, a) = (problem.value_fn().clone(), anchor.clone());
    let penalty = move |z: &BlockPoint| -> f64 {
        let (x, y) = z.as_slice().split_at(nx);
        let (x0, y0) = a.split_at(nx);
        0.5 * mu * (dist2(x, x0).powi(2) - dist2(y, y0).powi(2))
    };
    let mut out = ProblemSpec::new(
        format!("{} + mu {mu:e}", problem.name()),
        problem.domain().clone(),
        Arc::new(move |z: &BlockPoint| value(z) + penalty(z)),
    );
    if let Some(grad) = problem.saddle_grad_fn().cloned() {
        let a = anchor.clone();
        out = out.with_saddle_grad(Arc::new(move |z: &BlockPoint| {
            let mut g = grad(z);
            for ((gi, zi), ai) in g.iter_mut().zip(z.as_slice()).zip(a.iter()) {
                *gi += mu * (zi - ai);
            }
            g
        }));
    }
    if let Some(gap) = problem.gap_fn().cloned() {
        out = out.with_gap(gap);
    }
    let meta = problem.meta();
    let reach = problem
        .domain()
        .euclidean_diameter()
        .ok()
        .map(|d| d + if problem.neighborhood_radius().is_finite() { problem.neighborhood_radius() } else { 0.0 });
    let new_meta = ProblemMeta {
        lipschitz: meta.lipschitz.zip(reach).map(|(m, r)| m + mu * r),
        grad_lipschitz: meta.grad_lipschitz.map(|l| l + mu),
        mu: meta.mu + mu,
        beta: meta.beta,
        holder_const: meta.holder_const,
    };
    out.with_meta(new_meta)?.with_neighborhood_radius(problem.neighborhood_radius())
}
