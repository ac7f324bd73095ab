use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use super::{cont_r_violation, surrogate_jacobian, ContractionCertificate};
use crate::error::{invalid, Result};
use crate::matrixkit::is_block_homothety;
use crate::models::{DriftModel, Dynamics};

/// Where the largest violation was found.
#[derive(Debug, Clone, PartialEq)]
pub enum Worst {
    /// Index into the supplied points.
    Sample(usize),
    /// Surrogate Jacobian with `∇²U = ξI`.
    Endpoint(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContReport {
    /// `max λ_max(sym(M J_b) + ρM)` over everything evaluated.
    pub max_violation: f64,
    pub worst: Worst,
    pub worst_point: Option<Vec<f64>>,
    pub passes: bool,
    /// True when the endpoint surrogates were evaluated and, with block
    /// structure, prove the condition for every state. Otherwise the result
    /// is sampled, not proven.
    pub endpoint_certified: bool,
    pub sampled: usize,
}

/// `count` states uniform in `[−radius, radius]^dim`.
pub fn sample_states(dim: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..dim).map(|_| rng.random_range(-radius..=radius)).collect()).collect()
}

/// Returns `(ξ_lo, ξ_hi, B, n)` when the endpoint argument applies.
fn endpoint_structure(
    model: &DriftModel,
    cert: &ContractionCertificate,
) -> Option<(f64, f64, nalgebra::DMatrix<f64>, usize)> {
    let potential = model.potential()?;
    let range = potential.hessian_range()?;
    let n = potential.dim();
    let b = model.friction_matrix()?;
    let block_ok = match model.dynamics() {
        Dynamics::Langevin { .. } => true,
        Dynamics::GLangevin { .. } => is_block_homothety(&b, n, 1e-12),
        Dynamics::Affine { .. } => false,
    };
    (block_ok && is_block_homothety(cert.metric.as_matrix(), n, 1e-12)).then_some((range.lo, range.hi, b, n))
}

/// Evaluates `sym(M J_b(z)) + ρM` at every point, plus the endpoint surrogate
/// Jacobians when the model and metric have homothety-block structure.
pub fn check_cont_r(
    model: &DriftModel,
    cert: &ContractionCertificate,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<ContReport> {
    let d = model.dim();
    if cert.metric.dim() != d {
        return Err(invalid(format!("metric is {0}x{0} but the model has dimension {d}", cert.metric.dim())));
    }
    if points.is_empty() {
        return Err(invalid("check_cont_r needs at least one point"));
    }
    if let Some(bad) = points.iter().position(|z| z.len() != d) {
        return Err(invalid(format!("point {bad} has the wrong dimension")));
    }
    let m = cert.metric.as_matrix();
    let violations: Vec<f64> = points.par_iter().map(|z| cont_r_violation(m, &model.jacobian(z), cert.rho)).collect();
    let (mut idx, mut best) = (0, f64::NEG_INFINITY);
    for (i, v) in violations.iter().enumerate() {
        if *v > best {
            best = *v;
            idx = i;
        }
    }
    let mut worst = Worst::Sample(idx);
    let mut endpoint_certified = false;
    if let (Some((lo, hi, b, n)), Some(gamma)) = (endpoint_structure(model, cert), model.gamma()) {
        for xi in [lo, hi] {
            let v = cont_r_violation(m, &surrogate_jacobian(xi, &b, gamma, n), cert.rho);
            if v > best {
                best = v;
                worst = Worst::Endpoint(xi);
            }
        }
        endpoint_certified = true;
    }
    let worst_point = match worst {
        Worst::Sample(i) => Some(points[i].clone()),
        Worst::Endpoint(_) => None,
    };
    Ok(ContReport {
        max_violation: best,
        worst,
        worst_point,
        passes: best <= tol,
        endpoint_certified,
        sampled: points.len(),
    })
}
