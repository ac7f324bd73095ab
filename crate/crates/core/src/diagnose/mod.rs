//! Empirical checks of certified bounds: exact small-sample Wasserstein
//! distances, contraction of empirical laws, decay-rate regression and
//! ergodic-mean concentration.

mod assignment;
mod concentration;
mod gaussian;
mod wasserstein;

use crate::error::{invalid, Result};

pub use assignment::{bottleneck_assignment, linear_assignment};
pub use concentration::{
    ergodic_concentration_check, AffineObservable, BiasCheck, ConcentrationConfig, ConcentrationReport, TailRow,
};
pub use gaussian::{gaussian_w1_to_point, gaussian_w2};
pub use wasserstein::{
    empirical_wp, wasserstein_contraction_test, ContractionRow, ContractionTestConfig, ContractionTestReport, Order,
};

/// Equal-weight point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| invalid("empirical measure needs at least one point"))?;
        if points.iter().any(|p| p.len() != dim) {
            return Err(invalid("all points must have the same dimension"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("empirical measure has a non-finite coordinate"));
        }
        Ok(EmpiricalMeasure { points, dim })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares of `log value` against `t`; `rate` is minus the slope.
pub fn decay_fit(series: &[(f64, f64)]) -> Result<DecayFit> {
    if series.len() < 3 {
        return Err(invalid("decay_fit needs at least 3 points"));
    }
    if let Some((t, v)) = series.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid(format!("decay_fit needs positive values, got {v} at t = {t}")));
    }
    let k = series.len() as f64;
    let ys: Vec<f64> = series.iter().map(|(_, v)| v.ln()).collect();
    let tm = series.iter().map(|(t, _)| t).sum::<f64>() / k;
    let ym = ys.iter().sum::<f64>() / k;
    let stt: f64 = series.iter().map(|(t, _)| (t - tm).powi(2)).sum();
    if stt == 0.0 {
        return Err(invalid("decay_fit needs at least two distinct times"));
    }
    let sty: f64 = series.iter().zip(&ys).map(|((t, _), y)| (t - tm) * (y - ym)).sum();
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let ss_tot: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    let ss_res: f64 = series.iter().zip(&ys).map(|((t, _), y)| (y - intercept - slope * t).powi(2)).sum();
    let r2 = if ss_tot <= k * (1e-12 * ym.abs().max(1.0)).powi(2) { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(DecayFit { rate: -slope, intercept, r2 })
}
