use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::matrixkit::{sqrt_psd, sqrt_spd, sym, sym_eig, SpdMatrix};

fn check_gaussian(mean: &[f64], cov: &DMatrix<f64>, d: usize) -> Result<()> {
    if mean.len() != d || cov.nrows() != d || cov.ncols() != d {
        return Err(invalid("Gaussian mean/covariance do not match the metric dimension"));
    }
    Ok(())
}

/// `W_{M,2}` between `N(m₁, S₁)` and `N(m₂, S₂)`:
/// `|m₁ − m₂|²_M + tr(S̃₁ + S̃₂ − 2(S̃₁^{1/2} S̃₂ S̃₁^{1/2})^{1/2})` with `S̃ = M^{1/2} S M^{1/2}`.
pub fn gaussian_w2(m1: &[f64], s1: &DMatrix<f64>, m2: &[f64], s2: &DMatrix<f64>, metric: &SpdMatrix) -> Result<f64> {
    let d = metric.dim();
    check_gaussian(m1, s1, d)?;
    check_gaussian(m2, s2, d)?;
    let r = sqrt_spd(metric).into_matrix();
    let a = sym(&(&r * s1 * &r));
    let b = sym(&(&r * s2 * &r));
    let scale = a.abs().max().max(b.abs().max()).max(1e-300);
    let ra = sqrt_psd(&a, 1e-10 * scale)?;
    let cross = sqrt_psd(&sym(&(&ra * &b * &ra)), 1e-10 * scale * scale)?;
    let diff: Vec<f64> = m1.iter().zip(m2).map(|(x, y)| x - y).collect();
    let w2 = metric.norm_of(&diff).powi(2) + (a.trace() + b.trace() - 2.0 * cross.trace()).max(0.0);
    Ok(w2.sqrt())
}

/// `W_{M,1}(δ_z, N(m, S)) = E‖X − z‖_M`, from
/// `E‖v‖ = (1/2√π) ∫₀^∞ (1 − E e^{−s‖v‖²}) s^{−3/2} ds` with the Gaussian
/// Laplace transform in closed form, integrated by the trapezoid rule in `log s`.
pub fn gaussian_w1_to_point(z: &[f64], mean: &[f64], cov: &DMatrix<f64>, metric: &SpdMatrix) -> Result<f64> {
    let d = metric.dim();
    check_gaussian(mean, cov, d)?;
    if z.len() != d {
        return Err(invalid("point dimension does not match the metric"));
    }
    let r = sqrt_spd(metric).into_matrix();
    let e = sym_eig(&sym(&(&r * cov * &r)))?;
    let shift = &r * DVector::from_iterator(d, mean.iter().zip(z).map(|(a, b)| a - b));
    let mu = e.vectors.transpose() * shift;
    let c: Vec<f64> = e.values.iter().map(|v| v.max(0.0)).collect();
    // 1 − E e^{−s‖v‖²}, with expm1/ln_1p to keep small s accurate
    let one_minus_phi = |s: f64| {
        let log_phi: f64 =
            (0..d).map(|i| -0.5 * (2.0 * s * c[i]).ln_1p() - s * mu[i] * mu[i] / (1.0 + 2.0 * s * c[i])).sum();
        -log_phi.exp_m1()
    };
    let second = mu.norm_squared() + c.iter().sum::<f64>();
    if second == 0.0 {
        return Ok(0.0);
    }
    // centre the window on s ≈ 1/E‖v‖²
    let y0 = -second.ln();
    let h = 0.02;
    let half = 4000;
    let mut acc = 0.0;
    for k in -half..=half {
        let s = (y0 + k as f64 * h).exp();
        acc += one_minus_phi(s) / s.sqrt();
    }
    Ok(acc * h / (2.0 * std::f64::consts::PI.sqrt()))
}
