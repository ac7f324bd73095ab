use nalgebra::DMatrix;

use crate::matrixkit::{spectral_norm, sqrt_spd, SpdMatrix};

/// `|ΣM^{1/2}|`, evaluated as the operator norm of `M^{1/2}Σ`. The two agree
/// whenever `Σ` is symmetric, which covers every diffusion built here.
pub fn sigma_m_norm(sigma: &DMatrix<f64>, m: &SpdMatrix) -> f64 {
    spectral_norm(&(sqrt_spd(m).as_matrix() * sigma))
}

fn c_t(s2: f64, rho: f64, t: f64) -> f64 {
    if rho.abs() < 1e-12 {
        2.0 * t * s2
    } else {
        s2 * (-(-2.0 * rho * t).exp_m1()) / rho
    }
}

/// Local log-Sobolev constant `C_t` of `δ_z P_t`.
pub fn log_sobolev_constant(sigma: &DMatrix<f64>, m: &SpdMatrix, rho: f64, t: f64) -> f64 {
    c_t(sigma_m_norm(sigma, m).powi(2), rho, t)
}

/// Tail bound on `P(1/T ∫₀ᵀ f(Z_t) − E f(Z_t) dt ≥ u)` for `‖∇f‖_{M⁻¹,∞} ≤ 1`,
/// when the initial law has log-Sobolev constant `c_prime`.
pub fn concentration_bound(t_horizon: f64, u: f64, rho: f64, sigma_m_norm: f64, c_prime: f64) -> f64 {
    let denom = 2.0 * sigma_m_norm * sigma_m_norm + c_prime / t_horizon;
    (-t_horizon * rho * rho * u * u / denom).exp().min(1.0)
}

/// `|1/T ∫₀ᵀ E f(Z_t) dt − μ∞(f)| ≤ W_{M,1}(ν, μ∞)/(ρT)`.
pub fn bias_bound(t_horizon: f64, rho: f64, w1: f64) -> f64 {
    w1 / (rho * t_horizon)
}

/// Tail bound for the average of `f(Z_{k t₀})`, `k = 1..n`.
pub fn discrete_concentration_bound(n: usize, t0: f64, u: f64, rho: f64, sigma_m_norm: f64, c_prime: f64) -> f64 {
    let nf = n as f64;
    let q = (-rho * t0).exp();
    let denom = c_t(sigma_m_norm * sigma_m_norm, rho, t0) + q * c_prime / nf;
    (-nf * u * u * (1.0 - q).powi(2) / denom).exp().min(1.0)
}

/// Bias of the discrete average: `e^{−ρt₀}/(n(1 − e^{−ρt₀}))·W_{M,1}(ν, μ∞)`.
pub fn discrete_bias_bound(n: usize, t0: f64, rho: f64, w1: f64) -> f64 {
    let q = (-rho * t0).exp();
    q / (n as f64 * (1.0 - q)) * w1
}

/// `√(3|N⁻¹||N|)·e^{−ρt}`. Only meaningful when `γ ≥ max(γ₀, γ₀′)`.
pub fn l2_decay_bound(n_metric: &SpdMatrix, rho: f64, t: f64) -> f64 {
    (3.0 * n_metric.max_eig() / n_metric.min_eig()).sqrt() * (-rho * t).exp()
}
