//! Contraction certificates `(M, ρ)` for the condition `sym(M J_b(z)) ≤ −ρM`,
//! and the functional-inequality bounds that follow from one.

mod check;
mod functional;
mod generalized;
mod langevin;

use nalgebra::DMatrix;

use crate::matrixkit::{sym, sym_eig, SpdMatrix};

pub use crate::models::HessianBounds;
pub use check::{check_cont_r, sample_states, ContReport, Worst};
pub use functional::{
    bias_bound, concentration_bound, discrete_bias_bound, discrete_concentration_bound, l2_decay_bound,
    log_sobolev_constant, sigma_m_norm,
};
pub use generalized::{
    glangevin_certificate, glangevin_gamma0, glangevin_gamma0_prime, glangevin_h_constants, schur_reduction, HConstants,
};
pub use langevin::{
    best_rate, chain_pinned_certificate, chain_unpinned_certificate, langevin_certificate, langevin_metric_simple,
    lemma_feasible_ac, lemma_metric, sharp_condition, LemmaPair,
};

/// How a certificate was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    SimpleLangevin,
    LemmaSearch { a: f64, c: f64 },
    Generalized(Box<GeneralizedParts>),
    ChainPinned,
    ChainUnpinned,
    UserSupplied,
}

impl Provenance {
    pub fn name(&self) -> &'static str {
        match self {
            Provenance::SimpleLangevin => "simple-langevin",
            Provenance::LemmaSearch { .. } => "lemma-search",
            Provenance::Generalized(_) => "generalized",
            Provenance::ChainPinned => "chain-pinned",
            Provenance::ChainUnpinned => "chain-unpinned",
            Provenance::UserSupplied => "user-supplied",
        }
    }
}

/// Intermediate objects of the generalized construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedParts {
    /// Lyapunov metric with `NB ≥ κN`.
    pub n_metric: SpdMatrix,
    pub kappa: f64,
    /// Schur complement `B₁₁ − B₁₂B₂₂⁻¹B₂₁`.
    pub e: SpdMatrix,
    /// `B₁₂B₂₂⁻¹`, `n × (p − n)`.
    pub d: DMatrix<f64>,
    pub h: HConstants,
    pub alpha: f64,
}

/// A metric `M` and rate `ρ` with `sym(M J_b(z)) + ρM ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCertificate {
    pub metric: SpdMatrix,
    pub rho: f64,
    /// Smallest friction for which the construction applies, when it has one.
    pub gamma0: Option<f64>,
    pub provenance: Provenance,
}

impl ContractionCertificate {
    pub fn user_supplied(metric: SpdMatrix, rho: f64) -> Self {
        ContractionCertificate { metric, rho, gamma0: None, provenance: Provenance::UserSupplied }
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        ContractionCertificate { rho, ..self.clone() }
    }
}

/// `λ_max(sym(M J) + ρM)`; non-positive iff `(M, ρ)` holds at this Jacobian.
pub fn cont_r_violation(m: &DMatrix<f64>, j: &DMatrix<f64>, rho: f64) -> f64 {
    let s = sym(&(m * j)) + m * rho;
    sym_eig(&s).map(|e| e.max()).unwrap_or(f64::INFINITY)
}

/// `J_b` of the kinetic drift with `A = (Iₙ, 0)` and `∇²U` replaced by `ξIₙ`.
pub fn surrogate_jacobian(xi: f64, b: &DMatrix<f64>, gamma: f64, n: usize) -> DMatrix<f64> {
    let p = b.nrows();
    let d = n + p;
    let mut j = DMatrix::zeros(d, d);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -xi;
    }
    for i in 0..p {
        for k in 0..p {
            j[(n + i, n + k)] = -gamma * b[(i, k)];
        }
    }
    j
}
