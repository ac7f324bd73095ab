use nalgebra::DMatrix;

use super::{
    cont_r_violation, surrogate_jacobian, ContractionCertificate, GeneralizedParts, HessianBounds, Provenance,
};
use crate::error::{invalid, Error, Result};
use crate::matrixkit::{loewner_leq, lyapunov_metric, max_gen_eig, min_gen_eig, sym, SpdMatrix};

const SYM_TOL: f64 = 1e-10;

/// Minimal constants of `NAᵀAN ≤ h₁N`, `I/h₂ ≤ E ≤ h₃I`,
/// `[[I, −D],[0, 0]] ≤ h₄N` and `[[I, −D],[−Dᵀ, 0]] ≤ h₅N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HConstants {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    pub h5: f64,
}

impl HConstants {
    pub fn as_array(&self) -> [f64; 5] {
        [self.h1, self.h2, self.h3, self.h4, self.h5]
    }
}

/// `E = B₁₁ − B₁₂B₂₂⁻¹B₂₁` and `D = B₁₂B₂₂⁻¹` for the split of `B` at `n`.
pub fn schur_reduction(b: &DMatrix<f64>, n: usize) -> Result<(SpdMatrix, DMatrix<f64>)> {
    if !b.is_square() || b.nrows() < n || n == 0 {
        return Err(invalid(format!("schur_reduction: B is {}x{}, n = {n}", b.nrows(), b.ncols())));
    }
    let p = b.nrows();
    let (e, d) = if p == n {
        (b.clone(), DMatrix::zeros(n, 0))
    } else {
        let m = p - n;
        let b11 = b.view((0, 0), (n, n)).into_owned();
        let b12 = b.view((0, n), (n, m)).into_owned();
        let b21 = b.view((n, 0), (m, n)).into_owned();
        let b22 = b.view((n, n), (m, m)).into_owned();
        let sv = b22.singular_values();
        let smax = sv.max();
        if !(sv.min() > 1e-12 * smax.max(1.0)) {
            return Err(Error::Degenerate(format!("B22 is singular (smallest singular value {:.3e})", sv.min())));
        }
        // D B₂₂ = B₁₂  ⇔  B₂₂ᵀ Dᵀ = B₁₂ᵀ
        let dt =
            b22.transpose().lu().solve(&b12.transpose()).ok_or_else(|| Error::Degenerate("B22 is singular".into()))?;
        let d = dt.transpose();
        (b11 - &d * b21, d)
    };
    let asym = (&e - e.transpose()).abs().max();
    if asym > SYM_TOL * e.abs().max().max(1.0) {
        return Err(Error::AssumptionViolated(format!("Schur complement E is not symmetric ({asym:.3e})")));
    }
    let e = SpdMatrix::new(e)
        .map_err(|_| Error::AssumptionViolated("Schur complement E is not positive definite".into()))?;
    Ok((e, d))
}

/// `[[Iₙ, −D],[0, 0]]` of size `p`.
fn upper_block(d: &DMatrix<f64>, n: usize, p: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(p, p);
    m.view_mut((0, 0), (n, n)).fill_with_identity();
    if p > n {
        m.view_mut((0, n), (n, p - n)).copy_from(&(-d));
    }
    m
}

pub fn glangevin_h_constants(
    n_metric: &SpdMatrix,
    e: &SpdMatrix,
    d: &DMatrix<f64>,
    n: usize,
    p: usize,
) -> Result<HConstants> {
    if n_metric.dim() != p || e.dim() != n || d.nrows() != n || d.ncols() != p - n {
        return Err(invalid("glangevin_h_constants: inconsistent shapes"));
    }
    let nm = n_metric.as_matrix();
    let mut ata = DMatrix::zeros(p, p);
    ata.view_mut((0, 0), (n, n)).fill_with_identity();
    let h1 = max_gen_eig(&(nm * &ata * nm), n_metric)?;
    let ee = e.eigen();
    let h2 = 1.0 / ee.min();
    let h3 = ee.max();
    let up = upper_block(d, n, p);
    let h4 = max_gen_eig(&sym(&up), n_metric)?;
    let h5 = if p == n {
        h4
    } else {
        let mut full = up.clone();
        full.view_mut((n, 0), (p - n, n)).copy_from(&(-d.transpose()));
        max_gen_eig(&full, n_metric)?
    };
    Ok(HConstants { h1, h2, h3, h4, h5 })
}

/// `γ₀ = 2√(h₁Λ/κ)·max(√(h₂h₅), √(h₄/κ))`.
pub fn glangevin_gamma0(h: &HConstants, kappa: f64, big_lambda: f64) -> f64 {
    2.0 * (h.h1 * big_lambda / kappa).sqrt() * (h.h2 * h.h5).sqrt().max((h.h4 / kappa).sqrt())
}

fn kappa_for(n_metric: &SpdMatrix, b: &DMatrix<f64>) -> Result<f64> {
    let kappa = min_gen_eig(&sym(&(n_metric.as_matrix() * b)), n_metric)?;
    if !(kappa > 0.0) {
        return Err(Error::AssumptionViolated(format!("supplied N gives NB >= kappa N only for kappa = {kappa:.3e}")));
    }
    Ok(kappa)
}

/// The friction threshold of the adjoint dynamics: `N → N⁻¹`, `B → Bᵀ`.
pub fn glangevin_gamma0_prime(b: &DMatrix<f64>, n_metric: &SpdMatrix, bounds: HessianBounds, n: usize) -> Result<f64> {
    let bt = b.transpose();
    let n_inv = SpdMatrix::new(n_metric.inverse())?;
    let kappa = kappa_for(&n_inv, &bt)?;
    let (e, d) = schur_reduction(&bt, n)?;
    let h = glangevin_h_constants(&n_inv, &e, &d, n, b.nrows())?;
    Ok(glangevin_gamma0(&h, kappa, bounds.upper()))
}

/// Certificate for the generalized Langevin drift with `A = (Iₙ, 0)`.
///
/// `N` defaults to the solution of `BᵀN + NB = I`.
pub fn glangevin_certificate(
    b: &DMatrix<f64>,
    bounds: HessianBounds,
    gamma: f64,
    n: usize,
    n_metric: Option<SpdMatrix>,
) -> Result<ContractionCertificate> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("friction must be positive, got {gamma}")));
    }
    let p = b.nrows();
    let (n_metric, kappa) = match n_metric {
        Some(nm) => {
            if nm.dim() != p {
                return Err(invalid("supplied N has the wrong size"));
            }
            let k = kappa_for(&nm, b)?;
            (nm, k)
        }
        None => lyapunov_metric(b)?,
    };
    let (e, d) = schur_reduction(b, n)?;
    let h = glangevin_h_constants(&n_metric, &e, &d, n, p)?;
    let big = bounds.upper();
    let gamma0 = glangevin_gamma0(&h, kappa, big);
    if gamma < gamma0 {
        return Err(Error::FrictionTooLow { gamma, required: gamma0 });
    }
    let alpha = kappa / (big * h.h1);

    let dim = n + p;
    let mut m = DMatrix::zeros(dim, dim);
    m.view_mut((0, 0), (n, n)).copy_from(e.as_matrix());
    // (A⁻¹)ᵀ = (Iₙ, −D)
    let right_inv_t = upper_block(&d, n, p).rows(0, n).into_owned();
    m.view_mut((0, n), (n, p)).copy_from(&(&right_inv_t / gamma));
    m.view_mut((n, 0), (p, n)).copy_from(&(right_inv_t.transpose() / gamma));
    m.view_mut((n, n), (p, p)).copy_from(&(n_metric.as_matrix() * alpha));
    let rho = (bounds.lower() / (3.0 * h.h3 * gamma)).min(gamma * kappa / 6.0);

    let mut diag = DMatrix::zeros(dim, dim);
    diag.view_mut((0, 0), (n, n)).copy_from(e.as_matrix());
    diag.view_mut((n, n), (p, p)).copy_from(&(n_metric.as_matrix() * alpha));
    if !(loewner_leq(&(&diag * 0.5), &m, 1e-9)? && loewner_leq(&m, &(&diag * 1.5), 1e-9)?) {
        return Err(Error::AssumptionViolated("metric sandwich bound fails".into()));
    }
    for xi in [bounds.lower(), bounds.upper()] {
        let v = cont_r_violation(&m, &surrogate_jacobian(xi, b, gamma, n), rho);
        if v > 1e-10 {
            return Err(Error::AssumptionViolated(format!("certificate fails at Hessian {xi}: violation {v:.3e}")));
        }
    }
    let metric = SpdMatrix::new(m)?;
    Ok(ContractionCertificate {
        metric,
        rho,
        gamma0: Some(gamma0),
        provenance: Provenance::Generalized(Box::new(GeneralizedParts { n_metric, kappa, e, d, h, alpha })),
    })
}
