use nalgebra::DMatrix;

use super::{expm, loewner_leq, sym, SpdMatrix};
use crate::error::{invalid, Error, Result};

/// Threshold below which an eigenvalue real part counts as non-positive.
const STABILITY_EPS: f64 = 1e-12;

/// Solves `BᵀN + NB = I` and returns `(N, κ)` with `κ = 1 / (2 λ_max(N))`,
/// so that `NB ≥ κN` in the quadratic-form sense.
pub fn lyapunov_metric(b: &DMatrix<f64>) -> Result<(SpdMatrix, f64)> {
    if !b.is_square() || b.nrows() == 0 {
        return Err(invalid("lyapunov_metric: B must be square and non-empty"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(invalid("lyapunov_metric: non-finite entry"));
    }
    let min_re = b.complex_eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if min_re <= STABILITY_EPS {
        return Err(Error::NotStable { min_re });
    }

    let p = b.nrows();
    let ident = DMatrix::<f64>::identity(p, p);
    // Column-major vec: vec(BᵀN) = (I ⊗ Bᵀ) vec N, vec(NB) = (Bᵀ ⊗ I) vec N.
    let bt = b.transpose();
    let op = ident.kronecker(&bt) + bt.kronecker(&ident);
    let rhs = DMatrix::<f64>::identity(p, p);
    let rhs = nalgebra::DVector::from_column_slice(rhs.as_slice());
    let sol = op.lu().solve(&rhs).ok_or_else(|| Error::NotStable { min_re })?;
    let n = DMatrix::from_column_slice(p, p, sol.as_slice());
    let n = SpdMatrix::new(sym(&n)).map_err(|_| Error::NotStable { min_re })?;

    let kappa = 1.0 / (2.0 * n.max_eig());
    let nb = sym(&(n.as_matrix() * b));
    if !loewner_leq(&(n.as_matrix() * kappa), &nb, 1e-10)? {
        return Err(Error::NotStable { min_re });
    }
    Ok((n, kappa))
}

/// Exact one-step transition of `dY = −G Y dt + dW_Q` over a time `delta`,
/// where `W_Q` has covariance rate `Q`.
#[derive(Debug, Clone)]
pub struct OuMoments {
    pub mean_map: DMatrix<f64>,
    pub cov: DMatrix<f64>,
}

/// Transition moments for drift matrix `-g` and noise covariance rate `q`,
/// using Van Loan's block exponential for the covariance integral.
pub fn ou_moments_raw(g: &DMatrix<f64>, q: &DMatrix<f64>, delta: f64) -> Result<OuMoments> {
    if !(delta > 0.0) {
        return Err(invalid(format!("ou moments: delta must be positive, got {delta}")));
    }
    let p = g.nrows();
    if !g.is_square() || q.nrows() != p || q.ncols() != p {
        return Err(invalid("ou moments: shape mismatch"));
    }
    let mean_map = expm(&(g * (-delta)));

    // expm(δ [[G, Q], [0, -Gᵀ]]) = [[·, F12], [0, F22]] with F22ᵀ = e^{-Gδ}
    // and cov = F22ᵀ F12.
    let mut block = DMatrix::zeros(2 * p, 2 * p);
    block.view_mut((0, 0), (p, p)).copy_from(&(g * delta));
    block.view_mut((0, p), (p, p)).copy_from(&(q * delta));
    block.view_mut((p, p), (p, p)).copy_from(&(g.transpose() * (-delta)));
    let f = expm(&block);
    let f12 = f.view((0, p), (p, p)).into_owned();
    let f22 = f.view((p, p), (p, p)).into_owned();
    let cov = sym(&(f22.transpose() * f12));
    Ok(OuMoments { mean_map, cov })
}

/// Exact moments of `dY = −γBY dt + √γ Σ dW` over one step `delta`.
pub fn ou_exact_moments(b: &DMatrix<f64>, sigma: &DMatrix<f64>, gamma: f64, delta: f64) -> Result<OuMoments> {
    if sigma.nrows() != b.nrows() {
        return Err(invalid("ou_exact_moments: Sigma rows must match B"));
    }
    ou_moments_raw(&(b * gamma), &(sigma * sigma.transpose() * gamma), delta)
}
