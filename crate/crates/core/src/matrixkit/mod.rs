//! Dense real linear algebra used by the certificate and simulation layers.
//!
//! Everything here works on small dense matrices (dimensions up to a few
//! hundred). Symmetric spectral problems go through a deterministic cyclic
//! Jacobi solver so that results are reproducible bit-for-bit.

mod expm;
mod jacobi;
mod lyapunov;

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{invalid, Result};

pub use expm::expm;
pub use jacobi::{sym_eig, SymEigen};
pub use lyapunov::{lyapunov_metric, ou_exact_moments, ou_moments_raw, OuMoments};

/// Dense square matrix, possibly non-symmetric.
pub type SquareMatrix = DMatrix<f64>;

/// Absolute eigenvalue slack used by Loewner comparisons unless overridden.
pub const DEFAULT_TOL: f64 = 1e-10;

/// `(A + Aᵀ) / 2`.
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Symmetric positive-definite matrix with a lazily computed Cholesky factor.
#[derive(Clone)]
pub struct SpdMatrix {
    entries: DMatrix<f64>,
    chol: OnceLock<Cholesky<f64, Dyn>>,
}

impl std::fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("SpdMatrix").field(&self.entries).finish()
    }
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl SpdMatrix {
    /// Symmetrizes `m` and checks that its smallest eigenvalue is positive.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(invalid(format!("SpdMatrix: {}x{} is not square", m.nrows(), m.ncols())));
        }
        let entries = sym(&m);
        let eig = sym_eig(&entries)?;
        if eig.min() <= 0.0 {
            return Err(invalid(format!("SpdMatrix: smallest eigenvalue {:.3e} is not positive", eig.min())));
        }
        Ok(SpdMatrix { entries, chol: OnceLock::new() })
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix { entries: DMatrix::identity(n, n), chol: OnceLock::new() }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Lower-triangular factor `L` with `L Lᵀ = self`.
    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        self.chol.get_or_init(|| Cholesky::new(self.entries.clone()).expect("SpdMatrix invariant: Cholesky succeeds"))
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.cholesky().inverse()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        SpdMatrix::new(&self.entries * c)
    }

    pub fn eigen(&self) -> SymEigen {
        sym_eig(&self.entries).expect("finite by construction")
    }

    pub fn min_eig(&self) -> f64 {
        self.eigen().min()
    }

    pub fn max_eig(&self) -> f64 {
        self.eigen().max()
    }

    /// `‖v‖_M = sqrt(v·Mv)`.
    pub fn norm_of(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        debug_assert_eq!(v.len(), n);
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.entries[(i, j)] * v[j];
            }
            acc += v[i] * row;
        }
        acc.max(0.0).sqrt()
    }

    /// `L⁻¹ S L⁻ᵀ` for the Cholesky factor `L`; congruent to `N^{-1/2} S N^{-1/2}`.
    fn whiten(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let l = self.cholesky().l();
        let left = l.solve_lower_triangular(s).expect("Cholesky factor is invertible");
        let both = l.solve_lower_triangular(&left.transpose()).expect("Cholesky factor is invertible");
        sym(&both)
    }
}

fn check_same_dim(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<()> {
    if !a.is_square() || !b.is_square() || a.nrows() != b.nrows() {
        return Err(invalid(format!(
            "{what}: dimension mismatch {}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// `X ≤ Y` in the quadratic-form sense: `λ_min(sym(Y − X)) ≥ −tol`.
pub fn loewner_leq(x: &DMatrix<f64>, y: &DMatrix<f64>, tol: f64) -> Result<bool> {
    check_same_dim(x, y, "loewner_leq")?;
    let e = sym_eig(&sym(&(y - x)))?;
    Ok(e.min() >= -tol)
}

/// Smallest `h` with `S ≤ h N`, i.e. `λ_max(N^{-1/2} S N^{-1/2})`.
pub fn max_gen_eig(s: &DMatrix<f64>, n: &SpdMatrix) -> Result<f64> {
    check_same_dim(s, n.as_matrix(), "max_gen_eig")?;
    Ok(sym_eig(&n.whiten(&sym(s)))?.max())
}

/// Largest `k` with `k N ≤ S`, i.e. `λ_min(N^{-1/2} S N^{-1/2})`.
pub fn min_gen_eig(s: &DMatrix<f64>, n: &SpdMatrix) -> Result<f64> {
    check_same_dim(s, n.as_matrix(), "min_gen_eig")?;
    Ok(sym_eig(&n.whiten(&sym(s)))?.min())
}

/// Symmetric square root of an SPD matrix.
pub fn sqrt_spd(n: &SpdMatrix) -> SpdMatrix {
    let root = n.eigen().map(f64::sqrt);
    SpdMatrix { entries: sym(&root), chol: OnceLock::new() }
}

/// Symmetric square root of a positive semidefinite matrix; eigenvalues in
/// `[-tol, 0)` are clamped to zero. Diagonal inputs are handled entrywise.
pub fn sqrt_psd(s: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if !s.is_square() {
        return Err(invalid("sqrt_psd: not square"));
    }
    let n = s.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || s[(i, j)] == 0.0));
    if diagonal {
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            let d = s[(i, i)];
            if d < -tol {
                return Err(invalid(format!("sqrt_psd: negative eigenvalue {d:.3e}")));
            }
            out[(i, i)] = d.max(0.0).sqrt();
        }
        return Ok(out);
    }
    let e = sym_eig(s)?;
    if e.min() < -tol {
        return Err(invalid(format!("sqrt_psd: negative eigenvalue {:.3e}", e.min())));
    }
    Ok(sym(&e.map(|v| v.max(0.0).sqrt())))
}

/// Spectral (operator 2-) norm.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = a.transpose() * a;
    sym_eig(&gram).map(|e| e.max().max(0.0).sqrt()).unwrap_or(f64::NAN)
}

/// Block-diagonal assembly of two square blocks.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Whether every `block × block` sub-block of `m` is a multiple of the identity.
pub fn is_block_homothety(m: &DMatrix<f64>, block: usize, tol: f64) -> bool {
    if block == 0 || m.nrows() % block != 0 || m.ncols() % block != 0 {
        return false;
    }
    let scale = m.abs().max().max(1.0);
    for bi in 0..m.nrows() / block {
        for bj in 0..m.ncols() / block {
            let d = m[(bi * block, bj * block)];
            for i in 0..block {
                for j in 0..block {
                    let want = if i == j { d } else { 0.0 };
                    if (m[(bi * block + i, bj * block + j)] - want).abs() > tol * scale {
                        return false;
                    }
                }
            }
        }
    }
    true
}
