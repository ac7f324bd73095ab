use nalgebra::DMatrix;

use super::potential::SharedPotential;
use crate::error::{invalid, Error, Result};
use crate::matrixkit::{sqrt_psd, sym_eig};

const FD_TOL: f64 = 1e-12;

/// How the drift is computed.
#[derive(Debug, Clone)]
pub enum Dynamics {
    /// `b(x, y) = (y, −∇U(x) − γy)`.
    Langevin { potential: SharedPotential, gamma: f64 },
    /// `b(x, y) = (Ay, −Aᵀ∇U(x) − γBy)` with `A = (Iₙ, 0)`.
    GLangevin { potential: SharedPotential, b: DMatrix<f64>, gamma: f64 },
    /// `b(z) = Gz + c`.
    Affine { g: DMatrix<f64>, c: Vec<f64> },
}

/// Which physical system a model was built from.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Langevin,
    GLangevin,
    /// Chain of `ncount` oscillators in `ℝᵖ`, pinned or centred (unpinned, projected).
    Chain {
        ncount: usize,
        p: usize,
        pinned: bool,
        temperatures: Vec<f64>,
    },
    Generic,
}

/// Noise choice for the generalized Langevin constructor.
#[derive(Debug, Clone)]
pub enum GlNoise {
    /// `ΣΣᵀ = B + Bᵀ`.
    FluctuationDissipation,
    /// Explicit `p × p` factor `Σ`.
    Explicit(DMatrix<f64>),
    None,
}

/// `dZ = b(Z) dt + Σ dW` with constant `Σ`.
#[derive(Debug, Clone)]
pub struct DriftModel {
    dynamics: Dynamics,
    diffusion: DMatrix<f64>,
    family: Family,
}

impl DriftModel {
    pub fn dim(&self) -> usize {
        self.diffusion.nrows()
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }

    pub fn potential(&self) -> Option<&SharedPotential> {
        match &self.dynamics {
            Dynamics::Langevin { potential, .. } | Dynamics::GLangevin { potential, .. } => Some(potential),
            Dynamics::Affine { .. } => None,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match &self.dynamics {
            Dynamics::Langevin { gamma, .. } | Dynamics::GLangevin { gamma, .. } => Some(*gamma),
            Dynamics::Affine { .. } => None,
        }
    }

    /// Dimension `n` of the position block, for kinetic models.
    pub fn position_dim(&self) -> Option<usize> {
        self.potential().map(|u| u.dim())
    }

    /// `B`, the friction matrix acting on the velocity block (`I` for Langevin).
    pub fn friction_matrix(&self) -> Option<DMatrix<f64>> {
        match &self.dynamics {
            Dynamics::Langevin { potential, .. } => {
                let n = potential.dim();
                Some(DMatrix::identity(n, n))
            }
            Dynamics::GLangevin { b, .. } => Some(b.clone()),
            Dynamics::Affine { .. } => None,
        }
    }

    pub(crate) fn with_family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }

    pub(crate) fn with_diffusion(mut self, diffusion: DMatrix<f64>) -> Self {
        self.diffusion = diffusion;
        self
    }

    /// Writes `b(z)` into `out`.
    pub fn drift(&self, z: &[f64], out: &mut [f64]) {
        match &self.dynamics {
            Dynamics::Langevin { potential, gamma } => {
                let n = potential.dim();
                let (x, y) = z.split_at(n);
                let (ox, oy) = out.split_at_mut(n);
                potential.gradient(x, oy);
                for i in 0..n {
                    ox[i] = y[i];
                    oy[i] = -oy[i] - gamma * y[i];
                }
            }
            Dynamics::GLangevin { potential, b, gamma } => {
                let n = potential.dim();
                let p = b.nrows();
                let (x, y) = z.split_at(n);
                let (ox, oy) = out.split_at_mut(n);
                potential.gradient(x, &mut oy[..n]);
                for i in 0..p {
                    let mut by = 0.0;
                    for j in 0..p {
                        let bij = b[(i, j)];
                        if bij != 0.0 {
                            by += bij * y[j];
                        }
                    }
                    let force = if i < n { oy[i] } else { 0.0 };
                    oy[i] = -force - gamma * by;
                }
                ox.copy_from_slice(&y[..n]);
            }
            Dynamics::Affine { g, c } => {
                let d = c.len();
                for i in 0..d {
                    let mut acc = c[i];
                    for j in 0..d {
                        acc += g[(i, j)] * z[j];
                    }
                    out[i] = acc;
                }
            }
        }
    }

    pub fn drift_vec(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.drift(z, &mut out);
        out
    }

    /// `J_b(z)`.
    pub fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        match &self.dynamics {
            Dynamics::Langevin { potential, gamma } => {
                let n = potential.dim();
                let h = potential.hessian(&z[..n]);
                let mut j = DMatrix::zeros(d, d);
                for i in 0..n {
                    j[(i, n + i)] = 1.0;
                    j[(n + i, n + i)] = -gamma;
                    for k in 0..n {
                        j[(n + i, k)] = -h[(i, k)];
                    }
                }
                j
            }
            Dynamics::GLangevin { potential, b, gamma } => {
                let n = potential.dim();
                let p = b.nrows();
                let h = potential.hessian(&z[..n]);
                let mut j = DMatrix::zeros(d, d);
                for i in 0..n {
                    j[(i, n + i)] = 1.0;
                    for k in 0..n {
                        j[(n + i, k)] = -h[(i, k)];
                    }
                }
                for i in 0..p {
                    for k in 0..p {
                        j[(n + i, n + k)] = -gamma * b[(i, k)];
                    }
                }
                j
            }
            Dynamics::Affine { g, .. } => g.clone(),
        }
    }
}

/// Classical kinetic Langevin: `Σ = √(2γ) diag(0, I)`.
pub fn langevin_drift(potential: SharedPotential, gamma: f64) -> Result<DriftModel> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("friction must be positive, got {gamma}")));
    }
    let n = potential.dim();
    let mut diffusion = DMatrix::zeros(2 * n, 2 * n);
    let s = (2.0 * gamma).sqrt();
    for i in 0..n {
        diffusion[(n + i, n + i)] = s;
    }
    Ok(DriftModel { dynamics: Dynamics::Langevin { potential, gamma }, diffusion, family: Family::Langevin })
}

/// Generalized Langevin with `p = B.nrows() ≥ n` auxiliary velocities.
pub fn glangevin_drift(potential: SharedPotential, b: DMatrix<f64>, gamma: f64, noise: GlNoise) -> Result<DriftModel> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("friction must be positive, got {gamma}")));
    }
    let n = potential.dim();
    if !b.is_square() || b.nrows() < n {
        return Err(invalid(format!("B must be square with p >= n = {n}, got {}x{}", b.nrows(), b.ncols())));
    }
    let p = b.nrows();
    let block = match noise {
        GlNoise::FluctuationDissipation => {
            let cov = (&b + b.transpose()) * gamma;
            let min_eig = sym_eig(&(&b + b.transpose()))?.min();
            if min_eig < -FD_TOL {
                return Err(Error::FdViolation { min_eig });
            }
            sqrt_psd(&cov, FD_TOL * gamma.max(1.0))?
        }
        GlNoise::Explicit(s) => {
            if s.nrows() != p || s.ncols() != p {
                return Err(invalid("explicit Sigma must be p x p"));
            }
            s * gamma.sqrt()
        }
        GlNoise::None => DMatrix::zeros(p, p),
    };
    let d = n + p;
    let mut diffusion = DMatrix::zeros(d, d);
    diffusion.view_mut((n, n), (p, p)).copy_from(&block);
    Ok(DriftModel { dynamics: Dynamics::GLangevin { potential, b, gamma }, diffusion, family: Family::GLangevin })
}

/// `b(z) = Gz + c` with constant diffusion `Σ`.
pub fn affine_drift(g: DMatrix<f64>, c: Vec<f64>, sigma: DMatrix<f64>) -> Result<DriftModel> {
    let d = c.len();
    if g.nrows() != d || g.ncols() != d || sigma.nrows() != d || sigma.ncols() != d {
        return Err(invalid("affine drift: shape mismatch"));
    }
    Ok(DriftModel { dynamics: Dynamics::Affine { g, c }, diffusion: sigma, family: Family::Generic })
}

/// `A = (Iₙ 0 … 0)` and the block-tridiagonal `B` of the order-`K+1` lift.
pub fn order_k_system(k: usize, n: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if k == 0 || n == 0 {
        return Err(invalid("order_k_system needs K >= 1 and n >= 1"));
    }
    let p = k * n;
    let mut a = DMatrix::zeros(n, p);
    a.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut b = DMatrix::zeros(p, p);
    for blk in 0..k - 1 {
        for i in 0..n {
            b[(blk * n + i, (blk + 1) * n + i)] = -1.0;
            b[((blk + 1) * n + i, blk * n + i)] = 1.0;
        }
    }
    for i in 0..n {
        b[((k - 1) * n + i, (k - 1) * n + i)] = 1.0;
    }
    Ok((a, b))
}
