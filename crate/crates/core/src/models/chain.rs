use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

use super::drift::{langevin_drift, DriftModel, Family};
use super::potential::{HessianBounds, HessianRange, Potential, SharedPotential};
use crate::error::{invalid, Result};
use crate::matrixkit::sqrt_psd;

const EVEN_PROBES: usize = 64;

/// `U(x) = Σ V(xᵢ) + Σ F(xᵢ − xᵢ₊₁)` on `(ℝᵖ)^N`, path interaction graph.
#[derive(Debug, Clone)]
pub struct ChainPotential {
    pinning: Option<SharedPotential>,
    interaction: SharedPotential,
    ncount: usize,
    p: usize,
}

impl ChainPotential {
    pub fn ncount(&self) -> usize {
        self.ncount
    }

    pub fn site_dim(&self) -> usize {
        self.p
    }

    fn diff(&self, x: &[f64], i: usize) -> Vec<f64> {
        let p = self.p;
        (0..p).map(|k| x[i * p + k] - x[(i + 1) * p + k]).collect()
    }
}

impl Potential for ChainPotential {
    fn dim(&self) -> usize {
        self.ncount * self.p
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let p = self.p;
        let mut e = 0.0;
        if let Some(v) = &self.pinning {
            for i in 0..self.ncount {
                e += v.energy(&x[i * p..(i + 1) * p]);
            }
        }
        for i in 0..self.ncount - 1 {
            e += self.interaction.energy(&self.diff(x, i));
        }
        e
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let p = self.p;
        let mut buf = vec![0.0; p];
        out.iter_mut().for_each(|o| *o = 0.0);
        if let Some(v) = &self.pinning {
            for i in 0..self.ncount {
                v.gradient(&x[i * p..(i + 1) * p], &mut buf);
                out[i * p..(i + 1) * p].copy_from_slice(&buf);
            }
        }
        for i in 0..self.ncount - 1 {
            self.interaction.gradient(&self.diff(x, i), &mut buf);
            for k in 0..p {
                out[i * p + k] += buf[k];
                out[(i + 1) * p + k] -= buf[k];
            }
        }
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let p = self.p;
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        if let Some(v) = &self.pinning {
            for i in 0..self.ncount {
                let hv = v.hessian(&x[i * p..(i + 1) * p]);
                h.view_mut((i * p, i * p), (p, p)).copy_from(&hv);
            }
        }
        for i in 0..self.ncount - 1 {
            let hf = self.interaction.hessian(&self.diff(x, i));
            let (a, b) = (i * p, (i + 1) * p);
            for r in 0..p {
                for c in 0..p {
                    let v = hf[(r, c)];
                    h[(a + r, a + c)] += v;
                    h[(b + r, b + c)] += v;
                    h[(a + r, b + c)] -= v;
                    h[(b + r, a + c)] -= v;
                }
            }
        }
        h
    }

    fn hessian_range(&self) -> Option<HessianRange> {
        let f = self.interaction.hessian_range()?;
        let (flo, fhi) = if self.ncount > 1 { (4.0 * f.lo.min(0.0), 4.0 * f.hi.max(0.0)) } else { (0.0, 0.0) };
        match &self.pinning {
            Some(v) => {
                let v = v.hessian_range()?;
                Some(HessianRange { lo: v.lo + flo, hi: v.hi + fhi })
            }
            None => Some(HessianRange { lo: flo, hi: fhi }),
        }
    }
}

/// Builds the chain potential. `F` must be even; this is checked on random probes.
pub fn chain_potential(
    pinning: Option<SharedPotential>,
    interaction: SharedPotential,
    ncount: usize,
) -> Result<Arc<ChainPotential>> {
    if ncount == 0 {
        return Err(invalid("chain needs at least one particle"));
    }
    let p = interaction.dim();
    if let Some(v) = &pinning {
        if v.dim() != p {
            return Err(invalid(format!("V acts on R^{} but F on R^{p}", v.dim())));
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut s = vec![0.0; p];
    let mut minus = vec![0.0; p];
    for _ in 0..EVEN_PROBES {
        for k in 0..p {
            s[k] = rng.random_range(-3.0..3.0);
            minus[k] = -s[k];
        }
        let (a, b) = (interaction.energy(&s), interaction.energy(&minus));
        if (a - b).abs() > 1e-10 * a.abs().max(1.0) {
            return Err(invalid(format!("interaction F is not even: F(s)={a}, F(-s)={b}")));
        }
    }
    Ok(Arc::new(ChainPotential { pinning, interaction, ncount, p }))
}

/// Pinned-chain bounds `λ = λ_min(∇²V) − 4κ₋`, `Λ = ‖∇²V‖∞ + 4‖∇²F‖∞`.
pub fn chain_bounds_pinned(
    pinning: &dyn Potential,
    interaction: &dyn Potential,
    kappa_minus: f64,
) -> Result<HessianBounds> {
    let v = pinning.hessian_range().ok_or_else(|| invalid("pinning potential has no declared Hessian range"))?;
    let f =
        interaction.hessian_range().ok_or_else(|| invalid("interaction potential has no declared Hessian range"))?;
    if !(kappa_minus >= 0.0) {
        return Err(invalid(format!("kappa_minus must be non-negative, got {kappa_minus}")));
    }
    if f.lo < -kappa_minus - 1e-12 {
        return Err(invalid(format!(
            "interaction Hessian goes down to {} below -kappa_minus = {}",
            f.lo, -kappa_minus
        )));
    }
    let lambda = v.lo - 4.0 * kappa_minus;
    if !(lambda > 0.0) {
        return Err(invalid(format!(
            "pinning curvature {} does not dominate 4 kappa_minus = {}",
            v.lo,
            4.0 * kappa_minus
        )));
    }
    HessianBounds::new(lambda, v.sup_norm() + 4.0 * f.sup_norm())
}

/// Helmert basis of `{u : Σuᵢ = 0}` tensored with `Iₚ`; shape `p(N−1) × pN`.
pub fn unpinned_projection(ncount: usize, p: usize) -> Result<DMatrix<f64>> {
    if ncount < 2 || p == 0 {
        return Err(invalid("projection needs at least two particles"));
    }
    let mut h = DMatrix::zeros(ncount - 1, ncount);
    for k in 1..ncount {
        let kf = k as f64;
        let norm = (kf * (kf + 1.0)).sqrt();
        for j in 0..k {
            h[(k - 1, j)] = 1.0 / norm;
        }
        h[(k - 1, k)] = -kf / norm;
    }
    Ok(h.kronecker(&DMatrix::identity(p, p)))
}

/// Unpinned-chain bounds `λ = κ/N²`, `Λ = 4‖∇²F‖∞` with `κ = λ_min(∇²F)`.
pub fn chain_bounds_unpinned(interaction: &dyn Potential, ncount: usize) -> Result<HessianBounds> {
    let f =
        interaction.hessian_range().ok_or_else(|| invalid("interaction potential has no declared Hessian range"))?;
    if !(f.lo > 0.0) {
        return Err(invalid(format!("unpinned chain needs a convex interaction, kappa = {}", f.lo)));
    }
    let nf = ncount as f64;
    HessianBounds::new(f.lo / (nf * nf), 4.0 * f.sup_norm())
}

/// `U^c(x) = U(Qᵀx)` with a declared Hessian range.
#[derive(Debug, Clone)]
pub struct Projected {
    inner: SharedPotential,
    q: DMatrix<f64>,
    range: Option<HessianRange>,
}

impl Projected {
    fn lift(&self, x: &[f64]) -> Vec<f64> {
        let full = self.q.ncols();
        (0..full).map(|j| (0..x.len()).map(|i| self.q[(i, j)] * x[i]).sum()).collect()
    }
}

impl Potential for Projected {
    fn dim(&self) -> usize {
        self.q.nrows()
    }

    fn energy(&self, x: &[f64]) -> f64 {
        self.inner.energy(&self.lift(x))
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let lifted = self.lift(x);
        let mut g = vec![0.0; lifted.len()];
        self.inner.gradient(&lifted, &mut g);
        for i in 0..out.len() {
            out[i] = (0..g.len()).map(|j| self.q[(i, j)] * g[j]).sum();
        }
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let h = self.inner.hessian(&self.lift(x));
        &self.q * h * self.q.transpose()
    }

    fn hessian_range(&self) -> Option<HessianRange> {
        self.range
    }
}

/// Temperatures `Tᵢ` for `ncount` sites, with optional endpoint overrides.
pub fn site_temperatures(ncount: usize, left: Option<f64>, right: Option<f64>) -> Vec<f64> {
    let mut t = vec![1.0; ncount];
    if let Some(l) = left {
        t[0] = l;
    }
    if let Some(r) = right {
        t[ncount - 1] = r;
    }
    t
}

fn check_temperatures(t: &[f64], ncount: usize) -> Result<()> {
    if t.len() != ncount {
        return Err(invalid(format!("expected {ncount} temperatures, got {}", t.len())));
    }
    if t.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(invalid("temperatures must be finite and non-negative"));
    }
    Ok(())
}

fn velocity_noise(gamma: f64, t: &[f64], p: usize) -> DMatrix<f64> {
    let m = t.len() * p;
    let mut s = DMatrix::zeros(m, m);
    for (i, ti) in t.iter().enumerate() {
        let v = (2.0 * gamma * ti).sqrt();
        for k in 0..p {
            s[(i * p + k, i * p + k)] = v;
        }
    }
    s
}

/// Kinetic Langevin on a pinned chain with per-site noise `√(2γTᵢ)`.
pub fn pinned_chain_langevin(chain: Arc<ChainPotential>, gamma: f64, temperatures: &[f64]) -> Result<DriftModel> {
    let (ncount, p) = (chain.ncount, chain.p);
    check_temperatures(temperatures, ncount)?;
    let model = langevin_drift(chain, gamma)?;
    let n = ncount * p;
    let mut diffusion = DMatrix::zeros(2 * n, 2 * n);
    diffusion.view_mut((n, n), (n, n)).copy_from(&velocity_noise(gamma, temperatures, p));
    Ok(model.with_diffusion(diffusion).with_family(Family::Chain {
        ncount,
        p,
        pinned: true,
        temperatures: temperatures.to_vec(),
    }))
}

/// An unpinned chain together with its centred, projected reduction.
#[derive(Debug, Clone)]
pub struct UnpinnedChain {
    /// Dynamics of the full, translation-invariant chain.
    pub full: DriftModel,
    /// Dynamics of `(Qx, Qy)`; this is the model that contracts.
    pub projected: DriftModel,
    pub q: DMatrix<f64>,
    pub bounds: HessianBounds,
}

impl UnpinnedChain {
    /// `(x, y) ↦ (Qx, Qy)`.
    pub fn project(&self, z_full: &[f64]) -> Vec<f64> {
        let (m, full) = self.q.shape();
        let mut out = vec![0.0; 2 * m];
        for half in 0..2 {
            for i in 0..m {
                out[half * m + i] = (0..full).map(|j| self.q[(i, j)] * z_full[half * full + j]).sum();
            }
        }
        out
    }

    /// `(x, y) ↦ (Qᵀx, Qᵀy)`, a centred configuration of the full chain.
    pub fn lift(&self, z: &[f64]) -> Vec<f64> {
        let (m, full) = self.q.shape();
        let mut out = vec![0.0; 2 * full];
        for half in 0..2 {
            for j in 0..full {
                out[half * full + j] = (0..m).map(|i| self.q[(i, j)] * z[half * m + i]).sum();
            }
        }
        out
    }
}

/// Builds the unpinned chain with interaction `F` and its projection.
pub fn unpinned_chain_langevin(
    interaction: SharedPotential,
    ncount: usize,
    gamma: f64,
    temperatures: &[f64],
) -> Result<UnpinnedChain> {
    let p = interaction.dim();
    check_temperatures(temperatures, ncount)?;
    let bounds = chain_bounds_unpinned(interaction.as_ref(), ncount)?;
    let chain = chain_potential(None, interaction, ncount)?;
    let q = unpinned_projection(ncount, p)?;
    let family = Family::Chain { ncount, p, pinned: false, temperatures: temperatures.to_vec() };

    let n = ncount * p;
    let s = velocity_noise(gamma, temperatures, p);
    let mut diffusion = DMatrix::zeros(2 * n, 2 * n);
    diffusion.view_mut((n, n), (n, n)).copy_from(&s);
    let full = langevin_drift(chain.clone(), gamma)?.with_diffusion(diffusion).with_family(family.clone());

    let projected_u = Arc::new(Projected { inner: chain, q: q.clone(), range: Some(bounds.range()) });
    let m = q.nrows();
    let qs = &q * &s;
    let block = sqrt_psd(&(&qs * qs.transpose()), 1e-12)?;
    let mut pdiff = DMatrix::zeros(2 * m, 2 * m);
    pdiff.view_mut((m, m), (m, m)).copy_from(&block);
    let projected = langevin_drift(projected_u, gamma)?.with_diffusion(pdiff).with_family(family);
    Ok(UnpinnedChain { full, projected, q, bounds })
}
