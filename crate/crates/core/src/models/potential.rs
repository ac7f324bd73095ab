use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::matrixkit::SpdMatrix;

/// Declared range `[lo, hi]` of the Hessian spectrum of a potential, uniform in `x`.
///
/// `lo` may be negative (interaction potentials need not be convex).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianRange {
    pub lo: f64,
    pub hi: f64,
}

impl HessianRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(invalid(format!("Hessian range [{lo}, {hi}] is invalid")));
        }
        Ok(HessianRange { lo, hi })
    }

    /// `‖∇²U‖_∞`, the largest possible spectral norm of the Hessian.
    pub fn sup_norm(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Uniform Hessian bounds `λ I ≤ ∇²U(x) ≤ Λ I` with `0 < λ ≤ Λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianBounds {
    lower: f64,
    upper: f64,
}

impl HessianBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(invalid(format!("Hessian bounds need 0 < lambda <= Lambda, got ({lower}, {upper})")));
        }
        Ok(HessianBounds { lower, upper })
    }

    /// λ
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Λ
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn range(&self) -> HessianRange {
        HessianRange { lo: self.lower, hi: self.upper }
    }
}

impl TryFrom<HessianRange> for HessianBounds {
    type Error = crate::Error;

    fn try_from(r: HessianRange) -> Result<Self> {
        HessianBounds::new(r.lo, r.hi)
    }
}

/// A smooth potential `U : ℝⁿ → ℝ` with gradient and Hessian.
pub trait Potential: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn energy(&self, x: &[f64]) -> f64;
    /// Writes `∇U(x)` into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
    /// Uniform Hessian spectrum range, when known.
    fn hessian_range(&self) -> Option<HessianRange> {
        None
    }
}

pub type SharedPotential = Arc<dyn Potential>;

/// `U(x) = x·Sx / 2`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    s: SpdMatrix,
    range: HessianRange,
}

impl Potential for Quadratic {
    fn dim(&self) -> usize {
        self.s.dim()
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let n = self.s.norm_of(x);
        0.5 * n * n
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let s = self.s.as_matrix();
        for i in 0..x.len() {
            out[i] = (0..x.len()).map(|j| s[(i, j)] * x[j]).sum();
        }
    }

    fn hessian(&self, _x: &[f64]) -> DMatrix<f64> {
        self.s.as_matrix().clone()
    }

    fn hessian_range(&self) -> Option<HessianRange> {
        Some(self.range)
    }
}

pub fn quadratic_potential(s: SpdMatrix) -> SharedPotential {
    let e = s.eigen();
    let range = HessianRange { lo: e.min(), hi: e.max() };
    Arc::new(Quadratic { s, range })
}

/// Separable potential `Σᵢ u(xᵢ)` with `u″(s) = lo + (hi − lo)(1 + cos s)/2`.
///
/// The Hessian is diagonal, equals `hi` at `s = 0` and `lo` at `s = π`.
#[derive(Debug, Clone)]
pub struct CosineModulated {
    lo: f64,
    hi: f64,
    n: usize,
}

impl CosineModulated {
    fn u(&self, s: f64) -> f64 {
        0.5 * self.lo * s * s + 0.5 * (self.hi - self.lo) * (0.5 * s * s + 1.0 - s.cos())
    }

    fn du(&self, s: f64) -> f64 {
        self.lo * s + 0.5 * (self.hi - self.lo) * (s + s.sin())
    }

    fn d2u(&self, s: f64) -> f64 {
        self.lo + 0.5 * (self.hi - self.lo) * (1.0 + s.cos())
    }
}

impl Potential for CosineModulated {
    fn dim(&self) -> usize {
        self.n
    }

    fn energy(&self, x: &[f64]) -> f64 {
        x.iter().map(|&s| self.u(s)).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &s) in out.iter_mut().zip(x) {
            *o = self.du(s);
        }
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(self.n, x.iter().map(|&s| self.d2u(s))))
    }

    fn hessian_range(&self) -> Option<HessianRange> {
        Some(HessianRange { lo: self.lo, hi: self.hi })
    }
}

pub fn cosine_modulated_potential(bounds: HessianBounds, n: usize) -> SharedPotential {
    Arc::new(CosineModulated { lo: bounds.lower(), hi: bounds.upper(), n })
}

/// Cosine-modulated family with an arbitrary (possibly negative) lower end.
pub fn cosine_modulated_range(range: HessianRange, n: usize) -> SharedPotential {
    Arc::new(CosineModulated { lo: range.lo, hi: range.hi, n })
}

/// `U ≡ 0`.
#[derive(Debug, Clone)]
pub struct Flat {
    n: usize,
}

impl Potential for Flat {
    fn dim(&self) -> usize {
        self.n
    }

    fn energy(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }

    fn hessian(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(self.n, self.n)
    }

    fn hessian_range(&self) -> Option<HessianRange> {
        Some(HessianRange { lo: 0.0, hi: 0.0 })
    }
}

pub fn flat_potential(n: usize) -> SharedPotential {
    Arc::new(Flat { n })
}
