use nalgebra::DMatrix;

use super::{cont_r_violation, surrogate_jacobian, ContractionCertificate, HessianBounds, Provenance};
use crate::error::{invalid, Error, Result};
use crate::matrixkit::{is_block_homothety, loewner_leq, min_gen_eig, sym, SpdMatrix};
use crate::models::{chain_bounds_pinned, chain_bounds_unpinned, Potential};

const VERIFY_TOL: f64 = 1e-10;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("friction must be positive, got {gamma}")))
    }
}

/// `Λ − λ < γ(√Λ + √λ)`: a contraction exists for every potential with these bounds.
pub fn sharp_condition(bounds: HessianBounds, gamma: f64) -> bool {
    let (l, u) = (bounds.lower(), bounds.upper());
    u - l < gamma * (u.sqrt() + l.sqrt())
}

/// `[[I, cI], [cI, aI]]` of size `2n`.
fn two_block(c: f64, a: f64, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        m[(i, n + i)] = c;
        m[(n + i, i)] = c;
        m[(n + i, n + i)] = a;
    }
    m
}

fn verify_endpoints(m: &DMatrix<f64>, bounds: HessianBounds, gamma: f64, rho: f64, n: usize) -> Result<()> {
    let b = DMatrix::identity(n, n);
    for xi in [bounds.lower(), bounds.upper()] {
        let v = cont_r_violation(m, &surrogate_jacobian(xi, &b, gamma, n), rho);
        if v > VERIFY_TOL {
            return Err(Error::AssumptionViolated(format!("certificate fails at Hessian {xi}: violation {v:.3e}")));
        }
    }
    Ok(())
}

/// `M = [[I, I/γ], [I/γ, I/Λ]]` with `ρ = λ/(3γ)`, valid for `γ ≥ 2√Λ`.
pub fn langevin_metric_simple(bounds: HessianBounds, gamma: f64, n: usize) -> Result<ContractionCertificate> {
    check_gamma(gamma)?;
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let big = bounds.upper();
    let required = 2.0 * big.sqrt();
    if gamma < required {
        return Err(Error::FrictionTooLow { gamma, required });
    }
    let m = two_block(1.0 / gamma, 1.0 / big, n);
    let rho = bounds.lower() / (3.0 * gamma);

    let eye = DMatrix::<f64>::identity(2 * n, 2 * n);
    let lo = &eye * (0.5 * 1f64.min(1.0 / big));
    let hi = &eye * (1.5 * 1f64.max(1.0 / big));
    if !(loewner_leq(&lo, &m, VERIFY_TOL)? && loewner_leq(&m, &hi, VERIFY_TOL)?) {
        return Err(Error::AssumptionViolated("metric norm-equivalence bounds fail".into()));
    }
    verify_endpoints(&m, bounds, gamma, rho, n)?;
    Ok(ContractionCertificate {
        metric: SpdMatrix::new(m)?,
        rho,
        gamma0: Some(required),
        provenance: Provenance::SimpleLangevin,
    })
}

/// A pair `(a, c)` with `c² < a` making `[[1,c],[c,a]]·[[0,−1],[ξ,γ]]` positive for `ξ ∈ {λ, Λ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaPair {
    pub a: f64,
    pub c: f64,
    /// `1/c`, the midpoint of the feasible interval.
    pub beta: f64,
}

fn lemma_interval(xi: f64, gamma: f64) -> (f64, f64) {
    let centre = 2.0 * xi / gamma + gamma;
    let half = 2.0 * xi.sqrt();
    (centre - half, centre + half)
}

fn lemma_product_positive(a: f64, c: f64, xi: f64, gamma: f64) -> bool {
    // sym([[1,c],[c,a]]·[[0,-1],[ξ,γ]]) = [[cξ, s], [s, aγ − c]], s = (aξ + cγ − 1)/2
    let d11 = c * xi;
    let d22 = a * gamma - c;
    let s = 0.5 * (a * xi + c * gamma - 1.0);
    d11 > 0.0 && d22 > 0.0 && d11 * d22 - s * s > 0.0
}

/// Feasible `(a, c)` with `α = 1` and `β` at the midpoint of `I(λ,1) ∩ I(Λ,1) ∩ (γ/2, ∞)`,
/// or `None` when no pair exists.
pub fn lemma_feasible_ac(bounds: HessianBounds, gamma: f64) -> Option<LemmaPair> {
    if !(gamma > 0.0) || !sharp_condition(bounds, gamma) {
        return None;
    }
    let (l0, l1) = lemma_interval(bounds.lower(), gamma);
    let (u0, u1) = lemma_interval(bounds.upper(), gamma);
    let lo = l0.max(u0).max(0.5 * gamma);
    let hi = l1.min(u1);
    if !(lo < hi) {
        return None;
    }
    let beta = 0.5 * (lo + hi);
    let c = 1.0 / beta;
    let a = 2.0 * c / gamma;
    let ok = c * c < a
        && lemma_product_positive(a, c, bounds.lower(), gamma)
        && lemma_product_positive(a, c, bounds.upper(), gamma);
    ok.then_some(LemmaPair { a, c, beta })
}

/// Largest `ρ` with `M N₁(ξ) ≥ ρM` at `ξ ∈ {λ, Λ}`, `N₁(ξ) = [[0,−1],[ξ,γ]]`.
///
/// `M` is `2 × 2` or a `2n × 2n` matrix of `n × n` homothety blocks.
pub fn best_rate(m: &SpdMatrix, bounds: HessianBounds, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let d = m.dim();
    if d % 2 != 0 {
        return Err(invalid(format!("best_rate: metric dimension {d} is odd")));
    }
    let n = d / 2;
    let mm = m.as_matrix();
    if !is_block_homothety(mm, n, 1e-12) {
        return Err(invalid("best_rate: metric is not made of homothety blocks"));
    }
    let m2 = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[mm[(0, 0)], mm[(0, n)], mm[(n, 0)], mm[(n, n)]]))?;
    let mut rate = f64::INFINITY;
    for xi in [bounds.lower(), bounds.upper()] {
        let n1 = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, xi, gamma]);
        rate = rate.min(min_gen_eig(&sym(&(m2.as_matrix() * n1)), &m2)?);
    }
    Ok(rate)
}

/// Certificate from the lemma pair, with `ρ = best_rate(M)`.
pub fn lemma_metric(bounds: HessianBounds, gamma: f64, n: usize) -> Result<ContractionCertificate> {
    check_gamma(gamma)?;
    let pair = lemma_feasible_ac(bounds, gamma).ok_or_else(|| {
        Error::Infeasible(format!(
            "Lambda - lambda = {} >= gamma (sqrt Lambda + sqrt lambda) = {}",
            bounds.upper() - bounds.lower(),
            gamma * (bounds.upper().sqrt() + bounds.lower().sqrt())
        ))
    })?;
    let metric = SpdMatrix::new(two_block(pair.c, pair.a, n))?;
    let rho = best_rate(&metric, bounds, gamma)?;
    verify_endpoints(metric.as_matrix(), bounds, gamma, rho, n)?;
    Ok(ContractionCertificate {
        metric,
        rho,
        gamma0: Some(bounds.upper().sqrt() - bounds.lower().sqrt()),
        provenance: Provenance::LemmaSearch { a: pair.a, c: pair.c },
    })
}

/// The simple metric when `γ ≥ 2√Λ`, otherwise the lemma search.
pub fn langevin_certificate(bounds: HessianBounds, gamma: f64, n: usize) -> Result<ContractionCertificate> {
    match langevin_metric_simple(bounds, gamma, n) {
        Err(Error::FrictionTooLow { .. }) => lemma_metric(bounds, gamma, n),
        other => other,
    }
}

/// Simple-metric certificate for a pinned chain of `ncount` sites.
pub fn chain_pinned_certificate(
    pinning: &dyn Potential,
    interaction: &dyn Potential,
    kappa_minus: f64,
    ncount: usize,
    gamma: f64,
) -> Result<(ContractionCertificate, HessianBounds)> {
    let bounds = chain_bounds_pinned(pinning, interaction, kappa_minus)?;
    let mut cert = langevin_metric_simple(bounds, gamma, ncount * interaction.dim())?;
    cert.provenance = Provenance::ChainPinned;
    Ok((cert, bounds))
}

/// Simple-metric certificate for the centred coordinates of an unpinned chain.
pub fn chain_unpinned_certificate(
    interaction: &dyn Potential,
    ncount: usize,
    gamma: f64,
) -> Result<(ContractionCertificate, HessianBounds)> {
    if ncount < 2 {
        return Err(invalid("unpinned chain needs at least two particles"));
    }
    let bounds = chain_bounds_unpinned(interaction, ncount)?;
    let mut cert = langevin_metric_simple(bounds, gamma, (ncount - 1) * interaction.dim())?;
    cert.provenance = Provenance::ChainUnpinned;
    Ok((cert, bounds))
}
