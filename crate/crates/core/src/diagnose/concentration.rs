use rayon::prelude::*;

use crate::certify::{bias_bound, concentration_bound, sigma_m_norm, ContractionCertificate};
use crate::error::{invalid, Result};
use crate::matrixkit::SpdMatrix;
use crate::models::DriftModel;
use crate::simulate::{Integrator, IntegratorConfig, NoiseStream, INIT_SUBSTREAM};

/// `f(z) = ⟨w, z⟩ + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineObservable {
    pub w: Vec<f64>,
    pub c: f64,
}

impl AffineObservable {
    /// Rescales `w` so that `‖∇f‖_{M⁻¹} = ‖w‖_{M⁻¹} = 1`.
    pub fn normalized(w: Vec<f64>, metric: &SpdMatrix) -> Result<Self> {
        let obs = AffineObservable { w, c: 0.0 };
        let l = obs.lipschitz(metric);
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid("observable gradient must be nonzero"));
        }
        Ok(AffineObservable { w: obs.w.iter().map(|v| v / l).collect(), c: 0.0 })
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.c + self.w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `‖w‖_{M⁻¹}`, the Lipschitz constant for the `M`-norm.
    pub fn lipschitz(&self, metric: &SpdMatrix) -> f64 {
        let w = nalgebra::DVector::from_column_slice(&self.w);
        let solved = metric.cholesky().solve(&w);
        w.dot(&solved).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationConfig {
    /// Horizon `T` of the ergodic average.
    pub horizon: f64,
    pub u_grid: Vec<f64>,
    pub replicas: usize,
    /// `dt`, scheme and seed.
    pub integrator: IntegratorConfig,
    /// Every replica starts here, so `ν = δ_{z₀}` and `C′ = 0`.
    pub z0: Vec<f64>,
    /// `μ∞(f)`, when known; enables the bias check.
    pub stationary_mean: Option<f64>,
    /// `W_{M,1}(ν, μ∞)`, required for the bias check.
    pub w1_init: Option<f64>,
    pub lipschitz_samples: usize,
    pub lipschitz_radius: f64,
}

impl ConcentrationConfig {
    pub fn new(horizon: f64, u_grid: Vec<f64>, replicas: usize, integrator: IntegratorConfig, z0: Vec<f64>) -> Self {
        ConcentrationConfig {
            horizon,
            u_grid,
            replicas,
            integrator,
            z0,
            stationary_mean: None,
            w1_init: None,
            lipschitz_samples: 1000,
            lipschitz_radius: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailRow {
    pub u: f64,
    /// Fraction of replicas with `A − Ā ≥ u`.
    pub empirical: f64,
    pub bound: f64,
    /// One-sided binomial margin `3√(b(1−b)/R) + 1/R`.
    pub margin: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasCheck {
    pub observed: f64,
    pub bound: f64,
    /// Three standard errors of the replica mean.
    pub margin: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub rows: Vec<TailRow>,
    pub sigma_m_norm: f64,
    pub mean_average: f64,
    pub std_error: f64,
    pub bias: Option<BiasCheck>,
    pub passes: bool,
}

fn check_lipschitz(f: &(dyn Fn(&[f64]) -> f64 + Sync), metric: &SpdMatrix, cfg: &ConcentrationConfig) -> Result<()> {
    let d = metric.dim();
    let mut rng = NoiseStream::new(cfg.integrator.seed, u64::MAX >> 8, INIT_SUBSTREAM);
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut diff = vec![0.0; d];
    for _ in 0..cfg.lipschitz_samples {
        rng.fill(&mut a);
        rng.fill(&mut b);
        for k in 0..d {
            a[k] = cfg.z0[k] + cfg.lipschitz_radius * a[k];
            b[k] = cfg.z0[k] + cfg.lipschitz_radius * b[k];
            diff[k] = a[k] - b[k];
        }
        let dist = metric.norm_of(&diff);
        let q = (f(&a) - f(&b)).abs() / dist;
        if dist > 0.0 && q > 1.0 + 1e-9 {
            return Err(invalid(format!("observable has difference quotient {q:.6} > 1 in the M-norm")));
        }
    }
    Ok(())
}

/// Runs `replicas` independent paths from `z₀`, forms the time averages
/// `A = (1/T)∫₀ᵀ f(Z_t) dt` (trapezoid rule on the integrator grid) and
/// compares the tail of `A − Ā` with the certified bound.
pub fn ergodic_concentration_check(
    model: &DriftModel,
    cert: &ContractionCertificate,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    cfg: &ConcentrationConfig,
) -> Result<ConcentrationReport> {
    let d = model.dim();
    if !(cert.rho > 0.0) {
        return Err(invalid("concentration needs a positive certified rate"));
    }
    if cfg.z0.len() != d || cert.metric.dim() != d {
        return Err(invalid("initial state, metric and model dimensions differ"));
    }
    if cfg.replicas < 2 {
        return Err(invalid("need at least two replicas"));
    }
    if !(cfg.horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    if cfg.u_grid.iter().any(|u| !(*u >= 0.0)) {
        return Err(invalid("u grid must be non-negative"));
    }
    check_lipschitz(f, &cert.metric, cfg)?;

    let mut icfg = cfg.integrator.clone();
    icfg.t_end = cfg.horizon;
    icfg.validate()?;
    let integ = Integrator::new(model, icfg.dt, icfg.scheme)?;
    let steps = icfg.steps();
    let t_total = steps as f64 * icfg.dt;
    let averages: Vec<f64> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let c = icfg.clone().with_replica(r);
            let mut acc = 0.0;
            integ.run(&cfg.z0, &c, |k, _, z| {
                let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
                acc += w * f(z);
            })?;
            Ok(acc * icfg.dt / t_total)
        })
        .collect::<Result<_>>()?;

    let rn = averages.len() as f64;
    let mean = averages.iter().sum::<f64>() / rn;
    let var = averages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (rn - 1.0);
    let se = (var / rn).sqrt();
    let s = sigma_m_norm(model.diffusion(), &cert.metric);
    let rows: Vec<TailRow> = cfg
        .u_grid
        .iter()
        .map(|&u| {
            let empirical = averages.iter().filter(|a| **a - mean >= u).count() as f64 / rn;
            let bound = concentration_bound(t_total, u, cert.rho, s, 0.0);
            let margin = 3.0 * (bound * (1.0 - bound) / rn).sqrt() + 1.0 / rn;
            TailRow { u, empirical, bound, margin, passes: empirical <= bound + margin }
        })
        .collect();
    let bias = match (cfg.stationary_mean, cfg.w1_init) {
        (Some(mu), Some(w1)) => {
            let observed = (mean - mu).abs();
            let bound = bias_bound(t_total, cert.rho, w1);
            let margin = 3.0 * se;
            Some(BiasCheck { observed, bound, margin, passes: observed <= bound + margin })
        }
        _ => None,
    };
    let passes = rows.iter().all(|r| r.passes) && bias.as_ref().is_none_or(|b| b.passes);
    Ok(ConcentrationReport { rows, sigma_m_norm: s, mean_average: mean, std_error: se, bias, passes })
}
