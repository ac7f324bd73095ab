use rayon::prelude::*;

use super::assignment::{bottleneck_assignment, linear_assignment};
use super::EmpiricalMeasure;
use crate::certify::ContractionCertificate;
use crate::error::{invalid, Result};
use crate::matrixkit::SpdMatrix;
use crate::models::DriftModel;
use crate::simulate::{Integrator, IntegratorConfig, NoiseStream, BOOTSTRAP_SUBSTREAM};

/// Largest cloud accepted by the exact solvers.
pub const MAX_CLOUD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    One,
    Two,
    Inf,
}

impl Order {
    pub fn name(self) -> &'static str {
        match self {
            Order::One => "1",
            Order::Two => "2",
            Order::Inf => "inf",
        }
    }
}

fn dist_matrix(a: &[Vec<f64>], b: &[Vec<f64>], metric: &SpdMatrix) -> Vec<f64> {
    let n = a.len();
    let mut diff = vec![0.0; metric.dim()];
    let mut out = Vec::with_capacity(n * n);
    for x in a {
        for y in b {
            for k in 0..diff.len() {
                diff[k] = x[k] - y[k];
            }
            out.push(metric.norm_of(&diff));
        }
    }
    out
}

fn wp_points(a: &[Vec<f64>], b: &[Vec<f64>], order: Order, metric: &SpdMatrix) -> f64 {
    let n = a.len();
    let d = dist_matrix(a, b, metric);
    // matched costs are summed in sorted order so that W(a, b) == W(b, a) bit for bit
    let matched = |cost: &[f64], p: Vec<usize>| {
        let mut v: Vec<f64> = (0..n).map(|i| cost[i * n + p[i]]).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    match order {
        Order::One => matched(&d, linear_assignment(&d, n)).iter().sum::<f64>() / n as f64,
        Order::Two => {
            let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
            (matched(&sq, linear_assignment(&sq, n)).iter().sum::<f64>() / n as f64).sqrt()
        }
        Order::Inf => matched(&d, bottleneck_assignment(&d, n)).last().copied().unwrap_or(0.0),
    }
}

/// Exact `W_{M,p}` between two equal-size clouds.
pub fn empirical_wp(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, order: Order, metric: &SpdMatrix) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(invalid(format!("clouds have {} and {} points", mu.len(), nu.len())));
    }
    if mu.len() > MAX_CLOUD {
        return Err(invalid(format!("clouds larger than {MAX_CLOUD} points are not supported")));
    }
    if mu.dim() != metric.dim() || nu.dim() != metric.dim() {
        return Err(invalid("cloud dimension does not match the metric"));
    }
    Ok(wp_points(mu.points(), nu.points(), order, metric))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionTestConfig {
    pub order: Order,
    /// Evaluation times; each must lie on the integrator grid.
    pub times: Vec<f64>,
    /// `dt`, scheme and seed; `t_end` and `replica_index` are set per particle.
    pub integrator: IntegratorConfig,
    pub bootstrap: usize,
    /// Quantile of the bootstrap distribution used as the margin.
    pub quantile: f64,
}

impl ContractionTestConfig {
    pub fn new(order: Order, times: Vec<f64>, integrator: IntegratorConfig) -> Self {
        ContractionTestConfig { order, times, integrator, bootstrap: 200, quantile: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionRow {
    pub t: f64,
    pub w_emp: f64,
    /// Bootstrap margin of `w_emp`.
    pub eps: f64,
    /// `e^{−ρt}(Ŵ(0) + ε(0))`.
    pub bound: f64,
    /// `w_emp − bound − eps`; positive means a violation.
    pub slack: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionTestReport {
    pub rows: Vec<ContractionRow>,
    pub passes: bool,
}

fn grid_steps(times: &[f64], dt: f64) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let k = (t / dt).round();
            if !(t >= 0.0) || (k * dt - t).abs() > 1e-9 * t.max(1.0) {
                Err(invalid(format!("time {t} is not a multiple of dt = {dt}")))
            } else {
                Ok(k as usize)
            }
        })
        .collect()
}

/// Each particle is an independent replica; returns `clouds[time][particle]`.
fn evolve_cloud(
    model: &DriftModel,
    init: &EmpiricalMeasure,
    steps: &[usize],
    cfg: &IntegratorConfig,
    replica_offset: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let integ = Integrator::new(model, cfg.dt, cfg.scheme)?;
    let last = steps.iter().copied().max().unwrap_or(0);
    let per_particle: Vec<Vec<Vec<f64>>> = init
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, z0)| {
            let mut c = cfg.clone().with_replica(replica_offset + i as u64);
            c.t_end = last as f64 * cfg.dt;
            let mut snaps = vec![Vec::new(); steps.len()];
            integ.run(z0, &c, |k, _, z| {
                for (slot, &s) in snaps.iter_mut().zip(steps) {
                    if s == k {
                        *slot = z.to_vec();
                    }
                }
            })?;
            Ok(snaps)
        })
        .collect::<Result<_>>()?;
    Ok((0..steps.len()).map(|j| per_particle.iter().map(|p| p[j].clone()).collect()).collect())
}

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

/// `q`-quantile over resamples of `W(a*, a) + W(b*, b)`.
fn bootstrap_margin(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    order: Order,
    metric: &SpdMatrix,
    resamples: usize,
    q: f64,
    seed: u64,
    key: u64,
) -> f64 {
    let n = a.len();
    let draws: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = NoiseStream::new(seed, (key << 20) | r, BOOTSTRAP_SUBSTREAM);
            let ra: Vec<Vec<f64>> = (0..n).map(|_| a[rng.index(n)].clone()).collect();
            let rb: Vec<Vec<f64>> = (0..n).map(|_| b[rng.index(n)].clone()).collect();
            wp_points(&ra, a, order, metric) + wp_points(&rb, b, order, metric)
        })
        .collect();
    quantile(draws, q)
}

/// Evolves both clouds with independent noise per particle and compares
/// `Ŵ(t)` with `e^{−ρt}(Ŵ(0) + ε(0)) + ε(t)`. Since `W(0) ≤ Ŵ(0) + ε(0)` and
/// `Ŵ(t) ≤ W(t) + ε(t)` at the bootstrap confidence level, exceeding this
/// flags a violation of the law-level contraction.
pub fn wasserstein_contraction_test(
    model: &DriftModel,
    cert: &ContractionCertificate,
    init_a: &EmpiricalMeasure,
    init_b: &EmpiricalMeasure,
    cfg: &ContractionTestConfig,
) -> Result<ContractionTestReport> {
    let d = model.dim();
    if init_a.len() != init_b.len() {
        return Err(invalid("initial clouds must have the same size"));
    }
    if init_a.dim() != d || init_b.dim() != d || cert.metric.dim() != d {
        return Err(invalid("cloud, metric and model dimensions differ"));
    }
    if cfg.times.is_empty() {
        return Err(invalid("no evaluation times"));
    }
    if !(cfg.quantile > 0.0 && cfg.quantile < 1.0) {
        return Err(invalid("bootstrap quantile must be in (0, 1)"));
    }
    cfg.integrator.validate()?;
    let mut times = cfg.times.clone();
    if times[0] != 0.0 {
        times.insert(0, 0.0);
    }
    let steps = grid_steps(&times, cfg.integrator.dt)?;
    let n = init_a.len() as u64;
    let ca = evolve_cloud(model, init_a, &steps, &cfg.integrator, 0)?;
    let cb = evolve_cloud(model, init_b, &steps, &cfg.integrator, n)?;
    let m = &cert.metric;
    let stats: Vec<(f64, f64)> = (0..times.len())
        .map(|j| {
            let w = wp_points(&ca[j], &cb[j], cfg.order, m);
            let eps = bootstrap_margin(
                &ca[j],
                &cb[j],
                cfg.order,
                m,
                cfg.bootstrap,
                cfg.quantile,
                cfg.integrator.seed,
                j as u64,
            );
            (w, eps)
        })
        .collect();
    let (w0, e0) = stats[0];
    let rows: Vec<ContractionRow> = times
        .iter()
        .zip(&stats)
        .map(|(&t, &(w, eps))| {
            let bound = (-cert.rho * t).exp() * (w0 + e0);
            let slack = w - bound - eps;
            ContractionRow { t, w_emp: w, eps, bound, slack, violation: slack > 0.0 }
        })
        .collect();
    let passes = rows.iter().all(|r| !r.violation);
    Ok(ContractionTestReport { rows, passes })
}
