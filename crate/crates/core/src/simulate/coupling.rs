use super::integrator::Integrator;
use super::{check_finite, IntegratorConfig, NoiseStream, NOISE_SUBSTREAM};
use crate::error::{invalid, Result};
use crate::matrixkit::SpdMatrix;
use crate::models::DriftModel;

/// Two solutions driven by the same noise.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTrajectory {
    pub times: Vec<f64>,
    pub states_a: Vec<Vec<f64>>,
    pub states_b: Vec<Vec<f64>>,
    /// `‖Z_a − Z_b‖_M` at each time, when a metric was given.
    pub m_distance: Option<Vec<f64>>,
}

/// Synchronous coupling: both legs consume the identical draw at every step,
/// so each leg equals the uncoupled run with the same seed and replica.
pub fn couple_sync(
    model: &DriftModel,
    z_a: &[f64],
    z_b: &[f64],
    cfg: &IntegratorConfig,
    metric: Option<&SpdMatrix>,
) -> Result<CoupledTrajectory> {
    cfg.validate()?;
    let d = model.dim();
    if z_a.len() != d || z_b.len() != d {
        return Err(invalid(format!("coupled initial states must have length {d}")));
    }
    if let Some(m) = metric {
        if m.dim() != d {
            return Err(invalid(format!("metric is {0}x{0}, model dimension is {d}", m.dim())));
        }
    }
    check_finite(z_a, 0)?;
    check_finite(z_b, 0)?;
    let integ = Integrator::new(model, cfg.dt, cfg.scheme)?;
    let steps = cfg.steps();
    let mut a = z_a.to_vec();
    let mut b = z_b.to_vec();
    let mut noise = vec![0.0; integ.noise_dim()];
    let mut buf = vec![0.0; integ.scratch_len()];
    let mut diff = vec![0.0; d];
    let mut rng = NoiseStream::new(cfg.seed, cfg.replica_index, NOISE_SUBSTREAM);

    let mut out = CoupledTrajectory {
        times: Vec::with_capacity(steps / cfg.thinning + 2),
        states_a: Vec::new(),
        states_b: Vec::new(),
        m_distance: metric.map(|_| Vec::new()),
    };
    let mut record = |k: usize, a: &[f64], b: &[f64], out: &mut CoupledTrajectory| {
        out.times.push(k as f64 * cfg.dt);
        out.states_a.push(a.to_vec());
        out.states_b.push(b.to_vec());
        if let (Some(m), Some(dist)) = (metric, out.m_distance.as_mut()) {
            for i in 0..d {
                diff[i] = a[i] - b[i];
            }
            dist.push(m.norm_of(&diff));
        }
    };
    record(0, &a, &b, &mut out);
    for k in 1..=steps {
        rng.fill(&mut noise);
        integ.step(&mut a, &noise, &mut buf);
        integ.step(&mut b, &noise, &mut buf);
        check_finite(&a, k)?;
        check_finite(&b, k)?;
        if cfg.keeps(k, steps) {
            record(k, &a, &b, &mut out);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorReport {
    /// `max_t e^{ρt}‖Δ_t‖_M / ‖Δ₀‖_M`
    pub max_ratio: f64,
    pub argmax_time: f64,
}

pub fn contraction_monitor(traj: &CoupledTrajectory, rho: f64) -> Result<MonitorReport> {
    let dist = traj
        .m_distance
        .as_ref()
        .ok_or_else(|| invalid("contraction_monitor needs a trajectory coupled with a metric"))?;
    let d0 = *dist.first().ok_or_else(|| invalid("empty trajectory"))?;
    if !(d0 > 0.0) {
        return Err(invalid("initial coupling distance is zero"));
    }
    let mut best = MonitorReport { max_ratio: f64::NEG_INFINITY, argmax_time: 0.0 };
    for (t, dt) in traj.times.iter().zip(dist) {
        let r = (rho * t).exp() * dt / d0;
        if r > best.max_ratio {
            best = MonitorReport { max_ratio: r, argmax_time: *t };
        }
    }
    Ok(best)
}
