use super::{NoiseStream, JUMP_SUBSTREAM};
use crate::error::{invalid, Result};

/// `dZ = −aZ dt + (h − 1)Z dN_{λt}`: decay at rate `a`, multiplied by `h`
/// at the jumps of a Poisson clock of rate `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdmpParams {
    pub a: f64,
    pub h: f64,
    pub lam: f64,
}

impl PdmpParams {
    pub fn new(a: f64, h: f64, lam: f64) -> Result<Self> {
        if !(lam >= 0.0 && lam.is_finite()) {
            return Err(invalid(format!("jump rate must be non-negative, got {lam}")));
        }
        if !(a.is_finite() && h.is_finite()) {
            return Err(invalid("a and h must be finite"));
        }
        Ok(PdmpParams { a, h, lam })
    }
}

/// One exact path on `[0, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdmpTrajectory {
    pub params: PdmpParams,
    pub z0: Vec<f64>,
    pub t_end: f64,
    pub jump_times: Vec<f64>,
}

impl PdmpTrajectory {
    /// `N_{λt}`, the number of jumps in `[0, t]`.
    pub fn jumps_before(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&s| s <= t)
    }

    /// `Z_t = e^{−at} h^{N_{λt}} z₀`.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let k = self.jumps_before(t) as i32;
        let f = (-self.params.a * t).exp() * self.params.h.powi(k);
        self.z0.iter().map(|v| f * v).collect()
    }
}

/// Exponential inter-jump times from the `(seed, replica)` jump substream;
/// there is no time discretisation.
pub fn pdmp_simulate(params: PdmpParams, z0: &[f64], t_end: f64, seed: u64, replica: u64) -> Result<PdmpTrajectory> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("t_end must be non-negative, got {t_end}")));
    }
    let mut jump_times = Vec::new();
    if params.lam > 0.0 {
        let mut rng = NoiseStream::new(seed, replica, JUMP_SUBSTREAM);
        let mut t = 0.0;
        loop {
            t += -(1.0 - rng.uniform()).ln() / params.lam;
            if t > t_end {
                break;
            }
            jump_times.push(t);
        }
    }
    Ok(PdmpTrajectory { params, z0: z0.to_vec(), t_end, jump_times })
}

/// `ρ_n = a + (1 − |h|ⁿ)λ/n`, the decay rate of `E|Z₁ − Z₂|ⁿ` raised to `1/n`.
pub fn pdmp_moment_rate(n: u32, a: f64, h: f64, lam: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("moment order must be at least 1"));
    }
    Ok(a + (1.0 - h.abs().powi(n as i32)) * lam / n as f64)
}
