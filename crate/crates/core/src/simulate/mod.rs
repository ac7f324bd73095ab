//! Euler–Maruyama and OU/Verlet splitting integrators, synchronous coupling,
//! and an exact event-driven simulator for the multiplicative-jump process.

mod coupling;
mod integrator;
mod pdmp;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};

pub use coupling::{contraction_monitor, couple_sync, CoupledTrajectory, MonitorReport};
pub use integrator::{simulate, simulate_em, splitting_step, Integrator, SplittingIntegrator};
pub use pdmp::{pdmp_moment_rate, pdmp_simulate, PdmpParams, PdmpTrajectory};

/// States whose Euclidean norm exceeds this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Substream of the diffusion noise. Both legs of a coupling read it.
pub const NOISE_SUBSTREAM: u64 = 0;
/// Substream of the jump clock of the jump process.
pub const JUMP_SUBSTREAM: u64 = 1;
/// Substream of bootstrap resampling.
pub const BOOTSTRAP_SUBSTREAM: u64 = 2;
/// Substream used to draw initial states.
pub const INIT_SUBSTREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Splitting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub replica_index: u64,
    /// Keep every `thinning`-th state (the last state is always kept).
    pub thinning: usize,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        IntegratorConfig { dt, t_end, scheme: Scheme::Euler, seed: 0, replica_index: 0, thinning: 1 }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replica(mut self, replica_index: u64) -> Self {
        self.replica_index = replica_index;
        self
    }

    pub fn with_thinning(mut self, thinning: usize) -> Self {
        self.thinning = thinning;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.thinning == 0 {
            return Err(invalid("thinning must be at least 1"));
        }
        Ok(())
    }

    /// `ceil(t_end/dt)`, ignoring round-off just above an integer.
    pub fn steps(&self) -> usize {
        let r = self.t_end / self.dt;
        let k = r.round();
        if (r - k).abs() <= 1e-9 * r.max(1.0) {
            k as usize
        } else {
            r.ceil() as usize
        }
    }

    pub(crate) fn keeps(&self, step: usize, total: usize) -> bool {
        step % self.thinning == 0 || step == total
    }
}

/// Reproducible Gaussian stream for one `(seed, replica, substream)` triple.
/// Draws depend only on that triple and on how many values were taken
/// before, never on scheduling.
#[derive(Debug, Clone)]
pub struct NoiseStream(ChaCha8Rng);

impl NoiseStream {
    pub fn new(seed: u64, replica: u64, substream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((replica << 8) | (substream & 0xff));
        NoiseStream(rng)
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = StandardNormal.sample(&mut self.0);
        }
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    pub fn uniform(&mut self) -> f64 {
        rand::Rng::random::<f64>(&mut self.0)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        rand::Rng::random_range(&mut self.0, 0..n)
    }
}

/// A sampled path; `states[k]` is the state at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub(crate) fn check_finite(z: &[f64], step: usize) -> Result<()> {
    let n2: f64 = z.iter().map(|v| v * v).sum();
    if n2.is_finite() && n2 <= DIVERGENCE_NORM * DIVERGENCE_NORM {
        Ok(())
    } else {
        Err(crate::Error::Diverged { step })
    }
}
