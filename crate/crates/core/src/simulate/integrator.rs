use nalgebra::DMatrix;

use super::{check_finite, IntegratorConfig, NoiseStream, Scheme, Trajectory, NOISE_SUBSTREAM};
use crate::error::{invalid, Result};
use crate::matrixkit::{ou_moments_raw, sqrt_psd};
use crate::models::{DriftModel, Dynamics};

/// Nonzero entries of a dense matrix, row-major.
#[derive(Debug, Clone)]
struct Sparse {
    entries: Vec<(usize, usize, f64)>,
}

impl Sparse {
    fn new(m: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Sparse { entries }
    }

    /// `out += scale · M v`
    fn mul_add(&self, v: &[f64], scale: f64, out: &mut [f64]) {
        for &(i, j, m) in &self.entries {
            out[i] += scale * m * v[j];
        }
    }
}

/// Strang composition `O(δ/2) ∘ Verlet(δ) ∘ O(δ/2)` with the OU part
/// `dY = −γBY dt + Σ_Y dW` sampled exactly.
#[derive(Debug, Clone)]
pub struct SplittingIntegrator<'a> {
    model: &'a DriftModel,
    n: usize,
    p: usize,
    dt: f64,
    mean_map: Sparse,
    root: Sparse,
}

impl<'a> SplittingIntegrator<'a> {
    pub fn new(model: &'a DriftModel, dt: f64) -> Result<Self> {
        let (Some(n), Some(b), Some(gamma)) = (model.position_dim(), model.friction_matrix(), model.gamma()) else {
            return Err(invalid("the splitting scheme needs a kinetic (Langevin-type) model"));
        };
        let p = b.nrows();
        let s = model.diffusion().view((n, n), (p, p)).into_owned();
        let moments = ou_moments_raw(&(b * gamma), &(&s * s.transpose()), 0.5 * dt)?;
        let scale = moments.cov.abs().max().max(1e-300);
        let root = sqrt_psd(&moments.cov, 1e-10 * scale)?;
        Ok(SplittingIntegrator { model, n, p, dt, mean_map: Sparse::new(&moments.mean_map), root: Sparse::new(&root) })
    }

    /// Two `p`-dimensional draws, one per OU half-step.
    pub fn noise_dim(&self) -> usize {
        2 * self.p
    }

    fn ou(&self, y: &mut [f64], xi: &[f64], buf: &mut [f64]) {
        buf.fill(0.0);
        self.mean_map.mul_add(y, 1.0, buf);
        self.root.mul_add(xi, 1.0, buf);
        y.copy_from_slice(buf);
    }

    pub fn step(&self, z: &mut [f64], noise: &[f64], buf: &mut [f64]) {
        let (n, p, dt) = (self.n, self.p, self.dt);
        let u = self.model.potential().expect("kinetic model");
        let (x, y) = z.split_at_mut(n);
        let (grad, ybuf) = buf.split_at_mut(n);
        let ybuf = &mut ybuf[..p];
        self.ou(y, &noise[..p], ybuf);
        u.gradient(x, grad);
        for i in 0..n {
            y[i] -= 0.5 * dt * grad[i];
        }
        for i in 0..n {
            x[i] += dt * y[i];
        }
        u.gradient(x, grad);
        for i in 0..n {
            y[i] -= 0.5 * dt * grad[i];
        }
        self.ou(y, &noise[p..], ybuf);
    }
}

/// One Euler–Maruyama or splitting step, with the noise layout of the scheme.
#[derive(Debug, Clone)]
pub struct Integrator<'a>(Kind<'a>);

#[derive(Debug, Clone)]
enum Kind<'a> {
    Euler { model: &'a DriftModel, dt: f64, sqrt_dt: f64, sigma: Sparse },
    Splitting(SplittingIntegrator<'a>),
}

impl<'a> Integrator<'a> {
    pub fn new(model: &'a DriftModel, dt: f64, scheme: Scheme) -> Result<Self> {
        match scheme {
            Scheme::Euler => {
                Ok(Integrator(Kind::Euler { model, dt, sqrt_dt: dt.sqrt(), sigma: Sparse::new(model.diffusion()) }))
            }
            Scheme::Splitting => Ok(Integrator(Kind::Splitting(SplittingIntegrator::new(model, dt)?))),
        }
    }

    pub fn noise_dim(&self) -> usize {
        match &self.0 {
            Kind::Euler { model, .. } => model.dim(),
            Kind::Splitting(s) => s.noise_dim(),
        }
    }

    /// Length of the scratch buffer `step` needs.
    pub fn scratch_len(&self) -> usize {
        match &self.0 {
            Kind::Euler { model, .. } => model.dim(),
            Kind::Splitting(s) => s.n + s.p,
        }
    }

    pub fn step(&self, z: &mut [f64], noise: &[f64], buf: &mut [f64]) {
        match &self.0 {
            Kind::Euler { model, dt, sqrt_dt, sigma } => {
                model.drift(z, buf);
                for (zi, bi) in z.iter_mut().zip(buf.iter()) {
                    *zi += dt * bi;
                }
                sigma.mul_add(noise, *sqrt_dt, z);
            }
            Kind::Splitting(s) => s.step(z, noise, buf),
        }
    }

    /// Advances `z0` over the grid of `cfg`, calling `observe(step, t, z)` at
    /// every step including the initial one. Nothing is stored.
    pub fn run(
        &self,
        z0: &[f64],
        cfg: &IntegratorConfig,
        mut observe: impl FnMut(usize, f64, &[f64]),
    ) -> Result<Vec<f64>> {
        cfg.validate()?;
        let mut z = z0.to_vec();
        let mut noise = vec![0.0; self.noise_dim()];
        let mut buf = vec![0.0; self.scratch_len()];
        let mut rng = NoiseStream::new(cfg.seed, cfg.replica_index, NOISE_SUBSTREAM);
        let steps = cfg.steps();
        observe(0, 0.0, &z);
        for k in 1..=steps {
            rng.fill(&mut noise);
            self.step(&mut z, &noise, &mut buf);
            check_finite(&z, k)?;
            observe(k, k as f64 * cfg.dt, &z);
        }
        Ok(z)
    }
}

fn check_dims(model: &DriftModel, z0: &[f64]) -> Result<()> {
    if z0.len() != model.dim() {
        return Err(invalid(format!("initial state has length {}, model dimension is {}", z0.len(), model.dim())));
    }
    check_finite(z0, 0)
}

/// Integrates with the scheme chosen in `cfg`, keeping every `thinning`-th state.
pub fn simulate(model: &DriftModel, z0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    check_dims(model, z0)?;
    cfg.validate()?;
    let integ = Integrator::new(model, cfg.dt, cfg.scheme)?;
    let steps = cfg.steps();
    let mut traj = Trajectory { times: Vec::new(), states: Vec::new() };
    integ.run(z0, cfg, |k, t, z| {
        if cfg.keeps(k, steps) {
            traj.times.push(t);
            traj.states.push(z.to_vec());
        }
    })?;
    Ok(traj)
}

/// `z_{k+1} = z_k + δ b(z_k) + √δ Σ ξ_k`.
pub fn simulate_em(model: &DriftModel, z0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    simulate(model, z0, &cfg.clone().with_scheme(Scheme::Euler))
}

/// A single splitting step; `noise` holds `2p` standard normals.
pub fn splitting_step(model: &DriftModel, z: &[f64], dt: f64, noise: &[f64]) -> Result<Vec<f64>> {
    if !matches!(model.dynamics(), Dynamics::Langevin { .. } | Dynamics::GLangevin { .. }) {
        return Err(invalid("the splitting scheme needs a kinetic (Langevin-type) model"));
    }
    check_dims(model, z)?;
    let s = SplittingIntegrator::new(model, dt)?;
    if noise.len() != s.noise_dim() {
        return Err(invalid(format!("splitting step needs {} normals, got {}", s.noise_dim(), noise.len())));
    }
    let mut out = z.to_vec();
    let mut buf = vec![0.0; s.n + s.p];
    s.step(&mut out, noise, &mut buf);
    Ok(out)
}
