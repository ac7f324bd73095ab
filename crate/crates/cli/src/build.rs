use nalgebra::{DMatrix, DVector};
use sde_contract::certify::{
    chain_pinned_certificate, chain_unpinned_certificate, glangevin_certificate, langevin_certificate,
    langevin_metric_simple, lemma_metric, ContractionCertificate, HessianBounds,
};
use sde_contract::matrixkit::{block_diag, lyapunov_metric, SpdMatrix};
use sde_contract::models::{
    affine_drift, chain_potential, cosine_modulated_potential, cosine_modulated_range, flat_potential, glangevin_drift,
    langevin_drift, order_k_system, pinned_chain_langevin, quadratic_potential, site_temperatures,
    unpinned_chain_langevin, DriftModel, GlNoise, HessianRange, SharedPotential,
};
use sde_contract::simulate::{IntegratorConfig, NoiseStream, Scheme, INIT_SUBSTREAM};
use sde_contract::Error;

use crate::config::{
    Construction, ExperimentConfig, FamilyTag, ModelSection, NoiseTag, PotentialTag, SchemeTag, SimulationSection,
};
use crate::Failure;

pub fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

/// A model together with what the certificate constructors need.
pub struct ModelSetup {
    pub model: DriftModel,
    pub bounds: Option<HessianBounds>,
    /// Position dimension of the (projected) kinetic model.
    pub n: Option<usize>,
    /// Hessian of a quadratic potential, when there is one.
    pub quadratic: Option<DMatrix<f64>>,
    pub chain: Option<ChainSetup>,
}

pub struct ChainSetup {
    pub pinned: bool,
    pub pinning: Option<SharedPotential>,
    pub interaction: SharedPotential,
    pub kappa_minus: f64,
    pub ncount: usize,
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Config(format!("model.{key} is required for this family")))
}

fn bounds_of(m: &ModelSection) -> Result<Option<HessianBounds>, Failure> {
    Ok(match (m.lambda, m.big_lambda) {
        (Some(l), Some(u)) => Some(HessianBounds::new(l, u)?),
        (Some(l), None) => Some(HessianBounds::new(l, l)?),
        (None, None) => None,
        (None, Some(_)) => return Err(Failure::Config("model.lambda is required with model.big_lambda".into())),
    })
}

/// Potential on `ℝⁿ` and, for a quadratic, its Hessian.
fn potential(
    m: &ModelSection,
    n: usize,
) -> Result<(SharedPotential, Option<HessianBounds>, Option<DMatrix<f64>>), Failure> {
    let tag = m.potential.unwrap_or(PotentialTag::Quadratic);
    let bounds = bounds_of(m)?;
    match tag {
        PotentialTag::Quadratic => {
            let s = match (&m.hessian, bounds) {
                (Some(rows), _) => matrix(rows),
                (None, Some(b)) => {
                    if n == 1 && b.lower() != b.upper() {
                        return Err(Failure::Config(
                            "model.hessian is required for a 1-d quadratic with lambda != big_lambda".into(),
                        ));
                    }
                    let step = if n > 1 { (b.upper() - b.lower()) / (n - 1) as f64 } else { 0.0 };
                    DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| b.lower() + step * i as f64))
                }
                (None, None) => {
                    return Err(Failure::Config("quadratic potential needs model.hessian or model.lambda".into()))
                }
            };
            if s.nrows() != n {
                return Err(Failure::Config(format!("model.hessian is {0}x{0} but n = {n}", s.nrows())));
            }
            let spd = SpdMatrix::new(s.clone())?;
            let declared = match bounds {
                Some(b) => {
                    if spd.min_eig() < b.lower() * (1.0 - 1e-12) || spd.max_eig() > b.upper() * (1.0 + 1e-12) {
                        return Err(Failure::Config("model.hessian spectrum lies outside [lambda, big_lambda]".into()));
                    }
                    b
                }
                None => HessianBounds::new(spd.min_eig(), spd.max_eig())?,
            };
            Ok((quadratic_potential(spd), Some(declared), Some(s)))
        }
        PotentialTag::Cosine => {
            let b = bounds
                .ok_or_else(|| Failure::Config("cosine potential needs model.lambda and model.big_lambda".into()))?;
            Ok((cosine_modulated_potential(b, n), Some(b), None))
        }
        PotentialTag::Flat => Ok((flat_potential(n), None, None)),
    }
}

pub fn build_model(cfg: &ExperimentConfig) -> Result<ModelSetup, Failure> {
    let m = cfg.model.as_ref().ok_or_else(|| Failure::Config("missing [model] section".into()))?;
    match m.family {
        FamilyTag::Langevin => {
            let n = m.n.unwrap_or(1);
            let (u, bounds, quadratic) = potential(m, n)?;
            let model = langevin_drift(u, need(m.gamma, "gamma")?)?;
            Ok(ModelSetup { model, bounds, n: Some(n), quadratic, chain: None })
        }
        FamilyTag::Glangevin => {
            let n = m.n.unwrap_or(1);
            let b = match (&m.b, m.order) {
                (Some(rows), None) => matrix(rows),
                (None, Some(k)) => order_k_system(k - 1, n)?.1,
                _ => return Err(Failure::Config("glangevin needs exactly one of model.b and model.order".into())),
            };
            let (u, bounds, quadratic) = potential(m, n)?;
            let noise = match m.noise.unwrap_or(NoiseTag::FluctuationDissipation) {
                NoiseTag::FluctuationDissipation => GlNoise::FluctuationDissipation,
                NoiseTag::None => GlNoise::None,
            };
            let model = glangevin_drift(u, b, need(m.gamma, "gamma")?, noise)?;
            Ok(ModelSetup { model, bounds, n: Some(n), quadratic, chain: None })
        }
        FamilyTag::Chain => build_chain(m),
        FamilyTag::Affine => {
            let g = matrix(m.g.as_ref().ok_or_else(|| Failure::Config("affine family needs model.g".into()))?);
            let d = g.nrows();
            let c = m.c.clone().unwrap_or_else(|| vec![0.0; d]);
            let sigma = m.sigma.as_ref().map(|r| matrix(r)).unwrap_or_else(|| DMatrix::zeros(d, d));
            Ok(ModelSetup { model: affine_drift(g, c, sigma)?, bounds: None, n: None, quadratic: None, chain: None })
        }
    }
}

fn build_chain(m: &ModelSection) -> Result<ModelSetup, Failure> {
    let ncount = need(m.ncount, "ncount")?;
    let p = m.p.unwrap_or(1);
    let gamma = need(m.gamma, "gamma")?;
    let pinned = m.pinned.unwrap_or(false);
    let lo = need(m.lambda, "lambda")?;
    let hi = m.big_lambda.unwrap_or(lo);
    let interaction = match m.potential.unwrap_or(PotentialTag::Quadratic) {
        PotentialTag::Quadratic => {
            if hi != lo {
                return Err(Failure::Config("a quadratic interaction needs lambda == big_lambda".into()));
            }
            quadratic_potential(SpdMatrix::new(DMatrix::identity(p, p) * lo)?)
        }
        PotentialTag::Cosine => cosine_modulated_range(HessianRange::new(lo, hi)?, p),
        PotentialTag::Flat => return Err(Failure::Config("chain interaction cannot be flat".into())),
    };
    let temps = site_temperatures(ncount, m.t_left, m.t_right);
    if pinned {
        let vlo = need(m.pin_lo, "pin_lo")?;
        let vhi = m.pin_hi.unwrap_or(vlo);
        let pinning = cosine_modulated_range(HessianRange::new(vlo, vhi)?, p);
        let kappa_minus = m.kappa_minus.unwrap_or((-lo).max(0.0));
        let chain = chain_potential(Some(pinning.clone()), interaction.clone(), ncount)?;
        let model = pinned_chain_langevin(chain, gamma, &temps)?;
        Ok(ModelSetup {
            model,
            bounds: None,
            n: Some(ncount * p),
            quadratic: None,
            chain: Some(ChainSetup { pinned, pinning: Some(pinning), interaction, kappa_minus, ncount }),
        })
    } else {
        let uc = unpinned_chain_langevin(interaction.clone(), ncount, gamma, &temps)?;
        Ok(ModelSetup {
            model: uc.projected,
            bounds: Some(uc.bounds),
            n: Some((ncount - 1) * p),
            quadratic: None,
            chain: Some(ChainSetup { pinned, pinning: None, interaction, kappa_minus: 0.0, ncount }),
        })
    }
}

pub struct CertSetup {
    pub cert: ContractionCertificate,
    /// Rate before `rho_scale` was applied.
    pub rho_certified: f64,
    /// Hessian bounds the certificate was built from.
    pub bounds: Option<HessianBounds>,
}

pub fn build_certificate(cfg: &ExperimentConfig, setup: &ModelSetup) -> Result<CertSetup, Failure> {
    let c = &cfg.certificate;
    let family = cfg.model.as_ref().map(|m| m.family).unwrap_or(FamilyTag::Affine);
    let construction = match (c.construction, family) {
        (Construction::Auto, _) if c.metric.is_some() => Construction::User,
        (Construction::Auto, FamilyTag::Langevin) => Construction::Simple,
        (Construction::Auto, FamilyTag::Glangevin) => Construction::Generalized,
        (Construction::Auto, FamilyTag::Chain) => Construction::Chain,
        (Construction::Auto, FamilyTag::Affine) => Construction::Lyapunov,
        (other, _) => other,
    };
    let gamma = || setup.model.gamma().ok_or_else(|| Failure::Config("construction needs a kinetic model".into()));
    let bounds =
        || setup.bounds.ok_or_else(|| Failure::Config("construction needs Hessian bounds (model.lambda)".into()));
    let n = || setup.n.ok_or_else(|| Failure::Config("construction needs a kinetic model".into()));
    let mut used_bounds = setup.bounds;
    let cert = match construction {
        Construction::Auto => unreachable!(),
        Construction::Simple => {
            if family == FamilyTag::Glangevin {
                return Err(Failure::Config("the simple metric applies to the Langevin family only".into()));
            }
            langevin_metric_simple(bounds()?, gamma()?, n()?)?
        }
        Construction::Lemma | Construction::Best => {
            if family == FamilyTag::Glangevin {
                return Err(Failure::Config("the lemma search applies to the Langevin family only".into()));
            }
            if construction == Construction::Best {
                langevin_certificate(bounds()?, gamma()?, n()?)?
            } else {
                lemma_metric(bounds()?, gamma()?, n()?)?
            }
        }
        Construction::Generalized => {
            let b = setup
                .model
                .friction_matrix()
                .ok_or_else(|| Failure::Config("construction needs a kinetic model".into()))?;
            glangevin_certificate(&b, bounds()?, gamma()?, n()?, None)?
        }
        Construction::Chain => {
            let ch = setup
                .chain
                .as_ref()
                .ok_or_else(|| Failure::Config("chain construction needs the chain family".into()))?;
            let (cert, b) = if ch.pinned {
                let pin = ch.pinning.as_ref().expect("pinned chain has a pinning potential");
                chain_pinned_certificate(pin.as_ref(), ch.interaction.as_ref(), ch.kappa_minus, ch.ncount, gamma()?)?
            } else {
                chain_unpinned_certificate(ch.interaction.as_ref(), ch.ncount, gamma()?)?
            };
            used_bounds = Some(b);
            cert
        }
        Construction::Lyapunov => {
            let g = match setup.model.dynamics() {
                sde_contract::models::Dynamics::Affine { g, .. } => g.clone(),
                _ => return Err(Failure::Config("the Lyapunov construction needs the affine family".into())),
            };
            let (m, kappa) = lyapunov_metric(&(-g))?;
            ContractionCertificate::user_supplied(m, kappa)
        }
        Construction::User => {
            let rows = c.metric.as_ref().ok_or_else(|| Failure::Config("certificate.metric is required".into()))?;
            let rho = c.rho.ok_or_else(|| Failure::Config("certificate.rho is required".into()))?;
            let m = SpdMatrix::new(matrix(rows))?;
            if m.dim() != setup.model.dim() {
                return Err(Failure::Config(format!("certificate.metric must be {0}x{0}", setup.model.dim())));
            }
            ContractionCertificate::user_supplied(m, rho)
        }
    };
    let rho_certified = cert.rho;
    Ok(CertSetup { cert: cert.with_rho(rho_certified * c.rho_scale), rho_certified, bounds: used_bounds })
}

/// `N(0, Π)` of the quadratic kinetic models at unit temperature.
pub fn stationary_gaussian(cfg: &ExperimentConfig, setup: &ModelSetup) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let m = cfg.model.as_ref()?;
    let s = setup.quadratic.as_ref()?;
    let fd = match m.family {
        FamilyTag::Langevin => true,
        FamilyTag::Glangevin => m.noise.unwrap_or(NoiseTag::FluctuationDissipation) == NoiseTag::FluctuationDissipation,
        _ => false,
    };
    if !fd {
        return None;
    }
    let x_cov = s.clone().try_inverse()?;
    let p = setup.model.dim() - s.nrows();
    let cov = block_diag(&x_cov, &DMatrix::identity(p, p));
    Some((vec![0.0; setup.model.dim()], cov))
}

pub fn integrator(sim: &SimulationSection) -> IntegratorConfig {
    let scheme = match sim.scheme {
        SchemeTag::Euler => Scheme::Euler,
        SchemeTag::Splitting => Scheme::Splitting,
    };
    IntegratorConfig::new(sim.dt, sim.t_end).with_scheme(scheme).with_seed(sim.seed).with_thinning(sim.thinning)
}

/// Initial state and coupling displacement of one replica.
pub fn initial_pair(sim: &SimulationSection, dim: usize, replica: u64) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let mut rng = NoiseStream::new(sim.seed, replica, INIT_SUBSTREAM);
    let mut draw = |fixed: &Option<Vec<f64>>, key: &str| -> Result<Vec<f64>, Failure> {
        let mut v = vec![0.0; dim];
        rng.fill(&mut v);
        match fixed {
            Some(f) if f.len() != dim => Err(Failure::Config(format!("simulation.{key} must have length {dim}"))),
            Some(f) => Ok(f.clone()),
            None => Ok(v.iter().map(|x| x * sim.init_scale).collect()),
        }
    };
    let z0 = draw(&sim.z0, "z0")?;
    let delta = draw(&sim.delta0, "delta0")?;
    if delta.iter().all(|v| *v == 0.0) {
        return Err(Failure::Config("simulation.delta0 must be nonzero".into()));
    }
    Ok((z0, delta))
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::FrictionTooLow { .. } | Error::Infeasible(_) => Failure::Infeasible(e.to_string()),
            Error::Diverged { .. } => Failure::Diverged(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}
