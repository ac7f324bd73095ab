use std::fmt;

use serde::{Deserialize, Serialize};

/// A configuration problem, anchored to a line of the source text when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Langevin,
    Glangevin,
    Chain,
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialTag {
    Quadratic,
    Cosine,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseTag {
    FluctuationDissipation,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: FamilyTag,
    pub potential: Option<PotentialTag>,
    /// `λ`, lower Hessian bound (or interaction convexity `κ` for chains).
    pub lambda: Option<f64>,
    /// `Λ`, upper Hessian bound (or `‖F″‖∞` for chains).
    pub big_lambda: Option<f64>,
    pub gamma: Option<f64>,
    /// Position dimension `n`.
    pub n: Option<usize>,
    /// Explicit Hessian of a quadratic potential, as rows.
    pub hessian: Option<Vec<Vec<f64>>>,
    /// Friction matrix of the generalized model, as rows.
    pub b: Option<Vec<Vec<f64>>>,
    /// Order `K + 1` of the lifted system; an alternative to `b`.
    pub order: Option<usize>,
    pub noise: Option<NoiseTag>,
    /// Chain length.
    pub ncount: Option<usize>,
    /// Site dimension of a chain.
    pub p: Option<usize>,
    pub pinned: Option<bool>,
    /// Pinning Hessian range of a pinned chain.
    pub pin_lo: Option<f64>,
    pub pin_hi: Option<f64>,
    pub kappa_minus: Option<f64>,
    pub t_left: Option<f64>,
    pub t_right: Option<f64>,
    /// Affine drift `Gz + c` and diffusion, as rows.
    pub g: Option<Vec<Vec<f64>>>,
    pub c: Option<Vec<f64>>,
    pub sigma: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    Auto,
    Simple,
    Lemma,
    /// Simple metric when the friction allows it, else the lemma search.
    Best,
    Generalized,
    Chain,
    Lyapunov,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSection {
    #[serde(default = "default_construction")]
    pub construction: Construction,
    /// Multiplies the certified rate; values above 1 probe for failures.
    #[serde(default = "one")]
    pub rho_scale: f64,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Also compute `γ₀′` for the L2 bound.
    #[serde(default)]
    pub l2: bool,
    /// Times for the log-Sobolev constant table.
    #[serde(default = "default_ct_times")]
    pub ct_times: Vec<f64>,
    /// User-supplied metric and rate.
    pub metric: Option<Vec<Vec<f64>>>,
    pub rho: Option<f64>,
}

impl Default for CertificateSection {
    fn default() -> Self {
        CertificateSection {
            construction: Construction::Auto,
            rho_scale: 1.0,
            tolerance: default_tol(),
            samples: default_samples(),
            radius: default_radius(),
            l2: false,
            ct_times: default_ct_times(),
            metric: None,
            rho: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeTag {
    Euler,
    Splitting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one_usize")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub thinning: usize,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeTag,
    /// Initial state; drawn per replica from `N(0, init_scale² I)` when absent.
    pub z0: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub init_scale: f64,
    /// Initial displacement of the second coupled leg; random when absent.
    pub delta0: Option<Vec<f64>>,
    /// Discretization slack `C` in `max ratio ≤ 1 + C·dt`.
    #[serde(default)]
    pub slack_c: f64,
    /// Samples before this time are dropped from summary statistics.
    #[serde(default)]
    pub burn_in: f64,
    #[serde(default = "yes")]
    pub write_trajectory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdmpSection {
    pub a: f64,
    pub h: f64,
    pub lam: f64,
    #[serde(default = "default_orders")]
    pub orders: Vec<u32>,
    #[serde(default = "default_pdmp_replicas")]
    pub replicas: usize,
    #[serde(default = "one")]
    pub z0: f64,
    /// Horizon in units of `1/ρ_n`.
    #[serde(default = "three")]
    pub horizon: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_rate_tol")]
    pub rate_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderTag {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Wasserstein: order, cloud size, evaluation times and cloud centres.
    pub order: Option<OrderTag>,
    pub particles: Option<usize>,
    pub times: Option<Vec<f64>>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    pub center_a: Option<Vec<f64>>,
    pub center_b: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub spread: f64,
    /// Concentration: horizon, tail grid and observable gradient.
    pub horizon: Option<f64>,
    pub u_grid: Option<Vec<f64>>,
    pub observable: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub certificate: CertificateSection,
    pub simulation: Option<SimulationSection>,
    pub pdmp: Option<PdmpSection>,
    pub diagnostics: Option<DiagnosticsSection>,
}

fn default_construction() -> Construction {
    Construction::Auto
}
fn default_scheme() -> SchemeTag {
    SchemeTag::Splitting
}
fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_tol() -> f64 {
    1e-8
}
fn default_samples() -> usize {
    1000
}
fn default_radius() -> f64 {
    5.0
}
fn default_ct_times() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 5.0, 10.0]
}
fn default_orders() -> Vec<u32> {
    vec![1, 2, 3]
}
fn default_pdmp_replicas() -> usize {
    10_000
}
fn default_points() -> usize {
    21
}
fn default_rate_tol() -> f64 {
    0.05
}
fn default_bootstrap() -> usize {
    200
}
fn default_quantile() -> f64 {
    0.95
}

/// 1-based line of `key` inside `[section]`, or of the section header.
pub fn locate(text: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let header = format!("[{section}]");
    let mut in_section = false;
    let mut header_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            in_section = line == header;
            if in_section {
                header_line = Some(i + 1);
            }
            continue;
        }
        if in_section {
            if let Some(k) = key {
                let name = line.split('=').next().unwrap_or("").trim();
                if line.contains('=') && name == k {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    /// The seed of the simulation section, else of the jump-process section.
    pub fn seed(&self) -> u64 {
        self.simulation.as_ref().map(|s| s.seed).or(self.pdmp.as_ref().map(|p| p.seed)).unwrap_or(0)
    }

    pub fn set_seed(&mut self, seed: u64) {
        if let Some(s) = self.simulation.as_mut() {
            s.seed = seed;
        }
        if let Some(p) = self.pdmp.as_mut() {
            p.seed = seed;
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Range and shape checks that need no model construction.
    fn validate(&self, text: &str) -> Result<(), ConfigError> {
        let err = |section: &str, key: &str, message: String| ConfigError {
            line: locate(text, section, Some(key)),
            message: format!("{section}.{key}: {message}"),
        };
        let positive = |section: &str, key: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(err(section, key, format!("must be positive, got {x}"))),
            _ => Ok(()),
        };
        if let Some(m) = &self.model {
            // a pinned chain may have a non-convex interaction
            if !(m.family == FamilyTag::Chain && m.pinned == Some(true)) {
                positive("model", "lambda", m.lambda)?;
            }
            positive("model", "big_lambda", m.big_lambda)?;
            positive("model", "gamma", m.gamma)?;
            if let (Some(l), Some(u)) = (m.lambda, m.big_lambda) {
                if l > u {
                    return Err(err("model", "big_lambda", format!("must be >= lambda = {l}, got {u}")));
                }
            }
            for (key, v) in [("n", m.n), ("ncount", m.ncount), ("p", m.p)] {
                if v == Some(0) {
                    return Err(err("model", key, "must be at least 1".into()));
                }
            }
            if m.order.is_some_and(|k| k < 2) {
                return Err(err("model", "order", "must be at least 2".into()));
            }
            for (key, v) in [("hessian", &m.hessian), ("b", &m.b), ("g", &m.g), ("sigma", &m.sigma)] {
                if let Some(rows) = v {
                    check_matrix(rows).map_err(|msg| err("model", key, msg))?;
                }
            }
        }
        let c = &self.certificate;
        positive("certificate", "rho_scale", Some(c.rho_scale))?;
        positive("certificate", "tolerance", Some(c.tolerance))?;
        positive("certificate", "radius", Some(c.radius))?;
        if c.ct_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(err("certificate", "ct_times", "times must be non-negative".into()));
        }
        if let Some(rows) = &c.metric {
            check_matrix(rows).map_err(|msg| err("certificate", "metric", msg))?;
        }
        if let Some(s) = &self.simulation {
            positive("simulation", "dt", Some(s.dt))?;
            positive("simulation", "t_end", Some(s.t_end))?;
            if s.dt > s.t_end {
                return Err(err("simulation", "dt", format!("exceeds t_end = {}", s.t_end)));
            }
            if s.replicas == 0 {
                return Err(err("simulation", "replicas", "must be at least 1".into()));
            }
            if s.thinning == 0 {
                return Err(err("simulation", "thinning", "must be at least 1".into()));
            }
            positive("simulation", "init_scale", Some(s.init_scale))?;
            if !(s.slack_c >= 0.0 && s.slack_c.is_finite()) {
                return Err(err("simulation", "slack_c", "must be non-negative".into()));
            }
            if !(s.burn_in >= 0.0 && s.burn_in < s.t_end) {
                return Err(err("simulation", "burn_in", format!("must lie in [0, t_end), got {}", s.burn_in)));
            }
        }
        if let Some(p) = &self.pdmp {
            if p.orders.is_empty() || p.orders.contains(&0) {
                return Err(err("pdmp", "orders", "orders must be positive and non-empty".into()));
            }
            if p.replicas < 2 {
                return Err(err("pdmp", "replicas", "must be at least 2".into()));
            }
            if p.points < 3 {
                return Err(err("pdmp", "points", "must be at least 3".into()));
            }
            positive("pdmp", "horizon", Some(p.horizon))?;
            positive("pdmp", "rate_tolerance", Some(p.rate_tolerance))?;
            if !(p.z0 != 0.0 && p.z0.is_finite()) {
                return Err(err("pdmp", "z0", "must be finite and nonzero".into()));
            }
        }
        if let Some(d) = &self.diagnostics {
            if d.particles.is_some_and(|n| n < 2) {
                return Err(err("diagnostics", "particles", "must be at least 2".into()));
            }
            if !(d.quantile > 0.0 && d.quantile < 1.0) {
                return Err(err("diagnostics", "quantile", "must lie in (0, 1)".into()));
            }
            positive("diagnostics", "horizon", d.horizon)?;
            positive("diagnostics", "spread", Some(d.spread))?;
            if d.u_grid.as_ref().is_some_and(|g| g.iter().any(|u| !(*u >= 0.0))) {
                return Err(err("diagnostics", "u_grid", "entries must be non-negative".into()));
            }
        }
        Ok(())
    }
}

fn check_matrix(rows: &[Vec<f64>]) -> Result<(), String> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err("must be a non-empty square matrix given as rows".into());
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err("has a non-finite entry".into());
    }
    Ok(())
}
