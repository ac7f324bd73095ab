use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use sde_contract::certify::{
    check_cont_r, glangevin_gamma0_prime, l2_decay_bound, log_sobolev_constant, sample_states, sigma_m_norm,
    Provenance, Worst,
};
use sde_contract::diagnose::{
    decay_fit, ergodic_concentration_check, gaussian_w1_to_point, gaussian_w2, wasserstein_contraction_test,
    AffineObservable, ConcentrationConfig, ContractionTestConfig, EmpiricalMeasure, Order,
};
use sde_contract::matrixkit::{lyapunov_metric, sym_eig};
use sde_contract::simulate::{
    contraction_monitor, couple_sync, pdmp_moment_rate, pdmp_simulate, Integrator, NoiseStream, PdmpParams,
    INIT_SUBSTREAM,
};
use sde_contract::Error;

use crate::build::{
    build_certificate, build_model, initial_pair, integrator, stationary_gaussian, CertSetup, ModelSetup,
};
use crate::config::{ExperimentConfig, OrderTag, SimulationSection};
use crate::report::{fmt, write_atomic, Report, Series};
use crate::Failure;

pub fn dispatch(name: &str, cfg: &ExperimentConfig, out: &Path) -> Result<String, Failure> {
    match name {
        "certify" => certify(cfg, out),
        "couple" => couple(cfg, out),
        "simulate" => simulate(cfg, out),
        "pdmp" => pdmp(cfg, out),
        "chain" => chain(cfg, out),
        "wasserstein" => wasserstein(cfg, out),
        "concentration" => concentration(cfg, out),
        other => Err(Failure::Config(format!("unknown command {other}"))),
    }
}

fn need_simulation<'a>(cfg: &'a ExperimentConfig, cmd: &str) -> Result<&'a SimulationSection, Failure> {
    cfg.simulation.as_ref().ok_or_else(|| Failure::Config(format!("{cmd} needs a [simulation] section")))
}

fn diverged(replica: u64) -> impl Fn(Error) -> Failure {
    move |e| match e {
        Error::Diverged { step } => Failure::Diverged(format!("replica {replica} diverged at step {step}")),
        other => other.into(),
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Rate, metric and provenance; shared by every report.
fn certificate_summary(rep: &mut Report, cs: &CertSetup) {
    rep.str("provenance", cs.cert.provenance.name());
    rep.num("rho", cs.cert.rho);
    rep.num("rho_certified", cs.rho_certified);
    if let Some(g) = cs.cert.gamma0 {
        rep.num("gamma0", g);
    }
    if let Some(b) = cs.bounds {
        rep.num("lambda", b.lower());
        rep.num("big_lambda", b.upper());
    }
    rep.matrix("metric", cs.cert.metric.as_matrix());
}

/// Full certificate report and the `Cont_R` check; returns whether it passed.
fn certificate_details(
    rep: &mut Report,
    cfg: &ExperimentConfig,
    setup: &ModelSetup,
    cs: &CertSetup,
) -> Result<bool, Failure> {
    let c = &cfg.certificate;
    let model = &setup.model;
    let cert = &cs.cert;
    certificate_summary(rep, cs);
    match &cert.provenance {
        Provenance::LemmaSearch { a, c } => {
            rep.num("lemma_a", *a);
            rep.num("lemma_c", *c);
        }
        Provenance::Generalized(parts) => {
            rep.matrix("e", parts.e.as_matrix());
            rep.matrix("d", &parts.d);
            rep.matrix("n_metric", parts.n_metric.as_matrix());
            rep.num("kappa", parts.kappa);
            rep.num("alpha", parts.alpha);
            rep.nums("h", &parts.h.as_array());
        }
        _ => {}
    }
    if c.l2 {
        let b =
            model.friction_matrix().ok_or_else(|| Failure::Config("certificate.l2 needs a kinetic model".into()))?;
        let bounds = cs.bounds.ok_or_else(|| Failure::Config("certificate.l2 needs Hessian bounds".into()))?;
        let n_metric = match &cert.provenance {
            Provenance::Generalized(parts) => parts.n_metric.clone(),
            _ => lyapunov_metric(&b)?.0,
        };
        let n = setup.n.expect("kinetic model has a position block");
        rep.num("gamma0_prime", glangevin_gamma0_prime(&b, &n_metric, bounds, n)?);
        rep.num("l2_prefactor", l2_decay_bound(&n_metric, cert.rho, 0.0));
    }
    let s = sigma_m_norm(model.diffusion(), &cert.metric);
    rep.num("sigma_m_norm", s);
    rep.nums("ct_times", &c.ct_times);
    let ct: Vec<f64> =
        c.ct_times.iter().map(|&t| log_sobolev_constant(model.diffusion(), &cert.metric, cert.rho, t)).collect();
    rep.nums("ct_values", &ct);
    if cert.rho > 0.0 {
        rep.num("ct_limit", s * s / cert.rho);
    }
    if let (Some(ch), Some(u)) = (&setup.chain, model.potential()) {
        let pts = sample_states(u.dim(), 100, c.radius, cfg.seed());
        let min_eig = std::iter::once(vec![0.0; u.dim()])
            .chain(pts)
            .map(|x| sym_eig(&u.hessian(&x)).map(|e| e.min()))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        rep.int("ncount", ch.ncount);
        rep.bool("pinned", ch.pinned);
        rep.num("hessian_min_eig", min_eig);
    }
    let points = sample_states(model.dim(), c.samples, c.radius, cfg.seed());
    let check = check_cont_r(model, cert, &points, c.tolerance)?;
    rep.num("cont_r_max_violation", check.max_violation);
    rep.str(
        "cont_r_worst",
        &match check.worst {
            Worst::Sample(i) => format!("sample {i}"),
            Worst::Endpoint(xi) => format!("endpoint {xi}"),
        },
    );
    rep.int("cont_r_sampled", check.sampled);
    rep.bool("cont_r_endpoint_certified", check.endpoint_certified);
    rep.bool("cont_r_passes", check.passes);
    Ok(check.passes)
}

fn certify(cfg: &ExperimentConfig, out: &Path) -> Result<String, Failure> {
    let setup = build_model(cfg)?;
    let cs = build_certificate(cfg, &setup)?;
    let mut rep = Report::new("certify");
    let passes = certificate_details(&mut rep, cfg, &setup, &cs)?;
    let path = write_atomic(out, "certify.toml", &rep.render(cfg))?;
    let msg = format!("rho = {} ({}); wrote {}", fmt(cs.cert.rho), cs.cert.provenance.name(), path.display());
    if passes {
        Ok(msg)
    } else {
        Err(Failure::Diagnostic(format!("Cont_R check failed; {msg}")))
    }
}

struct CoupleOutcome {
    passes: bool,
    worst: f64,
}

/// Coupled replicas with the certified metric; fills `rep` and returns the series.
fn run_coupling(
    rep: &mut Report,
    sim: &SimulationSection,
    setup: &ModelSetup,
    cs: &CertSetup,
) -> Result<(Series, CoupleOutcome), Failure> {
    let model = &setup.model;
    let d = model.dim();
    let base = integrator(sim);
    let m = &cs.cert.metric;
    let results: Vec<(f64, f64)> = (0..sim.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let (z0, delta) = initial_pair(sim, d, r)?;
            let zb: Vec<f64> = z0.iter().zip(&delta).map(|(a, b)| a + b).collect();
            let traj = couple_sync(model, &z0, &zb, &base.clone().with_replica(r), Some(m)).map_err(diverged(r))?;
            let mon = contraction_monitor(&traj, cs.cert.rho)?;
            Ok((mon.max_ratio, mon.argmax_time))
        })
        .collect::<Result<_, Failure>>()?;
    let threshold = 1.0 + sim.slack_c * sim.dt;
    let mut series = Series::new(&["replica", "max_ratio", "argmax_time", "passes"]);
    for (r, (ratio, t)) in results.iter().enumerate() {
        series.push(vec![r.to_string(), fmt(*ratio), fmt(*t), (*ratio <= threshold).to_string()]);
    }
    let mut sorted: Vec<f64> = results.iter().map(|r| r.0).collect();
    sorted.sort_by(f64::total_cmp);
    let failing = sorted.iter().filter(|r| **r > threshold).count();
    rep.int("replicas", sim.replicas);
    rep.num("threshold", threshold);
    rep.num("max_ratio_min", sorted[0]);
    rep.num("max_ratio_median", quantile(&sorted, 0.5));
    rep.num("max_ratio_q95", quantile(&sorted, 0.95));
    rep.num("max_ratio_max", *sorted.last().expect("at least one replica"));
    rep.int("replicas_failing", failing);
    rep.bool("coupling_passes", failing == 0);
    Ok((series, CoupleOutcome { passes: failing == 0, worst: *sorted.last().unwrap() }))
}

fn couple(cfg: &ExperimentConfig, out: &Path) -> Result<String, Failure> {
    let sim = need_simulation(cfg, "couple")?;
    let setup = build_model(cfg)?;
    let cs = build_certificate(cfg, &setup)?;
    let mut rep = Report::new("couple");
    certificate_summary(&mut rep, &cs);
    let (series, outcome) = run_coupling(&mut rep, sim, &setup, &cs)?;
    write_atomic(out, "couple.csv", &series.render(cfg)?)?;
    let path = write_atomic(out, "couple.toml", &rep.render(cfg))?;
    let msg = format!("largest max_ratio = {}; wrote {}", fmt(outcome.worst), path.display());
    if outcome.passes {
        Ok(msg)
    } else {
        Err(Failure::Diagnostic(format!("coupled contraction exceeded 1 + C dt; {msg}")))
    }
}

fn chain(cfg: &ExperimentConfig, out: &Path) -> Result<String, Failure> {
    let setup = build_model(cfg)?;
    if setup.chain.is_none() {
        return Err(Failure::Config("chain needs model.family = \"chain\"".into()));
    }
    let cs = build_certificate(cfg, &setup)?;
    let mut rep = Report::new("chain");
    let mut passes = certificate_details(&mut rep, cfg, &setup, &cs)?;
    if let Some(sim) = &cfg.simulation {
        let (series, outcome) = run_coupling(&mut rep, sim, &setup, &cs)?;
        write_atomic(out, "chain.csv", &series.render(cfg)?)?;
        passes &= outcome.passes;
    }
    let path = write_atomic(out, "chain.toml", &rep.render(cfg))?;
    let msg = format!("rho = {}; wrote {}", fmt(cs.cert.rho), path.display());
    if passes {
        Ok(msg)
    } else {
        Err(Failure::Diagnostic(format!("chain checks failed; {msg}")))
    }
}

/// Streaming first and second moments over contiguous batches.
struct Moments {
    d: usize,
    count: Vec<f64>,
    s1: Vec<Vec<f64>>,
    s2: Vec<DMatrix<f64>>,
}

impl Moments {
    fn new(d: usize, batches: usize) -> Self {
        Moments {
            d,
            count: vec![0.0; batches],
            s1: vec![vec![0.0; d]; batches],
            s2: vec![DMatrix::zeros(d, d); batches],
        }
    }

    fn add(&mut self, b: usize, z: &[f64]) {
        self.count[b] += 1.0;
        for i in 0..self.d {
            self.s1[b][i] += z[i];
            for j in 0..self.d {
                self.s2[b][(i, j)] += z[i] * z[j];
            }
        }
    }

    fn merge(mut self, other: Moments) -> Self {
        self.count.extend(other.count);
        self.s1.extend(other.s1);
        self.s2.extend(other.s2);
        self
    }

    fn covariance(count: f64, s1: &[f64], s2: &DMatrix<f64>) -> DMatrix<f64> {
        let d = s1.len();
        DMatrix::from_fn(d, d, |i, j| s2[(i, j)] / count - s1[i] * s1[j] / (count * count))
    }

    /// Pooled mean and covariance, and the standard error of each covariance
    /// entry from the spread of the batch estimates.
    fn summary(&self) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
        let d = self.d;
        let total: f64 = self.count.iter().sum();
        let s1: Vec<f64> = (0..d).map(|i| self.s1.iter().map(|v| v[i]).sum()).collect();
        let s2 = self.s2.iter().fold(DMatrix::zeros(d, d), |a, b| a + b);
        let mean = s1.iter().map(|v| v / total).collect();
        let cov = Self::covariance(total, &s1, &s2);
        let per: Vec<DMatrix<f64>> = (0..self.count.len())
            .filter(|&b| self.count[b] > 0.0)
            .map(|b| Self::covariance(self.count[b], &self.s1[b], &self.s2[b]))
            .collect();
        let k = per.len() as f64;
        let se = DMatrix::from_fn(d, d, |i, j| {
            if k < 2.0 {
                return f64::NAN;
            }
            let m = per.iter().map(|c| c[(i, j)]).sum::<f64>() / k;
            let var = per.iter().map(|c| (c[(i, j)] - m).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        });
        (mean, cov, se)
    }
}

const BATCHES: usize = 10;

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<String, Failure> {
    let sim = need_simulation(cfg, "simulate")?;
    let setup = build_model(cfg)?;
    let model = &setup.model;
    let d = model.dim();
    let base = integrator(sim);
    base.validate()?;
    let integ = Integrator::new(model, base.dt, base.scheme)?;
    let steps = base.steps();
    let kept = |k: usize| (k % sim.thinning == 0 || k == steps) && k as f64 * base.dt >= sim.burn_in;
    let per_replica = (0..=steps).filter(|&k| kept(k)).count();
    if per_replica == 0 {
        return Err(Failure::Config("no samples remain after simulation.burn_in".into()));
    }
    let runs: Vec<(Moments, Vec<(f64, Vec<f64>)>)> = (0..sim.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let (z0, _) = initial_pair(sim, d, r)?;
            let cfg_r = base.clone().with_replica(r);
            let mut mom = Moments::new(d, BATCHES);
            let mut rows = Vec::new();
            let mut idx = 0usize;
            integ
                .run(&z0, &cfg_r, |k, t, z| {
                    if sim.write_trajectory && (k % sim.thinning == 0 || k == steps) {
                        rows.push((t, z.to_vec()));
                    }
                    if kept(k) {
                        mom.add(idx * BATCHES / per_replica, z);
                        idx += 1;
                    }
                })
                .map_err(diverged(r))?;
            Ok((mom, rows))
        })
        .collect::<Result<_, Failure>>()?;

    let mut header = vec!["replica".to_string(), "t".to_string()];
    header.extend((0..d).map(|i| format!("z{i}")));
    let mut series = Series::with_columns(header);
    let mut all = Moments { d, count: Vec::new(), s1: Vec::new(), s2: Vec::new() };
    for (r, (mom, rows)) in runs.into_iter().enumerate() {
        for (t, z) in rows {
            let mut row = vec![r.to_string(), fmt(t)];
            row.extend(z.iter().map(|v| fmt(*v)));
            series.push(row);
        }
        all = all.merge(mom);
    }
    let (mean, cov, se) = all.summary();
    let mut rep = Report::new("simulate");
    rep.int("samples", per_replica * sim.replicas);
    rep.nums("mean", &mean);
    rep.matrix("covariance", &cov);
    rep.matrix("covariance_se", &se);
    if let Some((_, target)) = stationary_gaussian(cfg, &setup) {
        rep.matrix("stationary_covariance", &target);
        let z = (0..d * d).filter(|&k| se[k] > 0.0).map(|k| (cov[k] - target[k]).abs() / se[k]).fold(0.0, f64::max);
        rep.num("max_abs_z", z);
    }
    if sim.write_trajectory {
        write_atomic(out, "simulate.csv", &series.render(cfg)?)?;
    }
    let path = write_atomic(out, "simulate.toml", &rep.render(cfg))?;
    Ok(format!("{} samples; wrote {}", per_replica * sim.replicas, path.display()))
}

fn pdmp(cfg: &ExperimentConfig, out: &Path) -> Result<String, Failure> {
    let p = cfg.pdmp.as_ref().ok_or_else(|| Failure::Config("pdmp needs a [pdmp] section".into()))?;
    let params = PdmpParams::new(p.a, p.h, p.lam)?;
    let mut series = Series::new(&["order", "t", "moment"]);
    let mut rep = Report::new("pdmp");
    let mut failing = Vec::new();
    for &n in &p.orders {
        let rho = pdmp_moment_rate(n, p.a, p.h, p.lam)?;
        if !(rho > 0.0) {
            return Err(Failure::Config(format!("moment {n} does not decay: rate {rho}")));
        }
        let t_end = p.horizon / rho;
        let grid: Vec<f64> = (0..p.points).map(|i| t_end * i as f64 / (p.points - 1) as f64).collect();
        let sums: Vec<f64> = (0..p.replicas as u64)
            .into_par_iter()
            .map(|r| {
                let tr = pdmp_simulate(params, &[p.z0], t_end, p.seed, r)?;
                Ok::<_, Error>(grid.iter().map(|t| tr.at(*t)[0].abs().powi(n as i32)).collect::<Vec<f64>>())
            })
            .try_reduce(|| vec![0.0; grid.len()], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))
            .map_err(Failure::from)?;
        let moments: Vec<(f64, f64)> = grid.iter().zip(&sums).map(|(t, s)| (*t, s / p.replicas as f64)).collect();
        for (t, m) in &moments {
            series.push(vec![n.to_string(), fmt(*t), fmt(*m)]);
        }
        let fit = decay_fit(&moments)?;
        let fitted = fit.rate / n as f64;
        let rel = (fitted / rho - 1.0).abs();
        rep.num(&format!("order_{n}_rate_theory"), rho);
        rep.num(&format!("order_{n}_rate_fitted"), fitted);
        rep.num(&format!("order_{n}_rel_error"), rel);
        rep.num(&format!("order_{n}_r2"), fit.r2);
        if rel > p.rate_tolerance {
            failing.push(n);
        }
    }
    rep.bool("passes", failing.is_empty());
    write_atomic(out, "pdmp.csv", &series.render(cfg)?)?;
    let path = write_atomic(out, "pdmp.toml", &rep.render(cfg))?;
    if failing.is_empty() {
        Ok(format!("all fitted rates within tolerance; wrote {}", path.display()))
    } else {
        Err(Failure::Diagnostic(format!("fitted rates off for orders {failing:?}; wrote {}", path.display())))
    }
}

/// Writes a certificate-only report when there is nothing to diagnose.
fn certify_only(
    cmd: &str,
    cfg: &ExperimentConfig,
    out: &Path,
    setup: &ModelSetup,
    cs: &CertSetup,
) -> Result<String, Failure> {
    let mut rep = Report::new(cmd);
    let passes = certificate_details(&mut rep, cfg, setup, cs)?;
    let path = write_atomic(out, &format!("{cmd}.toml"), &rep.render(cfg))?;
    let msg = format!("no diagnostics requested, certificate only; wrote {}", path.display());
    if passes {
        Ok(msg)
    } else {
        Err(Failure::Diagnostic(format!("Cont_R check failed; {msg}")))
    }
}

fn cloud(center: &[f64], spread: f64, count: usize, seed: u64, offset: u64) -> Result<EmpiricalMeasure, Failure> {
    let pts = (0..count as u64)
        .map(|i| {
            let mut rng = NoiseStream::new(seed, offset + i, INIT_SUBSTREAM);
            center.iter().map(|c| c + spread * rng.normal()).collect()
        })
        .collect();
    Ok(EmpiricalMeasure::new(pts)?)
}

fn wasserstein(cfg: &ExperimentConfig, out: &Path) -> Result<String, Failure> {
    let setup = build_model(cfg)?;
    let cs = build_certificate(cfg, &setup)?;
    let Some(diag) = &cfg.diagnostics else {
        return certify_only("wasserstein", cfg, out, &setup, &cs);
    };
    let sim = need_simulation(cfg, "wasserstein")?;
    let d = setup.model.dim();
    let order = match diag.order.unwrap_or(OrderTag::Two) {
        OrderTag::One => Order::One,
        OrderTag::Two => Order::Two,
        OrderTag::Inf => Order::Inf,
    };
    let base = integrator(sim);
    let steps = base.steps();
    let times = diag.times.clone().unwrap_or_else(|| (0..=4).map(|i| ((i * steps) / 4) as f64 * base.dt).collect());
    let particles = diag.particles.unwrap_or(64);
    let ca = diag.center_a.clone().unwrap_or_else(|| vec![0.0; d]);
    let cb = diag.center_b.clone().unwrap_or_else(|| {
        let mut v = vec![0.0; d];
        v[0] = 3.0 * diag.spread;
        v
    });
    if ca.len() != d || cb.len() != d {
        return Err(Failure::Config(format!("diagnostics.center_a and center_b must have length {d}")));
    }
    let a = cloud(&ca, diag.spread, particles, sim.seed, 0)?;
    let b = cloud(&cb, diag.spread, particles, sim.seed, particles as u64)?;
    let mut tcfg = ContractionTestConfig::new(order, times, base);
    tcfg.bootstrap = diag.bootstrap;
    tcfg.quantile = diag.quantile;
    let res = wasserstein_contraction_test(&setup.model, &cs.cert, &a, &b, &tcfg).map_err(|e| match e {
        Error::Diverged { step } => Failure::Diverged(format!("a particle diverged at step {step}")),
        other => other.into(),
    })?;
    let mut series = Series::new(&["t", "w_emp", "eps", "bound", "slack", "violation"]);
    for r in &res.rows {
        series.push(vec![fmt(r.t), fmt(r.w_emp), fmt(r.eps), fmt(r.bound), fmt(r.slack), r.violation.to_string()]);
    }
    let mut rep = Report::new("wasserstein");
    certificate_summary(&mut rep, &cs);
    rep.str("order", order.name());
    rep.int("particles", particles);
    if order == Order::Two {
        let s = DMatrix::identity(d, d) * diag.spread.powi(2);
        rep.num("gaussian_w2_t0", gaussian_w2(&ca, &s, &cb, &s, &cs.cert.metric)?);
    }
    rep.num("w_emp_t0", res.rows[0].w_emp);
    rep.num("max_slack", res.rows.iter().map(|r| r.slack).fold(f64::NEG_INFINITY, f64::max));
    rep.bool("passes", res.passes);
    write_atomic(out, "wasserstein.csv", &series.render(cfg)?)?;
    let path = write_atomic(out, "wasserstein.toml", &rep.render(cfg))?;
    if res.passes {
        Ok(format!("no contraction violation; wrote {}", path.display()))
    } else {
        Err(Failure::Diagnostic(format!("empirical W distance exceeded the bound; wrote {}", path.display())))
    }
}

fn concentration(cfg: &ExperimentConfig, out: &Path) -> Result<String, Failure> {
    let setup = build_model(cfg)?;
    let cs = build_certificate(cfg, &setup)?;
    let Some(diag) = &cfg.diagnostics else {
        return certify_only("concentration", cfg, out, &setup, &cs);
    };
    let sim = need_simulation(cfg, "concentration")?;
    let d = setup.model.dim();
    let m = &cs.cert.metric;
    let w = diag.observable.clone().unwrap_or_else(|| {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        v
    });
    if w.len() != d {
        return Err(Failure::Config(format!("diagnostics.observable must have length {d}")));
    }
    let obs = AffineObservable::normalized(w, m)?;
    let z0 = sim.z0.clone().unwrap_or_else(|| vec![0.0; d]);
    if z0.len() != d {
        return Err(Failure::Config(format!("simulation.z0 must have length {d}")));
    }
    let horizon = diag.horizon.unwrap_or(sim.t_end);
    let u_grid = diag.u_grid.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.3, 0.5]);
    let mut ccfg = ConcentrationConfig::new(horizon, u_grid, sim.replicas, integrator(sim), z0.clone());
    ccfg.lipschitz_radius = cfg.certificate.radius;
    if let Some((mean, cov)) = stationary_gaussian(cfg, &setup) {
        ccfg.stationary_mean = Some(obs.eval(&mean));
        ccfg.w1_init = Some(gaussian_w1_to_point(&z0, &mean, &cov, m)?);
    }
    let f = |z: &[f64]| obs.eval(z);
    let res = ergodic_concentration_check(&setup.model, &cs.cert, &f, &ccfg).map_err(|e| match e {
        Error::Diverged { step } => Failure::Diverged(format!("a replica diverged at step {step}")),
        other => other.into(),
    })?;
    let mut series = Series::new(&["u", "empirical", "bound", "margin", "passes"]);
    for r in &res.rows {
        series.push(vec![fmt(r.u), fmt(r.empirical), fmt(r.bound), fmt(r.margin), r.passes.to_string()]);
    }
    let mut rep = Report::new("concentration");
    certificate_summary(&mut rep, &cs);
    rep.nums("observable", &obs.w);
    rep.num("horizon", horizon);
    rep.int("replicas", sim.replicas);
    rep.num("sigma_m_norm", res.sigma_m_norm);
    rep.num("mean_average", res.mean_average);
    rep.num("std_error", res.std_error);
    if let (Some(b), Some(w1)) = (&res.bias, ccfg.w1_init) {
        rep.num("w1_init", w1);
        rep.num("bias_observed", b.observed);
        rep.num("bias_bound", b.bound);
        rep.num("bias_margin", b.margin);
        rep.bool("bias_passes", b.passes);
    }
    rep.bool("passes", res.passes);
    write_atomic(out, "concentration.csv", &series.render(cfg)?)?;
    let path = write_atomic(out, "concentration.toml", &rep.render(cfg))?;
    if res.passes {
        Ok(format!("tails and bias within bounds; wrote {}", path.display()))
    } else {
        Err(Failure::Diagnostic(format!("concentration bound exceeded; wrote {}", path.display())))
    }
}
