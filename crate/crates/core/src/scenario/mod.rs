//! JSON scenario files: loading, validation, runs and output.
//!
//! A scenario declares the model, the switching schedule, the feedback
//! profile, initial data and numerics. The optional `certification`
//! section names the hypothesis mode; when present the schedule and profile
//! must satisfy it before anything runs.

mod config;
mod output;
mod sweep;

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::*;
pub use output::{emit_plots, read_trace_csv, trace_csv, CsvRow, PLOT_FILES};
pub use sweep::{run_sweep, sweep_points, SweepRow, SweepTable, MAX_SWEEP_AXES, MAX_SWEEP_POINTS};

use crate::certify::{
    certify, fit_decay_rate, weight_consistency, CertModel, CertificateReport, CertifyError, CertifyOptions,
    DecayFit, Family,
};
use crate::energy::{check_dissipation, select_xi_with, DissipationReport, XiRule};
use crate::modal::{self, ModalState, ModalSystem, RunOptions, SimError, SwitchEnergy, Trace};
use crate::observability::{estimate_boundary_alphas, observability_constant, ObservabilityError};
use crate::schedule::{
    build_schedule, validate, BoundTails, CycleBounds, FeedbackProfile, Poly, SwitchingSchedule, Tail,
    ValidationMode, ValidationReport,
};
use crate::wave::{self, BoundaryWave, Grid1D, InternalWave, WaveState};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{file}:{line}:{column}: field `{field}`: {message}")]
    Schema { file: String, line: usize, column: usize, field: String, message: String },
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    Version(u32),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario rejected: {0}")]
    Validation(ValidationReport),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Observability(#[from] ObservabilityError),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error("plots: {0}")]
    Plot(String),
}

impl ScenarioError {
    /// Diverging numerics count as a failed run, everything else as a
    /// configuration problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Simulation(SimError::NonFinite(_)) => 1,
            _ => 3,
        }
    }
}

pub(crate) fn io_error(path: &Path, e: std::io::Error) -> ScenarioError {
    ScenarioError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Parse scenario text; `file` only labels diagnostics.
pub fn parse_scenario(text: &str, file: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let full = inner.to_string();
        let message = match full.rfind(" at line ") {
            Some(i) => full[..i].to_string(),
            None => full,
        };
        ScenarioError::Schema { file: file.to_string(), line: inner.line(), column: inner.column(), field, message }
    })?;
    if scenario.schema_version != SCHEMA_VERSION {
        return Err(ScenarioError::Version(scenario.schema_version));
    }
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_scenario(&text, &path.display().to_string())
}

pub enum Model {
    Modal(ModalSystem),
    /// Finite-difference string plus its modal truncation for certificates.
    Internal { wave: InternalWave, surrogate: ModalSystem },
    Boundary { wave: BoundaryWave, alphas: Option<[f64; 3]>, samples: usize, seed: u64 },
}

/// A scenario with its schedule, profile and model built and checked.
pub struct Prepared {
    pub scenario: Scenario,
    pub schedule: SwitchingSchedule,
    pub profile: FeedbackProfile,
    pub model: Model,
    pub validation: Option<ValidationReport>,
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

fn matrix(spec: &MatrixSpec, k: usize, name: &str) -> Result<DMatrix<f64>, ScenarioError> {
    match spec {
        MatrixSpec::Named(s) if s == "identity" => Ok(DMatrix::identity(k, k)),
        MatrixSpec::Named(s) => Err(invalid(format!("{name}: unknown matrix name `{s}`"))),
        MatrixSpec::Diagonal { diag } => {
            if diag.len() != k {
                return Err(invalid(format!("{name}: diagonal has {} entries, expected {k}", diag.len())));
            }
            Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
        }
        MatrixSpec::Full(rows) => {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(invalid(format!("{name}: expected a {k}x{k} matrix")));
            }
            Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
        }
    }
}

fn polys(spec: &GainSpec, cycles: usize, name: &str) -> Result<Vec<Poly>, ScenarioError> {
    let one = |p: &PolySpec| -> Result<Poly, ScenarioError> {
        match p {
            PolySpec::Constant(c) => Ok(Poly::constant(*c)),
            PolySpec::Coefficients(c) if !c.is_empty() && c.len() <= 4 => {
                let mut a = [0.0; 4];
                a[..c.len()].copy_from_slice(c);
                Ok(Poly(a))
            }
            PolySpec::Coefficients(c) => {
                Err(invalid(format!("{name}: a cubic has 1 to 4 coefficients, got {}", c.len())))
            }
        }
    };
    let out: Vec<Poly> = match spec {
        GainSpec::Constant(c) => vec![Poly::constant(*c); cycles],
        GainSpec::PerCycle(v) if v.len() == 1 => vec![one(&v[0])?; cycles],
        GainSpec::PerCycle(v) if v.len() == cycles => v.iter().map(one).collect::<Result<_, _>>()?,
        GainSpec::PerCycle(v) => {
            return Err(invalid(format!("{name}: {} entries for {cycles} cycles", v.len())));
        }
    };
    if out.iter().flat_map(|p| p.0).any(|c| !c.is_finite()) {
        return Err(invalid(format!("{name}: coefficients must be finite")));
    }
    Ok(out)
}

fn build_profile(spec: &ProfileSpec, schedule: &SwitchingSchedule) -> Result<FeedbackProfile, ScenarioError> {
    let cycles = schedule.n_cycles();
    let b1 = polys(&spec.b1, cycles, "profile.b1")?;
    let b2 = polys(&spec.b2, cycles, "profile.b2")?;
    let bounds = match &spec.bounds {
        Some(b) if b.len() == cycles => b.clone(),
        Some(b) if b.len() == 1 => vec![b[0]; cycles],
        Some(b) => return Err(invalid(format!("profile.bounds: {} entries for {cycles} cycles", b.len()))),
        None => {
            let zero = CycleBounds { m: 0.0, big_m: 0.0, m_odd: 0.0 };
            let probe = FeedbackProfile::new(b1.clone(), b2.clone(), vec![zero; cycles], unspecified_tails())
                .map_err(|e| invalid(e.to_string()))?;
            (0..cycles)
                .map(|n| {
                    let (lo, hi, b2max) = probe.sampled_range(schedule, n, 128);
                    CycleBounds { m: lo, big_m: hi, m_odd: b2max }
                })
                .collect()
        }
    };
    let tails = match &spec.tails {
        Some(t) => BoundTails { m: t.m, big_m: t.big_m, m_odd: t.m_odd },
        None => {
            let uniform = b1.iter().all(|p| *p == b1[0] && p.is_constant())
                && b2.iter().all(|p| *p == b2[0] && p.is_constant())
                && bounds.iter().all(|b| *b == bounds[0]);
            if uniform {
                let b = bounds[0];
                BoundTails { m: Tail::constant(b.m), big_m: Tail::constant(b.big_m), m_odd: Tail::constant(b.m_odd) }
            } else {
                unspecified_tails()
            }
        }
    };
    FeedbackProfile::new(b1, b2, bounds, tails).map_err(|e| invalid(e.to_string()))
}

fn unspecified_tails() -> BoundTails {
    BoundTails { m: Tail::Unspecified, big_m: Tail::Unspecified, m_odd: Tail::Unspecified }
}

fn build_model(spec: &ModelSpec) -> Result<Model, ScenarioError> {
    let me = |e: modal::ModalError| invalid(format!("model: {e}"));
    let we = |e: wave::WaveError| invalid(format!("model: {e}"));
    Ok(match spec {
        ModelSpec::Modal { lambda, d1, d2, obs_w } => {
            let k = lambda.len();
            let d1m = matrix(d1, k, "model.d1")?;
            let d2m = matrix(d2, k, "model.d2")?;
            let obs = match obs_w {
                Some(w) => matrix(w, k, "model.obs_w")?,
                None => d1m.clone(),
            };
            Model::Modal(ModalSystem::new(lambda.clone(), d1m, d2m, obs).map_err(me)?)
        }
        ModelSpec::ModalString { length, modes, omega1, omega2 } => {
            Model::Modal(ModalSystem::string(*length, *modes, *omega1, *omega2).map_err(me)?)
        }
        ModelSpec::WaveInternal { length, nodes, omega1, omega2, cert_modes } => {
            let grid = Grid1D::new(*length, *nodes).map_err(we)?;
            Model::Internal {
                wave: InternalWave::new(grid, *omega1, *omega2).map_err(we)?,
                surrogate: ModalSystem::string(*length, *cert_modes, *omega1, *omega2).map_err(me)?,
            }
        }
        ModelSpec::WaveBoundary { length, nodes, omega, alphas, alpha_samples, alpha_seed } => {
            let grid = Grid1D::new(*length, *nodes).map_err(we)?;
            if let Some(a) = alphas {
                if a.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                    return Err(invalid("model.alphas must be finite and nonnegative"));
                }
            }
            Model::Boundary {
                wave: BoundaryWave::new(grid, *omega).map_err(we)?,
                alphas: *alphas,
                samples: *alpha_samples,
                seed: *alpha_seed,
            }
        }
    })
}

/// Build and check a parsed scenario.
pub fn prepare(scenario: Scenario) -> Result<Prepared, ScenarioError> {
    let s = &scenario.schedule;
    let mut schedule = build_schedule(&s.even, &s.odd, s.tau, s.cycles).map_err(|e| invalid(format!("schedule: {e}")))?;
    if s.even_tail.is_some() || s.odd_tail.is_some() {
        let even = s.even_tail.unwrap_or(schedule.even_tail());
        let odd = s.odd_tail.unwrap_or(schedule.odd_tail());
        schedule = schedule.with_tails(even, odd);
    }
    let profile = build_profile(&scenario.profile, &schedule)?;
    let model = build_model(&scenario.model)?;
    let n = &scenario.numerics;
    if !(n.dt > 0.0) || !n.dt.is_finite() {
        return Err(invalid(format!("numerics.dt must be positive, got {}", n.dt)));
    }
    if n.sample_stride == 0 {
        return Err(invalid("numerics.sample_stride must be at least 1"));
    }

    let validation = match &scenario.certification {
        Some(c) => {
            let report = validate(&schedule, &profile, c.mode, c.t_bar);
            if !report.is_valid() {
                return Err(ScenarioError::Validation(report));
            }
            check_weights(&model, c.mode)?;
            Some(report)
        }
        None => None,
    };
    Ok(Prepared { scenario, schedule, profile, model, validation })
}

fn check_weights(model: &Model, mode: ValidationMode) -> Result<(), ScenarioError> {
    let system = match model {
        Model::Modal(s) | Model::Internal { surrogate: s, .. } => s,
        Model::Boundary { .. } => {
            return match mode {
                ValidationMode::General | ValidationMode::Restricted => Err(invalid(format!(
                    "the boundary model is certified only in unbounded or periodic mode, not {mode:?}"
                ))),
                _ => Ok(()),
            };
        }
    };
    let family = match mode {
        ValidationMode::General => Family::Augmented,
        ValidationMode::Restricted => Family::Standard,
        _ => return Ok(()),
    };
    weight_consistency(system, family).map_err(|e| invalid(format!("weights for {mode:?} mode: {e}")))
}

pub fn load_prepared(path: &Path) -> Result<Prepared, ScenarioError> {
    prepare(load_scenario(path)?)
}

impl Prepared {
    fn xi_rule(&self) -> XiRule {
        self.scenario.certification.as_ref().map(|c| c.xi_rule).unwrap_or_default()
    }

    /// Weight of the delay integral in `E`; zero when no admissible value exists.
    pub fn xi(&self) -> f64 {
        select_xi_with(&self.profile, self.xi_rule()).map(|c| c.xi).unwrap_or(0.0)
    }

    fn initial_modal(&self, system: &ModalSystem) -> Result<ModalState, ScenarioError> {
        let k = system.modes();
        let (a, adot) = match (&self.scenario.initial, &self.scenario.model) {
            (InitialSpec::Values { u, v }, _) => (u.clone(), v.clone()),
            (InitialSpec::SineSeries { u, v }, ModelSpec::ModalString { length, .. }) => {
                // sin(kπx/L) = √(L/2) · normalized mode
                let s = (0.5 * length).sqrt();
                let pad = |c: &[f64]| -> Result<Vec<f64>, ScenarioError> {
                    if c.len() > k {
                        return Err(invalid(format!("initial: {} coefficients for {k} modes", c.len())));
                    }
                    let mut out = vec![0.0; k];
                    for (o, x) in out.iter_mut().zip(c) {
                        *o = s * x;
                    }
                    Ok(out)
                };
                (pad(u)?, pad(v)?)
            }
            (InitialSpec::SineSeries { .. }, _) => {
                return Err(invalid("initial: sine_series needs a string-based model"));
            }
        };
        if a.len() != k || adot.len() != k {
            return Err(invalid(format!("initial: expected {k} values each, got {} and {}", a.len(), adot.len())));
        }
        Ok(ModalState::new(0.0, a, adot))
    }

    fn initial_wave(&self, grid: &Grid1D, dof: usize) -> Result<WaveState, ScenarioError> {
        let (u, v) = match &self.scenario.initial {
            InitialSpec::Values { u, v } => (u.clone(), v.clone()),
            InitialSpec::SineSeries { u, v } => (wave::sine_series(grid, u, dof), wave::sine_series(grid, v, dof)),
        };
        if u.len() != dof || v.len() != dof {
            return Err(invalid(format!("initial: expected {dof} nodal values each, got {} and {}", u.len(), v.len())));
        }
        Ok(WaveState { t: 0.0, u, v })
    }

    pub fn run_options(&self) -> RunOptions {
        let n = &self.scenario.numerics;
        RunOptions::new(n.dt)
            .stride(n.sample_stride)
            .xi(self.xi())
            .prehistory(self.scenario.prehistory.clone())
    }

    pub fn simulate(&self) -> Result<Trace, ScenarioError> {
        let opts = self.run_options();
        let trace = match &self.model {
            Model::Modal(system) => {
                modal::simulate(system, &self.schedule, &self.profile, &self.initial_modal(system)?, &opts)?
            }
            Model::Internal { wave: w, .. } => {
                let init = self.initial_wave(&w.grid, w.grid.nodes)?;
                wave::simulate_internal(w, &self.schedule, &self.profile, &init, &opts)?
            }
            Model::Boundary { wave: w, .. } => {
                let init = self.initial_wave(&w.grid, w.grid.nodes + 1)?;
                wave::simulate_boundary(w, &self.schedule, &self.profile, &init, &opts)?
            }
        };
        Ok(trace)
    }

    /// Quasi-observability constants of the boundary model, from the
    /// config or estimated on `T = T*`.
    pub fn boundary_alphas(&self) -> Result<Option<[f64; 3]>, ScenarioError> {
        match &self.model {
            Model::Boundary { alphas: Some(a), .. } => Ok(Some(*a)),
            Model::Boundary { wave: w, alphas: None, samples, seed } => {
                let t_bar = self.scenario.certification.as_ref().map(|c| c.t_bar).unwrap_or(0.0);
                let fit = estimate_boundary_alphas(&w.grid, self.schedule.t_star(), t_bar, *samples, *seed)?;
                Ok(Some(fit.alphas))
            }
            _ => Ok(None),
        }
    }

    pub fn certify(&self) -> Result<CertificateReport, ScenarioError> {
        let c = self
            .scenario
            .certification
            .as_ref()
            .ok_or_else(|| invalid("certify needs a `certification` section"))?;
        let trace = if c.simulate { Some(self.simulate()?) } else { None };
        let opts = CertifyOptions { t_bar: c.t_bar, xi_rule: c.xi_rule, tol_cycle: c.tol_cycle, damped_steps: c.damped_steps };
        let alphas = self.boundary_alphas()?;
        let model = match (&self.model, alphas) {
            (Model::Modal(s), _) | (Model::Internal { surrogate: s, .. }, _) => CertModel::Modal(s),
            (Model::Boundary { .. }, Some(a)) => CertModel::Boundary { alphas: a },
            (Model::Boundary { .. }, None) => unreachable!("boundary model always yields alphas"),
        };
        Ok(certify(&self.schedule, &self.profile, c.mode, model, opts, trace.as_ref())?)
    }

    /// `(T, c(T))` for the modal models, `(T, α₁, α₂, α₃)` for the boundary model.
    pub fn observability_table(&self) -> Result<(Vec<&'static str>, Vec<Vec<f64>>), ScenarioError> {
        let t_star = self.schedule.t_star();
        let spec = self.scenario.observability.clone().unwrap_or(ObservabilitySpec {
            t_min: t_star / 8.0,
            t_max: 2.0 * t_star,
            points: 32,
        });
        if !(spec.t_min > 0.0 && spec.t_max >= spec.t_min) || spec.points == 0 {
            return Err(invalid("observability: need 0 < t_min ≤ t_max and points ≥ 1"));
        }
        let grid: Vec<f64> = (0..spec.points)
            .map(|i| {
                if spec.points == 1 {
                    spec.t_min
                } else {
                    spec.t_min + (spec.t_max - spec.t_min) * i as f64 / (spec.points - 1) as f64
                }
            })
            .collect();
        match &self.model {
            Model::Modal(s) | Model::Internal { surrogate: s, .. } => {
                let rows = grid
                    .iter()
                    .map(|&t| Ok(vec![t, observability_constant(s, t)?]))
                    .collect::<Result<Vec<_>, ObservabilityError>>()?;
                Ok((vec!["T", "c"], rows))
            }
            Model::Boundary { wave: w, samples, seed, .. } => {
                let t_bar = self.scenario.certification.as_ref().map(|c| c.t_bar).unwrap_or(0.0);
                let rows = grid
                    .iter()
                    .filter(|&&t| t > t_bar)
                    .map(|&t| {
                        let fit = estimate_boundary_alphas(&w.grid, t, t_bar, *samples, *seed)?;
                        Ok(vec![t, fit.alphas[0], fit.alphas[1], fit.alphas[2]])
                    })
                    .collect::<Result<Vec<_>, ObservabilityError>>()?;
                Ok((vec!["T", "alpha1", "alpha2", "alpha3"], rows))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub model: String,
    pub samples: usize,
    pub xi: f64,
    pub es0: f64,
    pub es_end: f64,
    pub e0: f64,
    pub e_end: f64,
    pub switches: Vec<SwitchEnergy>,
    /// fit of `ln E_S` at the cycle starts
    pub decay_fit: Option<DecayFit>,
    pub dissipation: Option<DissipationReport>,
}

impl SimulationSummary {
    pub fn of(prepared: &Prepared, trace: &Trace) -> Self {
        let first = trace.samples.first();
        let last = trace.samples.last();
        let mode = prepared.scenario.certification.as_ref().map(|c| c.mode);
        SimulationSummary {
            model: prepared.scenario.model.kind().to_string(),
            samples: trace.samples.len(),
            xi: trace.xi,
            es0: first.map_or(0.0, |s| s.es),
            es_end: last.map_or(0.0, |s| s.es),
            e0: first.map_or(0.0, |s| s.e),
            e_end: last.map_or(0.0, |s| s.e),
            switches: trace.switches.clone(),
            decay_fit: fit_decay_rate(trace, true).ok(),
            dissipation: mode.and_then(|m| {
                check_dissipation(trace, &prepared.schedule, &prepared.profile, trace.xi, m).ok()
            }),
        }
    }
}

impl std::fmt::Display for SimulationSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "model      {}", self.model)?;
        writeln!(f, "samples    {}", self.samples)?;
        writeln!(f, "xi         {:.6e}", self.xi)?;
        writeln!(f, "E_S(0)     {:.10e}", self.es0)?;
        writeln!(f, "E_S(end)   {:.10e}", self.es_end)?;
        writeln!(f, "E(0)       {:.10e}", self.e0)?;
        writeln!(f, "E(end)     {:.10e}", self.e_end)?;
        if let Some(d) = &self.decay_fit {
            writeln!(f, "mu_hat     {:.6e}", d.mu)?;
        }
        if let Some(d) = &self.dissipation {
            writeln!(f, "dissipation {} (max violation {:.3e})", if d.pass { "ok" } else { "VIOLATED" }, d.max_violation)?;
        }
        writeln!(f, "switch energies:")?;
        writeln!(f, "  {:>5} {:>14} {:>18} {:>18}", "k", "t_k", "E_S(t_k)", "E(t_k)")?;
        for s in &self.switches {
            writeln!(f, "  {:>5} {:>14.6} {:>18.10e} {:>18.10e}", s.index, s.t, s.es, s.e)?;
        }
        Ok(())
    }
}

/// Files written by a run.
#[derive(Clone, Debug)]
pub struct Written {
    pub paths: Vec<PathBuf>,
}

fn ensure_dir(dir: &Path) -> Result<(), ScenarioError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), ScenarioError> {
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

/// Metadata header line; the only place wall-clock content appears.
pub fn metadata_line(config: &Path) -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# delaystab {} config={} unix_time={secs}", env!("CARGO_PKG_VERSION"), config.display())
}

/// Simulate the scenario at `config`, writing the trace CSV and a JSON summary.
pub fn run_simulate(config: &Path, out_dir: &Path, metadata: bool) -> Result<(SimulationSummary, Written), ScenarioError> {
    let prepared = load_prepared(config)?;
    let trace = prepared.simulate()?;
    let summary = SimulationSummary::of(&prepared, &trace);
    ensure_dir(out_dir)?;
    let out = &prepared.scenario.output;
    let trace_path = out_dir.join(&out.trace);
    let summary_path = out_dir.join(&out.summary);
    let meta = metadata.then(|| metadata_line(config));
    write_file(&trace_path, &trace_csv(&trace, meta.as_deref()))?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&summary_path, &(json + "\n"))?;
    Ok((summary, Written { paths: vec![trace_path, summary_path] }))
}

/// Certify the scenario at `config`, writing the JSON report.
pub fn run_certify(config: &Path, out_dir: &Path) -> Result<(CertificateReport, Written), ScenarioError> {
    let prepared = load_prepared(config)?;
    let report = prepared.certify()?;
    ensure_dir(out_dir)?;
    let path = out_dir.join(&prepared.scenario.output.report);
    write_file(&path, &(report.to_json() + "\n"))?;
    Ok((report, Written { paths: vec![path] }))
}

/// Observability constants over a horizon grid as CSV.
pub fn run_observability(config: &Path, out_dir: &Path) -> Result<Written, ScenarioError> {
    let prepared = load_prepared(config)?;
    let (header, rows) = prepared.observability_table()?;
    let mut text = header.join(",");
    text.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|x| format!("{x:.16e}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    ensure_dir(out_dir)?;
    let path = out_dir.join(&prepared.scenario.output.observability);
    write_file(&path, &text)?;
    Ok(Written { paths: vec![path] })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const CONSERVATIVE: &str = r#"{
        "schema_version": 1,
        "model": {"kind": "modal", "lambda": [1, 4]},
        "schedule": {"tau": 1, "cycles": 2, "even": [2], "odd": [0.5]},
        "profile": {"b1": 0, "b2": 0},
        "initial": {"kind": "values", "u": [1, 0.5], "v": [0, 0]},
        "numerics": {"dt": 0.01}
    }"#;

    #[test]
    fn conservative_parses_and_runs() {
        let p = prepare(parse_scenario(CONSERVATIVE, "inline").unwrap()).unwrap();
        let t = p.simulate().unwrap();
        let e0 = t.samples[0].es;
        assert!(t.samples.iter().all(|s| (s.es / e0 - 1.0).abs() < 1e-9));
        assert_eq!(p.xi(), 1.0);
    }

    #[test]
    fn missing_tau_is_a_schema_error() {
        let text = CONSERVATIVE.replace("\"tau\": 1, ", "");
        match parse_scenario(&text, "x.json") {
            Err(ScenarioError::Schema { field, message, line, .. }) => {
                assert_eq!(field, "schedule");
                assert!(message.contains("tau"), "{message}");
                assert!(line >= 4);
            }
            other => panic!("{:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn wrong_type_names_the_field() {
        let text = CONSERVATIVE.replace("\"dt\": 0.01", "\"dt\": \"small\"");
        match parse_scenario(&text, "x.json") {
            Err(ScenarioError::Schema { field, .. }) => assert_eq!(field, "numerics.dt"),
            other => panic!("{:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn version_checked() {
        let text = CONSERVATIVE.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(parse_scenario(&text, "x"), Err(ScenarioError::Version(2))));
    }

    #[test]
    fn validation_runs_before_simulation() {
        // delayed interval longer than tau violates the restricted mode
        let text = CONSERVATIVE
            .replace("\"odd\": [0.5]", "\"odd\": [1.5]")
            .replace("\"b1\": 0, \"b2\": 0", "\"b1\": 1, \"b2\": 0.1")
            .replace("\"numerics\"", "\"certification\": {\"mode\": \"restricted\"}, \"numerics\"");
        match prepare(parse_scenario(&text, "x").unwrap()) {
            Err(ScenarioError::Validation(r)) => assert!(r.violates(crate::schedule::hypothesis::REST)),
            other => panic!("{:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn uniform_gains_get_constant_tails() {
        let text = CONSERVATIVE.replace("\"b1\": 0, \"b2\": 0", "\"b1\": 2, \"b2\": [0.1]");
        let p = prepare(parse_scenario(&text, "x").unwrap()).unwrap();
        assert!(p.profile.tails().all_constant());
        let text = CONSERVATIVE.replace("\"b1\": 0, \"b2\": 0", "\"b1\": [2, 3], \"b2\": 0.1");
        let p = prepare(parse_scenario(&text, "x").unwrap()).unwrap();
        assert_eq!(p.profile.tails().m, Tail::Unspecified);
        assert_eq!(p.profile.declared_bounds()[1].m, 3.0);
    }

    #[test]
    fn general_mode_needs_matching_weights() {
        let text = CONSERVATIVE
            .replace("\"lambda\": [1, 4]", "\"lambda\": [1, 4], \"d2\": {\"diag\": [1, 0]}")
            .replace("\"b1\": 0, \"b2\": 0", "\"b1\": 1, \"b2\": 0.1")
            .replace("\"numerics\"", "\"certification\": {\"mode\": \"general\"}, \"numerics\"");
        assert!(matches!(prepare(parse_scenario(&text, "x").unwrap()), Err(ScenarioError::Invalid(_))));
    }
}
