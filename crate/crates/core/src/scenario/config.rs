//! Scenario file schema.

use serde::{Deserialize, Serialize};

use crate::energy::XiRule;
use crate::modal::Prehistory;
use crate::schedule::{CycleBounds, Tail, ValidationMode};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub schedule: ScheduleSpec,
    pub profile: ProfileSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub prehistory: Prehistory,
    pub numerics: NumericsSpec,
    /// hypothesis mode; required by `certify`, optional for `simulate`
    #[serde(default)]
    pub certification: Option<CertificationSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub observability: Option<ObservabilitySpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Explicit modal truncation.
    Modal {
        lambda: Vec<f64>,
        #[serde(default)]
        d1: MatrixSpec,
        #[serde(default)]
        d2: MatrixSpec,
        /// defaults to `d1`
        #[serde(default)]
        obs_w: Option<MatrixSpec>,
    },
    /// Galerkin truncation of the Dirichlet string.
    ModalString {
        length: f64,
        modes: usize,
        omega1: (f64, f64),
        omega2: (f64, f64),
    },
    /// Finite-difference string with internal damping.
    WaveInternal {
        length: f64,
        nodes: usize,
        omega1: (f64, f64),
        omega2: (f64, f64),
        /// modes of the string truncation used for the certificate
        #[serde(default = "default_cert_modes")]
        cert_modes: usize,
    },
    /// Finite-difference string damped at `x = L`, delayed feedback on `omega`.
    WaveBoundary {
        length: f64,
        nodes: usize,
        omega: (f64, f64),
        /// quasi-observability constants; estimated when absent
        #[serde(default)]
        alphas: Option<[f64; 3]>,
        #[serde(default = "default_alpha_samples")]
        alpha_samples: usize,
        #[serde(default)]
        alpha_seed: u64,
    },
}

fn default_cert_modes() -> usize {
    8
}

fn default_alpha_samples() -> usize {
    crate::observability::MIN_ALPHA_SAMPLES
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Modal { .. } => "modal",
            ModelSpec::ModalString { .. } => "modal_string",
            ModelSpec::WaveInternal { .. } => "wave_internal",
            ModelSpec::WaveBoundary { .. } => "wave_boundary",
        }
    }
}

/// `"identity"`, `{"diag": [...]}` or a full row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Named(String),
    Diagonal { diag: Vec<f64> },
    Full(Vec<Vec<f64>>),
}

impl Default for MatrixSpec {
    fn default() -> Self {
        MatrixSpec::Named("identity".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub tau: f64,
    pub cycles: usize,
    /// one length for all cycles, or one per cycle
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
    /// continuation past the materialized cycles; inferred when absent
    #[serde(default)]
    pub even_tail: Option<Tail>,
    #[serde(default)]
    pub odd_tail: Option<Tail>,
}

/// A number (constant on every cycle) or one entry per cycle, each a
/// number or up to four cubic coefficients in local time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Constant(f64),
    PerCycle(Vec<PolySpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolySpec {
    Constant(f64),
    Coefficients(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub m: Tail,
    pub big_m: Tail,
    pub m_odd: Tail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub b1: GainSpec,
    pub b2: GainSpec,
    /// per-cycle bounds; sampled from the gains when absent
    #[serde(default)]
    pub bounds: Option<Vec<CycleBounds>>,
    /// constant when every gain is the same constant, unspecified otherwise
    #[serde(default)]
    pub tails: Option<TailSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Modal coefficients, or nodal values for the wave models.
    Values { u: Vec<f64>, v: Vec<f64> },
    /// Coefficients of `Σ c_k sin(kπx/L)`; string-based models only.
    SineSeries { u: Vec<f64>, v: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSpec {
    pub dt: f64,
    #[serde(default = "one")]
    pub sample_stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificationSpec {
    pub mode: ValidationMode,
    #[serde(default)]
    pub t_bar: f64,
    #[serde(default)]
    pub xi_rule: XiRule,
    #[serde(default = "default_tol")]
    pub tol_cycle: f64,
    #[serde(default = "default_damped_steps")]
    pub damped_steps: usize,
    /// run the simulation and compare measured ratios
    #[serde(default = "yes")]
    pub simulate: bool,
}

fn default_tol() -> f64 {
    crate::certify::TOL_CYCLE
}

fn default_damped_steps() -> usize {
    crate::observability::DEFAULT_DAMPED_STEPS
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub trace: String,
    pub summary: String,
    pub report: String,
    pub sweep: String,
    pub observability: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            trace: "trace.csv".into(),
            summary: "summary.json".into(),
            report: "report.json".into(),
            sweep: "sweep.csv".into(),
            observability: "observability.csv".into(),
        }
    }
}

/// Horizon grid for the observability table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservabilitySpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameters: Vec<SweepAxis>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Tau,
    TStar,
    TTilde,
    MOddScale,
    MScale,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Tau => "tau",
            SweepParam::TStar => "t_star",
            SweepParam::TTilde => "t_tilde",
            SweepParam::MOddScale => "m_odd_scale",
            SweepParam::MScale => "m_scale",
        }
    }
}
