//! Contraction and growth constants, series and exponential stability
//! conditions, and their confrontation with simulated traces.
//!
//! Four families of results are covered, each tied to an energy:
//!
//! - augmented: bounded damping, augmented energy `E`, constant `c_n`;
//! - standard: short delayed intervals, standard energy `E_S`, constant `ĉ_n`;
//! - damped: `E_S` with the damped observability constant `d̂_n`;
//! - boundary: the boundary-damped string, `d̂_n` from the
//!   quasi-observability constants `α₁, α₂, α₃`.

pub mod exponential;
pub mod formulas;
pub mod measured;
pub mod series;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{select_xi_with, EnergyError, XiRule};
use crate::modal::{ModalSystem, Trace};
use crate::observability::{
    damped_observability_constant, observability_constant, ObservabilityError, DEFAULT_DAMPED_STEPS,
};
use crate::schedule::{
    validate, FeedbackProfile, Poly, ScheduleError, SwitchingSchedule, Tail, ValidationMode,
};

pub use exponential::{check_exponential, ExponentialConstants, ExponentialKind, ExponentialVerdict};
pub use formulas::*;
pub use measured::{fit_decay_points, fit_decay_rate, per_cycle_verify, DecayFit, MeasuredCheck, TOL_CYCLE, UNDERFLOW};
pub use series::{check_series, SeriesConstants, SeriesKind, SeriesTails, SeriesVerdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("{name} = {value} must be positive and finite")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} = {value} must be nonnegative and finite")]
    Negative { name: &'static str, value: f64 },
    #[error("active interval length {t} must exceed T_bar = {t_bar}")]
    ShortInterval { t: f64, t_bar: f64 },
    #[error("d_hat = {0} is not a contraction")]
    NotContractive(f64),
    #[error("exponential conditions need a periodic schedule")]
    NotPeriodic,
    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("missing constant: {0}")]
    MissingConstant(&'static str),
    #[error("{0:?} mode is not supported for this model")]
    UnsupportedMode(ValidationMode),
    #[error("trace was simulated with xi = {trace}, certificate uses xi = {report}")]
    XiMismatch { trace: f64, report: f64 },
    #[error("trace has {trace} cycles, schedule {schedule}")]
    TraceShape { trace: usize, schedule: usize },
    #[error(transparent)]
    Observability(#[from] ObservabilityError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Undecidable,
}

impl Status {
    /// All must pass: any failure fails, else any undecidable is undecidable.
    pub fn all<I: IntoIterator<Item = Status>>(items: I) -> Status {
        let mut out = Status::Pass;
        for s in items {
            match s {
                Status::Fail => return Status::Fail,
                Status::Undecidable => out = Status::Undecidable,
                Status::Pass => {}
            }
        }
        out
    }

    /// One pass suffices: else any undecidable is undecidable, else fail.
    pub fn any<I: IntoIterator<Item = Status>>(items: I) -> Status {
        let mut out = Status::Fail;
        for s in items {
            match s {
                Status::Pass => return Status::Pass,
                Status::Undecidable => out = Status::Undecidable,
                Status::Fail => {}
            }
        }
        out
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Undecidable => 2,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Undecidable => "UNDECIDABLE",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Augmented,
    Standard,
    Damped,
    Boundary,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Augmented => "augmented",
            Family::Standard => "standard",
            Family::Damped => "damped",
            Family::Boundary => "boundary",
        }
    }

    /// Whether the family's chain runs on `E_S` rather than `E`.
    pub fn standard_energy(&self) -> bool {
        *self != Family::Augmented
    }

    fn series(&self) -> &'static [SeriesKind] {
        match self {
            Family::Augmented => &[SeriesKind::Star, SeriesKind::M32A],
            Family::Standard => &[SeriesKind::Star, SeriesKind::M32ANew],
            Family::Damped => &[SeriesKind::StarStar],
            Family::Boundary => &[SeriesKind::StarExplicit],
        }
    }

    fn exponential(&self) -> ExponentialKind {
        match self {
            Family::Augmented => ExponentialKind::Ass1A,
            Family::Standard => ExponentialKind::Ass1ANew,
            Family::Damped => ExponentialKind::Ass1ANewUU,
            Family::Boundary => ExponentialKind::Ass1ANewU,
        }
    }

    fn hypotheses(&self) -> ValidationMode {
        match self {
            Family::Augmented => ValidationMode::General,
            Family::Standard => ValidationMode::Restricted,
            Family::Damped | Family::Boundary => ValidationMode::Unbounded,
        }
    }
}

/// What the certificate is computed for.
#[derive(Clone, Copy, Debug)]
pub enum CertModel<'a> {
    Modal(&'a ModalSystem),
    /// Boundary-damped string; the delayed channel embeds with constant 1.
    Boundary { alphas: [f64; 3] },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub t_bar: f64,
    pub xi_rule: XiRule,
    pub tol_cycle: f64,
    pub damped_steps: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            t_bar: 0.0,
            xi_rule: XiRule::Half,
            tol_cycle: TOL_CYCLE,
            damped_steps: DEFAULT_DAMPED_STEPS,
        }
    }
}

/// Constants of one family on one materialized cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleConstants {
    pub n: usize,
    pub t_even: f64,
    pub t_odd: f64,
    pub m: f64,
    pub big_m: f64,
    pub m_odd: f64,
    /// `c_n`, `ĉ_n` or `d̂_n`
    pub contraction: f64,
    /// worst-case amplification over the delayed interval
    pub growth: f64,
    /// certified bound on the energy ratio over the whole cycle
    pub cycle_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyConstants {
    /// observability constant at `T*` (augmented, standard)
    pub c: Option<f64>,
    pub embed_active: Option<f64>,
    pub embed_delay: f64,
    pub xi: Option<f64>,
    pub t_star: f64,
    pub t_bar: f64,
    /// damped observability constant per cycle (damped)
    pub d: Vec<f64>,
    pub d_tail: Option<f64>,
    pub alphas: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub name: String,
    pub status: Status,
    pub basis: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: Family,
    pub applicable: bool,
    /// why the family does not apply, or notes on its constants
    pub notes: Vec<String>,
    pub constants: Option<FamilyConstants>,
    pub cycles: Vec<CycleConstants>,
    pub series: Vec<SeriesVerdict>,
    pub exponential: Option<ExponentialVerdict>,
    pub theorems: Vec<TheoremVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub family: Family,
    pub d: f64,
    /// `0.8·(−ln d)/(T* + T̃)`
    pub required_mu: f64,
    pub fit: Option<DecayFit>,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub mode: ValidationMode,
    pub families: Vec<FamilyReport>,
    pub measured: Vec<MeasuredCheck>,
    /// measured per-cycle ratios `E_S(t_{2n+2})/E_S(t_{2n})`
    pub rho: Vec<Option<f64>>,
    pub decay_fit: Option<DecayFit>,
    pub decay_checks: Vec<DecayCheck>,
    pub verdict: Status,
}

impl CertificateReport {
    pub fn family(&self, f: Family) -> Option<&FamilyReport> {
        self.families.iter().find(|r| r.family == f)
    }

    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn theorems(&self) -> impl Iterator<Item = &TheoremVerdict> {
        self.families.iter().filter(|f| f.applicable).flat_map(|f| f.theorems.iter())
    }
}

/// Fraction of `−ln d / (T* + T̃)` the fitted rate must reach.
pub const DECAY_RATE_FRACTION: f64 = 0.8;

fn families_for(mode: ValidationMode, model: &CertModel) -> Result<Vec<Family>, CertifyError> {
    match (model, mode) {
        (CertModel::Modal(_), ValidationMode::General) => Ok(vec![Family::Augmented]),
        (CertModel::Modal(_), ValidationMode::Restricted) => Ok(vec![Family::Standard]),
        (CertModel::Modal(_), ValidationMode::Unbounded) => Ok(vec![Family::Damped]),
        (CertModel::Modal(_), ValidationMode::Periodic) => {
            Ok(vec![Family::Augmented, Family::Standard, Family::Damped])
        }
        (CertModel::Boundary { .. }, ValidationMode::Unbounded | ValidationMode::Periodic) => {
            Ok(vec![Family::Boundary])
        }
        (CertModel::Boundary { .. }, m) => Err(CertifyError::UnsupportedMode(m)),
    }
}

fn same_matrix(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> bool {
    let scale = a.amax().max(b.amax()).max(1e-300);
    (a - b).amax() <= 1e-12 * scale
}

/// Observation-weight consistency each family's proof relies on.
pub fn weight_consistency(system: &ModalSystem, family: Family) -> Result<(), String> {
    match family {
        Family::Augmented => {
            if same_matrix(system.d1(), system.d2()) && same_matrix(system.d1(), system.obs_w()) {
                Ok(())
            } else {
                Err("needs D1 = D2 = observation weight".into())
            }
        }
        Family::Standard => {
            if same_matrix(system.d1(), system.obs_w()) {
                Ok(())
            } else {
                Err("needs observation weight = D1".into())
            }
        }
        _ => Ok(()),
    }
}

fn poly_key(p: &Poly, t: f64) -> [u64; 5] {
    let c = p.0;
    [c[0].to_bits(), c[1].to_bits(), c[2].to_bits(), c[3].to_bits(), t.to_bits()]
}

/// Damped observability constants per cycle, and past the horizon when
/// the tails pin `b₁` to one constant on every later active interval.
pub fn damped_constants(
    system: &ModalSystem,
    schedule: &SwitchingSchedule,
    profile: &FeedbackProfile,
    steps: usize,
) -> Result<(Vec<f64>, Option<f64>), CertifyError> {
    let mut cache: HashMap<[u64; 5], f64> = HashMap::new();
    let mut eval = |p: Poly, t: f64| -> Result<f64, CertifyError> {
        let key = poly_key(&p, t);
        if let Some(&d) = cache.get(&key) {
            return Ok(d);
        }
        let d = damped_observability_constant(system, p, t, steps)?.d;
        cache.insert(key, d);
        Ok(d)
    };
    let mut d = Vec::with_capacity(schedule.n_cycles());
    for n in 0..schedule.n_cycles() {
        d.push(eval(profile.b1_poly(n), schedule.even_length(n))?);
    }
    let tails = profile.tails();
    let tail = match (tails.m, tails.big_m, schedule.even_tail()) {
        (Tail::Constant { value: lo }, Tail::Constant { value: hi }, Tail::Constant { value: t })
            if lo == hi && lo > 0.0 =>
        {
            Some(eval(Poly::constant(lo), t)?)
        }
        _ => None,
    };
    Ok((d, tail))
}

struct Context<'a> {
    schedule: &'a SwitchingSchedule,
    profile: &'a FeedbackProfile,
    model: CertModel<'a>,
    opts: CertifyOptions,
}

fn cycle_row(n: usize, s: &SwitchingSchedule, p: &FeedbackProfile) -> CycleConstants {
    let b = p.declared_bounds()[n];
    CycleConstants {
        n,
        t_even: s.even_length(n),
        t_odd: s.odd_length(n),
        m: b.m,
        big_m: b.big_m,
        m_odd: b.m_odd,
        contraction: f64::NAN,
        growth: f64::NAN,
        cycle_bound: f64::NAN,
    }
}

fn not_applicable(family: Family, notes: Vec<String>) -> FamilyReport {
    FamilyReport {
        family,
        applicable: false,
        notes,
        constants: None,
        cycles: Vec::new(),
        series: Vec::new(),
        exponential: None,
        theorems: Vec::new(),
    }
}

fn family_report(ctx: &Context, family: Family) -> Result<FamilyReport, CertifyError> {
    let (schedule, profile, opts) = (ctx.schedule, ctx.profile, ctx.opts);
    let mut notes = Vec::new();
    let report = validate(schedule, profile, family.hypotheses(), opts.t_bar);
    if !report.is_valid() {
        notes.extend(report.violations.iter().map(|v| format!("{}: {}", v.hypothesis, v.detail)));
    }
    if let CertModel::Modal(sys) = ctx.model {
        if let Err(e) = weight_consistency(sys, family) {
            notes.push(e);
        }
    }
    if !notes.is_empty() {
        return Ok(not_applicable(family, notes));
    }

    let t_star = schedule.t_star();
    let mut k = FamilyConstants {
        c: None,
        embed_active: None,
        embed_delay: 1.0,
        xi: None,
        t_star,
        t_bar: opts.t_bar,
        d: Vec::new(),
        d_tail: None,
        alphas: None,
    };
    match (ctx.model, family) {
        (CertModel::Modal(sys), Family::Augmented | Family::Standard) => {
            match observability_constant(sys, t_star) {
                Ok(c) => k.c = Some(c),
                Err(e) => return Ok(not_applicable(family, vec![format!("observability at T* = {t_star}: {e}")])),
            }
            if family == Family::Augmented {
                k.embed_active = Some(sys.embedding_c());
                k.embed_delay = sys.embedding_c();
                k.xi = Some(select_xi_with(profile, opts.xi_rule)?.xi);
            } else {
                k.embed_active = Some(sys.embedding_c1());
                k.embed_delay = sys.embedding_c2();
            }
        }
        (CertModel::Modal(sys), Family::Damped) => {
            k.embed_delay = sys.embedding_c2();
            match damped_constants(sys, schedule, profile, opts.damped_steps) {
                Ok((d, tail)) => {
                    k.d = d;
                    k.d_tail = tail;
                }
                Err(e) => return Ok(not_applicable(family, vec![format!("damped observability: {e}")])),
            }
            if k.d_tail.is_none() {
                notes.push("b1 past the horizon is not pinned by the tails: d_n there is unknown".into());
            }
        }
        (CertModel::Boundary { alphas }, Family::Boundary) => {
            k.alphas = Some(alphas);
        }
        _ => return Err(CertifyError::UnsupportedMode(family.hypotheses())),
    }

    let mut cycles = Vec::with_capacity(schedule.n_cycles());
    for n in 0..schedule.n_cycles() {
        let mut row = cycle_row(n, schedule, profile);
        let (t, big_m, m, m_odd, t_odd) = (row.t_even, row.big_m, row.m, row.m_odd, row.t_odd);
        match family {
            Family::Augmented => {
                let (c, embed, xi) = (k.c.unwrap_or(f64::NAN), k.embed_delay, k.xi.unwrap_or(1.0));
                row.contraction = contraction_cn(c, embed, t, big_m, m)?;
                row.growth = growth_factor_e(embed, xi, m_odd, t_odd)?;
                row.cycle_bound = row.growth * row.contraction;
            }
            Family::Standard => {
                let c_hat = contraction_cn_hat(k.c.unwrap_or(f64::NAN), k.embed_active.unwrap_or(1.0), t, big_m, m)?;
                row.contraction = c_hat;
                row.growth = (k.embed_delay * m_odd * t_odd).exp();
                row.cycle_bound = cycle_bound_es(k.embed_delay, m_odd, t_odd, c_hat)?;
            }
            Family::Damped | Family::Boundary => {
                let d = if family == Family::Damped {
                    k.d[n]
                } else {
                    boundary_dn(k.alphas.unwrap_or_default(), big_m, m, t, opts.t_bar)?
                };
                let d_hat = contraction_dn_hat(d)?;
                row.contraction = d_hat;
                row.growth = (k.embed_delay * m_odd * t_odd).exp();
                row.cycle_bound = cycle_bound_es(k.embed_delay, m_odd, t_odd, d_hat)?;
            }
        }
        cycles.push(row);
    }

    let tails = SeriesTails { bounds: *profile.tails(), even: schedule.even_tail(), odd: schedule.odd_tail() };
    let sk = SeriesConstants {
        c: k.c.unwrap_or(1.0),
        embed: k.embed_active.unwrap_or(k.embed_delay),
        embed_odd: k.embed_delay,
        xi: k.xi.unwrap_or(1.0),
        t_bar: opts.t_bar,
        alphas: k.alphas.unwrap_or_default(),
        d_tail: k.d_tail,
    };
    let series: Vec<SeriesVerdict> = family.series().iter().map(|&s| check_series(s, &tails, &sk)).collect();
    let mut theorems = vec![TheoremVerdict {
        name: format!("asymptotic-{}", family.name()),
        status: Status::any(series.iter().map(|s| s.status)),
        basis: series.iter().map(|s| format!("{} {}", s.kind.name(), s.status)).collect::<Vec<_>>().join(", "),
    }];

    let exponential = if schedule.periodic_lengths().is_some() {
        let ek = ExponentialConstants {
            c: k.c.unwrap_or(1.0),
            embed_active: k.embed_active.unwrap_or(k.embed_delay),
            embed_delay: k.embed_delay,
            xi: k.xi.unwrap_or(1.0),
            t_bar: opts.t_bar,
            alphas: k.alphas.unwrap_or_default(),
            d: k.d.clone(),
            d_tail: k.d_tail,
        };
        let v = check_exponential(family.exponential(), schedule, profile, &ek)?;
        theorems.push(TheoremVerdict {
            name: format!("exponential-{}", family.name()),
            status: v.status,
            basis: format!("{} = {:.6} ({})", v.kind.name(), v.value, v.reason),
        });
        Some(v)
    } else {
        None
    };

    Ok(FamilyReport {
        family,
        applicable: true,
        notes,
        constants: Some(k),
        cycles,
        series,
        exponential,
        theorems,
    })
}

fn measured_checks(
    fam: &FamilyReport,
    trace: &Trace,
    tol: f64,
    out: &mut Vec<MeasuredCheck>,
) {
    let standard = fam.family.standard_energy();
    let label = if standard { "E_S" } else { "E" };
    let contraction: Vec<f64> = fam.cycles.iter().map(|c| c.contraction).collect();
    let cycle: Vec<f64> = fam.cycles.iter().map(|c| c.cycle_bound).collect();
    let active = trace.active_ratios(standard, UNDERFLOW);
    let whole = trace.cycle_ratios(standard, UNDERFLOW);
    out.push(per_cycle_verify(
        &format!("{}: {label}(t_2n+1)/{label}(t_2n) <= contraction", fam.family.name()),
        &active,
        &contraction,
        tol,
    ));
    out.push(per_cycle_verify(
        &format!("{}: {label}(t_2n+2)/{label}(t_2n) <= cycle bound", fam.family.name()),
        &whole,
        &cycle,
        tol,
    ));
    if let Some(v) = &fam.exponential {
        if v.value < 1.0 && v.status == Status::Pass {
            out.push(per_cycle_verify(
                &format!("{}: {label}(t_2n+2)/{label}(t_2n) <= {}", fam.family.name(), v.kind.name()),
                &whole,
                &vec![v.value; whole.len()],
                tol,
            ));
        }
    }
}

/// Build the certificate for `schedule`/`profile` under `mode`, and
/// compare it with `trace` when one is given.
pub fn certify(
    schedule: &SwitchingSchedule,
    profile: &FeedbackProfile,
    mode: ValidationMode,
    model: CertModel,
    opts: CertifyOptions,
    trace: Option<&Trace>,
) -> Result<CertificateReport, CertifyError> {
    if profile.n_cycles() != schedule.n_cycles() {
        return Err(CertifyError::TraceShape { trace: profile.n_cycles(), schedule: schedule.n_cycles() });
    }
    let ctx = Context { schedule, profile, model, opts };
    let families = families_for(mode, &model)?
        .into_iter()
        .map(|f| family_report(&ctx, f))
        .collect::<Result<Vec<_>, _>>()?;

    let mut measured = Vec::new();
    let mut rho = Vec::new();
    let mut decay_fit = None;
    let mut decay_checks = Vec::new();
    if let Some(trace) = trace {
        if trace.n_cycles() != schedule.n_cycles() {
            return Err(CertifyError::TraceShape { trace: trace.n_cycles(), schedule: schedule.n_cycles() });
        }
        rho = trace.cycle_ratios(true, UNDERFLOW);
        let only_augmented = families.iter().filter(|f| f.applicable).all(|f| f.family == Family::Augmented)
            && families.iter().any(|f| f.applicable);
        decay_fit = fit_decay_rate(trace, !only_augmented).ok();
        for fam in families.iter().filter(|f| f.applicable) {
            if fam.family == Family::Augmented {
                let xi = fam.constants.as_ref().and_then(|k| k.xi).unwrap_or(1.0);
                if (trace.xi - xi).abs() > 1e-12 * xi.max(1.0) {
                    return Err(CertifyError::XiMismatch { trace: trace.xi, report: xi });
                }
            }
            measured_checks(fam, trace, opts.tol_cycle, &mut measured);
            if let (Some(v), Some((ts, tt))) = (&fam.exponential, schedule.periodic_lengths()) {
                if v.status == Status::Pass && v.value < 1.0 && v.value > 0.0 {
                    let required_mu = DECAY_RATE_FRACTION * (-v.value.ln()) / (ts + tt);
                    let fit = fit_decay_rate(trace, fam.family.standard_energy()).ok();
                    let status = match fit {
                        Some(f) if f.mu >= required_mu => Status::Pass,
                        Some(_) => Status::Fail,
                        None => Status::Undecidable,
                    };
                    decay_checks.push(DecayCheck { family: fam.family, d: v.value, required_mu, fit, status });
                }
            }
        }
    }

    let measured_ok = measured.iter().all(|m| m.status == Status::Pass)
        && decay_checks.iter().all(|d| d.status != Status::Fail);
    let theorem = Status::any(
        families.iter().filter(|f| f.applicable).flat_map(|f| f.theorems.iter().map(|t| t.status)),
    );
    let verdict = if measured_ok { theorem } else { Status::Fail };
    Ok(CertificateReport { mode, families, measured, rho, decay_fit, decay_checks, verdict })
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |x| format!("{x:.6}"))
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode: {:?}", self.mode)?;
        for fam in &self.families {
            writeln!(f)?;
            if !fam.applicable {
                writeln!(f, "[{}] not applicable: {}", fam.family.name(), fam.notes.join("; "))?;
                continue;
            }
            writeln!(f, "[{}]", fam.family.name())?;
            if let Some(k) = &fam.constants {
                writeln!(
                    f,
                    "  c = {}  C_active = {}  C_delay = {:.6}  xi = {}  T* = {:.6}  d_tail = {}",
                    opt(k.c),
                    opt(k.embed_active),
                    k.embed_delay,
                    opt(k.xi),
                    k.t_star,
                    opt(k.d_tail)
                )?;
            }
            for note in &fam.notes {
                writeln!(f, "  note: {note}")?;
            }
            writeln!(f, "  {:>4} {:>12} {:>12} {:>12}", "n", "contraction", "growth", "cycle bound")?;
            for c in &fam.cycles {
                writeln!(f, "  {:>4} {:>12.6} {:>12.6} {:>12.6}", c.n, c.contraction, c.growth, c.cycle_bound)?;
            }
            for s in &fam.series {
                let parts: Vec<String> =
                    s.parts.iter().map(|p| format!("{}: {:?}", p.series, p.behaviour)).collect();
                writeln!(f, "  series {:<12} {:<11} {}  ({})", s.kind.name(), s.status, parts.join("; "), s.reason)?;
            }
            if let Some(e) = &fam.exponential {
                writeln!(f, "  exp    {:<12} {:<11} value = {:.6}  {}", e.kind.name(), e.status, e.value, e.reason)?;
                if let Some(p) = &e.product {
                    writeln!(f, "         product window {} -> {:.6} {}", p.window, p.value, p.status)?;
                }
                if let Some(m) = e.small_gain_threshold {
                    writeln!(f, "         small-gain threshold on M_odd: {m:.6}")?;
                }
            }
            for t in &fam.theorems {
                writeln!(f, "  theorem {:<24} {:<11} {}", t.name, t.status, t.basis)?;
            }
        }
        if !self.measured.is_empty() {
            writeln!(f)?;
            for m in &self.measured {
                writeln!(
                    f,
                    "measured {:<60} {:<5} worst margin {}",
                    m.name,
                    m.status,
                    opt(m.worst_margin())
                )?;
            }
        }
        if let Some(fit) = &self.decay_fit {
            writeln!(f, "decay fit: mu = {:.6}  gamma = {:.6}  residual = {:.3e}", fit.mu, fit.gamma, fit.residual)?;
        }
        for d in &self.decay_checks {
            writeln!(
                f,
                "decay {}: d = {:.6}, required mu >= {:.6}, fitted {} -> {}",
                d.family.name(),
                d.d,
                d.required_mu,
                opt(d.fit.map(|x| x.mu)),
                d.status
            )?;
        }
        writeln!(f, "verdict: {}", self.verdict)
    }
}
