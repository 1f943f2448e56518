//! Parameter grids over a base scenario.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    ensure_dir, load_scenario, prepare, write_file, GainSpec, PolySpec, Scenario, ScenarioError, SweepParam,
    SweepSpec, Written,
};
use crate::schedule::Tail;

pub const MAX_SWEEP_POINTS: usize = 100_000;
pub const MAX_SWEEP_AXES: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<f64>,
    /// `PASS`, `FAIL`, `UNDECIDABLE` or `ERROR`
    pub verdict: String,
    pub rho_max: Option<f64>,
    pub mu_hat: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameters: Vec<SweepParam>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index");
        for p in &self.parameters {
            out.push(',');
            out.push_str(p.name());
        }
        out.push_str(",verdict,rho_max,mu_hat,note\n");
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = write!(out, "{}", r.index);
            for v in &r.values {
                let _ = write!(out, ",{v:.16e}");
            }
            let note = r.note.as_deref().unwrap_or("").replace([',', '\n', '"'], " ");
            let _ = writeln!(out, ",{},{},{},{}", r.verdict, opt(r.rho_max), opt(r.mu_hat), note);
        }
        out
    }
}

/// Cross product of the axes in declared order, the first axis varying slowest.
pub fn sweep_points(spec: &SweepSpec) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let axes = &spec.parameters;
    if axes.is_empty() || axes.len() > MAX_SWEEP_AXES {
        return Err(ScenarioError::Sweep(format!("need 1 to {MAX_SWEEP_AXES} parameters, got {}", axes.len())));
    }
    for (i, a) in axes.iter().enumerate() {
        if a.values.is_empty() {
            return Err(ScenarioError::Sweep(format!("parameter {} has no values", a.name.name())));
        }
        if a.values.iter().any(|v| !v.is_finite()) {
            return Err(ScenarioError::Sweep(format!("parameter {} has non-finite values", a.name.name())));
        }
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(ScenarioError::Sweep(format!("parameter {} repeated", a.name.name())));
        }
    }
    let total = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.values.len()))
        .filter(|&n| n <= MAX_SWEEP_POINTS)
        .ok_or_else(|| ScenarioError::Sweep(format!("grid exceeds {MAX_SWEEP_POINTS} points")))?;
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut p = vec![0.0; axes.len()];
        for (k, a) in axes.iter().enumerate().rev() {
            p[k] = a.values[rem % a.values.len()];
            rem /= a.values.len();
        }
        points.push(p);
    }
    Ok(points)
}

fn scale_gain(g: &mut GainSpec, s: f64) {
    match g {
        GainSpec::Constant(c) => *c *= s,
        GainSpec::PerCycle(v) => {
            for p in v {
                match p {
                    PolySpec::Constant(c) => *c *= s,
                    PolySpec::Coefficients(c) => c.iter_mut().for_each(|x| *x *= s),
                }
            }
        }
    }
}

fn scale_tail(t: &mut Tail, s: f64) {
    match t {
        Tail::Constant { value } => *value *= s,
        Tail::Geometric { scale, .. } | Tail::PowerLaw { scale, .. } => *scale *= s,
        Tail::Unspecified => {}
    }
}

/// The scenario with one parameter replaced or scaled.
pub fn apply(mut s: Scenario, param: SweepParam, value: f64) -> Scenario {
    match param {
        SweepParam::Tau => s.schedule.tau = value,
        SweepParam::TStar => {
            s.schedule.even = vec![value];
            s.schedule.even_tail = None;
        }
        SweepParam::TTilde => {
            s.schedule.odd = vec![value];
            s.schedule.odd_tail = None;
        }
        SweepParam::MOddScale => {
            scale_gain(&mut s.profile.b2, value);
            let a = value.abs();
            if let Some(b) = &mut s.profile.bounds {
                b.iter_mut().for_each(|c| c.m_odd *= a);
            }
            if let Some(t) = &mut s.profile.tails {
                scale_tail(&mut t.m_odd, a);
            }
        }
        SweepParam::MScale => {
            scale_gain(&mut s.profile.b1, value);
            if let Some(b) = &mut s.profile.bounds {
                b.iter_mut().for_each(|c| {
                    c.m *= value;
                    c.big_m *= value;
                });
            }
            if let Some(t) = &mut s.profile.tails {
                scale_tail(&mut t.m, value);
                scale_tail(&mut t.big_m, value);
            }
        }
    }
    s
}

fn evaluate(base: &Scenario, params: &[SweepParam], index: usize, values: &[f64]) -> SweepRow {
    let mut s = base.clone();
    for (&p, &v) in params.iter().zip(values) {
        s = apply(s, p, v);
    }
    let row = |verdict: String, rho_max, mu_hat, note| SweepRow { index, values: values.to_vec(), verdict, rho_max, mu_hat, note };
    match prepare(s).and_then(|p| p.certify()) {
        Ok(report) => {
            let rho_max = report.rho.iter().flatten().copied().reduce(f64::max);
            row(report.verdict.to_string(), rho_max, report.decay_fit.map(|f| f.mu), None)
        }
        Err(e) => row("ERROR".into(), None, None, Some(e.to_string())),
    }
}

/// Certify every grid point of the scenario at `config` in parallel and
/// write the rows in grid order.
pub fn run_sweep(config: &Path, out_dir: &Path, workers: Option<usize>) -> Result<(SweepTable, Written), ScenarioError> {
    let base = load_scenario(config)?;
    let spec = base.sweep.clone().ok_or_else(|| ScenarioError::Sweep("config has no `sweep` section".into()))?;
    if base.certification.is_none() {
        return Err(ScenarioError::Sweep("sweeps certify each point and need a `certification` section".into()));
    }
    let points = sweep_points(&spec)?;
    let params: Vec<SweepParam> = spec.parameters.iter().map(|a| a.name).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| ScenarioError::Sweep(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points.par_iter().enumerate().map(|(i, v)| evaluate(&base, &params, i, v)).collect()
    });
    let table = SweepTable { parameters: params, rows };
    ensure_dir(out_dir)?;
    let path = out_dir.join(&base.output.sweep);
    write_file(&path, &table.to_csv())?;
    Ok((table, Written { paths: vec![path] }))
}
