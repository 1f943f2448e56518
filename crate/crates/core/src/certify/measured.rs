//! Certified bounds confronted with simulated switch-time energies.

use serde::{Deserialize, Serialize};

use super::{CertifyError, Status};
use crate::modal::{SwitchEnergy, Trace};

/// Absolute slack on measured energy ratios.
pub const TOL_CYCLE: f64 = 0.02;
/// Starting energies below this are skipped.
pub const UNDERFLOW: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleCheck {
    pub n: usize,
    /// `None` when the starting energy underflowed
    pub measured: Option<f64>,
    pub certified: f64,
    /// `certified + tol − measured`
    pub margin: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredCheck {
    pub name: String,
    pub tolerance: f64,
    pub rows: Vec<CycleCheck>,
    pub status: Status,
}

impl MeasuredCheck {
    pub fn worst_margin(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.margin).reduce(f64::min)
    }

    pub fn max_measured(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.measured).reduce(f64::max)
    }
}

/// Row-wise `measured ≤ certified + tol`. Cycles without a certified value are ignored.
pub fn per_cycle_verify(name: &str, measured: &[Option<f64>], certified: &[f64], tol: f64) -> MeasuredCheck {
    let rows: Vec<CycleCheck> = measured
        .iter()
        .zip(certified)
        .enumerate()
        .map(|(n, (&m, &c))| {
            let margin = m.map(|m| c + tol - m);
            CycleCheck { n, measured: m, certified: c, margin, pass: margin.is_none_or(|g| g >= 0.0) }
        })
        .collect();
    let status = if rows.iter().all(|r| r.pass) { Status::Pass } else { Status::Fail };
    MeasuredCheck { name: name.to_string(), tolerance: tol, rows, status }
}

/// Least-squares fit of `ln E(t_{2n}) ≈ ln(γ̂ E(0)) − μ̂ t_{2n}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub mu: f64,
    pub gamma: f64,
    /// largest `|ln E − fitted line|`
    pub residual: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 4;

pub fn fit_decay_points(times: &[f64], energies: &[f64], e0: f64) -> Result<DecayFit, CertifyError> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(energies)
        .filter(|(_, &e)| e > 0.0 && e.is_finite())
        .map(|(&t, &e)| (t, e.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(CertifyError::InsufficientData { needed: MIN_FIT_POINTS, got: pts.len() });
    }
    if !(e0 > 0.0) {
        return Err(CertifyError::NonPositive { name: "E(0)", value: e0 });
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    if !(sxx > 0.0) {
        return Err(CertifyError::InsufficientData { needed: 2, got: 1 });
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let residual = pts.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
    Ok(DecayFit { mu: -slope, gamma: intercept.exp() / e0, residual, points: pts.len() })
}

/// Fit through the cycle starts `t_{2n}` of a trace.
pub fn fit_decay_rate(trace: &Trace, standard: bool) -> Result<DecayFit, CertifyError> {
    let starts: Vec<_> = trace.switches.iter().filter(|s| s.index % 2 == 0).collect();
    let pick = |s: &&SwitchEnergy| if standard { s.es } else { s.e };
    let times: Vec<f64> = starts.iter().map(|s| s.t).collect();
    let energies: Vec<f64> = starts.iter().map(pick).collect();
    let e0 = energies.first().copied().unwrap_or(0.0);
    fit_decay_points(&times, &energies, e0)
}
