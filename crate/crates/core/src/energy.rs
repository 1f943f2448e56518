//! Standard and augmented energies, and the differential dissipation
//! estimates checked against simulated traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modal::driver::{DelayDynamics, IntervalFeedback};
use crate::modal::{DelayHistory, HistoryError, ModalState, ModalSystem, Trace};
use crate::quadrature::{derivative_weights, integrate_samples};
use crate::schedule::{inf_damping_ratio, FeedbackProfile, Parity, SwitchingSchedule, ValidationMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("inf m/M_odd = {0}: condition (new) fails, no admissible xi")]
    NoAdmissibleXi(f64),
    #[error("inf m/M_odd cannot be decided from the declared tails")]
    UndecidableRatio,
    #[error("trace too sparse: interval {interval} has {samples} samples, need at least {needed}")]
    TooSparse { interval: usize, samples: usize, needed: usize },
    #[error(transparent)]
    History(#[from] HistoryError),
}

/// `½Σ(λ_k a_k² + ȧ_k²)`
pub fn energy_standard(system: &ModalSystem, state: &ModalState) -> f64 {
    system.standard_energy(&state.a, &state.adot)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiRule {
    /// `ξ = ½·inf m/M_odd`
    #[default]
    Half,
    /// `ξ = min(1, 0.99·inf m/M_odd)`, closest to the minimiser of `ξ + 1/ξ`
    NearOne,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiChoice {
    pub xi: f64,
    /// `inf m_{2n}/M_{2n+1}`; infinite when the delayed gain vanishes
    pub inf_ratio: f64,
    pub rule: XiRule,
}

pub fn select_xi(profile: &FeedbackProfile) -> Result<XiChoice, EnergyError> {
    select_xi_with(profile, XiRule::Half)
}

/// With no delayed gain at all the ratio is infinite and `ξ = 1`.
pub fn select_xi_with(profile: &FeedbackProfile, rule: XiRule) -> Result<XiChoice, EnergyError> {
    let r = inf_damping_ratio(profile).ok_or(EnergyError::UndecidableRatio)?;
    if !(r > 0.0) {
        return Err(EnergyError::NoAdmissibleXi(r));
    }
    let xi = if r.is_infinite() {
        1.0
    } else {
        match rule {
            XiRule::Half => 0.5 * r,
            XiRule::NearOne => (0.99 * r).min(1.0),
        }
    };
    Ok(XiChoice { xi, inf_ratio: r, rule })
}

/// `∫_{t−τ}^{t} |b₂(s+τ)| ‖u_t(s)‖²_{W₂} ds` from the history buffer.
///
/// The window is split where `b₂(s+τ)` switches and where the history has a
/// break; each piece uses Simpson panels on the stored samples with the
/// midpoints interpolated, so cubic integrands are exact.
pub fn delay_integral<S: DelayDynamics + ?Sized>(
    sys: &S,
    history: &DelayHistory,
    profile: &FeedbackProfile,
    schedule: &SwitchingSchedule,
    t: f64,
) -> Result<f64, HistoryError> {
    let tau = schedule.tau();
    let (lo, hi) = (t - tau, t);
    let times = schedule.times();
    let horizon = schedule.horizon();
    // b₂(s+τ) ≠ 0 only for s + τ in an odd interval below the horizon
    if (0..schedule.n_intervals()).filter(|k| k % 2 == 1).all(|k| {
        let (a, b) = (times[k] - tau, times[k + 1] - tau);
        b <= lo || a >= hi || profile.b2_poly(k / 2).is_zero()
    }) {
        return Ok(0.0);
    }
    let eps = 1e-12 * t.abs().max(1.0);
    let mut cuts = vec![lo];
    cuts.extend(times.iter().map(|&tk| tk - tau).filter(|&s| s > lo + eps && s < hi - eps));
    cuts.extend(history.breaks_in(lo + eps, hi - eps));
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= eps);

    let mut buf = vec![0.0; history.width()];
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let mid = 0.5 * (p + q);
        if mid + tau >= horizon {
            continue;
        }
        let k = match schedule.classify(mid + tau) {
            Ok((k, Parity::Odd)) => k,
            _ => continue,
        };
        let poly = profile.b2_poly(k / 2);
        if poly.is_zero() {
            continue;
        }
        let start = times[k];
        let mut f = |s: f64| -> Result<f64, HistoryError> {
            history.velocity_in(s, mid, &mut buf)?;
            Ok(poly.eval(s + tau - start).abs() * sys.delayed_norm(&buf))
        };
        let mut nodes = vec![p];
        nodes.extend(history.sample_times_in(p + eps, q - eps, mid));
        nodes.push(q);
        let mut left = f(p)?;
        for pair in nodes.windows(2) {
            let (x0, x1) = (pair[0], pair[1]);
            let right = f(x1)?;
            let centre = f(0.5 * (x0 + x1))?;
            total += (x1 - x0) / 6.0 * (left + 4.0 * centre + right);
            left = right;
        }
    }
    Ok(total)
}

/// `E = E_S + (ξ/2)·∫_{t−τ}^{t}|b₂(s+τ)|‖u_t(s)‖²_{W₂} ds`
#[allow(clippy::too_many_arguments)]
pub fn energy_full<S: DelayDynamics + ?Sized>(
    sys: &S,
    u: &[f64],
    v: &[f64],
    history: &DelayHistory,
    xi: f64,
    profile: &FeedbackProfile,
    schedule: &SwitchingSchedule,
    t: f64,
) -> Result<f64, HistoryError> {
    Ok(sys.standard_energy(u, v) + 0.5 * xi * delay_integral(sys, history, profile, schedule, t)?)
}

/// Which differential estimate an entry checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    /// `E' ≤ −(m_{2n}/2)‖u_t‖²_W` on active intervals
    AugmentedActive,
    /// `E' ≤ (M_{2n+1}/2)(ξ + 1/ξ)‖u_t‖²_W` on delayed intervals
    AugmentedDelayed,
    /// `E_S' ≤ −m_{2n}‖u_t‖²_{W₁}`
    StandardActive,
    /// `E_S' ≤ (M_{2n+1}/2)(‖u_t‖²_{W₂} + ‖u_t(t−τ)‖²_{W₂})`
    StandardDelayed,
    /// `E_S' ≤ −‖B₁*(t)u_t‖²`
    StandardDissipation,
}

impl Estimate {
    fn uses_augmented(self) -> bool {
        matches!(self, Estimate::AugmentedActive | Estimate::AugmentedDelayed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalCheck {
    pub interval: usize,
    pub estimate: Estimate,
    /// largest `measured derivative − bound` over interior samples
    pub pointwise: f64,
    /// largest `(ΔE − ∫bound)/length` over smooth pieces
    pub integrated: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub mode: ValidationMode,
    pub tolerance: f64,
    pub checks: Vec<IntervalCheck>,
    pub max_violation: f64,
    pub pass: bool,
}

/// Estimates applying to `interval` under `mode`.
fn estimates_for(mode: ValidationMode, parity: Parity, odd_within_delay: bool, same_weights: bool) -> Vec<Estimate> {
    use Estimate::*;
    let general = match parity {
        Parity::Even => AugmentedActive,
        Parity::Odd => AugmentedDelayed,
    };
    let restricted = match parity {
        Parity::Even => StandardActive,
        Parity::Odd => StandardDelayed,
    };
    match mode {
        ValidationMode::General => vec![general],
        ValidationMode::Restricted => vec![restricted],
        ValidationMode::Unbounded => match parity {
            Parity::Even => vec![StandardActive, StandardDissipation],
            Parity::Odd => vec![StandardDelayed],
        },
        ValidationMode::Periodic => match (same_weights, odd_within_delay) {
            (true, true) => vec![general, restricted],
            (true, false) => vec![general],
            (false, true) => vec![restricted],
            (false, false) => vec![],
        },
    }
}

pub const MIN_SAMPLES_PER_INTERVAL: usize = 20;

/// Compare numerical derivatives of `E` and `E_S` along `trace` with the
/// right-hand sides of the dissipation estimates that hold in `mode`.
///
/// Derivatives use five-point stencils that stay inside one smooth piece
/// (between switch times and delay breakpoints). The tolerance is
/// `10·dt²` scaled by `max(1, E(0))`. In periodic mode the augmented
/// estimates are checked only when the `W₁`, `W₂` and observation channels
/// coincide along the trace, which is how `D₁ = D₂ = W` shows up in data.
pub fn check_dissipation(
    trace: &Trace,
    schedule: &SwitchingSchedule,
    profile: &FeedbackProfile,
    xi: f64,
    mode: ValidationMode,
) -> Result<DissipationReport, EnergyError> {
    let samples = &trace.samples;
    let scale = samples.first().map_or(1.0, |s| s.e.max(1.0));
    let tolerance = 10.0 * trace.dt * trace.dt * scale;
    let odd_within_delay = schedule.odd_sup() <= schedule.tau() * (1.0 + 1e-12);
    // the augmented estimates need D₁ = D₂ = W; equal weights give equal channels
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
    let same_weights = samples
        .iter()
        .all(|s| close(s.channels.w1, s.channels.w2) && close(s.channels.w1, s.channels.w_obs));

    // sample index ranges of each interval, endpoints included
    let mut bounds_of = vec![(usize::MAX, 0usize); schedule.n_intervals()];
    let switch_idx: Vec<usize> =
        samples.iter().enumerate().filter(|(_, s)| s.switch).map(|(i, _)| i).collect();
    for (k, w) in switch_idx.windows(2).enumerate().take(schedule.n_intervals()) {
        bounds_of[k] = (w[0], w[1]);
    }

    let mut checks = Vec::new();
    for k in 0..schedule.n_intervals() {
        let (first, last) = bounds_of[k];
        if first == usize::MAX {
            return Err(EnergyError::TooSparse { interval: k, samples: 0, needed: MIN_SAMPLES_PER_INTERVAL });
        }
        let count = last - first + 1;
        if count < MIN_SAMPLES_PER_INTERVAL {
            return Err(EnergyError::TooSparse { interval: k, samples: count, needed: MIN_SAMPLES_PER_INTERVAL });
        }
        let parity = Parity::of(k);
        let fb = IntervalFeedback::of(schedule, profile, k);
        let cb = profile.bounds_at(k / 2).expect("materialized cycle has bounds");

        // smooth pieces: split at breakpoint samples
        let mut pieces = Vec::new();
        let mut start = first;
        for i in first + 1..=last {
            if samples[i].breakpoint || i == last {
                pieces.push((start, i));
                start = i;
            }
        }

        for est in estimates_for(mode, parity, odd_within_delay, same_weights) {
            let rhs = |i: usize| -> f64 {
                let s = &samples[i];
                let c = &s.channels;
                match est {
                    Estimate::AugmentedActive => -0.5 * cb.m * c.w_obs,
                    Estimate::AugmentedDelayed => 0.5 * cb.m_odd * (xi + 1.0 / xi) * c.w_obs,
                    Estimate::StandardActive => -cb.m * c.w1,
                    Estimate::StandardDelayed => 0.5 * cb.m_odd * (c.w2 + c.w2_delayed),
                    Estimate::StandardDissipation => -fb.b1(s.t) * c.w1,
                }
            };
            let value = |i: usize| if est.uses_augmented() { samples[i].e } else { samples[i].es };
            let mut pointwise = f64::NEG_INFINITY;
            let mut integrated = f64::NEG_INFINITY;
            for &(a, b) in &pieces {
                let n = b - a + 1;
                let ts: Vec<f64> = (a..=b).map(|i| samples[i].t).collect();
                let len = ts[n - 1] - ts[0];
                if len <= 0.0 {
                    continue;
                }
                let vals: Vec<f64> = (a..=b).map(value).collect();
                let rs: Vec<f64> = (a..=b).map(rhs).collect();
                let delta = vals[n - 1] - vals[0];
                integrated = integrated.max((delta - integrate_samples(&ts, &rs)) / len);
                if n >= 3 {
                    let width = n.min(5);
                    let mut w = vec![0.0; width];
                    for c in 1..n - 1 {
                        let lo = c.saturating_sub(width / 2).min(n - width);
                        let nodes = &ts[lo..lo + width];
                        derivative_weights(nodes, ts[c], &mut w);
                        let d: f64 = w.iter().zip(&vals[lo..lo + width]).map(|(wi, v)| wi * v).sum();
                        pointwise = pointwise.max(d - rs[c]);
                    }
                }
            }
            let pass = pointwise <= tolerance && integrated <= tolerance;
            checks.push(IntervalCheck { interval: k, estimate: est, pointwise, integrated, pass });
        }
    }
    let max_violation = checks
        .iter()
        .map(|c| c.pointwise.max(c.integrated))
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = checks.iter().all(|c| c.pass);
    Ok(DissipationReport { mode, tolerance, checks, max_violation, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::{simulate, Prehistory, RunOptions};
    use crate::schedule::{build_schedule, profile::BoundTails, Tail};

    #[test]
    fn standard_energy_examples() {
        let s1 = ModalSystem::identity(vec![1.0]).unwrap();
        assert_eq!(energy_standard(&s1, &ModalState::new(0.0, vec![1.0], vec![0.0])), 0.5);
        let s4 = ModalSystem::identity(vec![4.0]).unwrap();
        assert_eq!(energy_standard(&s4, &ModalState::new(0.0, vec![1.0], vec![1.0])), 2.5);
        assert_eq!(energy_standard(&s4, &ModalState::zeros(1)), 0.0);
    }

    fn profile_with_tails(m: Tail, mo: Tail) -> FeedbackProfile {
        FeedbackProfile::from_tails(BoundTails { m, big_m: m, m_odd: mo }, 3).unwrap()
    }

    #[test]
    fn xi_is_half_the_ratio() {
        let p = FeedbackProfile::constant(1.0, 2.0, 3).unwrap();
        let x = select_xi(&p).unwrap();
        assert_eq!(x.inf_ratio, 0.5);
        assert_eq!(x.xi, 0.25);
    }

    #[test]
    fn xi_with_decaying_delayed_gain() {
        let p = profile_with_tails(Tail::constant(1.0), Tail::PowerLaw { scale: 1.0, exponent: 1.0 });
        let x = select_xi(&p).unwrap();
        assert_eq!(x.inf_ratio, 1.0);
        assert_eq!(x.xi, 0.5);
    }

    #[test]
    fn xi_refused_when_ratio_vanishes() {
        let p = FeedbackProfile::from_tails(
            BoundTails {
                m: Tail::PowerLaw { scale: 1.0, exponent: 1.0 },
                big_m: Tail::constant(1.0),
                m_odd: Tail::constant(1.0),
            },
            3,
        )
        .unwrap();
        assert!(matches!(select_xi(&p), Err(EnergyError::NoAdmissibleXi(_))));
    }

    #[test]
    fn xi_near_one_rule() {
        let p = FeedbackProfile::constant(1.0, 0.5, 2).unwrap();
        assert_eq!(select_xi_with(&p, XiRule::NearOne).unwrap().xi, 1.0);
        let p = FeedbackProfile::constant(1.0, 2.0, 2).unwrap();
        assert!((select_xi_with(&p, XiRule::NearOne).unwrap().xi - 0.495).abs() < 1e-15);
    }

    fn history_with_constant(tau: f64, dt: f64, value: f64, until: f64) -> DelayHistory {
        let mut h = DelayHistory::new(tau, dt, 1, &Prehistory::Constant(vec![value])).unwrap();
        h.begin_segment(0.0, &[value]).unwrap();
        let n = (until / dt).round() as usize;
        for i in 1..=n {
            h.push(i as f64 * dt, &[value]).unwrap();
        }
        h
    }

    #[test]
    fn delay_term_with_constant_integrand() {
        // odd interval [2, 4): at t = 2, s + τ ∈ [2, 3) is fully inside it
        let sys = ModalSystem::identity(vec![1.0]).unwrap();
        let sched = build_schedule(&[2.0], &[2.0], 1.0, 2).unwrap();
        let prof = FeedbackProfile::constant(1.0, 1.0, 2).unwrap();
        let h = history_with_constant(1.0, 0.05, 1.0, 2.0);
        let e = energy_full(&sys, &[0.0], &[1.0], &h, 0.5, &prof, &sched, 2.0).unwrap();
        assert!((e - (0.5 + 0.25)).abs() < 1e-13, "{e}");
    }

    #[test]
    fn delay_term_vanishes_with_zero_history_or_gain() {
        let sys = ModalSystem::identity(vec![1.0]).unwrap();
        let sched = build_schedule(&[2.0], &[2.0], 1.0, 2).unwrap();
        let prof = FeedbackProfile::constant(1.0, 1.0, 2).unwrap();
        let h = history_with_constant(1.0, 0.05, 0.0, 2.0);
        assert_eq!(delay_integral(&sys, &h, &prof, &sched, 2.0).unwrap(), 0.0);
        let prof0 = FeedbackProfile::constant(1.0, 0.0, 2).unwrap();
        let h = history_with_constant(1.0, 0.05, 1.0, 2.0);
        assert_eq!(delay_integral(&sys, &h, &prof0, &sched, 2.0).unwrap(), 0.0);
        // window entirely on the active side
        assert_eq!(delay_integral(&sys, &h, &prof, &sched, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn delay_term_exact_for_cubic_integrand() {
        // ‖v(s)‖² = s³ + 1 is not a square of a cubic; use v linear → quadratic, gain linear → cubic
        let sys = ModalSystem::identity(vec![1.0]).unwrap();
        let sched = build_schedule(&[2.0], &[2.0], 1.0, 2).unwrap();
        let b2 = crate::schedule::profile::Poly([1.0, 0.5, 0.0, 0.0]);
        let prof = FeedbackProfile::new(
            vec![crate::schedule::profile::Poly::constant(1.0); 2],
            vec![b2; 2],
            vec![crate::schedule::profile::CycleBounds { m: 1.0, big_m: 1.0, m_odd: 2.0 }; 2],
            BoundTails { m: Tail::constant(1.0), big_m: Tail::constant(1.0), m_odd: Tail::constant(2.0) },
        )
        .unwrap();
        let dt = 0.1;
        let mut h = DelayHistory::new(1.0, dt, 1, &Prehistory::Zero).unwrap();
        h.begin_segment(0.0, &[0.0]).unwrap();
        for i in 1..=25 {
            let s = i as f64 * dt;
            h.push(s, &[s]).unwrap();
        }
        // t = 2.5: window [1.5, 2.5], s + τ ∈ [2.5, 3.5] inside the odd interval [2, 4)
        let got = delay_integral(&sys, &h, &prof, &sched, 2.5).unwrap();
        let exact = crate::quadrature::simpson(|s| (1.0 + 0.5 * (s + 1.0 - 2.0)) * s * s, 1.5, 2.5, 2);
        assert!((got - exact).abs() < 1e-12, "{got} vs {exact}");
    }

    #[test]
    fn conservative_trace_passes() {
        let sys = ModalSystem::identity(vec![1.0, 4.0]).unwrap();
        let sched = build_schedule(&[2.0], &[1.0], 1.0, 2).unwrap();
        let prof = FeedbackProfile::from_tails(
            BoundTails { m: Tail::constant(1e-300), big_m: Tail::constant(1e-300), m_odd: Tail::constant(0.0) },
            2,
        )
        .unwrap();
        let init = ModalState::new(0.0, vec![1.0, 0.5], vec![0.0, 0.3]);
        let tr = simulate(&sys, &sched, &prof, &init, &RunOptions::new(0.01).xi(0.5)).unwrap();
        let rep = check_dissipation(&tr, &sched, &prof, 0.5, ValidationMode::Restricted).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.max_violation.abs() < 1e-8);
    }

    #[test]
    fn damped_equality_case_passes() {
        let sys = ModalSystem::identity(vec![1.0]).unwrap();
        let sched = build_schedule(&[3.0], &[1.0], 1.0, 2).unwrap();
        let prof = FeedbackProfile::constant(1.0, 0.0, 2).unwrap();
        let init = ModalState::new(0.0, vec![1.0], vec![0.0]);
        let dt = 0.01;
        let tr = simulate(&sys, &sched, &prof, &init, &RunOptions::new(dt).xi(1.0)).unwrap();
        let rep = check_dissipation(&tr, &sched, &prof, 1.0, ValidationMode::Unbounded).unwrap();
        assert!(rep.pass, "{rep:?}");
        let eq = rep.checks.iter().find(|c| c.estimate == Estimate::StandardDissipation).unwrap();
        // equality: violation is pure discretization error, close to zero either way
        assert!(eq.pointwise.abs() < 10.0 * dt * dt);
    }

    #[test]
    fn sparse_trace_is_rejected() {
        let sys = ModalSystem::identity(vec![1.0]).unwrap();
        let sched = build_schedule(&[2.0], &[1.0], 1.0, 1).unwrap();
        let prof = FeedbackProfile::constant(1.0, 0.0, 1).unwrap();
        let init = ModalState::new(0.0, vec![1.0], vec![0.0]);
        let tr = simulate(&sys, &sched, &prof, &init, &RunOptions::new(0.5).stride(1)).unwrap();
        assert!(matches!(
            check_dissipation(&tr, &sched, &prof, 1.0, ValidationMode::General),
            Err(EnergyError::TooSparse { .. })
        ));
    }
}
