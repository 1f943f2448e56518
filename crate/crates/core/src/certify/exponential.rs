//! Uniform contraction conditions for periodic schedules.
//!
//! The supremum over `n` combines the materialized cycles exactly with a
//! conservative bound on the tail: every factor is increasing in `M_{2n}`
//! and `M_{2n+1}` and decreasing in `m_{2n}`, so evaluating it at
//! `(inf m, sup M, sup M_odd)` of the tail bounds it from above.

use serde::{Deserialize, Serialize};

use super::formulas::small_gain_threshold;
use super::{CertifyError, Status};
use crate::schedule::{CycleBounds, FeedbackProfile, SwitchingSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExponentialKind {
    /// `sup e^{(ξ+1/ξ)C M_odd T̃} c_n < 1`, augmented energy
    #[serde(rename = "ASS1A")]
    Ass1A,
    /// `sup e^{C₂M_odd T̃}(ĉ_n + 1) − 1 < 1`, standard energy
    #[serde(rename = "ASS1Anew")]
    Ass1ANew,
    /// `sup e^{C M_odd T̃}(d̂_n + 1) − 1 < 1` with the damped observability constant
    #[serde(rename = "ASS1AnewUU")]
    Ass1ANewUU,
    /// as above with `d̂_n` from the boundary quasi-observability constants
    #[serde(rename = "ASS1AnewU")]
    Ass1ANewU,
}

impl ExponentialKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExponentialKind::Ass1A => "ASS1A",
            ExponentialKind::Ass1ANew => "ASS1Anew",
            ExponentialKind::Ass1ANewUU => "ASS1AnewUU",
            ExponentialKind::Ass1ANewU => "ASS1AnewU",
        }
    }

    pub fn condition(&self) -> &'static str {
        match self {
            ExponentialKind::Ass1A => "sup_n e^{(ξ+1/ξ)C·M_odd·T̃}·c_n < 1",
            ExponentialKind::Ass1ANew => "sup_n e^{C₂·M_odd·T̃}(ĉ_n + 1) − 1 < 1",
            ExponentialKind::Ass1ANewUU | ExponentialKind::Ass1ANewU => {
                "sup_n e^{C·M_odd·T̃}(d̂_n + 1) − 1 < 1"
            }
        }
    }

    fn has_product_variant(&self) -> bool {
        matches!(self, ExponentialKind::Ass1A | ExponentialKind::Ass1ANew)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialConstants {
    pub c: f64,
    /// `C` (augmented) or `C₁` (standard) in the contraction constant
    pub embed_active: f64,
    /// `C` or `C₂` in the delayed-interval growth
    pub embed_delay: f64,
    pub xi: f64,
    pub t_bar: f64,
    pub alphas: [f64; 3],
    /// damped observability constant per materialized cycle
    pub d: Vec<f64>,
    /// damped observability constant past the horizon
    pub d_tail: Option<f64>,
}

impl Default for ExponentialConstants {
    fn default() -> Self {
        ExponentialConstants {
            c: 1.0,
            embed_active: 1.0,
            embed_delay: 1.0,
            xi: 1.0,
            t_bar: 0.0,
            alphas: [0.0; 3],
            d: Vec::new(),
            d_tail: None,
        }
    }
}

/// Aligned block products `Π_{p=kL}^{kL+L−1} f_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductVariant {
    pub window: usize,
    /// supremum over all blocks, tail blocks included
    pub value: f64,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialVerdict {
    pub kind: ExponentialKind,
    pub condition: String,
    pub status: Status,
    /// the supremum `d` (or `d̂`), or a witness value when the condition fails
    pub value: f64,
    pub per_cycle: Vec<f64>,
    /// conservative bound on the factor past the horizon
    pub tail_bound: Option<f64>,
    /// largest `d̂_n` used (damped kinds)
    pub d_hat: Option<f64>,
    /// largest `M_odd` with `e^{C·M_odd·T̃} < 2/(d̂ + 1)` (damped kinds)
    pub small_gain_threshold: Option<f64>,
    pub product: Option<ProductVariant>,
    pub reason: String,
}

/// Cycles past the horizon probed for a counterexample when the tail bound is inconclusive.
pub const TAIL_PROBE: usize = 4096;

fn raw_contraction(k: f64, c: f64, embed: f64, t: f64, big_m: f64, m: f64) -> f64 {
    if !(m > 0.0) || !big_m.is_finite() {
        return 1.0;
    }
    let q = k * c * (1.0 + 4.0 * embed * embed * t * t * big_m * big_m);
    if q.is_finite() {
        q / (m + q)
    } else {
        1.0
    }
}

fn raw_boundary_d_hat(alphas: [f64; 3], big_m: f64, m: f64, t: f64, t_bar: f64) -> f64 {
    if !(m > 0.0) || !big_m.is_finite() {
        return 1.0;
    }
    let num = alphas[0] * big_m * m + alphas[1] * m + alphas[2];
    let den = num + m * (t - t_bar);
    if den > 0.0 && num.is_finite() {
        num / den
    } else {
        1.0
    }
}

struct Evaluator<'a> {
    kind: ExponentialKind,
    k: &'a ExponentialConstants,
    t_star: f64,
    t_tilde: f64,
}

impl Evaluator<'_> {
    fn d_hat(&self, b: &CycleBounds, d: Option<f64>) -> Option<f64> {
        match self.kind {
            ExponentialKind::Ass1ANewUU => d.map(|d| if d.is_finite() { d / (d + 1.0) } else { 1.0 }),
            ExponentialKind::Ass1ANewU => {
                Some(raw_boundary_d_hat(self.k.alphas, b.big_m, b.m, self.t_star, self.k.t_bar))
            }
            _ => None,
        }
    }

    /// Factor of one cycle; `None` when a damped constant is missing.
    fn factor(&self, b: &CycleBounds, d: Option<f64>) -> Option<f64> {
        let k = self.k;
        let mt = b.m_odd * self.t_tilde;
        let v = match self.kind {
            ExponentialKind::Ass1A => {
                let g = (k.embed_delay * (k.xi + 1.0 / k.xi) * mt).exp();
                g * raw_contraction(4.0, k.c, k.embed_active, self.t_star, b.big_m, b.m)
            }
            ExponentialKind::Ass1ANew => {
                let g = (k.embed_delay * mt).exp();
                g * (raw_contraction(2.0, k.c, k.embed_active, self.t_star, b.big_m, b.m) + 1.0) - 1.0
            }
            ExponentialKind::Ass1ANewUU | ExponentialKind::Ass1ANewU => {
                let g = (k.embed_delay * mt).exp();
                g * (self.d_hat(b, d)? + 1.0) - 1.0
            }
        };
        Some(if v.is_nan() { f64::INFINITY } else { v })
    }
}

enum TailResult {
    Bounded(f64),
    Witness { n: usize, value: f64 },
    Unresolved(String),
}

fn resolve_tail(ev: &Evaluator, profile: &FeedbackProfile, start: usize) -> (TailResult, Option<f64>) {
    let tails = profile.tails();
    let (Some(m), Some(big_m), Some(m_odd)) = (tails.m.law(), tails.big_m.law(), tails.m_odd.law()) else {
        return (TailResult::Unresolved("bound tails unspecified".into()), None);
    };
    let worst = CycleBounds {
        m: m.inf_from(start),
        big_m: big_m.sup_from(start),
        m_odd: m_odd.sup_from(start),
    };
    let d_tail = ev.k.d_tail;
    let d_hat = ev.d_hat(&worst, d_tail);
    let Some(bound) = ev.factor(&worst, d_tail) else {
        return (TailResult::Unresolved("damped observability constant past the horizon unknown".into()), None);
    };
    if bound < 1.0 {
        return (TailResult::Bounded(bound), d_hat);
    }
    for n in start..start + TAIL_PROBE {
        let b = CycleBounds { m: m.value(n), big_m: big_m.value(n), m_odd: m_odd.value(n) };
        if let Some(v) = ev.factor(&b, d_tail) {
            if v >= 1.0 {
                return (TailResult::Witness { n, value: v }, d_hat);
            }
        }
    }
    let limit = |l: crate::schedule::Law| match l.limit() {
        crate::schedule::Limit::Zero => 0.0,
        crate::schedule::Limit::Finite(v) => v,
        crate::schedule::Limit::Infinite => f64::INFINITY,
    };
    let lim = CycleBounds { m: limit(m), big_m: limit(big_m), m_odd: limit(m_odd) };
    if let Some(v) = ev.factor(&lim, d_tail) {
        if v >= 1.0 {
            // the supremum is at least the limit
            return (TailResult::Witness { n: usize::MAX, value: v }, d_hat);
        }
    }
    (
        TailResult::Unresolved(format!("tail bound {bound} ≥ 1 but no cycle exceeds 1")),
        d_hat,
    )
}

fn product_variant(factors: &[f64], tail: Option<f64>) -> ProductVariant {
    let n = factors.len();
    let mut best: Option<ProductVariant> = None;
    for window in 1..=n.max(1) {
        let mut sup = 0.0f64;
        let mut known = true;
        let mut k = 0;
        while k * window < n {
            let mut prod = 1.0;
            for p in k * window..(k + 1) * window {
                match factors.get(p) {
                    Some(f) => prod *= f,
                    None => match tail {
                        Some(t) => prod *= t,
                        None => known = false,
                    },
                }
            }
            sup = sup.max(prod);
            k += 1;
        }
        match tail {
            Some(t) => sup = sup.max(t.powi(window as i32)),
            None => known = false,
        }
        let status = if sup < 1.0 && known {
            Status::Pass
        } else if !known {
            Status::Undecidable
        } else {
            Status::Fail
        };
        let cand = ProductVariant { window, value: sup, status };
        let better = match &best {
            None => true,
            Some(b) => rank(&cand) < rank(b),
        };
        if better {
            best = Some(cand);
        }
    }
    best.expect("at least one window")
}

fn rank(p: &ProductVariant) -> (u8, f64) {
    let s = match p.status {
        Status::Pass => 0,
        Status::Undecidable => 1,
        Status::Fail => 2,
    };
    (s, p.value)
}

/// Decide the exponential condition `kind` on a periodic schedule.
pub fn check_exponential(
    kind: ExponentialKind,
    schedule: &SwitchingSchedule,
    profile: &FeedbackProfile,
    k: &ExponentialConstants,
) -> Result<ExponentialVerdict, CertifyError> {
    let (t_star, t_tilde) = schedule.periodic_lengths().ok_or(CertifyError::NotPeriodic)?;
    let n = profile.n_cycles();
    if kind == ExponentialKind::Ass1ANewUU && k.d.len() < n {
        return Err(CertifyError::MissingConstant("damped observability constant per cycle"));
    }
    let ev = Evaluator { kind, k, t_star, t_tilde };
    let mut per_cycle = Vec::with_capacity(n);
    let mut d_hat_max: Option<f64> = None;
    for (i, b) in profile.declared_bounds().iter().enumerate() {
        let d = k.d.get(i).copied();
        let f = ev.factor(b, d).ok_or(CertifyError::MissingConstant("damped observability constant"))?;
        per_cycle.push(f);
        if let Some(dh) = ev.d_hat(b, d) {
            d_hat_max = Some(d_hat_max.map_or(dh, |x| x.max(dh)));
        }
    }
    let mat_max = per_cycle.iter().copied().fold(0.0, f64::max);
    let (tail, tail_d_hat) = resolve_tail(&ev, profile, n);
    if let Some(dh) = tail_d_hat {
        d_hat_max = Some(d_hat_max.map_or(dh, |x| x.max(dh)));
    }

    let (status, value, tail_bound, reason) = if mat_max >= 1.0 {
        let i = per_cycle.iter().position(|&f| f >= 1.0).unwrap_or(0);
        (Status::Fail, mat_max, None, format!("cycle {i} has factor {}", per_cycle[i]))
    } else {
        match &tail {
            TailResult::Bounded(b) => {
                let b = *b;
                (Status::Pass, mat_max.max(b), Some(b), "materialized cycles exact, tail bounded above".into())
            }
            TailResult::Witness { n, value } => {
                let (n, value) = (*n, *value);
                let at = if n == usize::MAX { "in the limit".to_string() } else { format!("at cycle {n}") };
                (Status::Fail, value, None, format!("factor {value} ≥ 1 {at}"))
            }
            TailResult::Unresolved(why) => (Status::Undecidable, mat_max, None, why.clone()),
        }
    };

    let product = kind.has_product_variant().then(|| {
        let t = match &tail {
            TailResult::Bounded(b) => Some(*b),
            _ => None,
        };
        product_variant(&per_cycle, t)
    });
    let status = match (&status, &product) {
        (Status::Pass, _) => Status::Pass,
        (_, Some(p)) if p.status == Status::Pass => Status::Pass,
        (s, _) => *s,
    };
    let small_gain = match d_hat_max {
        Some(dh) if dh < 1.0 && dh > 0.0 => small_gain_threshold(dh, k.embed_delay, t_tilde).ok(),
        _ => None,
    };
    Ok(ExponentialVerdict {
        kind,
        condition: kind.condition().to_string(),
        status,
        value,
        per_cycle,
        tail_bound,
        d_hat: d_hat_max,
        small_gain_threshold: small_gain,
        product,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{build_schedule, BoundTails, Tail};

    fn periodic(n: usize) -> SwitchingSchedule {
        build_schedule(&[2.0], &[0.5], 1.0, n).unwrap()
    }

    #[test]
    fn no_delayed_gain_reduces_to_contraction() {
        let s = periodic(5);
        let p = FeedbackProfile::constant(1.0, 0.0, 5).unwrap();
        let v = check_exponential(ExponentialKind::Ass1ANew, &s, &p, &ExponentialConstants::default()).unwrap();
        let c_hat = super::super::formulas::contraction_cn_hat(1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert!((v.value - c_hat).abs() < 1e-12);
    }

    #[test]
    fn weak_contraction_with_delay_fails() {
        // ĉ = 0.9 and C₂·M·T̃ = 0.2 give e^{0.2}·1.9 − 1 ≈ 1.3206
        let s = build_schedule(&[1.0], &[1.0], 1.0, 3).unwrap();
        // choose c so that ĉ_n = 2c·5/(1 + 2c·5) = 0.9
        let c = 0.9;
        let p = FeedbackProfile::constant(1.0, 0.2, 3).unwrap();
        let k = ExponentialConstants { c, ..Default::default() };
        let v = check_exponential(ExponentialKind::Ass1ANew, &s, &p, &k).unwrap();
        assert_eq!(v.status, Status::Fail);
        assert!((v.value - (0.2f64.exp() * 1.9 - 1.0)).abs() < 1e-12);
        assert!((v.value - 1.3206).abs() < 1e-4);
    }

    #[test]
    fn non_periodic_is_a_mode_error() {
        let s = build_schedule(&[1.0, 2.0], &[0.5], 1.0, 2).unwrap();
        let p = FeedbackProfile::constant(1.0, 0.0, 2).unwrap();
        let r = check_exponential(ExponentialKind::Ass1A, &s, &p, &ExponentialConstants::default());
        assert!(matches!(r, Err(CertifyError::NotPeriodic)));
    }

    #[test]
    fn small_gain_matches_closed_form() {
        // d = 1 on every cycle: d̂ = 0.5, C = T̃ = 1
        let s = build_schedule(&[2.0], &[1.0], 1.0, 4).unwrap();
        let below = FeedbackProfile::constant(1.0, 0.28, 4).unwrap();
        let above = FeedbackProfile::constant(1.0, 0.29, 4).unwrap();
        let k = ExponentialConstants { d: vec![1.0; 4], d_tail: Some(1.0), ..Default::default() };
        let v = check_exponential(ExponentialKind::Ass1ANewUU, &s, &below, &k).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert!((v.small_gain_threshold.unwrap() - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        let v = check_exponential(ExponentialKind::Ass1ANewUU, &s, &above, &k).unwrap();
        assert_eq!(v.status, Status::Fail);
    }

    #[test]
    fn missing_tail_constant_is_undecidable() {
        let s = build_schedule(&[2.0], &[1.0], 1.0, 2).unwrap();
        let p = FeedbackProfile::constant(1.0, 0.1, 2).unwrap();
        let k = ExponentialConstants { d: vec![1.0; 2], d_tail: None, ..Default::default() };
        let v = check_exponential(ExponentialKind::Ass1ANewUU, &s, &p, &k).unwrap();
        assert_eq!(v.status, Status::Undecidable);
    }

    #[test]
    fn decaying_delay_gain_uses_the_tail_supremum() {
        let s = build_schedule(&[2.0], &[1.0], 1.0, 3).unwrap();
        let tails = BoundTails {
            m: Tail::constant(1.0),
            big_m: Tail::constant(1.0),
            m_odd: Tail::Geometric { scale: 0.2, ratio: 0.5 },
        };
        let p = FeedbackProfile::from_tails(tails, 3).unwrap();
        let k = ExponentialConstants { d: vec![1.0; 3], d_tail: Some(1.0), ..Default::default() };
        let v = check_exponential(ExponentialKind::Ass1ANewUU, &s, &p, &k).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert!((v.value - ((0.2f64).exp() * 1.5 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn growing_delay_gain_fails_in_the_tail() {
        let s = build_schedule(&[2.0], &[1.0], 1.0, 2).unwrap();
        let tails = BoundTails {
            m: Tail::constant(1.0),
            big_m: Tail::constant(1.0),
            m_odd: Tail::Geometric { scale: 0.01, ratio: 1.5 },
        };
        let p = FeedbackProfile::from_tails(tails, 2).unwrap();
        let k = ExponentialConstants { d: vec![1.0; 2], d_tail: Some(1.0), ..Default::default() };
        let v = check_exponential(ExponentialKind::Ass1ANewUU, &s, &p, &k).unwrap();
        assert_eq!(v.status, Status::Fail);
    }

    #[test]
    fn product_blocks() {
        // alternating 1.2, 0.5: single factors fail, longer blocks contract
        let f = [1.2, 0.5, 1.2, 0.5];
        let p = product_variant(&f, Some(0.5));
        assert_eq!(p.window, 4);
        assert!((p.value - 0.36).abs() < 1e-12);
        assert_eq!(p.status, Status::Pass);
        assert_eq!(product_variant(&f, None).status, Status::Undecidable);
    }

    #[test]
    fn boundary_kind_uses_alphas() {
        let s = build_schedule(&[3.0], &[0.5], 1.0, 2).unwrap();
        let p = FeedbackProfile::constant(1.0, 0.0, 2).unwrap();
        let k = ExponentialConstants { alphas: [1.0, 1.0, 1.0], t_bar: 1.0, ..Default::default() };
        let v = check_exponential(ExponentialKind::Ass1ANewU, &s, &p, &k).unwrap();
        // d_n = 3/2, d̂ = 0.6
        assert!((v.value - 0.6).abs() < 1e-12);
        assert_eq!(v.status, Status::Pass);
    }
}
