//! Switching schedules `0 = t₀ < t₁ < …`, feedback profiles and the
//! structural hypotheses they must satisfy.
//!
//! Intervals are half-open, `I_n = [t_n, t_{n+1})`; even intervals carry the
//! undelayed feedback `b₁`, odd intervals the delayed feedback `b₂`.

pub mod profile;
pub mod tail;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use profile::{profile_bounds, BoundTails, CycleBounds, FeedbackProfile, Poly};
pub use tail::{Asym, Law, Limit, Tail};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("interval length {value} at position {index} must be positive and finite")]
    NonPositiveLength { index: usize, value: f64 },
    #[error("delay tau = {0} must be positive and finite")]
    InvalidDelay(f64),
    #[error("a schedule needs at least one cycle")]
    NoCycles,
    #[error("expected 1 or {expected} interval lengths, got {got}")]
    LengthCount { expected: usize, got: usize },
    #[error("time {t} outside the materialized horizon [0, {horizon})")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("cycle {n} outside the materialized {cycles} cycles")]
    CycleOutOfRange { n: usize, cycles: usize },
    #[error("declared bounds of cycle {n} are inconsistent with the profile: {detail}")]
    BoundMismatch { n: usize, detail: String },
    #[error("profile needs matching nonempty b1/b2/bounds per cycle (got {b1}/{b2}/{bounds})")]
    ProfileShape { b1: usize, b2: usize, bounds: usize },
    #[error("malformed tail {0:?}")]
    InvalidTail(Tail),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(index: usize) -> Self {
        if index % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSchedule {
    times: Vec<f64>,
    tau: f64,
    even_tail: Tail,
    odd_tail: Tail,
}

fn expand(lengths: &[f64], n_cycles: usize) -> Result<Vec<f64>, ScheduleError> {
    match lengths.len() {
        1 => Ok(vec![lengths[0]; n_cycles]),
        k if k == n_cycles => Ok(lengths.to_vec()),
        k => Err(ScheduleError::LengthCount { expected: n_cycles, got: k }),
    }
}

fn tail_of(lengths: &[f64]) -> Tail {
    if lengths.iter().all(|&l| l == lengths[0]) {
        Tail::constant(lengths[0])
    } else {
        Tail::Unspecified
    }
}

/// Alternating active/delayed intervals starting at `t₀ = 0`.
///
/// `even` and `odd` hold either one length (repeated every cycle) or one
/// length per cycle.
pub fn build_schedule(
    even: &[f64],
    odd: &[f64],
    tau: f64,
    n_cycles: usize,
) -> Result<SwitchingSchedule, ScheduleError> {
    if n_cycles == 0 {
        return Err(ScheduleError::NoCycles);
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(ScheduleError::InvalidDelay(tau));
    }
    let even = expand(even, n_cycles)?;
    let odd = expand(odd, n_cycles)?;
    let mut times = Vec::with_capacity(2 * n_cycles + 1);
    times.push(0.0);
    let mut t = 0.0;
    for n in 0..n_cycles {
        for (k, len) in [(2 * n, even[n]), (2 * n + 1, odd[n])] {
            if !(len > 0.0 && len.is_finite()) {
                return Err(ScheduleError::NonPositiveLength { index: k, value: len });
            }
            t += len;
            times.push(t);
        }
    }
    Ok(SwitchingSchedule {
        times,
        tau,
        even_tail: tail_of(&even),
        odd_tail: tail_of(&odd),
    })
}

impl SwitchingSchedule {
    /// Materialize `n_cycles` cycles whose lengths follow the given tails.
    pub fn from_tails(
        even: Tail,
        odd: Tail,
        tau: f64,
        n_cycles: usize,
    ) -> Result<Self, ScheduleError> {
        let lens = |t: Tail| -> Result<Vec<f64>, ScheduleError> {
            (0..n_cycles)
                .map(|n| t.value(n).ok_or(ScheduleError::InvalidTail(t)))
                .collect()
        };
        let mut s = build_schedule(&lens(even)?, &lens(odd)?, tau, n_cycles)?;
        s.even_tail = even;
        s.odd_tail = odd;
        Ok(s)
    }

    /// Override the symbolic continuation of the interval lengths.
    pub fn with_tails(mut self, even: Tail, odd: Tail) -> Self {
        self.even_tail = even;
        self.odd_tail = odd;
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_cycles(&self) -> usize {
        (self.times.len() - 1) / 2
    }

    pub fn n_intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("schedule has at least t0")
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn even_length(&self, n: usize) -> f64 {
        self.times[2 * n + 1] - self.times[2 * n]
    }

    pub fn odd_length(&self, n: usize) -> f64 {
        self.times[2 * n + 2] - self.times[2 * n + 1]
    }

    pub fn even_tail(&self) -> Tail {
        self.even_tail
    }

    pub fn odd_tail(&self) -> Tail {
        self.odd_tail
    }

    /// Interval index `n` with `t ∈ [t_n, t_{n+1})`.
    pub fn classify(&self, t: f64) -> Result<(usize, Parity), ScheduleError> {
        let horizon = self.horizon();
        if !(t >= 0.0 && t < horizon) {
            return Err(ScheduleError::OutOfRange { t, horizon });
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        Ok((k, Parity::of(k)))
    }

    /// `inf_n T_{2n}` over materialized cycles and the declared tail.
    pub fn t_star(&self) -> f64 {
        let mat = (0..self.n_cycles()).map(|n| self.even_length(n)).fold(f64::INFINITY, f64::min);
        match self.even_tail.law() {
            Some(l) => mat.min(l.inf_from(self.n_cycles())),
            None => mat,
        }
    }

    /// `sup_n T_{2n+1}` over materialized cycles and the declared tail.
    pub fn odd_sup(&self) -> f64 {
        let mat = (0..self.n_cycles()).map(|n| self.odd_length(n)).fold(0.0, f64::max);
        match self.odd_tail.law() {
            Some(l) => mat.max(l.sup_from(self.n_cycles())),
            None => mat,
        }
    }

    /// `(T*, T̃)` if every even interval has one length and every odd interval another.
    pub fn periodic_lengths(&self) -> Option<(f64, f64)> {
        let te = self.even_length(0);
        let to = self.odd_length(0);
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        let materialized = (0..self.n_cycles())
            .all(|n| same(self.even_length(n), te) && same(self.odd_length(n), to));
        let tails = match (self.even_tail, self.odd_tail) {
            (Tail::Constant { value: e }, Tail::Constant { value: o }) => same(e, te) && same(o, to),
            _ => false,
        };
        (materialized && tails).then_some((te, to))
    }
}

/// Which family of hypotheses a scenario is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// Bounded damping, augmented energy: `(new)` and `(quartaA)`.
    General,
    /// Short delayed intervals `T_{2n+1} ≤ τ`, standard energy.
    Restricted,
    /// Restricted plus per-interval `T_{2n} > T̄_n` for the damped observability.
    Unbounded,
    /// Constant lengths `T_{2n} = T*`, `T_{2n+1} = T̃` for the exponential theorems.
    Periodic,
}

pub mod hypothesis {
    pub const NEW: &str = "(new)";
    pub const REST: &str = "(rest)";
    pub const QUARTA_A: &str = "(quartaA)";
    pub const T2N: &str = "(T2n)";
    pub const PERIODIC: &str = "(quartaASpecial)";
    pub const DISJOINT: &str = "disjoint-supports";
    pub const BOUNDS: &str = "bound-consistency";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub hypothesis: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, hypothesis: &str) -> bool {
        self.violations.iter().any(|v| v.hypothesis == hypothesis)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "valid for {:?}", self.mode);
        }
        write!(f, "invalid for {:?}:", self.mode)?;
        for v in &self.violations {
            write!(f, " {} ({});", v.hypothesis, v.detail)?;
        }
        Ok(())
    }
}

/// `inf_n m_{2n}/M_{2n+1}` over the declared bounds and the tails.
/// `None` when the tails cannot decide it; `+∞` when `M_{2n+1} ≡ 0`.
pub fn inf_damping_ratio(profile: &FeedbackProfile) -> Option<f64> {
    let ratio = |m: f64, mo: f64| if mo == 0.0 { f64::INFINITY } else { m / mo };
    let mat = profile
        .declared_bounds()
        .iter()
        .map(|b| ratio(b.m, b.m_odd))
        .fold(f64::INFINITY, f64::min);
    let tails = profile.tails();
    let (m, mo) = (tails.m.law()?, tails.m_odd.law()?);
    let tail_inf = match m.div(&mo) {
        Some(r) => r.inf_from(profile.n_cycles()),
        None => f64::INFINITY,
    };
    Some(mat.min(tail_inf))
}

/// Check the schedule/profile pair against the hypotheses of `mode`.
/// Violations are report entries, never errors.
pub fn validate(
    schedule: &SwitchingSchedule,
    profile: &FeedbackProfile,
    mode: ValidationMode,
    t_bar: f64,
) -> ValidationReport {
    use hypothesis::*;
    let mut violations = Vec::new();
    let mut flag = |h: &str, detail: String| {
        violations.push(Violation { hypothesis: h.to_string(), detail })
    };
    let tau = schedule.tau();

    if profile.n_cycles() != schedule.n_cycles() {
        flag(
            BOUNDS,
            format!(
                "profile has {} cycles, schedule {}",
                profile.n_cycles(),
                schedule.n_cycles()
            ),
        );
    } else {
        for n in 0..schedule.n_cycles() {
            if let Err(e) = profile_bounds(profile, schedule, n) {
                flag(BOUNDS, e.to_string());
            }
        }
        let worst = disjoint_support_defect(schedule, profile, 64);
        if worst != 0.0 {
            flag(DISJOINT, format!("max |b1·b2| = {worst}"));
        }
    }

    let t_star = schedule.t_star();
    if !(t_star > t_bar && t_star >= tau) {
        flag(
            QUARTA_A,
            format!("T* = {t_star} must exceed T_bar = {t_bar} and be at least tau = {tau}"),
        );
    }

    if mode == ValidationMode::General {
        match inf_damping_ratio(profile) {
            Some(r) if r > 0.0 => {}
            Some(r) => flag(NEW, format!("inf m/M_odd = {r}")),
            None => flag(NEW, "undecidable: tails unspecified".into()),
        }
    }

    if matches!(mode, ValidationMode::Restricted | ValidationMode::Unbounded) {
        let sup_odd = schedule.odd_sup();
        if sup_odd > tau * (1.0 + 1e-12) {
            flag(REST, format!("sup T_odd = {sup_odd} exceeds tau = {tau}"));
        }
    }

    if mode == ValidationMode::Unbounded {
        for n in 0..schedule.n_cycles() {
            if schedule.even_length(n) <= t_bar {
                flag(T2N, format!("T_{} = {} ≤ T_bar = {t_bar}", 2 * n, schedule.even_length(n)));
            }
        }
    }

    if mode == ValidationMode::Periodic && schedule.periodic_lengths().is_none() {
        flag(PERIODIC, "interval lengths are not constant (materialized and tails)".into());
    }

    ValidationReport { mode, violations }
}

/// Largest `|b₁(t)·b₂(t)|` over a uniform grid of each interval.
pub fn disjoint_support_defect(
    schedule: &SwitchingSchedule,
    profile: &FeedbackProfile,
    per_interval: usize,
) -> f64 {
    let times = schedule.times();
    let mut worst = 0.0f64;
    for k in 0..schedule.n_intervals() {
        for i in 0..per_interval {
            let t = times[k] + (times[k + 1] - times[k]) * i as f64 / per_interval as f64;
            worst = worst.max((profile.b1_at(schedule, t) * profile.b2_at(schedule, t)).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_cumulative_sums() {
        let s = build_schedule(&[2.0], &[1.0], 1.0, 2).unwrap();
        assert_eq!(s.times(), &[0.0, 2.0, 3.0, 5.0, 6.0]);
        let s = build_schedule(&[1.0], &[1.0], 1.0, 1).unwrap();
        assert_eq!(s.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.n_intervals(), 2);
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(matches!(
            build_schedule(&[0.0], &[1.0], 1.0, 1),
            Err(ScheduleError::NonPositiveLength { index: 0, .. })
        ));
        assert!(build_schedule(&[1.0], &[1.0], 0.0, 1).is_err());
        assert!(build_schedule(&[1.0], &[1.0], 1.0, 0).is_err());
        assert!(build_schedule(&[1.0, 2.0], &[1.0], 1.0, 3).is_err());
    }

    #[test]
    fn classify_half_open() {
        let s = build_schedule(&[2.0], &[1.0], 1.0, 2).unwrap();
        // restrict to [0,2,3,5]
        assert_eq!(s.classify(2.5).unwrap(), (1, Parity::Odd));
        assert_eq!(s.classify(0.0).unwrap(), (0, Parity::Even));
        assert_eq!(s.classify(3.0).unwrap(), (2, Parity::Even));
        assert!(s.classify(6.0).is_err());
        assert!(s.classify(-0.1).is_err());
        let short = build_schedule(&[2.0, 2.0], &[1.0, 1.0], 1.0, 2).unwrap();
        assert!(short.classify(5.0).is_ok());
    }

    #[test]
    fn general_mode_valid_example() {
        let s = build_schedule(&[2.0], &[1.0], 1.0, 3).unwrap();
        let p = FeedbackProfile::constant(1.0, 0.5, 3).unwrap();
        let r = validate(&s, &p, ValidationMode::General, 1.5);
        assert!(r.is_valid(), "{r}");
    }

    #[test]
    fn restricted_flags_long_delay_intervals() {
        let s = build_schedule(&[3.0], &[2.0], 1.0, 2).unwrap();
        let p = FeedbackProfile::constant(1.0, 0.5, 2).unwrap();
        let r = validate(&s, &p, ValidationMode::Restricted, 1.0);
        assert!(r.violates(hypothesis::REST));
    }

    #[test]
    fn vanishing_damping_ratio_violates_new() {
        let tails = BoundTails {
            m: Tail::PowerLaw { scale: 1.0, exponent: 1.0 },
            big_m: Tail::PowerLaw { scale: 1.0, exponent: 1.0 },
            m_odd: Tail::constant(1.0),
        };
        let p = FeedbackProfile::from_tails(tails, 3).unwrap();
        let s = build_schedule(&[2.0], &[1.0], 1.0, 3).unwrap();
        let r = validate(&s, &p, ValidationMode::General, 1.0);
        assert!(r.violates(hypothesis::NEW));
        assert_eq!(inf_damping_ratio(&p), Some(0.0));
    }

    #[test]
    fn profile_bounds_examples() {
        let s = build_schedule(&[1.0], &[1.0], 1.0, 1).unwrap();
        let p = FeedbackProfile::constant(1.0, 0.0, 1).unwrap();
        assert_eq!(profile_bounds(&p, &s, 0).unwrap().m, 1.0);

        let tails = BoundTails {
            m: Tail::constant(1.0),
            big_m: Tail::constant(2.0),
            m_odd: Tail::constant(0.0),
        };
        let ramp = FeedbackProfile::new(
            vec![Poly([1.0, 1.0, 0.0, 0.0])],
            vec![Poly::ZERO],
            vec![CycleBounds { m: 1.0, big_m: 2.0, m_odd: 0.0 }],
            tails,
        )
        .unwrap();
        assert!(profile_bounds(&ramp, &s, 0).is_ok());

        let too_big = FeedbackProfile::new(
            vec![Poly::constant(3.0)],
            vec![Poly::ZERO],
            vec![CycleBounds { m: 1.0, big_m: 2.0, m_odd: 0.0 }],
            tails,
        )
        .unwrap();
        assert!(matches!(
            profile_bounds(&too_big, &s, 0),
            Err(ScheduleError::BoundMismatch { .. })
        ));
    }

    #[test]
    fn periodic_detection() {
        let s = build_schedule(&[2.0], &[0.5], 1.0, 4).unwrap();
        assert_eq!(s.periodic_lengths(), Some((2.0, 0.5)));
        let s = build_schedule(&[2.0, 3.0], &[0.5, 0.5], 1.0, 2).unwrap();
        assert_eq!(s.periodic_lengths(), None);
    }

    #[test]
    fn disjoint_supports_structural() {
        let s = build_schedule(&[1.5], &[0.7], 1.0, 3).unwrap();
        let p = FeedbackProfile::constant(2.0, -1.0, 3).unwrap();
        assert_eq!(disjoint_support_defect(&s, &p, 500), 0.0);
    }
}
