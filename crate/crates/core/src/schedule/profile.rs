use serde::{Deserialize, Serialize};

use super::{Parity, ScheduleError, SwitchingSchedule, Tail};

/// Cubic polynomial in the local time `s = t − t_start` of an interval.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly(pub [f64; 4]);

impl Poly {
    pub const ZERO: Poly = Poly([0.0; 4]);

    pub fn constant(c: f64) -> Self {
        Poly([c, 0.0, 0.0, 0.0])
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        let [c0, c1, c2, c3] = self.0;
        ((c3 * s + c2) * s + c1) * s + c0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.0[1..].iter().all(|&c| c == 0.0)
    }
}

/// Per-cycle bound triple `(m_{2n}, M_{2n}, M_{2n+1})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleBounds {
    pub m: f64,
    pub big_m: f64,
    pub m_odd: f64,
}

/// Symbolic continuation of the bound sequences past the materialized cycles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTails {
    pub m: Tail,
    pub big_m: Tail,
    pub m_odd: Tail,
}

impl BoundTails {
    pub fn at(&self, n: usize) -> Option<CycleBounds> {
        Some(CycleBounds {
            m: self.m.value(n)?,
            big_m: self.big_m.value(n)?,
            m_odd: self.m_odd.value(n)?,
        })
    }

    pub fn all_constant(&self) -> bool {
        self.m.is_constant() && self.big_m.is_constant() && self.m_odd.is_constant()
    }
}

/// Feedback time profiles: `b₁` lives on active (even) intervals and `b₂`
/// on delayed (odd) intervals, one polynomial per cycle each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackProfile {
    b1: Vec<Poly>,
    b2: Vec<Poly>,
    bounds: Vec<CycleBounds>,
    tails: BoundTails,
}

impl FeedbackProfile {
    pub fn new(
        b1: Vec<Poly>,
        b2: Vec<Poly>,
        bounds: Vec<CycleBounds>,
        tails: BoundTails,
    ) -> Result<Self, ScheduleError> {
        let n = b1.len();
        if n == 0 || b2.len() != n || bounds.len() != n {
            return Err(ScheduleError::ProfileShape {
                b1: b1.len(),
                b2: b2.len(),
                bounds: bounds.len(),
            });
        }
        for t in [&tails.m, &tails.big_m, &tails.m_odd] {
            if !t.is_well_formed() {
                return Err(ScheduleError::InvalidTail(*t));
            }
        }
        Ok(FeedbackProfile { b1, b2, bounds, tails })
    }

    /// Constant `b₁` on every active interval and constant `b₂` on every
    /// delayed interval; the bounds are the tight ones.
    pub fn constant(b1: f64, b2: f64, n_cycles: usize) -> Result<Self, ScheduleError> {
        let bounds = CycleBounds { m: b1, big_m: b1, m_odd: b2.abs() };
        FeedbackProfile::new(
            vec![Poly::constant(b1); n_cycles],
            vec![Poly::constant(b2); n_cycles],
            vec![bounds; n_cycles],
            BoundTails {
                m: Tail::constant(b1),
                big_m: Tail::constant(b1),
                m_odd: Tail::constant(b2.abs()),
            },
        )
    }

    /// Piecewise-constant profile following the tails: `b₁ = m_{2n}`,
    /// `b₂ = M_{2n+1}` on cycle `n`.
    pub fn from_tails(tails: BoundTails, n_cycles: usize) -> Result<Self, ScheduleError> {
        let mut b1 = Vec::with_capacity(n_cycles);
        let mut b2 = Vec::with_capacity(n_cycles);
        let mut bounds = Vec::with_capacity(n_cycles);
        for n in 0..n_cycles {
            let cb = tails.at(n).ok_or(ScheduleError::InvalidTail(Tail::Unspecified))?;
            b1.push(Poly::constant(cb.m));
            b2.push(Poly::constant(cb.m_odd));
            bounds.push(cb);
        }
        FeedbackProfile::new(b1, b2, bounds, tails)
    }

    pub fn n_cycles(&self) -> usize {
        self.b1.len()
    }

    pub fn b1_poly(&self, cycle: usize) -> Poly {
        self.b1.get(cycle).copied().unwrap_or(Poly::ZERO)
    }

    pub fn b2_poly(&self, cycle: usize) -> Poly {
        self.b2.get(cycle).copied().unwrap_or(Poly::ZERO)
    }

    /// Polynomial active on interval `index` (even → b₁, odd → b₂), zero past the horizon.
    pub fn interval_polys(&self, index: usize) -> (Poly, Poly) {
        let cycle = index / 2;
        if index % 2 == 0 {
            (self.b1_poly(cycle), Poly::ZERO)
        } else {
            (Poly::ZERO, self.b2_poly(cycle))
        }
    }

    pub fn declared_bounds(&self) -> &[CycleBounds] {
        &self.bounds
    }

    pub fn tails(&self) -> &BoundTails {
        &self.tails
    }

    /// Bounds for any cycle: declared ones on the horizon, tails beyond it.
    pub fn bounds_at(&self, n: usize) -> Option<CycleBounds> {
        self.bounds.get(n).copied().or_else(|| self.tails.at(n))
    }

    pub fn b1_at(&self, schedule: &SwitchingSchedule, t: f64) -> f64 {
        match schedule.classify(t) {
            Ok((k, Parity::Even)) => self.b1_poly(k / 2).eval(t - schedule.times()[k]),
            _ => 0.0,
        }
    }

    pub fn b2_at(&self, schedule: &SwitchingSchedule, t: f64) -> f64 {
        match schedule.classify(t) {
            Ok((k, Parity::Odd)) => self.b2_poly(k / 2).eval(t - schedule.times()[k]),
            _ => 0.0,
        }
    }

    /// Returns `(min b₁, max b₁)` on the active interval and `max |b₂|` on
    /// the delayed interval of cycle `n`, sampled at `samples + 1` points each.
    pub fn sampled_range(
        &self,
        schedule: &SwitchingSchedule,
        n: usize,
        samples: usize,
    ) -> (f64, f64, f64) {
        let lens = schedule.lengths();
        let (te, to) = (lens[2 * n], lens[2 * n + 1]);
        let (p1, p2) = (self.b1_poly(n), self.b2_poly(n));
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut b2max = 0.0f64;
        for i in 0..=samples {
            let f = i as f64 / samples as f64;
            let v1 = p1.eval(f * te);
            lo = lo.min(v1);
            hi = hi.max(v1);
            b2max = b2max.max(p2.eval(f * to).abs());
        }
        (lo, hi, b2max)
    }
}

/// Declared bounds of cycle `n`, after checking by dense sampling that the
/// profile respects them.
pub fn profile_bounds(
    profile: &FeedbackProfile,
    schedule: &SwitchingSchedule,
    n: usize,
) -> Result<CycleBounds, ScheduleError> {
    if n >= profile.n_cycles() || n >= schedule.n_cycles() {
        return Err(ScheduleError::CycleOutOfRange { n, cycles: schedule.n_cycles() });
    }
    let cb = profile.bounds[n];
    let (lo, hi, b2max) = profile.sampled_range(schedule, n, 128);
    let slack = |x: f64| 1e-12 * x.abs().max(1.0);
    let mut problems = Vec::new();
    if !(cb.m > 0.0) || cb.m > cb.big_m || cb.m_odd < 0.0 {
        problems.push(format!(
            "need 0 < m ≤ M and M_odd ≥ 0, got ({}, {}, {})",
            cb.m, cb.big_m, cb.m_odd
        ));
    }
    if lo < cb.m - slack(cb.m) {
        problems.push(format!("min b1 = {lo} below m = {}", cb.m));
    }
    if hi > cb.big_m + slack(cb.big_m) {
        problems.push(format!("max b1 = {hi} above M = {}", cb.big_m));
    }
    if b2max > cb.m_odd + slack(cb.m_odd) {
        problems.push(format!("max |b2| = {b2max} above M_odd = {}", cb.m_odd));
    }
    if problems.is_empty() {
        Ok(cb)
    } else {
        Err(ScheduleError::BoundMismatch { n, detail: problems.join("; ") })
    }
}
