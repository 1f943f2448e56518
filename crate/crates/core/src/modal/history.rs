use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::lagrange_weights;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistoryError {
    #[error("history underflow: query at s = {s} but the buffer starts at {oldest}")]
    Underflow { s: f64, oldest: f64 },
    #[error("query at s = {s} lies ahead of the latest sample {latest}")]
    Ahead { s: f64, latest: f64 },
    #[error("history sample has width {got}, expected {expected}")]
    Width { expected: usize, got: usize },
    #[error("sample time {t} does not advance past {last}")]
    NonIncreasing { t: f64, last: f64 },
}

/// Velocity history on `[−τ, 0]` before the run starts.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prehistory {
    #[default]
    Zero,
    Constant(Vec<f64>),
    /// One cubic in `s` per history component.
    Polynomial(Vec<[f64; 4]>),
}

impl Prehistory {
    pub fn eval(&self, s: f64, out: &mut [f64]) {
        match self {
            Prehistory::Zero => out.fill(0.0),
            Prehistory::Constant(v) => out.copy_from_slice(v),
            Prehistory::Polynomial(p) => {
                for (o, c) in out.iter_mut().zip(p) {
                    *o = ((c[3] * s + c[2]) * s + c[1]) * s + c[0];
                }
            }
        }
    }

    pub fn width(&self) -> Option<usize> {
        match self {
            Prehistory::Zero => None,
            Prehistory::Constant(v) => Some(v.len()),
            Prehistory::Polynomial(p) => Some(p.len()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Prehistory::Zero => true,
            Prehistory::Constant(v) => v.iter().all(|&x| x == 0.0),
            Prehistory::Polynomial(p) => p.iter().all(|c| c.iter().all(|&x| x == 0.0)),
        }
    }
}

/// Samples between two consecutive breaks, where the velocity is smooth.
#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    /// first retained sample after pruning
    start: usize,
}

impl Segment {
    fn len(&self) -> usize {
        self.times.len()
    }

    fn last_time(&self) -> f64 {
        *self.times.last().expect("segments are never empty")
    }
}

/// Ring buffer of past velocity samples covering at least `[t − τ, t]`.
///
/// Samples are grouped into segments separated by breaks (switch times and
/// the start of the run), where the velocity is only continuous. Cubic
/// interpolation never uses samples from two segments.
#[derive(Clone, Debug)]
pub struct DelayHistory {
    tau: f64,
    dt: f64,
    width: usize,
    segments: VecDeque<Segment>,
}

pub const INTERP_ORDER: usize = 3;

impl DelayHistory {
    /// Buffer seeded with `prehistory` sampled on `[−τ, 0]` at spacing at most `dt`.
    pub fn new(tau: f64, dt: f64, width: usize, prehistory: &Prehistory) -> Result<Self, HistoryError> {
        if let Some(w) = prehistory.width() {
            if w != width {
                return Err(HistoryError::Width { expected: width, got: w });
            }
        }
        let n = (tau / dt - 1e-9).ceil().max(1.0) as usize;
        let h = tau / n as f64;
        let extra = INTERP_ORDER;
        let mut seg = Segment {
            t0: -tau - extra as f64 * h,
            times: Vec::with_capacity(n + extra + 1),
            values: Vec::with_capacity((n + extra + 1) * width),
            start: 0,
        };
        let mut buf = vec![0.0; width];
        for i in 0..=(n + extra) {
            let s = if i == n + extra { 0.0 } else { -tau + (i as f64 - extra as f64) * h };
            prehistory.eval(s, &mut buf);
            seg.times.push(s);
            seg.values.extend_from_slice(&buf);
        }
        let mut segments = VecDeque::new();
        segments.push_back(seg);
        Ok(DelayHistory { tau, dt, width, segments })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Nominal (largest) step the buffer was built for.
    pub fn nominal_dt(&self) -> f64 {
        self.dt
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn latest_time(&self) -> f64 {
        self.segments.back().expect("history never empty").last_time()
    }

    pub fn oldest_time(&self) -> f64 {
        let s = self.segments.front().expect("history never empty");
        s.times[s.start]
    }

    /// Start a new smooth segment at `t` (a break such as a switch time).
    pub fn begin_segment(&mut self, t: f64, v: &[f64]) -> Result<(), HistoryError> {
        self.check_width(v)?;
        let last = self.latest_time();
        if t < last {
            return Err(HistoryError::NonIncreasing { t, last });
        }
        self.segments.push_back(Segment { t0: t, times: vec![t], values: v.to_vec(), start: 0 });
        Ok(())
    }

    pub fn push(&mut self, t: f64, v: &[f64]) -> Result<(), HistoryError> {
        self.check_width(v)?;
        let seg = self.segments.back_mut().expect("history never empty");
        let last = seg.last_time();
        if t <= last {
            return Err(HistoryError::NonIncreasing { t, last });
        }
        seg.times.push(t);
        seg.values.extend_from_slice(v);
        Ok(())
    }

    fn check_width(&self, v: &[f64]) -> Result<(), HistoryError> {
        if v.len() != self.width {
            return Err(HistoryError::Width { expected: self.width, got: v.len() });
        }
        Ok(())
    }

    /// Drop samples no interpolation at `s ≥ now − τ` can reach.
    pub fn prune(&mut self, now: f64) {
        let cutoff = now - self.tau - (INTERP_ORDER + 1) as f64 * self.dt;
        while self.segments.len() > 1 && self.segments[1].t0 <= cutoff {
            // the whole front segment ends before the cutoff
            if self.segments[0].last_time() < cutoff {
                self.segments.pop_front();
            } else {
                break;
            }
        }
        let seg = self.segments.front_mut().expect("history never empty");
        let keep_from = seg.times.partition_point(|&s| s < cutoff).saturating_sub(1);
        if keep_from > seg.start {
            seg.start = keep_from;
        }
        if seg.start > 4096 && seg.start * 2 > seg.len() {
            seg.times.drain(..seg.start);
            seg.values.drain(..seg.start * self.width);
            seg.start = 0;
        }
    }

    fn segment_for(&self, hint: f64) -> &Segment {
        self.segments
            .iter()
            .rev()
            .find(|seg| seg.t0 <= hint)
            .unwrap_or_else(|| self.segments.front().expect("history never empty"))
    }

    /// Breaks (segment starts) strictly inside `(a, b)`.
    pub fn breaks_in(&self, a: f64, b: f64) -> Vec<f64> {
        self.segments.iter().map(|s| s.t0).filter(|&t| t > a && t < b).collect()
    }

    /// Sample times strictly inside `(a, b)`, taken from the segment containing `hint`.
    pub fn sample_times_in(&self, a: f64, b: f64, hint: f64) -> Vec<f64> {
        let seg = self.segment_for(hint);
        let times = &seg.times[seg.start..];
        let lo = times.partition_point(|&s| s <= a);
        let hi = times.partition_point(|&s| s < b);
        times[lo..hi.max(lo)].to_vec()
    }

    /// Cubic interpolation at `s` inside the segment that contains `hint`.
    pub fn velocity_in(&self, s: f64, hint: f64, out: &mut [f64]) -> Result<(), HistoryError> {
        let seg = self.segment_for(hint);
        let times = &seg.times[seg.start..];
        let eps = 1e-12 * s.abs().max(1.0);
        let oldest = times[0];
        if s < oldest - eps {
            return Err(HistoryError::Underflow { s, oldest });
        }
        let latest = *times.last().expect("nonempty");
        if s > latest + eps {
            return Err(HistoryError::Ahead { s, latest });
        }
        let count = times.len().min(INTERP_ORDER + 1);
        let i = times.partition_point(|&x| x <= s).saturating_sub(1);
        let first = i.saturating_sub(1).min(times.len() - count);
        let nodes = &times[first..first + count];
        let mut w = [0.0; INTERP_ORDER + 1];
        lagrange_weights(nodes, s, &mut w[..count]);
        out.fill(0.0);
        let base = (seg.start + first) * self.width;
        for (k, wk) in w[..count].iter().enumerate() {
            let row = &seg.values[base + k * self.width..base + (k + 1) * self.width];
            for (o, v) in out.iter_mut().zip(row) {
                *o += wk * v;
            }
        }
        Ok(())
    }

    /// Velocity at `s ∈ [latest − τ, latest]`, right-continuous at breaks.
    pub fn delayed_velocity(&self, s: f64) -> Result<Vec<f64>, HistoryError> {
        let latest = self.latest_time();
        let eps = 1e-12 * latest.abs().max(1.0);
        if s < latest - self.tau - eps {
            return Err(HistoryError::Underflow { s, oldest: latest - self.tau });
        }
        let mut out = vec![0.0; self.width];
        self.velocity_in(s, s, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_history_interpolates_exactly() {
        let h = DelayHistory::new(1.0, 0.1, 2, &Prehistory::Constant(vec![3.0, -1.0])).unwrap();
        let v = h.delayed_velocity(-0.537).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-14 && (v[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_history_exact_at_midpoints() {
        let mut h = DelayHistory::new(1.0, 0.1, 1, &Prehistory::Zero).unwrap();
        h.begin_segment(0.0, &[0.0]).unwrap();
        for i in 1..=30 {
            let t = i as f64 * 0.1;
            h.push(t, &[t * t]).unwrap();
        }
        let v = h.delayed_velocity(2.25).unwrap();
        assert!((v[0] - 2.25 * 2.25).abs() < 1e-12);
    }

    #[test]
    fn older_than_window_underflows() {
        let mut h = DelayHistory::new(1.0, 0.1, 1, &Prehistory::Zero).unwrap();
        h.begin_segment(0.0, &[0.0]).unwrap();
        for i in 1..=30 {
            h.push(i as f64 * 0.1, &[1.0]).unwrap();
            h.prune(i as f64 * 0.1);
        }
        assert!(matches!(h.delayed_velocity(1.5), Err(HistoryError::Underflow { .. })));
        assert!(matches!(h.delayed_velocity(3.5), Err(HistoryError::Ahead { .. })));
    }

    #[test]
    fn interpolation_does_not_cross_breaks() {
        let mut h = DelayHistory::new(2.0, 0.1, 1, &Prehistory::Zero).unwrap();
        h.begin_segment(0.0, &[0.0]).unwrap();
        for i in 1..=10 {
            h.push(i as f64 * 0.1, &[i as f64 * 0.1]).unwrap();
        }
        // kink at t = 1: slope changes from 1 to −1
        h.begin_segment(1.0, &[1.0]).unwrap();
        for i in 1..=10 {
            let t = 1.0 + i as f64 * 0.1;
            h.push(t, &[2.0 - t]).unwrap();
        }
        let left = h.delayed_velocity(0.95).unwrap()[0];
        let right = h.delayed_velocity(1.05).unwrap()[0];
        assert!((left - 0.95).abs() < 1e-12);
        assert!((right - 0.95).abs() < 1e-12);
    }

    #[test]
    fn polynomial_prehistory() {
        let p = Prehistory::Polynomial(vec![[1.0, 2.0, 0.0, 1.0]]);
        let h = DelayHistory::new(1.0, 0.05, 1, &p).unwrap();
        let s = -0.3217;
        let v = h.delayed_velocity(s).unwrap()[0];
        assert!((v - (1.0 + 2.0 * s + s * s * s)).abs() < 1e-12);
    }
}
