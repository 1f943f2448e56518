//! Method-of-steps driver shared by the modal and finite-difference systems.

use thiserror::Error;

use super::history::{DelayHistory, HistoryError, Prehistory};
use super::trace::{Channels, Snapshot, SwitchEnergy, Trace, TraceSample};
use crate::energy::delay_integral;
use crate::schedule::{
    profile::Poly, validate, FeedbackProfile, ScheduleError, SwitchingSchedule, ValidationMode,
    ValidationReport,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("time step {dt} exceeds the delay {tau}")]
    StepExceedsDelay { dt: f64, tau: f64 },
    #[error("step of length {h} exceeds the history spacing {dt}")]
    StepMismatch { h: f64, dt: f64 },
    #[error("sample stride must be at least 1")]
    ZeroStride,
    #[error("state has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("profile covers {profile} cycles, schedule {schedule}")]
    HorizonMismatch { profile: usize, schedule: usize },
    #[error("scenario rejected: {0}")]
    Invalid(ValidationReport),
    #[error("step does not fit the wave grid: {0}")]
    Cfl(String),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("solution left the finite range at t = {0}")]
    NonFinite(f64),
}

/// Feedback polynomials active on one interval, in its local time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalFeedback {
    pub index: usize,
    pub start: f64,
    pub b1: Poly,
    pub b2: Poly,
}

impl IntervalFeedback {
    pub fn of(schedule: &SwitchingSchedule, profile: &FeedbackProfile, index: usize) -> Self {
        let (b1, b2) = profile.interval_polys(index);
        IntervalFeedback { index, start: schedule.times()[index], b1, b2 }
    }

    #[inline]
    pub fn b1(&self, t: f64) -> f64 {
        self.b1.eval(t - self.start)
    }

    #[inline]
    pub fn b2(&self, t: f64) -> f64 {
        self.b2.eval(t - self.start)
    }
}

/// Delayed channel values at the three distinct RK4 stage times of a step.
#[derive(Clone, Debug)]
pub struct DelayedStages {
    pub start: Vec<f64>,
    pub mid: Vec<f64>,
    pub end: Vec<f64>,
}

impl DelayedStages {
    pub fn zeros(width: usize) -> Self {
        DelayedStages { start: vec![0.0; width], mid: vec![0.0; width], end: vec![0.0; width] }
    }

    /// Fill from `history` for the step `[t, t + h]`.
    pub fn load(&mut self, history: &DelayHistory, t: f64, h: f64) -> Result<(), HistoryError> {
        let tau = history.tau();
        let hint = t + 0.5 * h - tau;
        history.velocity_in(t - tau, hint, &mut self.start)?;
        history.velocity_in(t + 0.5 * h - tau, hint, &mut self.mid)?;
        history.velocity_in(t + h - tau, hint, &mut self.end)?;
        Ok(())
    }
}

/// A semi-discrete second-order system `u'' = F(t, u, u', u'(t − τ))` where
/// the delayed term only reads a linear channel of the velocity.
pub trait DelayDynamics {
    /// length of `u` and `v`
    fn dof(&self) -> usize;
    /// length of the stored velocity channel
    fn history_width(&self) -> usize;
    fn history_channel(&self, v: &[f64], out: &mut [f64]);
    /// Advance one step of length `h` that stays inside a single interval.
    fn advance(
        &self,
        u: &mut [f64],
        v: &mut [f64],
        t: f64,
        h: f64,
        fb: &IntervalFeedback,
        delayed: &DelayedStages,
    );
    fn standard_energy(&self, u: &[f64], v: &[f64]) -> f64;
    /// `‖·‖²_{W₂}` of a stored channel sample
    fn delayed_norm(&self, channel: &[f64]) -> f64;
    /// `b1` is the undelayed gain at the sample time.
    fn channels(&self, u: &[f64], v: &[f64], delayed: &[f64], b1: f64) -> Channels;
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub dt: f64,
    pub sample_stride: usize,
    pub xi: f64,
    pub prehistory: Prehistory,
    /// refuse to run unless the scenario is valid for the mode with this `T̄`
    pub validation: Option<(ValidationMode, f64)>,
}

impl RunOptions {
    pub fn new(dt: f64) -> Self {
        RunOptions { dt, sample_stride: 1, xi: 0.0, prehistory: Prehistory::Zero, validation: None }
    }

    pub fn stride(mut self, s: usize) -> Self {
        self.sample_stride = s;
        self
    }

    pub fn xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn prehistory(mut self, p: Prehistory) -> Self {
        self.prehistory = p;
        self
    }

    pub fn validated(mut self, mode: ValidationMode, t_bar: f64) -> Self {
        self.validation = Some((mode, t_bar));
        self
    }
}

/// Time points strictly inside `(a, b)` where the right-hand side or the
/// augmented energy loses smoothness: `t_k ± τ`.
pub fn delay_breakpoints(schedule: &SwitchingSchedule, a: f64, b: f64) -> Vec<f64> {
    let tau = schedule.tau();
    let eps = 1e-12 * b.abs().max(1.0);
    let mut out: Vec<f64> = schedule
        .times()
        .iter()
        .flat_map(|&tk| [tk - tau, tk + tau])
        .filter(|&s| s > a + eps && s < b - eps)
        .collect();
    out.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    out.dedup_by(|x, y| (*x - *y).abs() <= eps);
    out
}

/// Advance `(u, v)` by one step and append the new velocity channel.
#[allow(clippy::too_many_arguments)]
pub fn step<S: DelayDynamics + ?Sized>(
    sys: &S,
    u: &mut [f64],
    v: &mut [f64],
    t: f64,
    h: f64,
    fb: &IntervalFeedback,
    history: &mut DelayHistory,
    stages: &mut DelayedStages,
    channel: &mut [f64],
) -> Result<(), SimError> {
    let dt = history.nominal_dt();
    if !(h > 0.0) || h > dt * (1.0 + 1e-8) {
        return Err(SimError::StepMismatch { h, dt });
    }
    stages.load(history, t, h)?;
    sys.advance(u, v, t, h, fb, stages);
    sys.history_channel(v, channel);
    history.push(t + h, channel)?;
    Ok(())
}

struct Recorder<'a, S: ?Sized> {
    sys: &'a S,
    schedule: &'a SwitchingSchedule,
    profile: &'a FeedbackProfile,
    xi: f64,
    delayed: Vec<f64>,
    trace: Trace,
}

impl<S: DelayDynamics + ?Sized> Recorder<'_, S> {
    fn record(
        &mut self,
        history: &DelayHistory,
        t: f64,
        interval: usize,
        flags: (bool, bool),
        u: &[f64],
        v: &[f64],
    ) -> Result<(), SimError> {
        let es = self.sys.standard_energy(u, v);
        if !es.is_finite() {
            return Err(SimError::NonFinite(t));
        }
        let e = es + 0.5 * self.xi * delay_integral(self.sys, history, self.profile, self.schedule, t)?;
        let tau = self.schedule.tau();
        history.velocity_in(t - tau, t - tau, &mut self.delayed)?;
        let (b1, b2) = if interval < self.schedule.n_intervals() {
            let fb = IntervalFeedback::of(self.schedule, self.profile, interval);
            (fb.b1(t), fb.b2(t))
        } else {
            (0.0, 0.0)
        };
        let channels = self.sys.channels(u, v, &self.delayed, b1);
        self.trace.samples.push(TraceSample {
            t,
            es,
            e,
            interval,
            switch: flags.0,
            breakpoint: flags.0 || flags.1,
            b1,
            b2,
            channels,
        });
        if flags.0 {
            self.trace.switches.push(SwitchEnergy { index: interval, t, es, e });
            self.trace.snapshots.push(Snapshot { index: interval, t, u: u.to_vec(), v: v.to_vec() });
        }
        Ok(())
    }
}

/// Integrate over the whole schedule horizon, splitting every interval at
/// the delay breakpoints and using equal substeps of length at most `dt`.
pub fn run<S: DelayDynamics + ?Sized>(
    sys: &S,
    schedule: &SwitchingSchedule,
    profile: &FeedbackProfile,
    u0: &[f64],
    v0: &[f64],
    opts: &RunOptions,
) -> Result<Trace, SimError> {
    let dt = opts.dt;
    let tau = schedule.tau();
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SimError::InvalidStep(dt));
    }
    if dt > tau * (1.0 + 1e-12) {
        return Err(SimError::StepExceedsDelay { dt, tau });
    }
    if opts.sample_stride == 0 {
        return Err(SimError::ZeroStride);
    }
    let n = sys.dof();
    for len in [u0.len(), v0.len()] {
        if len != n {
            return Err(SimError::Dimension { expected: n, got: len });
        }
    }
    if profile.n_cycles() != schedule.n_cycles() {
        return Err(SimError::HorizonMismatch {
            profile: profile.n_cycles(),
            schedule: schedule.n_cycles(),
        });
    }
    if let Some((mode, t_bar)) = opts.validation {
        let report = validate(schedule, profile, mode, t_bar);
        if !report.is_valid() {
            return Err(SimError::Invalid(report));
        }
    }

    let width = sys.history_width();
    let mut history = DelayHistory::new(tau, dt, width, &opts.prehistory)?;
    let mut channel = vec![0.0; width];
    sys.history_channel(v0, &mut channel);
    history.begin_segment(0.0, &channel)?;

    let mut u = u0.to_vec();
    let mut v = v0.to_vec();
    let mut stages = DelayedStages::zeros(width);
    let mut rec = Recorder {
        sys,
        schedule,
        profile,
        xi: opts.xi,
        delayed: vec![0.0; width],
        trace: Trace {
            dt,
            tau,
            xi: opts.xi,
            samples: Vec::new(),
            switches: Vec::new(),
            snapshots: Vec::new(),
        },
    };
    rec.record(&history, 0.0, 0, (true, false), &u, &v)?;

    let times = schedule.times();
    let mut steps = 0usize;
    for k in 0..schedule.n_intervals() {
        let (a, b) = (times[k], times[k + 1]);
        let fb = IntervalFeedback::of(schedule, profile, k);
        let mut cuts = vec![a];
        cuts.extend(delay_breakpoints(schedule, a, b));
        cuts.push(b);
        for piece in cuts.windows(2) {
            let (p, q) = (piece[0], piece[1]);
            let m = ((q - p) / dt - 1e-9).ceil().max(1.0) as usize;
            let hh = (q - p) / m as f64;
            for i in 0..m {
                let t = p + i as f64 * hh;
                let t_next = if i + 1 == m { q } else { p + (i + 1) as f64 * hh };
                step(sys, &mut u, &mut v, t, t_next - t, &fb, &mut history, &mut stages, &mut channel)?;
                steps += 1;
                let last_of_piece = i + 1 == m;
                if last_of_piece && t_next == b {
                    if k + 1 < schedule.n_intervals() {
                        history.begin_segment(b, &channel)?;
                    }
                    rec.record(&history, b, k + 1, (true, false), &u, &v)?;
                } else if last_of_piece || steps % opts.sample_stride == 0 {
                    rec.record(&history, t_next, k, (false, last_of_piece), &u, &v)?;
                }
                history.prune(t_next);
            }
        }
    }
    Ok(rec.trace)
}
