//! Finite-difference 1D wave equations on `(0, L)` with unit speed.
//!
//! [`InternalWave`]: Dirichlet ends, damping `b₁χ_{ω₁}u_t + b₂χ_{ω₂}u_t(t−τ)`.
//! [`BoundaryWave`]: Dirichlet at `0`, damped Neumann `u_x = −b₁u_t` at `L`
//! (ghost node), internal delayed damping on `ω`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modal::driver::{run, DelayDynamics, DelayedStages, IntervalFeedback, RunOptions, SimError};
use crate::modal::{Channels, Trace};
use crate::schedule::{FeedbackProfile, SwitchingSchedule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("grid needs L > 0 and at least 3 interior nodes (L = {length}, J = {nodes})")]
    Grid { length: f64, nodes: usize },
    #[error("region ({a}, {b}) contains no grid node of (0, {length})")]
    EmptyRegion { a: f64, b: f64, length: f64 },
    #[error("initial data has {got} values, expected {expected}")]
    InitialLength { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub length: f64,
    /// interior node count
    pub nodes: usize,
}

impl Grid1D {
    pub fn new(length: f64, nodes: usize) -> Result<Self, WaveError> {
        if !(length > 0.0) || !length.is_finite() || nodes < 3 {
            return Err(WaveError::Grid { length, nodes });
        }
        Ok(Grid1D { length, nodes })
    }

    pub fn h(&self) -> f64 {
        self.length / (self.nodes + 1) as f64
    }

    /// `x_j = j·h`, `j = 0..=J+1`
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CflVerdict {
    pub pass: bool,
    /// `dt / h`
    pub ratio: f64,
}

/// Unit wave speed: pass iff `dt ≤ h`.
pub fn cfl_check(grid: &Grid1D, dt: f64) -> CflVerdict {
    let h = grid.h();
    CflVerdict { pass: dt > 0.0 && dt <= h * (1.0 + 1e-12), ratio: dt / h }
}

/// Contiguous node range `first..=last` (1-based node indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DampingRegion {
    pub first: usize,
    pub last: usize,
}

impl DampingRegion {
    /// Nodes with `x_j ∈ [a, b]` among `1..=max_node`.
    pub fn from_interval(grid: &Grid1D, a: f64, b: f64, max_node: usize) -> Result<Self, WaveError> {
        let h = grid.h();
        let eps = 1e-9 * h;
        let first = (((a - eps) / h).ceil().max(1.0)) as usize;
        let last = ((((b + eps) / h).floor()) as usize).min(max_node);
        if !(a < b) || first > last {
            return Err(WaveError::EmptyRegion { a, b, length: grid.length });
        }
        Ok(DampingRegion { first, last })
    }

    pub fn len(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }

    pub fn contains(&self, j: usize) -> bool {
        (self.first..=self.last).contains(&j)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub t: f64,
    /// nodal displacements of the unknown nodes
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// `Σ_k c_k sin(kπx/L)` at the nodes `x_1..x_count`.
pub fn sine_series(grid: &Grid1D, coefficients: &[f64], count: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (1..=count)
        .map(|j| {
            let x = grid.x(j);
            coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * pi * x / grid.length).sin())
                .sum()
        })
        .collect()
}

fn weighted_sq(h: f64, region: &DampingRegion, v: &[f64]) -> f64 {
    h * v[region.first - 1..region.last].iter().map(|x| x * x).sum::<f64>()
}

/// Classical RK4 on `u' = v`, `v' = acc(t, u, v, delayed)`.
fn rk4<F>(u: &mut [f64], v: &mut [f64], t: f64, h: f64, delayed: &DelayedStages, acc: F)
where
    F: Fn(f64, &[f64], &[f64], &[f64], &mut [f64]),
{
    let n = u.len();
    let half = 0.5 * h;
    let mut ku = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut kv = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut us = vec![0.0; n];
    let mut vs = vec![0.0; n];

    ku[0].copy_from_slice(v);
    acc(t, u, v, &delayed.start, &mut kv[0]);
    for (stage, (c, d)) in [(half, &delayed.mid), (half, &delayed.mid), (h, &delayed.end)].into_iter().enumerate() {
        for i in 0..n {
            us[i] = u[i] + c * ku[stage][i];
            vs[i] = v[i] + c * kv[stage][i];
        }
        ku[stage + 1].copy_from_slice(&vs);
        acc(t + c, &us, &vs, d, &mut kv[stage + 1]);
    }
    let sixth = h / 6.0;
    for i in 0..n {
        u[i] += sixth * (ku[0][i] + 2.0 * ku[1][i] + 2.0 * ku[2][i] + ku[3][i]);
        v[i] += sixth * (kv[0][i] + 2.0 * kv[1][i] + 2.0 * kv[2][i] + kv[3][i]);
    }
}

/// Dirichlet string with internal undelayed and delayed damping.
#[derive(Clone, Debug, PartialEq)]
pub struct InternalWave {
    pub grid: Grid1D,
    pub omega1: DampingRegion,
    pub omega2: DampingRegion,
}

impl InternalWave {
    pub fn new(grid: Grid1D, omega1: (f64, f64), omega2: (f64, f64)) -> Result<Self, WaveError> {
        Ok(InternalWave {
            grid,
            omega1: DampingRegion::from_interval(&grid, omega1.0, omega1.1, grid.nodes)?,
            omega2: DampingRegion::from_interval(&grid, omega2.0, omega2.1, grid.nodes)?,
        })
    }
}

impl DelayDynamics for InternalWave {
    fn dof(&self) -> usize {
        self.grid.nodes
    }

    fn history_width(&self) -> usize {
        self.omega2.len()
    }

    fn history_channel(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&v[self.omega2.first - 1..self.omega2.last]);
    }

    fn advance(
        &self,
        u: &mut [f64],
        v: &mut [f64],
        t: f64,
        h: f64,
        fb: &IntervalFeedback,
        delayed: &DelayedStages,
    ) {
        let n = self.grid.nodes;
        let inv_h2 = 1.0 / (self.grid.h() * self.grid.h());
        let (w1, w2) = (self.omega1, self.omega2);
        rk4(u, v, t, h, delayed, |s, u, v, vd, out| {
            let (b1, b2) = (fb.b1(s), fb.b2(s));
            for j in 0..n {
                let left = if j == 0 { 0.0 } else { u[j - 1] };
                let right = if j + 1 == n { 0.0 } else { u[j + 1] };
                out[j] = (left - 2.0 * u[j] + right) * inv_h2;
            }
            if b1 != 0.0 {
                for j in w1.first - 1..w1.last {
                    out[j] -= b1 * v[j];
                }
            }
            if b2 != 0.0 {
                for (i, j) in (w2.first - 1..w2.last).enumerate() {
                    out[j] -= b2 * vd[i];
                }
            }
        });
    }

    fn standard_energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let h = self.grid.h();
        let n = u.len();
        let kinetic: f64 = v.iter().map(|x| x * x).sum::<f64>() * h;
        let mut grad = u[0] * u[0] + u[n - 1] * u[n - 1];
        for j in 0..n - 1 {
            let d = u[j + 1] - u[j];
            grad += d * d;
        }
        0.5 * (kinetic + grad / h)
    }

    fn delayed_norm(&self, channel: &[f64]) -> f64 {
        self.grid.h() * channel.iter().map(|x| x * x).sum::<f64>()
    }

    fn channels(&self, _u: &[f64], v: &[f64], delayed: &[f64], b1: f64) -> Channels {
        let h = self.grid.h();
        let w1 = weighted_sq(h, &self.omega1, v);
        let vs = &v[self.omega2.first - 1..self.omega2.last];
        Channels {
            w1,
            w2: weighted_sq(h, &self.omega2, v),
            w2_delayed: self.delayed_norm(delayed),
            w_obs: w1,
            b1_obs: b1 * w1,
            cross: h * vs.iter().zip(delayed).map(|(a, b)| a * b).sum::<f64>(),
        }
    }
}

/// Dirichlet at `x = 0`, damped Neumann at `x = L`; the node at `L` is an
/// unknown, so there are `J + 1` of them.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryWave {
    pub grid: Grid1D,
    pub omega: DampingRegion,
}

impl BoundaryWave {
    pub fn new(grid: Grid1D, omega: (f64, f64)) -> Result<Self, WaveError> {
        Ok(BoundaryWave {
            grid,
            omega: DampingRegion::from_interval(&grid, omega.0, omega.1, grid.nodes + 1)?,
        })
    }
}

impl DelayDynamics for BoundaryWave {
    fn dof(&self) -> usize {
        self.grid.nodes + 1
    }

    fn history_width(&self) -> usize {
        self.omega.len()
    }

    fn history_channel(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&v[self.omega.first - 1..self.omega.last]);
    }

    fn advance(
        &self,
        u: &mut [f64],
        v: &mut [f64],
        t: f64,
        h: f64,
        fb: &IntervalFeedback,
        delayed: &DelayedStages,
    ) {
        let n = self.dof();
        let dx = self.grid.h();
        let inv_h2 = 1.0 / (dx * dx);
        let w = self.omega;
        rk4(u, v, t, h, delayed, |s, u, v, vd, out| {
            let (b1, b2) = (fb.b1(s), fb.b2(s));
            for j in 0..n - 1 {
                let left = if j == 0 { 0.0 } else { u[j - 1] };
                out[j] = (left - 2.0 * u[j] + u[j + 1]) * inv_h2;
            }
            // ghost node from (u_{J+2} − u_J)/(2h) = −b₁v_{J+1}
            out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * inv_h2 - 2.0 / dx * b1 * v[n - 1];
            if b2 != 0.0 {
                for (i, j) in (w.first - 1..w.last).enumerate() {
                    out[j] -= b2 * vd[i];
                }
            }
        });
    }

    /// Trapezoid weights: half a cell at the free end.
    fn standard_energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let h = self.grid.h();
        let n = u.len();
        let kinetic = h * v[..n - 1].iter().map(|x| x * x).sum::<f64>() + 0.5 * h * v[n - 1] * v[n - 1];
        let mut grad = u[0] * u[0];
        for j in 0..n - 1 {
            let d = u[j + 1] - u[j];
            grad += d * d;
        }
        0.5 * (kinetic + grad / h)
    }

    fn delayed_norm(&self, channel: &[f64]) -> f64 {
        let h = self.grid.h();
        let last_is_boundary = self.omega.last == self.dof();
        channel
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let wt = if last_is_boundary && i + 1 == channel.len() { 0.5 * h } else { h };
                wt * x * x
            })
            .sum()
    }

    fn channels(&self, _u: &[f64], v: &[f64], delayed: &[f64], b1: f64) -> Channels {
        let vl = v[v.len() - 1];
        let vs: Vec<f64> = v[self.omega.first - 1..self.omega.last].to_vec();
        let w2 = self.delayed_norm(&vs);
        let h = self.grid.h();
        let last_is_boundary = self.omega.last == self.dof();
        let cross = vs
            .iter()
            .zip(delayed)
            .enumerate()
            .map(|(i, (a, b))| {
                let wt = if last_is_boundary && i + 1 == vs.len() { 0.5 * h } else { h };
                wt * a * b
            })
            .sum();
        Channels {
            w1: vl * vl,
            w2,
            w2_delayed: self.delayed_norm(delayed),
            w_obs: vl * vl,
            b1_obs: b1 * vl * vl,
            cross,
        }
    }
}

fn check_initial(expected: usize, initial: &WaveState) -> Result<(), SimError> {
    for got in [initial.u.len(), initial.v.len()] {
        if got != expected {
            return Err(SimError::Dimension { expected, got });
        }
    }
    Ok(())
}

fn refuse_cfl(grid: &Grid1D, dt: f64) -> Result<(), SimError> {
    let v = cfl_check(grid, dt);
    if !v.pass {
        return Err(SimError::Cfl(format!("dt = {dt} exceeds h = {} (ratio {:.4})", grid.h(), v.ratio)));
    }
    Ok(())
}

pub fn simulate_internal(
    wave: &InternalWave,
    schedule: &SwitchingSchedule,
    profile: &FeedbackProfile,
    initial: &WaveState,
    opts: &RunOptions,
) -> Result<Trace, SimError> {
    refuse_cfl(&wave.grid, opts.dt)?;
    check_initial(wave.dof(), initial)?;
    run(wave, schedule, profile, &initial.u, &initial.v, opts)
}

/// RK4 is stable on the real axis down to about `−2.78`; the free-end
/// damping contributes a rate of roughly `2b₁/h`, so large gains need a
/// smaller step than the CFL bound alone.
pub const RK4_REAL_STABILITY: f64 = 2.78;

pub fn simulate_boundary(
    wave: &BoundaryWave,
    schedule: &SwitchingSchedule,
    profile: &FeedbackProfile,
    initial: &WaveState,
    opts: &RunOptions,
) -> Result<Trace, SimError> {
    refuse_cfl(&wave.grid, opts.dt)?;
    check_initial(wave.dof(), initial)?;
    let b1_max = profile.declared_bounds().iter().map(|b| b.big_m).fold(0.0, f64::max);
    let rate = 2.0 * b1_max / wave.grid.h();
    if rate * opts.dt > RK4_REAL_STABILITY {
        return Err(SimError::Cfl(format!(
            "boundary gain {b1_max} needs dt ≤ {}",
            RK4_REAL_STABILITY / rate
        )));
    }
    run(wave, schedule, profile, &initial.u, &initial.v, opts)
}
