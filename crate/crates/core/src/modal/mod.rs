//! Modal truncation `ä + Λa + b₁(t)D₁ȧ + b₂(t)D₂ȧ(t − τ) = 0`.

pub mod driver;
pub mod history;
pub mod trace;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use driver::{run, DelayDynamics, DelayedStages, IntervalFeedback, RunOptions, SimError};
pub use history::{DelayHistory, HistoryError, Prehistory};
pub use trace::{Channels, Snapshot, SwitchEnergy, Trace, TraceSample};

use crate::linalg::{is_psd, max_eigenvalue};
use crate::schedule::{FeedbackProfile, SwitchingSchedule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModalError {
    #[error("need at least one mode")]
    Empty,
    #[error("eigenvalue {index} is {value}; eigenvalues must be positive and strictly ascending")]
    Eigenvalue { index: usize, value: f64 },
    #[error("{name} must be a {k}×{k} matrix")]
    Shape { name: &'static str, k: usize },
    #[error("{name} is not symmetric positive semidefinite")]
    NotPsd { name: &'static str },
    #[error("invalid region ({a}, {b}) in (0, {length})")]
    Region { a: f64, b: f64, length: f64 },
}

/// `K` modes with eigenvalues `λ_k` of `A` and the feedback and observation
/// weights in modal coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalSystem {
    lambda: Vec<f64>,
    omega: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    obs_w: DMatrix<f64>,
}

impl ModalSystem {
    pub fn new(
        lambda: Vec<f64>,
        d1: DMatrix<f64>,
        d2: DMatrix<f64>,
        obs_w: DMatrix<f64>,
    ) -> Result<Self, ModalError> {
        let k = lambda.len();
        if k == 0 {
            return Err(ModalError::Empty);
        }
        for (i, &l) in lambda.iter().enumerate() {
            let ascending = i == 0 || l > lambda[i - 1];
            if !(l > 0.0) || !l.is_finite() || !ascending {
                return Err(ModalError::Eigenvalue { index: i, value: l });
            }
        }
        for (name, m) in [("D1", &d1), ("D2", &d2), ("obsW", &obs_w)] {
            if m.nrows() != k || m.ncols() != k {
                return Err(ModalError::Shape { name, k });
            }
            if !is_psd(m, 1e-12) {
                return Err(ModalError::NotPsd { name });
            }
        }
        let omega = lambda.iter().map(|l| l.sqrt()).collect();
        Ok(ModalSystem { lambda, omega, d1, d2, obs_w })
    }

    /// Every weight equal to the identity (`W = H`).
    pub fn identity(lambda: Vec<f64>) -> Result<Self, ModalError> {
        let k = lambda.len();
        let id = DMatrix::identity(k, k);
        ModalSystem::new(lambda, id.clone(), id.clone(), id)
    }

    /// Galerkin truncation of the Dirichlet string on `(0, L)` in the basis
    /// `√(2/L) sin(kπx/L)`, with undelayed damping on `omega1`, delayed
    /// damping on `omega2` and observation on `omega1`.
    pub fn string(
        length: f64,
        modes: usize,
        omega1: (f64, f64),
        omega2: (f64, f64),
    ) -> Result<Self, ModalError> {
        if modes == 0 {
            return Err(ModalError::Empty);
        }
        for (a, b) in [omega1, omega2] {
            if !(0.0 <= a && a < b && b <= length) {
                return Err(ModalError::Region { a, b, length });
            }
        }
        let lambda = (1..=modes).map(|k| (k as f64 * std::f64::consts::PI / length).powi(2)).collect();
        let d1 = string_mass(length, modes, omega1);
        let d2 = string_mass(length, modes, omega2);
        ModalSystem::new(lambda, d1.clone(), d2, d1)
    }

    pub fn modes(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.omega
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    pub fn obs_w(&self) -> &DMatrix<f64> {
        &self.obs_w
    }

    /// Embedding constant of the observation seminorm: `λ_max(obsW)`.
    pub fn embedding_c(&self) -> f64 {
        max_eigenvalue(&self.obs_w)
    }

    /// `λ_max(D1)`
    pub fn embedding_c1(&self) -> f64 {
        max_eigenvalue(&self.d1)
    }

    /// `λ_max(D2)`
    pub fn embedding_c2(&self) -> f64 {
        max_eigenvalue(&self.d2)
    }

    pub fn standard_energy(&self, a: &[f64], adot: &[f64]) -> f64 {
        0.5 * self
            .lambda
            .iter()
            .zip(a.iter().zip(adot))
            .map(|(l, (x, y))| l * x * x + y * y)
            .sum::<f64>()
    }

    /// Exact free flow `e^{hL}` applied in place to `(a, ȧ)`.
    fn rotate(&self, a: &mut [f64], adot: &mut [f64], h: f64) {
        for ((x, y), &w) in a.iter_mut().zip(adot.iter_mut()).zip(&self.omega) {
            let (s, c) = (w * h).sin_cos();
            let (x0, y0) = (*x, *y);
            *x = c * x0 + s / w * y0;
            *y = -w * s * x0 + c * y0;
        }
    }

    /// `e^{hL}` applied to the pure-velocity vector `(0, f)`, returned as `(a, ȧ)`.
    fn rotate_force(&self, f: &[f64], h: f64, a: &mut [f64], adot: &mut [f64]) {
        for (i, &w) in self.omega.iter().enumerate() {
            let (s, c) = (w * h).sin_cos();
            a[i] = s / w * f[i];
            adot[i] = c * f[i];
        }
    }

    /// Velocity forcing `−b₁D₁ȧ − b₂D₂ȧ_d`.
    fn forcing(&self, adot: &[f64], b1: f64, b2: f64, delayed: &[f64], out: &mut [f64]) {
        let k = self.modes();
        for i in 0..k {
            let mut s = 0.0;
            if b1 != 0.0 {
                for j in 0..k {
                    s -= b1 * self.d1[(i, j)] * adot[j];
                }
            }
            if b2 != 0.0 {
                for j in 0..k {
                    s -= b2 * self.d2[(i, j)] * delayed[j];
                }
            }
            out[i] = s;
        }
    }

    fn quad(m: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
        let k = x.len();
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                s += x[i] * m[(i, j)] * y[j];
            }
        }
        s
    }
}

/// `∫_a^b φ_i φ_j dx` for the orthonormal Dirichlet sine basis on `(0, L)`.
pub fn string_mass(length: f64, modes: usize, (a, b): (f64, f64)) -> DMatrix<f64> {
    let pi = std::f64::consts::PI;
    DMatrix::from_fn(modes, modes, |i, j| {
        let (p, q) = ((i + 1) as f64, (j + 1) as f64);
        let prim = |x: f64| {
            if i == j {
                x - length / (2.0 * p * pi) * (2.0 * p * pi * x / length).sin()
            } else {
                length / ((p - q) * pi) * ((p - q) * pi * x / length).sin()
                    - length / ((p + q) * pi) * ((p + q) * pi * x / length).sin()
            }
        };
        (prim(b) - prim(a)) / length
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalState {
    pub t: f64,
    pub a: Vec<f64>,
    pub adot: Vec<f64>,
}

impl ModalState {
    pub fn new(t: f64, a: Vec<f64>, adot: Vec<f64>) -> Self {
        ModalState { t, a, adot }
    }

    pub fn zeros(k: usize) -> Self {
        ModalState { t: 0.0, a: vec![0.0; k], adot: vec![0.0; k] }
    }

    /// `z = (a, ȧ)` as one vector.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(self.a.len() * 2, self.a.iter().chain(&self.adot).copied())
    }
}

/// Exact conservative evolution `ä + Λa = 0` over `dt`.
pub fn conservative_flow(system: &ModalSystem, state: &ModalState, dt: f64) -> ModalState {
    let mut a = state.a.clone();
    let mut adot = state.adot.clone();
    system.rotate(&mut a, &mut adot, dt);
    ModalState { t: state.t + dt, a, adot }
}

impl DelayDynamics for ModalSystem {
    fn dof(&self) -> usize {
        self.modes()
    }

    fn history_width(&self) -> usize {
        self.modes()
    }

    fn history_channel(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
    }

    /// Integrating-factor RK4: classical RK4 in the frame rotating with the
    /// free flow, so the conservative part is integrated exactly.
    fn advance(
        &self,
        u: &mut [f64],
        v: &mut [f64],
        t: f64,
        h: f64,
        fb: &IntervalFeedback,
        delayed: &DelayedStages,
    ) {
        let k = self.modes();
        let half = 0.5 * h;
        let (b1a, b1m, b1e) = (fb.b1(t), fb.b1(t + half), fb.b1(t + h));
        let (b2a, b2m, b2e) = (fb.b2(t), fb.b2(t + half), fb.b2(t + h));

        let mut n1 = vec![0.0; k];
        let mut n2 = vec![0.0; k];
        let mut n3 = vec![0.0; k];
        let mut n4 = vec![0.0; k];
        let mut ya = vec![0.0; k];
        let mut yv = vec![0.0; k];
        let mut ra = vec![0.0; k];
        let mut rv = vec![0.0; k];

        self.forcing(v, b1a, b2a, &delayed.start, &mut n1);

        // stage 2: E(h/2)(y + h/2·N1)
        ya.copy_from_slice(u);
        for i in 0..k {
            yv[i] = v[i] + half * n1[i];
        }
        self.rotate(&mut ya, &mut yv, half);
        self.forcing(&yv, b1m, b2m, &delayed.mid, &mut n2);

        // stage 3: E(h/2)y + h/2·N2
        let mut ea = u.to_vec();
        let mut ev = v.to_vec();
        self.rotate(&mut ea, &mut ev, half);
        for i in 0..k {
            yv[i] = ev[i] + half * n2[i];
        }
        self.forcing(&yv, b1m, b2m, &delayed.mid, &mut n3);

        // stage 4: E(h)y + h·E(h/2)N3
        let mut fa = u.to_vec();
        let mut fv = v.to_vec();
        self.rotate(&mut fa, &mut fv, h);
        self.rotate_force(&n3, half, &mut ra, &mut rv);
        for i in 0..k {
            yv[i] = fv[i] + h * rv[i];
        }
        self.forcing(&yv, b1e, b2e, &delayed.end, &mut n4);

        // y⁺ = E(h)y + h/6·(E(h)N1 + 2E(h/2)(N2 + N3) + N4)
        let sixth = h / 6.0;
        self.rotate_force(&n1, h, &mut ra, &mut rv);
        for i in 0..k {
            fa[i] += sixth * ra[i];
            fv[i] += sixth * rv[i];
        }
        for i in 0..k {
            n2[i] += n3[i];
        }
        self.rotate_force(&n2, half, &mut ra, &mut rv);
        for i in 0..k {
            fa[i] += 2.0 * sixth * ra[i];
            fv[i] += 2.0 * sixth * rv[i] + sixth * n4[i];
        }
        u.copy_from_slice(&fa);
        v.copy_from_slice(&fv);
    }

    fn standard_energy(&self, u: &[f64], v: &[f64]) -> f64 {
        ModalSystem::standard_energy(self, u, v)
    }

    fn delayed_norm(&self, channel: &[f64]) -> f64 {
        Self::quad(&self.d2, channel, channel)
    }

    fn channels(&self, _u: &[f64], v: &[f64], delayed: &[f64], b1: f64) -> Channels {
        let w1 = Self::quad(&self.d1, v, v);
        Channels {
            w1,
            w2: Self::quad(&self.d2, v, v),
            w2_delayed: Self::quad(&self.d2, delayed, delayed),
            w_obs: Self::quad(&self.obs_w, v, v),
            b1_obs: b1 * w1,
            cross: Self::quad(&self.d2, v, delayed),
        }
    }
}

/// One step of the modal system from `state`, reading the delayed velocity
/// from `history` and appending the new velocity to it.
pub fn step(
    system: &ModalSystem,
    state: &ModalState,
    history: &mut DelayHistory,
    fb: &IntervalFeedback,
    dt: f64,
) -> Result<ModalState, SimError> {
    let mut a = state.a.clone();
    let mut adot = state.adot.clone();
    let mut stages = DelayedStages::zeros(system.modes());
    let mut channel = vec![0.0; system.modes()];
    driver::step(system, &mut a, &mut adot, state.t, dt, fb, history, &mut stages, &mut channel)?;
    Ok(ModalState { t: state.t + dt, a, adot })
}

/// Simulate from `initial` over the full schedule horizon.
pub fn simulate(
    system: &ModalSystem,
    schedule: &SwitchingSchedule,
    profile: &FeedbackProfile,
    initial: &ModalState,
    opts: &RunOptions,
) -> Result<Trace, SimError> {
    run(system, schedule, profile, &initial.a, &initial.adot, opts)
}
