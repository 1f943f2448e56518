//! Observability Gramians and constants of the modal system, and an
//! empirical fit of the boundary quasi-observability constants.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{max_generalized_eigenvalue, GeneralizedEig};
use crate::modal::driver::{DelayDynamics, DelayedStages, IntervalFeedback};
use crate::modal::ModalSystem;
use crate::schedule::profile::Poly;
use crate::wave::{BoundaryWave, Grid1D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservabilityError {
    #[error("observation time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("truncation is unobservable: Gramian has eigenvalue {min_eigenvalue} along {null_direction:?}")]
    Unobservable { null_direction: Vec<f64>, min_eigenvalue: f64 },
    #[error("feedback gain vanishes on the window: nothing is dissipated to observe")]
    NoDissipation,
    #[error("step count must be a positive even number, got {0}")]
    Steps(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("observation time {t} must exceed T_bar = {t_bar}")]
    Horizon { t: f64, t_bar: f64 },
}

/// `zᵀGz = ∫_0^T ‖w_t(s)‖²_W ds` for `z = (w₀ coefficients, w₁ coefficients)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gramian {
    pub t: f64,
    pub g: DMatrix<f64>,
}

/// `∫_0^T cos(wt) dt`
fn int_cos(w: f64, t: f64) -> f64 {
    let x = w * t;
    if x.abs() < 1e-8 {
        t * (1.0 - x * x / 6.0)
    } else {
        (x).sin() / w
    }
}

/// `∫_0^T sin(wt) dt`, written to avoid cancellation near `w = 0`.
fn int_sin(w: f64, t: f64) -> f64 {
    let x = w * t;
    if x.abs() < 1e-8 {
        0.5 * w * t * t
    } else {
        2.0 * (0.5 * x).sin().powi(2) / w
    }
}

/// Exact Gramian of the conservative flow: every entry is an integral of a
/// product of two sines/cosines over `[0, T]`.
pub fn gramian(system: &ModalSystem, t: f64) -> Result<Gramian, ObservabilityError> {
    if !(t > 0.0) {
        return Err(ObservabilityError::NonPositiveTime(t));
    }
    let k = system.modes();
    let om = system.frequencies();
    let w = system.obs_w();
    let mut g = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            let wij = w[(i, j)];
            if wij == 0.0 {
                continue;
            }
            let (a, b) = (om[i], om[j]);
            let ss = 0.5 * (int_cos(a - b, t) - int_cos(a + b, t));
            let cc = 0.5 * (int_cos(a - b, t) + int_cos(a + b, t));
            // ∫ sin(at)cos(bt)
            let sc = 0.5 * (int_sin(a + b, t) + int_sin(a - b, t));
            // ȧ_i = −ω_i sin(ω_i t)·a0_i + cos(ω_i t)·a1_i
            g[(i, j)] = wij * a * b * ss;
            g[(i, k + j)] = -wij * a * sc;
            g[(k + i, j)] = -wij * b * 0.5 * (int_sin(b + a, t) + int_sin(b - a, t));
            g[(k + i, k + j)] = wij * cc;
        }
    }
    let g = 0.5 * (&g + g.transpose());
    Ok(Gramian { t, g })
}

/// `½·diag(λ, 1)`: the standard energy as a quadratic form in `z`.
pub fn energy_form(system: &ModalSystem) -> DMatrix<f64> {
    let k = system.modes();
    let mut n = DMatrix::zeros(2 * k, 2 * k);
    for (i, l) in system.lambda().iter().enumerate() {
        n[(i, i)] = 0.5 * l;
        n[(k + i, k + i)] = 0.5;
    }
    n
}

const SINGULAR_TOL: f64 = 1e-12;

fn generalized_max(n: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(f64, DVector<f64>), ObservabilityError> {
    match max_generalized_eigenvalue(n, g, SINGULAR_TOL) {
        GeneralizedEig::Max { value, vector } => Ok((value, vector)),
        GeneralizedEig::Singular { null_direction, min_eigenvalue } => {
            Err(ObservabilityError::Unobservable { null_direction: null_direction.iter().copied().collect(), min_eigenvalue })
        }
    }
}

/// Smallest `c` with `E_S(0) ≤ c∫_0^T ‖w_t‖²_W` for the truncated system.
pub fn observability_constant(system: &ModalSystem, t: f64) -> Result<f64, ObservabilityError> {
    let g = gramian(system, t)?;
    Ok(generalized_max(&energy_form(system), &g.g)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub modes: usize,
    pub c: f64,
    pub c_doubled: f64,
    pub relative_change: f64,
    /// change above 5%
    pub flagged: bool,
}

/// Recompute `c` with twice as many modes from the same family.
pub fn truncation_check<F>(family: F, modes: usize, t: f64) -> Result<TruncationReport, ObservabilityError>
where
    F: Fn(usize) -> ModalSystem,
{
    let c = observability_constant(&family(modes), t)?;
    let c_doubled = observability_constant(&family(2 * modes), t)?;
    let relative_change = (c_doubled - c).abs() / c.abs().max(f64::MIN_POSITIVE);
    Ok(TruncationReport { modes, c, c_doubled, relative_change, flagged: relative_change > 0.05 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DampedObservability {
    pub d: f64,
    /// maximizing initial datum
    pub vector: DVector<f64>,
    /// `Φ(T)ᵀ N Φ(T)`: `E_S(T)` as a form in the initial datum
    pub terminal_energy: DMatrix<f64>,
    /// `zᵀ G_d z = ∫_0^T b₁‖w_t‖²_{W₁}`
    pub gramian: DMatrix<f64>,
}

pub const DEFAULT_DAMPED_STEPS: usize = 4096;

/// Smallest `d` with `E_S(T) ≤ d ∫_0^T b₁(t)‖w_t‖²_{W₁}` for the damped,
/// delay-free flow on one active interval (`b1` in local time).
pub fn damped_observability_constant(
    system: &ModalSystem,
    b1: Poly,
    t: f64,
    steps: usize,
) -> Result<DampedObservability, ObservabilityError> {
    if !(t > 0.0) {
        return Err(ObservabilityError::NonPositiveTime(t));
    }
    if steps == 0 || steps % 2 == 1 {
        return Err(ObservabilityError::Steps(steps));
    }
    let h = t / steps as f64;
    if (0..=steps).all(|i| b1.eval(i as f64 * h) == 0.0) {
        return Err(ObservabilityError::NoDissipation);
    }
    let k = system.modes();
    let fb = IntervalFeedback { index: 0, start: 0.0, b1, b2: Poly::ZERO };
    let stages = DelayedStages::zeros(k);
    let d1 = system.d1();
    // columns of the fundamental matrix, propagated one at a time
    let mut phi_t = DMatrix::zeros(2 * k, 2 * k);
    let mut velocity_hist: Vec<DMatrix<f64>> = vec![DMatrix::zeros(k, 2 * k); steps + 1];
    for col in 0..2 * k {
        let mut u = vec![0.0; k];
        let mut v = vec![0.0; k];
        if col < k {
            u[col] = 1.0;
        } else {
            v[col - k] = 1.0;
        }
        for (i, vh) in velocity_hist.iter_mut().enumerate() {
            if i > 0 {
                system.advance(&mut u, &mut v, (i - 1) as f64 * h, h, &fb, &stages);
            }
            vh.set_column(col, &DVector::from_column_slice(&v));
        }
        for r in 0..k {
            phi_t[(r, col)] = u[r];
            phi_t[(k + r, col)] = v[r];
        }
    }
    let mut gd = DMatrix::zeros(2 * k, 2 * k);
    for (i, vh) in velocity_hist.iter().enumerate() {
        let wt = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let gain = b1.eval(i as f64 * h);
        if gain == 0.0 {
            continue;
        }
        gd += (wt * h / 3.0 * gain) * (vh.transpose() * d1 * vh);
    }
    let gd = 0.5 * (&gd + gd.transpose());
    let terminal = phi_t.transpose() * energy_form(system) * &phi_t;
    let terminal = 0.5 * (&terminal + terminal.transpose());
    let (d, vector) = generalized_max(&terminal, &gd)?;
    Ok(DampedObservability { d, vector, terminal_energy: terminal, gramian: gd })
}

/// Largest `zᵀNz / zᵀGz` over `samples` random Gaussian directions.
pub fn sampled_ratio_max(n: &DMatrix<f64>, g: &DMatrix<f64>, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = n.nrows();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let z = DVector::from_fn(dim, |_, _| gaussian(&mut rng));
        let num = (z.transpose() * n * &z)[(0, 0)];
        let den = (z.transpose() * g * &z)[(0, 0)];
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    best
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// One simulated sample for the boundary quasi-observability fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSample {
    pub f: f64,
    /// `(T − T̄)·E_S(T)`
    pub lhs: f64,
    /// `∫(∂w/∂ν)²`, `∫f w_t²`, `∫w_t²` on the damped end
    pub integrals: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alphas: [f64; 3],
    /// always "EMPIRICAL": a lower estimate from finitely many samples
    pub label: String,
    pub feasible: bool,
    /// sample with the largest shortfall `lhs − α·integrals` (0 when feasible)
    pub worst_sample: Option<AlphaSample>,
    pub worst_shortfall: f64,
    pub samples: usize,
}

pub const MIN_ALPHA_SAMPLES: usize = 100;

/// Simulate the boundary-damped string with constant gain `f` and no delay
/// on `[0, T]` and collect the terms of the quasi-observability inequality.
pub fn boundary_sample(grid: &Grid1D, t: f64, t_bar: f64, f: f64, u0: &[f64], v0: &[f64]) -> AlphaSample {
    let wave = BoundaryWave::new(*grid, (0.0, grid.length)).expect("whole domain is a valid region");
    let n = wave.dof();
    let mut steps = (t / (0.5 * grid.h())).ceil() as usize;
    steps += steps % 2;
    let h = t / steps as f64;
    let fb = IntervalFeedback { index: 0, start: 0.0, b1: Poly::constant(f), b2: Poly::ZERO };
    let stages = DelayedStages::zeros(wave.history_width());
    let mut u = u0.to_vec();
    let mut v = v0.to_vec();
    let mut i3 = 0.0;
    for i in 0..=steps {
        if i > 0 {
            wave.advance(&mut u, &mut v, (i - 1) as f64 * h, h, &fb, &stages);
        }
        let wt = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        i3 += wt * h / 3.0 * v[n - 1] * v[n - 1];
    }
    let es = wave.standard_energy(&u, &v);
    AlphaSample { f, lhs: (t - t_bar) * es, integrals: [f * f * i3, f * i3, i3] }
}

/// Least-norm nonnegative `(α₁, α₂, α₃)` satisfying the sampled inequalities.
///
/// Random smooth data and random constant gains `f ∈ [0, 2]`; the
/// quadratic program is solved exactly by enumerating active sets.
pub fn estimate_boundary_alphas(
    grid: &Grid1D,
    t: f64,
    t_bar: f64,
    sample_count: usize,
    seed: u64,
) -> Result<AlphaFit, ObservabilityError> {
    if sample_count < MIN_ALPHA_SAMPLES {
        return Err(ObservabilityError::TooFewSamples { needed: MIN_ALPHA_SAMPLES, got: sample_count });
    }
    if !(t > 0.0) {
        return Err(ObservabilityError::NonPositiveTime(t));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.nodes + 1;
    let pi = std::f64::consts::PI;
    let samples: Vec<AlphaSample> = (0..sample_count)
        .map(|_| {
            let f = rng.gen_range(0.0..=2.0);
            let cu: Vec<f64> = (1..=6).map(|k| gaussian(&mut rng) / k as f64).collect();
            let cv: Vec<f64> = (1..=6).map(|k| gaussian(&mut rng) / k as f64).collect();
            // Neumann-compatible modes sin((k − ½)πx/L)
            let mode = |c: &[f64], x: f64| -> f64 {
                c.iter().enumerate().map(|(k, ck)| ck * ((k as f64 + 0.5) * pi * x / grid.length).sin()).sum()
            };
            let u0: Vec<f64> = (1..=n).map(|j| mode(&cu, grid.x(j))).collect();
            let v0: Vec<f64> = (1..=n).map(|j| mode(&cv, grid.x(j))).collect();
            boundary_sample(grid, t, t_bar, f, &u0, &v0)
        })
        .collect();
    Ok(fit_alphas(&samples))
}

/// Min `‖α‖²` subject to `α ≥ 0` and `α·I_s ≥ lhs_s` for every sample.
pub fn fit_alphas(samples: &[AlphaSample]) -> AlphaFit {
    let binding: Vec<&AlphaSample> = samples.iter().filter(|s| s.lhs > 0.0).collect();
    let slack = |a: &[f64; 3], s: &AlphaSample| {
        s.lhs - (a[0] * s.integrals[0] + a[1] * s.integrals[1] + a[2] * s.integrals[2])
    };
    let feasible = |a: &[f64; 3]| {
        a.iter().all(|&x| x >= 0.0)
            && binding.iter().all(|s| slack(a, s) <= 1e-10 * s.lhs.abs().max(1e-300))
    };
    let norm = |a: &[f64; 3]| a.iter().map(|x| x * x).sum::<f64>();

    let mut best: Option<[f64; 3]> = None;
    if binding.is_empty() {
        best = Some([0.0; 3]);
    }
    // KKT: the optimum has some components free (F) and some tight constraints (S), |S| ≤ |F|
    for mask in 1u8..8 {
        let free: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let m = free.len();
        let mut consider = |set: &[usize]| {
            let a = DMatrix::from_fn(set.len(), m, |r, c| binding[set[r]].integrals[free[c]]);
            let y = DVector::from_iterator(set.len(), set.iter().map(|&r| binding[r].lhs));
            let gram = &a * a.transpose();
            let Some(inv) = gram.try_inverse() else { return };
            let x = a.transpose() * inv * y;
            let mut alpha = [0.0; 3];
            for (c, &i) in free.iter().enumerate() {
                alpha[i] = x[c];
            }
            if feasible(&alpha) && best.is_none_or(|b| norm(&alpha) < norm(&b)) {
                best = Some(alpha);
            }
        };
        let s = binding.len();
        for i in 0..s {
            consider(&[i]);
            if m >= 2 {
                for j in i + 1..s {
                    consider(&[i, j]);
                    if m >= 3 {
                        for k in j + 1..s {
                            consider(&[i, j, k]);
                        }
                    }
                }
            }
        }
    }
    let label = "EMPIRICAL".to_string();
    match best {
        Some(alphas) => AlphaFit {
            alphas,
            label,
            feasible: true,
            worst_sample: None,
            worst_shortfall: 0.0,
            samples: samples.len(),
        },
        None => {
            // no nonnegative α works: report the sample no α can see
            let worst = binding
                .iter()
                .max_by(|a, b| {
                    let ka = a.lhs / a.integrals.iter().fold(0.0, |x: f64, y| x.max(*y)).max(f64::MIN_POSITIVE);
                    let kb = b.lhs / b.integrals.iter().fold(0.0, |x: f64, y| x.max(*y)).max(f64::MIN_POSITIVE);
                    ka.partial_cmp(&kb).expect("finite")
                })
                .map(|s| (*s).clone());
            AlphaFit {
                alphas: [f64::INFINITY; 3],
                label,
                feasible: false,
                worst_shortfall: worst.as_ref().map_or(0.0, |s| s.lhs),
                worst_sample: worst,
                samples: samples.len(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_gramian_at_half_period() {
        let sys = ModalSystem::identity(vec![1.0]).unwrap();
        let g = gramian(&sys, PI).unwrap().g;
        assert!((g[(0, 0)] - PI / 2.0).abs() < 1e-14);
        assert!((g[(1, 1)] - PI / 2.0).abs() < 1e-14);
        assert!(g[(0, 1)].abs() < 1e-14 && g[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn zero_weight_gives_zero_gramian_and_unobservable() {
        let sys = ModalSystem::new(
            vec![1.0, 4.0],
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        assert_eq!(gramian(&sys, 1.0).unwrap().g, DMatrix::zeros(4, 4));
        assert!(matches!(observability_constant(&sys, 1.0), Err(ObservabilityError::Unobservable { .. })));
    }

    #[test]
    fn gramian_doubles_over_two_periods() {
        let sys = ModalSystem::identity(vec![1.0, 4.0, 9.0]).unwrap();
        let g1 = gramian(&sys, 2.0 * PI).unwrap().g;
        let g2 = gramian(&sys, 4.0 * PI).unwrap().g;
        assert!((g2 - 2.0 * g1).amax() < 1e-12);
    }

    #[test]
    fn constant_one_over_pi() {
        for l in [1.0, 4.0] {
            let sys = ModalSystem::identity(vec![l]).unwrap();
            let c = observability_constant(&sys, PI).unwrap();
            assert!((c - 1.0 / PI).abs() < 1e-10, "λ = {l}: {c}");
        }
    }

    #[test]
    fn damped_constant_matches_sampling() {
        let sys = ModalSystem::identity(vec![1.0]).unwrap();
        let r = damped_observability_constant(&sys, Poly::constant(1.0), 2.0 * PI, 4096).unwrap();
        assert!(r.d.is_finite() && r.d > 0.0);
        let sampled = sampled_ratio_max(&r.terminal_energy, &r.gramian, 10_000, 7);
        assert!(sampled <= r.d * (1.0 + 1e-12));
        assert!((r.d - sampled) / r.d < 1e-6, "{} vs {sampled}", r.d);
    }

    #[test]
    fn damped_constant_needs_damping() {
        let sys = ModalSystem::identity(vec![1.0]).unwrap();
        assert!(matches!(
            damped_observability_constant(&sys, Poly::ZERO, 1.0, 64),
            Err(ObservabilityError::NoDissipation)
        ));
    }

    #[test]
    fn alpha_fit_trivial_cases() {
        let zero = AlphaSample { f: 1.0, lhs: 0.0, integrals: [0.0; 3] };
        let fit = fit_alphas(&vec![zero; 5]);
        assert!(fit.feasible && fit.alphas == [0.0; 3]);
        // one binding sample seen by the third integral only
        let s = AlphaSample { f: 0.0, lhs: 2.0, integrals: [0.0, 0.0, 4.0] };
        let fit = fit_alphas(&[s]);
        assert!(fit.feasible);
        assert!((fit.alphas[2] - 0.5).abs() < 1e-14 && fit.alphas[0] == 0.0);
        let blind = AlphaSample { f: 0.0, lhs: 1.0, integrals: [0.0; 3] };
        assert!(!fit_alphas(&[blind]).feasible);
    }
}
