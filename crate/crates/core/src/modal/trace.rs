use serde::{Deserialize, Serialize};

use crate::schedule::Parity;

/// Squared seminorms of the velocity seen by the feedback channels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Channels {
    /// `‖u_t‖²_{W₁}`
    pub w1: f64,
    /// `‖u_t‖²_{W₂}`
    pub w2: f64,
    /// `‖u_t(t − τ)‖²_{W₂}`
    pub w2_delayed: f64,
    /// `‖u_t‖²_W` for the observation weight
    pub w_obs: f64,
    /// `‖B₁*(t) u_t‖²`, the undelayed dissipation rate
    pub b1_obs: f64,
    /// `⟨u_t, B₂B₂* u_t(t − τ)⟩` without the time factor
    pub cross: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub es: f64,
    pub e: f64,
    pub interval: usize,
    /// sample sits exactly on a switch time
    pub switch: bool,
    /// sample sits on a switch time or a delay breakpoint `t_k ± τ`
    pub breakpoint: bool,
    pub b1: f64,
    pub b2: f64,
    pub channels: Channels,
}

impl TraceSample {
    pub fn parity(&self) -> Parity {
        Parity::of(self.interval)
    }
}

/// Energies at a switch time `t_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchEnergy {
    pub index: usize,
    pub t: f64,
    pub es: f64,
    pub e: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub index: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub dt: f64,
    pub tau: f64,
    pub xi: f64,
    pub samples: Vec<TraceSample>,
    pub switches: Vec<SwitchEnergy>,
    pub snapshots: Vec<Snapshot>,
}

impl Trace {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn es_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.es).collect()
    }

    pub fn e_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.e).collect()
    }

    pub fn switch(&self, k: usize) -> Option<&SwitchEnergy> {
        self.switches.get(k)
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("a trace always holds the initial snapshot")
    }

    pub fn n_cycles(&self) -> usize {
        self.switches.len().saturating_sub(1) / 2
    }

    /// `E(t_{2n+1}) / E(t_{2n})` (or the `E_S` version), `None` when the
    /// starting energy is below `floor`.
    pub fn active_ratios(&self, standard: bool, floor: f64) -> Vec<Option<f64>> {
        self.ratios(standard, floor, 1)
    }

    /// `E(t_{2n+2}) / E(t_{2n})` per cycle.
    pub fn cycle_ratios(&self, standard: bool, floor: f64) -> Vec<Option<f64>> {
        self.ratios(standard, floor, 2)
    }

    fn ratios(&self, standard: bool, floor: f64, span: usize) -> Vec<Option<f64>> {
        let pick = |s: &SwitchEnergy| if standard { s.es } else { s.e };
        (0..self.n_cycles())
            .map(|n| {
                let a = pick(&self.switches[2 * n]);
                let b = pick(&self.switches[2 * n + span]);
                (a >= floor).then(|| b / a)
            })
            .collect()
    }
}
