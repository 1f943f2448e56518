//! Simulation and stability certificates for second-order evolution
//! equations whose damping alternates between an undelayed feedback
//! (active intervals) and a delayed feedback (delayed intervals).
//!
//! The crate is organised bottom-up:
//!
//! - [`schedule`]: switching times, feedback profiles and symbolic tails
//!   of the bound sequences, plus hypothesis validation.
//! - [`modal`]: modal truncation `ä + Λa + b₁D₁ȧ + b₂D₂ȧ(t−τ) = 0`, the
//!   delay history buffer and the shared method-of-steps driver.
//! - [`wave`]: finite-difference 1D wave equations with internal or
//!   boundary damping and internal delayed feedback.
//! - [`energy`]: standard and augmented energies and the differential
//!   dissipation estimates checked on traces.
//! - [`observability`]: Gramians and observability constants.
//! - [`certify`]: contraction and growth constants, series and
//!   exponential conditions, measured-vs-certified comparisons.
//! - [`scenario`]: JSON scenario files, run orchestration and output.

pub mod certify;
pub mod energy;
pub mod linalg;
pub mod modal;
pub mod observability;
pub mod quadrature;
pub mod scenario;
pub mod schedule;
pub mod wave;

pub use modal::{ModalState, ModalSystem, Trace};
pub use schedule::{FeedbackProfile, Parity, SwitchingSchedule, Tail, ValidationMode};
