//! Chirped-pulse design for selective Rabi-like population transfer between
//! two levels of an N-level quantum system.
//!
//! The design side ([`optimizer`]) gives closed-form perturbation strengths,
//! leakage bounds and an optimized carrier frequency `omega(t)`. The
//! verification side ([`dynamics`], [`analysis`]) integrates the driven
//! Schrödinger equation without the rotating-wave approximation and measures
//! how well the design performs.
//!
//! All quantities are in atomic units (ħ = 1).

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fixtures;
pub mod ode;
pub mod optimizer;
pub mod pulse;
pub mod system;
pub mod units;

#[cfg(test)]
mod testutil;

pub use analysis::{compare_runs, leakage_vs_bound, loss_envelope_check, transfer_metrics, ComparisonReport, TransferMetrics};
pub use dynamics::{integrate, integrate_schrodinger_picture, InitialState, IntegratorOptions, StateVector, Trajectory};
pub use error::{Error, Result};
pub use optimizer::{
    first_order_chirp, leakage_bound, max_drive, perturber_strength, recurrent_chirp, sigma_tot_sq, ChirpOrder,
    ChirpProfile, DesignReport, PerturberStrength,
};
pub use pulse::{pi_pulse_duration, Carrier, EnvelopeShape, PhaseMode, PulseSpec};
pub use system::{load_system, LevelSystem, SystemFormat, TransitionPair};
