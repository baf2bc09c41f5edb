//! Models the pulse-illumination blinding attack on a gated InGaAs APD and its
//! effect on a decoy-state BB84 link.
//!
//! The crate is organised bottom-up:
//!
//! * [`params`]: protocol constants, detector timing and gate-count window profiles
//! * [`detector`]: linear-mode click model, control energies and calibration runs
//! * [`monitor`]: photocurrent synthesis, low-pass reporting and alarm logic
//! * [`attack`]: attacked gains/QBERs and Eve's gain-matching strategy
//! * [`keyrate`]: decoy bounds, GLLP estimate and real key-rate bounds
//! * [`scan`]: distance sweeps and crossover location
//! * [`montecarlo`]: gate-level simulation used as an oracle for the closed forms
//! * [`export`]: CSV and report writers shared by the CLI

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod detector;
pub mod error;
pub mod export;
pub mod keyrate;
pub mod monitor;
pub mod montecarlo;
pub mod params;
pub mod scan;

pub use attack::{AttackSolution, CaseTag, GainStats, Strategy};
pub use detector::{ControlEnergies, GateState, GateTimeline, LinearModeResponse, SimulatedDetector};
pub use error::{Error, Result};
pub use keyrate::{DecoyEstimates, KeyRateTriple};
pub use monitor::{MonitorParams, PhotocurrentTrace};
pub use montecarlo::{EmpiricalStats, SessionConfig};
pub use params::{
    AttackWindowProfile, BlindingConfig, DetectorTiming, EffectiveConfig, ProtocolParams, MeasuredRow,
};
pub use scan::{CrossoverReport, Scenario, SweepRow};
