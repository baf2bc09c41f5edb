//! Gate-level behaviour of the blinded APD.
//!
//! Inside the blinded window the APD sits in linear mode: a trigger pulse of
//! energy `E` produces an output `slope * E + U` with `U` uniform on
//! `[-noise, +noise]`, and the comparator clicks when that exceeds its
//! threshold. The bounded noise makes `E_never` and `E_always` sharp.

mod calibrate;

pub use calibrate::{
    calibrate_blinded_period, calibrate_control_energies, calibrate_window, CalibrationRecord,
    SimulatedDetector, DEFAULT_PROBE_PHOTONS, MIN_TRIALS,
};

use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::params::{AttackWindowProfile, BlindingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModeResponse {
    /// Output amplitude per joule of trigger energy.
    pub gain_slope: f64,
    /// Half-width of the uniform amplitude jitter.
    pub noise_halfwidth: f64,
    /// Comparator threshold `I_th`.
    pub comparator_threshold: f64,
}

impl LinearModeResponse {
    pub fn new(gain_slope: f64, noise_halfwidth: f64, comparator_threshold: f64) -> Result<Self> {
        check(gain_slope > 0.0, "gain_slope", || format!("{gain_slope} <= 0"))?;
        check(noise_halfwidth >= 0.0, "noise_halfwidth", || format!("{noise_halfwidth} < 0"))?;
        check(comparator_threshold > 0.0, "comparator_threshold", || {
            format!("{comparator_threshold} <= 0")
        })?;
        Ok(Self { gain_slope, noise_halfwidth, comparator_threshold })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlEnergies {
    pub e_always: f64,
    pub e_half: f64,
    pub e_never: f64,
}

impl ControlEnergies {
    pub fn new(e_always: f64, e_half: f64, e_never: f64) -> Result<Self> {
        check(e_never <= e_half && e_half <= e_always, "control_energies", || {
            format!("need e_never <= e_half <= e_always, got ({e_never}, {e_half}, {e_always})")
        })?;
        Ok(Self { e_always, e_half, e_never })
    }
}

/// `P(slope * E + U > I_th)` for `U ~ Uniform[-noise, noise]`.
pub fn click_probability_linear(trigger_energy: f64, resp: &LinearModeResponse) -> f64 {
    let signal = resp.gain_slope * trigger_energy;
    let margin = signal - resp.comparator_threshold;
    if resp.noise_halfwidth == 0.0 {
        return if margin > 0.0 { 1.0 } else { 0.0 };
    }
    ((margin + resp.noise_halfwidth) / (2.0 * resp.noise_halfwidth)).clamp(0.0, 1.0)
}

pub fn control_energies(resp: &LinearModeResponse) -> Result<ControlEnergies> {
    let s = resp.gain_slope;
    let e_never = (resp.comparator_threshold - resp.noise_halfwidth) / s;
    if e_never <= 0.0 {
        return Err(Error::DegenerateResponse(e_never));
    }
    Ok(ControlEnergies {
        e_never,
        e_half: resp.comparator_threshold / s,
        e_always: (resp.comparator_threshold + resp.noise_halfwidth) / s,
    })
}

/// Deterministic fake-state control is possible when `E_always < 2 E_never`.
pub fn full_control_condition(c: &ControlEnergies) -> bool {
    c.e_always < 2.0 * c.e_never
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateState {
    /// First gate of a group: the blinding pulses force one click here.
    BlindPulse,
    Dead,
    BlindedControllable,
    BlindedUncontrollable,
    Normal,
}

/// Per-gate states over one blinding-group interval.
#[derive(Debug, Clone, PartialEq)]
pub struct GateTimeline {
    states: Vec<GateState>,
    /// Leading gates that carry a blinding pulse between them. These overlap
    /// the dead and blinded gates rather than occupying their own slots.
    pulse_gates: u32,
}

impl GateTimeline {
    pub fn states(&self) -> &[GateState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, gate: usize) -> Option<GateState> {
        self.states.get(gate).copied()
    }

    pub fn pulse_gates(&self) -> u32 {
        self.pulse_gates
    }

    pub fn count(&self, state: GateState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    /// Gates from the initial click through the end of the dead time.
    pub fn dead_span(&self) -> usize {
        self.states
            .iter()
            .take_while(|s| matches!(s, GateState::BlindPulse | GateState::Dead))
            .count()
    }
}

/// Lays out one interval: the initial click gate, the rest of the dead time,
/// the blinded window (controllable gates first), then normal gates.
///
/// A profile with no dead and no blinded gates yields an all-normal timeline.
pub fn build_timeline(profile: &AttackWindowProfile, blinding: &BlindingConfig) -> Result<GateTimeline> {
    let p = AttackWindowProfile::from_counts(profile.n_interval, profile.n_blind, profile.n_dead, profile.n_control)?;
    if p != *profile {
        return Err(Error::InconsistentProfile("alpha/beta disagree with gate counts".into()));
    }
    if u64::from(blinding.cycle_count) > p.n_interval {
        return Err(Error::InconsistentProfile(format!(
            "{} blinding cycles do not fit in {} gates",
            blinding.cycle_count, p.n_interval
        )));
    }
    let n = p.n_interval as usize;
    if p.n_dead == 0 && p.n_blind == 0 {
        return Ok(GateTimeline { states: vec![GateState::Normal; n], pulse_gates: 0 });
    }
    if p.n_dead == 0 {
        return Err(Error::InconsistentProfile("a blinded window needs the initial click's dead gates".into()));
    }
    let mut states = Vec::with_capacity(n);
    states.push(GateState::BlindPulse);
    states.extend(std::iter::repeat(GateState::Dead).take(p.n_dead as usize - 1));
    states.extend(std::iter::repeat(GateState::BlindedControllable).take(p.n_control as usize));
    states.extend(std::iter::repeat(GateState::BlindedUncontrollable).take((p.n_blind - p.n_control) as usize));
    states.resize(n, GateState::Normal);
    Ok(GateTimeline { states, pulse_gates: blinding.cycle_count })
}
