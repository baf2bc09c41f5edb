//! Protocol, detector and blinding constants, plus the gate-count window
//! profile that the attack equations consume.

mod config;
mod measured;

pub use config::{EffectiveConfig, CONFIG_KEYS};
pub use measured::{MeasuredRow, MEASURED_ROWS, MEASURED_INTERVAL};

use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};

/// Energy of one 1550 nm photon in joules.
pub const PHOTON_ENERGY_1550NM: f64 = 1.282e-19;

/// Source, protocol and receiver constants of the decoy-state BB84 link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Signal-state mean photon number.
    pub mu: f64,
    /// Decoy-state mean photon number.
    pub nu: f64,
    /// Sifting factor.
    pub q_sift: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
    /// Background error rate.
    pub e0: f64,
    /// Optical misalignment error rate.
    pub e_det: f64,
    /// Background yield per gate.
    pub y0: f64,
    /// Transmittance of Bob's receiver.
    pub eta_bob: f64,
    /// Fiber attenuation in dB/km.
    pub loss_coeff: f64,
}

impl Default for ProtocolParams {
    /// Standard decoy-state parameters for a 1550 nm gated-APD link.
    fn default() -> Self {
        Self {
            mu: 0.6,
            nu: 0.2,
            q_sift: 0.5,
            f_ec: 1.2,
            e0: 0.5,
            e_det: 0.033,
            y0: 1.7e-6,
            eta_bob: 0.045,
            loss_coeff: 0.21,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        check(self.nu > 0.0 && self.nu < self.mu, "nu", || {
            format!("need 0 < nu < mu, got nu={} mu={}", self.nu, self.mu)
        })?;
        check(unit(self.e0), "e0", || format!("{} not in [0,1]", self.e0))?;
        check(unit(self.e_det), "e_det", || format!("{} not in [0,1]", self.e_det))?;
        check(unit(self.y0), "y0", || format!("{} not in [0,1]", self.y0))?;
        check(self.eta_bob > 0.0 && self.eta_bob <= 1.0, "eta_bob", || {
            format!("{} not in (0,1]", self.eta_bob)
        })?;
        check(self.f_ec >= 1.0, "f_ec", || format!("{} < 1", self.f_ec))?;
        check(self.q_sift > 0.0 && self.q_sift <= 1.0, "q_sift", || {
            format!("{} not in (0,1]", self.q_sift)
        })?;
        check(self.loss_coeff > 0.0, "loss_coeff", || format!("{} <= 0", self.loss_coeff))
    }
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Gate clock and noise figures of the detector under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorTiming {
    pub gate_frequency: f64,
    pub dead_time: f64,
    pub dark_count_per_gate: f64,
    /// Recorded for completeness; afterpulsing is not simulated.
    pub afterpulse_prob: f64,
}

impl Default for DetectorTiming {
    fn default() -> Self {
        Self {
            gate_frequency: 40e6,
            dead_time: 5e-6,
            dark_count_per_gate: 5e-6,
            afterpulse_prob: 0.03,
        }
    }
}

impl DetectorTiming {
    pub fn gate_period(&self) -> f64 {
        1.0 / self.gate_frequency
    }

    /// Round-half-up conversion of a duration to whole gates.
    pub fn gates(&self, duration: f64) -> u64 {
        (duration * self.gate_frequency + 0.5).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        check(self.gate_frequency > 0.0, "gate_frequency", || {
            format!("{} <= 0", self.gate_frequency)
        })?;
        check(self.dead_time >= 0.0, "dead_time", || format!("{} < 0", self.dead_time))?;
        check(unit(self.dark_count_per_gate), "dark_count_per_gate", || {
            format!("{} not in [0,1]", self.dark_count_per_gate)
        })?;
        check(unit(self.afterpulse_prob), "afterpulse_prob", || {
            format!("{} not in [0,1]", self.afterpulse_prob)
        })
    }
}

/// One repeating group of blinding pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlindingConfig {
    pub cycle_count: u32,
    /// Energy of each pulse in the group (J).
    pub pulse_energy: f64,
    pub pulse_width: f64,
    /// Time between the starts of consecutive groups (s).
    pub interval: f64,
    /// Spacing of pulses inside a group; the gate period of the detector.
    pub pulse_period: f64,
}

impl Default for BlindingConfig {
    fn default() -> Self {
        Self {
            cycle_count: 500,
            pulse_energy: 13.32e-12,
            pulse_width: 4e-9,
            interval: 2e-3,
            pulse_period: 25e-9,
        }
    }
}

impl BlindingConfig {
    pub fn with_cycles(cycle_count: u32) -> Self {
        Self { cycle_count, ..Self::default() }
    }

    pub fn group_energy(&self) -> f64 {
        self.pulse_energy * f64::from(self.cycle_count)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.cycle_count >= 1, "cycle_count", || "must be at least 1".into())?;
        check(self.pulse_energy > 0.0, "pulse_energy", || format!("{} <= 0", self.pulse_energy))?;
        check(self.pulse_period > 0.0, "pulse_period", || format!("{} <= 0", self.pulse_period))?;
        let train = f64::from(self.cycle_count) * self.pulse_period;
        check(self.interval > train, "interval", || {
            format!("{} s does not exceed the {} s pulse train", self.interval, train)
        })
    }
}

/// Gate-count decomposition of one blinding-group interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackWindowProfile {
    pub n_interval: u64,
    pub n_blind: u64,
    pub n_dead: u64,
    pub n_control: u64,
    /// Controllable proportion of gates, `n_control / n_interval`.
    pub alpha: f64,
    /// Proportion of gates affected by blinding, `(n_blind + n_dead) / n_interval`.
    pub beta: f64,
}

impl AttackWindowProfile {
    pub fn from_counts(n_interval: u64, n_blind: u64, n_dead: u64, n_control: u64) -> Result<Self> {
        if n_interval == 0 {
            return Err(Error::InconsistentProfile("n_interval is zero".into()));
        }
        if n_blind + n_dead > n_interval {
            return Err(Error::InconsistentProfile(format!(
                "n_blind + n_dead = {} exceeds n_interval = {n_interval}",
                n_blind + n_dead
            )));
        }
        if n_control > n_blind {
            return Err(Error::InconsistentProfile(format!(
                "n_control = {n_control} exceeds n_blind = {n_blind}"
            )));
        }
        let n = n_interval as f64;
        Ok(Self {
            n_interval,
            n_blind,
            n_dead,
            n_control,
            alpha: n_control as f64 / n,
            beta: (n_blind + n_dead) as f64 / n,
        })
    }

    /// Profile for one of the built-in measured cycle counts with default timing.
    pub fn measured(cycle_count: u32) -> Result<Self> {
        let row = MeasuredRow::lookup(cycle_count)?;
        derive_window_profile(
            &DetectorTiming::default(),
            &BlindingConfig::with_cycles(cycle_count),
            row.blinded_period,
            row.controllable_gates,
        )
    }

    pub fn n_normal(&self) -> u64 {
        self.n_interval - self.n_blind - self.n_dead
    }
}

pub fn derive_window_profile(
    timing: &DetectorTiming,
    blinding: &BlindingConfig,
    blinded_period: f64,
    controllable_gates: u64,
) -> Result<AttackWindowProfile> {
    timing.validate()?;
    blinding.validate()?;
    check(blinded_period >= 0.0, "blinded_period", || format!("{blinded_period} < 0"))?;
    AttackWindowProfile::from_counts(
        timing.gates(blinding.interval),
        timing.gates(blinded_period),
        timing.gates(timing.dead_time),
        controllable_gates,
    )
}

/// Fiber transmittance `10^(-loss * L / 10)`.
pub fn channel_transmittance(length_km: f64, loss_coeff: f64) -> Result<f64> {
    if !(length_km >= 0.0) {
        return Err(Error::NegativeLength(length_km));
    }
    Ok(10f64.powf(-loss_coeff * length_km / 10.0))
}
