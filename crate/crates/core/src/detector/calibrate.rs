//! A simulated detector under blinding and the two calibration procedures
//! run against it: walking a weak probe away from the blinding group to find
//! the blinded period, and sweeping trigger energy at one gate to find the
//! control energies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{click_probability_linear, full_control_condition, ControlEnergies, GateState, GateTimeline, LinearModeResponse};
use crate::error::{Error, Result};
use crate::params::{DetectorTiming, PHOTON_ENERGY_1550NM};

/// Photons in the weak calibration probe.
pub const DEFAULT_PROBE_PHOTONS: f64 = 67.0;

/// Minimum trigger repetitions per grid energy.
pub const MIN_TRIALS: usize = 1000;

/// Probe repetitions per gate while scanning for the end of the blinded period.
const PROBE_REPEATS: usize = 16;

#[derive(Debug, Clone)]
pub struct SimulatedDetector {
    timeline: GateTimeline,
    controllable: LinearModeResponse,
    uncontrollable: LinearModeResponse,
    /// Single-photon detection efficiency in Geiger mode.
    geiger_efficiency: f64,
    dark_count: f64,
    rng: ChaCha8Rng,
}

impl SimulatedDetector {
    pub fn new(
        timeline: GateTimeline,
        controllable: LinearModeResponse,
        uncontrollable: LinearModeResponse,
        timing: &DetectorTiming,
        seed: u64,
    ) -> Self {
        Self {
            timeline,
            controllable,
            uncontrollable,
            geiger_efficiency: 0.1,
            dark_count: timing.dark_count_per_gate,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Default responses: sub-femtojoule control energies, fully controllable
    /// inside the controllable window (0.8/1.0/1.2 fJ) and only partly
    /// controllable beyond it (0.5/1.0/1.5 fJ).
    pub fn with_default_response(timeline: GateTimeline, timing: &DetectorTiming, seed: u64) -> Self {
        Self::new(
            timeline,
            LinearModeResponse { gain_slope: 1e15, noise_halfwidth: 0.2, comparator_threshold: 1.0 },
            LinearModeResponse { gain_slope: 1e15, noise_halfwidth: 0.5, comparator_threshold: 1.0 },
            timing,
            seed,
        )
    }

    pub fn timeline(&self) -> &GateTimeline {
        &self.timeline
    }

    fn geiger_probability(&self, energy: f64) -> f64 {
        let photons = energy / PHOTON_ENERGY_1550NM;
        1.0 - (1.0 - self.dark_count) * (-self.geiger_efficiency * photons).exp()
    }

    /// Click probability for a trigger of `energy` joules at `gate`.
    pub fn click_probability(&self, gate: usize, energy: f64) -> f64 {
        match self.timeline.state(gate) {
            Some(GateState::BlindPulse) => 1.0,
            Some(GateState::Dead) | None => 0.0,
            Some(GateState::BlindedControllable) => click_probability_linear(energy, &self.controllable),
            Some(GateState::BlindedUncontrollable) => click_probability_linear(energy, &self.uncontrollable),
            Some(GateState::Normal) => self.geiger_probability(energy),
        }
    }

    /// Sends one trigger pulse and reports whether the detector clicked.
    pub fn fire(&mut self, gate: usize, energy: f64) -> bool {
        let linear = |resp: &LinearModeResponse, rng: &mut ChaCha8Rng| {
            let jitter = resp.noise_halfwidth * (2.0 * rng.random::<f64>() - 1.0);
            resp.gain_slope * energy + jitter > resp.comparator_threshold
        };
        match self.timeline.state(gate) {
            Some(GateState::BlindPulse) => true,
            Some(GateState::Dead) | None => false,
            Some(GateState::BlindedControllable) => linear(&self.controllable, &mut self.rng),
            Some(GateState::BlindedUncontrollable) => linear(&self.uncontrollable, &mut self.rng),
            Some(GateState::Normal) => {
                let p = self.geiger_probability(energy);
                self.rng.random_bool(p)
            }
        }
    }

    fn blinded_click_probability(&self, energy: f64) -> f64 {
        click_probability_linear(energy, &self.controllable)
            .max(click_probability_linear(energy, &self.uncontrollable))
    }
}

/// Counts consecutive silent gates after the dead time using a weak probe.
pub fn calibrate_blinded_period(det: &mut SimulatedDetector, probe_energy: f64) -> Result<u64> {
    if det.blinded_click_probability(probe_energy) > 0.0 {
        return Err(Error::CalibrationAmbiguous(format!(
            "probe of {probe_energy:e} J can click a blinded detector"
        )));
    }
    if det.geiger_probability(probe_energy) < 0.5 {
        return Err(Error::CalibrationAmbiguous(format!(
            "probe of {probe_energy:e} J is too weak to click reliably in Geiger mode"
        )));
    }
    let start = det.timeline.dead_span();
    let mut silent = 0;
    for gate in start..det.timeline.len() {
        if (0..PROBE_REPEATS).any(|_| det.fire(gate, probe_energy)) {
            break;
        }
        silent += 1;
    }
    Ok(silent)
}

/// Estimates `E_never`, `E_half` and `E_always` at one gate from click
/// frequencies over a monotone energy grid.
///
/// Gates outside the blinded window have no linear-mode transition to
/// bracket and are reported as [`Error::GridTooNarrow`].
pub fn calibrate_control_energies(
    det: &mut SimulatedDetector,
    gate_index: usize,
    energy_grid: &[f64],
    trials: usize,
) -> Result<ControlEnergies> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter { name: "trials", reason: format!("{trials} < {MIN_TRIALS}") });
    }
    if energy_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter { name: "energy_grid", reason: "must be strictly increasing".into() });
    }
    if !matches!(
        det.timeline.state(gate_index),
        Some(GateState::BlindedControllable | GateState::BlindedUncontrollable)
    ) {
        return Err(Error::GridTooNarrow { gate: gate_index });
    }
    let freq: Vec<f64> = energy_grid
        .iter()
        .map(|&e| (0..trials).filter(|_| det.fire(gate_index, e)).count() as f64 / trials as f64)
        .collect();

    let too_narrow = Error::GridTooNarrow { gate: gate_index };
    let always = freq.iter().position(|&f| f == 1.0).ok_or(too_narrow.clone())?;
    let never = freq[..always].iter().rposition(|&f| f == 0.0).ok_or(too_narrow)?;
    let half = (never..=always)
        .min_by(|&a, &b| (freq[a] - 0.5).abs().total_cmp(&(freq[b] - 0.5).abs()))
        .unwrap_or(never);
    ControlEnergies::new(energy_grid[always], energy_grid[half], energy_grid[never])
}

/// One row of a calibration export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationRecord {
    pub gate_index: usize,
    pub energies: ControlEnergies,
    pub fully_controllable: bool,
}

/// Calibrates control energies at each of `gates`.
pub fn calibrate_window(
    det: &mut SimulatedDetector,
    gates: &[usize],
    energy_grid: &[f64],
    trials: usize,
) -> Result<Vec<CalibrationRecord>> {
    gates
        .iter()
        .map(|&gate_index| {
            let energies = calibrate_control_energies(det, gate_index, energy_grid, trials)?;
            Ok(CalibrationRecord { gate_index, energies, fully_controllable: full_control_condition(&energies) })
        })
        .collect()
}
