//! Flat JSON configuration with defaults and `key=value` overrides.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{
    derive_window_profile, AttackWindowProfile, BlindingConfig, DetectorTiming, ProtocolParams,
    MeasuredRow,
};
use crate::error::{Error, Result};

/// Every key accepted in a configuration file, in header order.
pub const CONFIG_KEYS: [&str; 15] = [
    "mu",
    "nu",
    "q_sift",
    "f_ec",
    "e0",
    "e_det",
    "y0",
    "eta_bob",
    "loss_coeff_db_per_km",
    "gate_frequency_hz",
    "dead_time_s",
    "interval_s",
    "cycle_count",
    "blinded_period_s",
    "controllable_gates",
];

/// Configuration after defaults, file contents and overrides have been merged.
///
/// `blinded_period_s` and `controllable_gates` fall back to the built-in measured row of
/// `cycle_count` when left unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectiveConfig {
    pub mu: f64,
    pub nu: f64,
    pub q_sift: f64,
    pub f_ec: f64,
    pub e0: f64,
    pub e_det: f64,
    pub y0: f64,
    pub eta_bob: f64,
    pub loss_coeff_db_per_km: f64,
    pub gate_frequency_hz: f64,
    pub dead_time_s: f64,
    pub interval_s: f64,
    pub cycle_count: u32,
    pub blinded_period_s: Option<f64>,
    pub controllable_gates: Option<u64>,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        let p = ProtocolParams::default();
        let t = DetectorTiming::default();
        let b = BlindingConfig::default();
        Self {
            mu: p.mu,
            nu: p.nu,
            q_sift: p.q_sift,
            f_ec: p.f_ec,
            e0: p.e0,
            e_det: p.e_det,
            y0: p.y0,
            eta_bob: p.eta_bob,
            loss_coeff_db_per_km: p.loss_coeff,
            gate_frequency_hz: t.gate_frequency,
            dead_time_s: t.dead_time,
            interval_s: b.interval,
            cycle_count: b.cycle_count,
            blinded_period_s: None,
            controllable_gates: None,
        }
    }
}

impl EffectiveConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Switches to a built-in measured row, dropping any explicit window overrides.
    pub fn select_cycles(&mut self, cycle_count: u32) -> Result<()> {
        MeasuredRow::lookup(cycle_count)?;
        self.cycle_count = cycle_count;
        self.blinded_period_s = None;
        self.controllable_gates = None;
        Ok(())
    }

    /// Applies one `key=value` override. Unknown keys are rejected.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not KEY=VALUE")))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        let value: Value = serde_json::from_str(raw.trim())
            .map_err(|e| Error::Config(format!("value for `{key}`: {e}")))?;
        if !value.is_number() {
            return Err(Error::Config(format!("value for `{key}` must be numeric")));
        }
        let mut map = match serde_json::to_value(&*self) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        };
        map.insert(key.to_owned(), value);
        *self = serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn protocol(&self) -> ProtocolParams {
        ProtocolParams {
            mu: self.mu,
            nu: self.nu,
            q_sift: self.q_sift,
            f_ec: self.f_ec,
            e0: self.e0,
            e_det: self.e_det,
            y0: self.y0,
            eta_bob: self.eta_bob,
            loss_coeff: self.loss_coeff_db_per_km,
        }
    }

    pub fn timing(&self) -> DetectorTiming {
        DetectorTiming {
            gate_frequency: self.gate_frequency_hz,
            dead_time: self.dead_time_s,
            ..DetectorTiming::default()
        }
    }

    pub fn blinding(&self) -> BlindingConfig {
        BlindingConfig {
            cycle_count: self.cycle_count,
            interval: self.interval_s,
            pulse_period: 1.0 / self.gate_frequency_hz,
            ..BlindingConfig::default()
        }
    }

    /// Blinded period and controllable gate count, resolved against the built-in rows.
    pub fn window(&self) -> Result<(f64, u64)> {
        match (self.blinded_period_s, self.controllable_gates) {
            (Some(b), Some(c)) => Ok((b, c)),
            (b, c) => {
                let row = MeasuredRow::lookup(self.cycle_count)?;
                Ok((b.unwrap_or(row.blinded_period), c.unwrap_or(row.controllable_gates)))
            }
        }
    }

    pub fn profile(&self) -> Result<AttackWindowProfile> {
        let (blinded, control) = self.window()?;
        derive_window_profile(&self.timing(), &self.blinding(), blinded, control)
    }

    /// Validates every derived parameter set.
    pub fn validate(&self) -> Result<()> {
        self.protocol().validate()?;
        self.profile().map(|_| ())
    }

    /// `key = value` pairs in [`CONFIG_KEYS`] order, window fields resolved.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let (blinded, control) = match self.window() {
            Ok((b, c)) => (b.to_string(), c.to_string()),
            Err(_) => ("unset".to_owned(), "unset".to_owned()),
        };
        vec![
            ("mu", self.mu.to_string()),
            ("nu", self.nu.to_string()),
            ("q_sift", self.q_sift.to_string()),
            ("f_ec", self.f_ec.to_string()),
            ("e0", self.e0.to_string()),
            ("e_det", self.e_det.to_string()),
            ("y0", self.y0.to_string()),
            ("eta_bob", self.eta_bob.to_string()),
            ("loss_coeff_db_per_km", self.loss_coeff_db_per_km.to_string()),
            ("gate_frequency_hz", self.gate_frequency_hz.to_string()),
            ("dead_time_s", self.dead_time_s.to_string()),
            ("interval_s", self.interval_s.to_string()),
            ("cycle_count", self.cycle_count.to_string()),
            ("blinded_period_s", blinded),
            ("controllable_gates", control),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_keys_take_defaults() {
        let c = EffectiveConfig::from_json_str(r#"{"eta_bob": 0.05}"#).unwrap();
        assert_eq!(c.eta_bob, 0.05);
        assert_eq!(c.mu, 0.6);
        let p = c.profile().unwrap();
        assert_eq!((p.n_blind, p.n_control), (7802, 690));
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        assert!(matches!(
            EffectiveConfig::from_json_str(r#"{"etaBob": 0.05}"#),
            Err(Error::Config(_))
        ));
        let mut c = EffectiveConfig::default();
        assert!(c.apply_override("bogus=1").is_err());
        assert!(c.apply_override("mu").is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut c = EffectiveConfig::default();
        c.apply_override("eta_bob=0.1").unwrap();
        c.apply_override("cycle_count=350").unwrap();
        assert_eq!(c.eta_bob, 0.1);
        assert_eq!(c.profile().unwrap().n_control, 72);
        assert!(c.apply_override("cycle_count=1.5").is_err());
    }

    #[test]
    fn every_key_is_listed_and_round_trips() {
        let json = serde_json::to_value(EffectiveConfig::default()).unwrap();
        let obj = json.as_object().unwrap();
        assert_eq!(obj.len(), CONFIG_KEYS.len());
        for k in CONFIG_KEYS {
            assert!(obj.contains_key(k), "{k}");
        }
        let keys: Vec<_> = EffectiveConfig::default().entries().into_iter().map(|e| e.0).collect();
        assert_eq!(keys, CONFIG_KEYS);
    }

    #[test]
    fn explicit_window_beats_table() {
        let c = EffectiveConfig::from_json_str(
            r#"{"cycle_count": 777, "blinded_period_s": 1e-5, "controllable_gates": 10}"#,
        )
        .unwrap();
        let p = c.profile().unwrap();
        assert_eq!((p.n_blind, p.n_control), (400, 10));
        let bad = EffectiveConfig { cycle_count: 777, ..Default::default() };
        assert_eq!(bad.profile(), Err(Error::UnknownCycleCount(777)));
    }
}
