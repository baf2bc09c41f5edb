use crate::error::{Error, Result};

/// Measured blinding characteristics at a 2 ms group interval and 40 MHz gating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredRow {
    pub cycle_count: u32,
    /// Blinded period after the dead time (s).
    pub blinded_period: f64,
    /// Fully controllable gates; zero where no measurement was reported.
    pub controllable_gates: u64,
    /// Photocurrent reported by the monitor (A).
    pub reported_current: f64,
}

pub const MEASURED_ROWS: [MeasuredRow; 6] = [
    MeasuredRow { cycle_count: 250, blinded_period: 2.025e-6, controllable_gates: 0, reported_current: 1.8e-6 },
    MeasuredRow { cycle_count: 300, blinded_period: 20.025e-6, controllable_gates: 0, reported_current: 1.8e-6 },
    MeasuredRow { cycle_count: 350, blinded_period: 45.025e-6, controllable_gates: 72, reported_current: 1.9e-6 },
    MeasuredRow { cycle_count: 400, blinded_period: 100.05e-6, controllable_gates: 150, reported_current: 1.9e-6 },
    MeasuredRow { cycle_count: 450, blinded_period: 135.05e-6, controllable_gates: 330, reported_current: 2.0e-6 },
    MeasuredRow { cycle_count: 500, blinded_period: 195.05e-6, controllable_gates: 690, reported_current: 2.1e-6 },
];

/// Interval between blinding groups used for every row.
pub const MEASURED_INTERVAL: f64 = 2e-3;

impl MeasuredRow {
    pub fn lookup(cycle_count: u32) -> Result<&'static MeasuredRow> {
        MEASURED_ROWS
            .iter()
            .find(|r| r.cycle_count == cycle_count)
            .ok_or(Error::UnknownCycleCount(cycle_count))
    }
}
