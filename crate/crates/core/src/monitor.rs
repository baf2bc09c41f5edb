//! Phenomenological photocurrent model of the blinded detector and the
//! monitor that low-pass filters it.
//!
//! Each blinding pulse injects a charge proportional to its energy that
//! bleeds off exponentially. The monitor's single-pole filter preserves the
//! time average, so the reported current in steady state is the baseline plus
//! the mean injected current: short, widely spaced groups stay far below the
//! alarm even though the instantaneous current blinds the APD.

use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::params::{BlindingConfig, MeasuredRow};

/// Largest per-group energy the constant-blinding search will try (J).
pub const MAX_GROUP_ENERGY: f64 = 1e-6;

const MAX_SAMPLES: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorParams {
    /// Reported current in normal operation (A).
    pub baseline_current: f64,
    pub alarm_threshold: f64,
    /// Reported current above which the APD is blinded all the time.
    pub constant_blind_threshold: f64,
    /// Charge injected by one pulse of `reference_pulse_energy` (C).
    pub charge_per_pulse: f64,
    pub reference_pulse_energy: f64,
    /// Decay constant of the injected photocurrent (s).
    pub decay_tau: f64,
    /// Monitor low-pass cutoff (Hz).
    pub cutoff_freq: f64,
}

impl Default for MonitorParams {
    fn default() -> Self {
        Self {
            baseline_current: 1.4e-6,
            alarm_threshold: 10e-6,
            constant_blind_threshold: 31e-6,
            charge_per_pulse: 2.8e-12,
            reference_pulse_energy: 13.32e-12,
            decay_tau: 1e-6,
            cutoff_freq: 10e3,
        }
    }
}

impl MonitorParams {
    pub fn validate(&self) -> Result<()> {
        check(
            0.0 <= self.baseline_current
                && self.baseline_current < self.alarm_threshold
                && self.alarm_threshold < self.constant_blind_threshold,
            "thresholds",
            || "need baseline < alarm_threshold < constant_blind_threshold".into(),
        )?;
        check(self.charge_per_pulse >= 0.0, "charge_per_pulse", || format!("{} < 0", self.charge_per_pulse))?;
        check(self.reference_pulse_energy > 0.0, "reference_pulse_energy", || {
            format!("{} <= 0", self.reference_pulse_energy)
        })?;
        check(self.decay_tau > 0.0, "decay_tau", || format!("{} <= 0", self.decay_tau))?;
        check(self.cutoff_freq > 0.0, "cutoff_freq", || format!("{} <= 0", self.cutoff_freq))
    }

    fn filter_tau(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.cutoff_freq)
    }

    /// Time after which both the injected current and the filter have settled.
    pub fn settle_time(&self) -> f64 {
        10.0 * self.decay_tau.max(self.filter_tau())
    }

    pub fn charge_for(&self, pulse_energy: f64) -> f64 {
        self.charge_per_pulse * pulse_energy / self.reference_pulse_energy
    }
}

/// Sampled detector photocurrent.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotocurrentTrace {
    pub sample_period: f64,
    pub samples: Vec<f64>,
    /// Repetition period of the blinding schedule, when periodic.
    pub repetition_period: Option<f64>,
}

impl PhotocurrentTrace {
    pub fn new(sample_period: f64, samples: Vec<f64>, repetition_period: Option<f64>) -> Result<Self> {
        check(sample_period > 0.0, "sample_period", || format!("{sample_period} <= 0"))?;
        check(!samples.is_empty(), "samples", || "trace is empty".into())?;
        check(samples.iter().all(|&s| s >= 0.0), "samples", || "negative current".into())?;
        Ok(Self { sample_period, samples, repetition_period })
    }

    pub fn span(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.sample_period
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub time: f64,
    pub energy: f64,
}

/// Pulse arrival times for `n_groups` repetitions of `blinding`.
pub fn schedule(blinding: &BlindingConfig, n_groups: usize) -> Vec<Pulse> {
    (0..n_groups)
        .flat_map(|g| {
            (0..blinding.cycle_count).map(move |c| Pulse {
                time: g as f64 * blinding.interval + f64::from(c) * blinding.pulse_period,
                energy: blinding.pulse_energy,
            })
        })
        .collect()
}

/// Samples `baseline + sum_k (q_k / tau) exp(-(t - t_k) / tau)` over `[0, duration)`.
pub fn synthesize_from_pulses(
    pulses: &[Pulse],
    m: &MonitorParams,
    duration: f64,
    sample_period: f64,
    repetition_period: Option<f64>,
) -> Result<PhotocurrentTrace> {
    m.validate()?;
    check(sample_period > 0.0, "sample_period", || format!("{sample_period} <= 0"))?;
    let n = (duration / sample_period).ceil();
    if !(n >= 1.0 && n <= MAX_SAMPLES as f64) {
        return Err(Error::InvalidParameter {
            name: "duration",
            reason: format!("{n} samples outside [1, {MAX_SAMPLES}]"),
        });
    }
    let n = n as usize;
    let mut sorted = pulses.to_vec();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time));

    let tau = m.decay_tau;
    let step_decay = (-sample_period / tau).exp();
    let mut injected = 0.0;
    let mut next = 0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * sample_period;
        injected *= step_decay;
        while next < sorted.len() && sorted[next].time <= t {
            let p = sorted[next];
            injected += m.charge_for(p.energy) / tau * (-(t - p.time) / tau).exp();
            next += 1;
        }
        samples.push(m.baseline_current + injected);
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter { name: "pulse_energy", reason: "current overflowed".into() });
    }
    PhotocurrentTrace::new(sample_period, samples, repetition_period)
}

/// Photocurrent over `n_groups` blinding intervals.
///
/// `sample_period` must resolve the pulse train: at most a quarter of the
/// spacing between pulses.
pub fn synthesize_photocurrent(
    blinding: &BlindingConfig,
    m: &MonitorParams,
    n_groups: usize,
    sample_period: f64,
) -> Result<PhotocurrentTrace> {
    blinding.validate()?;
    check(n_groups >= 1, "n_groups", || "need at least one group".into())?;
    check(sample_period <= blinding.pulse_period / 4.0 * (1.0 + 1e-9), "sample_period", || {
        format!("{sample_period} s exceeds a quarter of the {} s pulse spacing", blinding.pulse_period)
    })?;
    synthesize_from_pulses(
        &schedule(blinding, n_groups),
        m,
        n_groups as f64 * blinding.interval,
        sample_period,
        Some(blinding.interval),
    )
}

/// Single-pole low-pass filter with unit DC gain.
pub fn low_pass(trace: &PhotocurrentTrace, cutoff_freq: f64) -> Vec<f64> {
    let a = -(-2.0 * std::f64::consts::PI * cutoff_freq * trace.sample_period).exp_m1();
    let mut y = trace.samples[0];
    trace
        .samples
        .iter()
        .map(|&x| {
            y += a * (x - y);
            y
        })
        .collect()
}

/// Steady-state time average of the filtered photocurrent.
///
/// Periodic traces need at least five repetition periods, and enough whole
/// periods after settling to average over.
pub fn reported_current(trace: &PhotocurrentTrace, m: &MonitorParams) -> Result<f64> {
    m.validate()?;
    let dt = trace.sample_period;
    let span = trace.span();
    let settle = m.settle_time();
    let (from, to) = match trace.repetition_period {
        Some(period) => {
            let skip = (settle / period).ceil().max(1.0);
            let need = (5.0f64).max(skip + 1.0) * period;
            if span < need * (1.0 - 1e-9) {
                return Err(Error::InsufficientSpan { have: span, need });
            }
            let whole = (span / period + 1e-9).floor();
            (((skip * period) / dt).round() as usize, ((whole * period) / dt).round() as usize)
        }
        None => {
            if span < 2.0 * settle {
                return Err(Error::InsufficientSpan { have: span, need: 2.0 * settle });
            }
            ((settle / dt).ceil() as usize, trace.samples.len())
        }
    };
    let to = to.min(trace.samples.len());
    let filtered = low_pass(trace, m.cutoff_freq);
    let window = &filtered[from..to];
    Ok(window.iter().sum::<f64>() / window.len() as f64)
}

/// Groups needed so that [`reported_current`] accepts the trace.
pub fn steady_state_groups(interval: f64, m: &MonitorParams) -> usize {
    ((m.settle_time() / interval).ceil() as usize).max(1) + 4
}

/// Inclusive alarm comparison.
pub fn alarm(reported: f64, m: &MonitorParams) -> bool {
    reported >= m.alarm_threshold
}

/// Least-squares charge per reference pulse for
/// `reported = baseline + cycles * q / interval`.
pub fn fit_charge_per_pulse(rows: &[MeasuredRow], m: &MonitorParams, interval: f64) -> Result<f64> {
    let first = rows.first().map(|r| r.cycle_count);
    if rows.len() < 2 || rows.iter().all(|r| Some(r.cycle_count) == first) {
        return Err(Error::SingularFit("need two rows with distinct cycle counts".into()));
    }
    let (num, den) = rows.iter().fold((0.0, 0.0), |(num, den), r| {
        let n = f64::from(r.cycle_count);
        (num + n * (r.reported_current - m.baseline_current), den + n * n)
    });
    Ok(interval * num / den)
}

/// Smallest total group energy that holds the reported current at the
/// constant-blinding threshold, found by bisection on the synthesized trace.
pub fn constant_blinding_energy(
    interval: f64,
    cycles_per_group: u32,
    pulse_period: f64,
    m: &MonitorParams,
) -> Result<f64> {
    m.validate()?;
    check(interval > 0.0, "interval", || format!("{interval} <= 0"))?;
    check(cycles_per_group >= 1, "cycles_per_group", || "need at least one cycle".into())?;
    let groups = steady_state_groups(interval, m);
    let excess = |group_energy: f64| -> Result<f64> {
        let blinding = BlindingConfig {
            cycle_count: cycles_per_group,
            pulse_energy: group_energy / f64::from(cycles_per_group),
            interval,
            pulse_period,
            ..BlindingConfig::default()
        };
        let trace = synthesize_photocurrent(&blinding, m, groups, pulse_period / 4.0)?;
        Ok(reported_current(&trace, m)? - m.constant_blind_threshold)
    };

    let mut hi = 1e-18;
    while excess(hi)? < 0.0 {
        if hi >= MAX_GROUP_ENERGY {
            return Err(Error::NotBlindable { max_energy: MAX_GROUP_ENERGY });
        }
        hi = (hi * 2.0).min(MAX_GROUP_ENERGY);
    }
    let mut lo = hi / 2.0;
    if hi == 1e-18 {
        lo = 0.0;
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// One row of the monitor report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    pub cycle_count: u32,
    pub interval: f64,
    pub reported: f64,
    pub alarm: bool,
}

/// Reported current for each blinding schedule.
pub fn monitor_report(schedules: &[BlindingConfig], m: &MonitorParams) -> Result<Vec<MonitorRow>> {
    schedules
        .iter()
        .map(|b| {
            let trace = synthesize_photocurrent(b, m, steady_state_groups(b.interval, m), b.pulse_period / 4.0)?;
            let reported = reported_current(&trace, m)?;
            Ok(MonitorRow { cycle_count: b.cycle_count, interval: b.interval, reported, alarm: alarm(reported, m) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{MEASURED_ROWS, MEASURED_INTERVAL};

    fn m() -> MonitorParams {
        MonitorParams::default()
    }

    #[test]
    fn no_pulses_is_flat_baseline() {
        let t = synthesize_from_pulses(&[], &m(), 1e-3, 1e-7, None).unwrap();
        assert!(t.samples.iter().all(|&s| s == m().baseline_current));
        let r = reported_current(&t, &m()).unwrap();
        assert!((r - m().baseline_current).abs() < 1e-18);
    }

    #[test]
    fn single_pulse_conserves_charge() {
        let p = [Pulse { time: 0.0, energy: m().reference_pulse_energy }];
        let t = synthesize_from_pulses(&p, &m(), 30e-6, 1e-9, None).unwrap();
        let q: f64 = t.samples.iter().map(|s| (s - m().baseline_current) * t.sample_period).sum();
        assert!(((q - m().charge_per_pulse) / m().charge_per_pulse).abs() < 1e-3, "{q}");
    }

    #[test]
    fn periodic_injection_mean() {
        let b = BlindingConfig::with_cycles(500);
        let t = synthesize_photocurrent(&b, &m(), 5, 6.25e-9).unwrap();
        let mean = t.samples.iter().map(|s| s - m().baseline_current).sum::<f64>() / t.samples.len() as f64;
        assert!(((mean - 0.7e-6) / 0.7e-6).abs() < 0.01, "{mean}");
    }

    #[test]
    fn reported_examples() {
        let t = PhotocurrentTrace::new(1e-6, vec![3e-6; 2000], None).unwrap();
        assert!((reported_current(&t, &m()).unwrap() - 3e-6).abs() < 1e-18);

        let rows = monitor_report(&[BlindingConfig::with_cycles(500), BlindingConfig::with_cycles(250)], &m()).unwrap();
        assert!((rows[0].reported - 2.1e-6).abs() <= 0.1e-6, "{:?}", rows[0]);
        assert!((rows[1].reported - 1.75e-6).abs() <= 0.01e-6, "{:?}", rows[1]);
        assert!((rows[1].reported - 1.8e-6).abs() <= 0.1e-6);
        assert!(rows.iter().all(|r| !r.alarm));
    }

    #[test]
    fn short_trace_rejected() {
        let b = BlindingConfig::with_cycles(500);
        let t = synthesize_photocurrent(&b, &m(), 3, 6.25e-9).unwrap();
        assert!(matches!(reported_current(&t, &m()), Err(Error::InsufficientSpan { .. })));
        let t = PhotocurrentTrace::new(1e-6, vec![3e-6; 10], None).unwrap();
        assert!(matches!(reported_current(&t, &m()), Err(Error::InsufficientSpan { .. })));
    }

    #[test]
    fn coarse_sampling_rejected() {
        let b = BlindingConfig::with_cycles(500);
        assert!(synthesize_photocurrent(&b, &m(), 5, 10e-9).is_err());
    }

    #[test]
    fn alarm_examples() {
        assert!(!alarm(2.1e-6, &m()));
        assert!(alarm(31e-6, &m()));
        assert!(alarm(10e-6, &m()));
    }

    #[test]
    fn fit_measured_rows() {
        let q = fit_charge_per_pulse(&MEASURED_ROWS, &m(), MEASURED_INTERVAL).unwrap();
        assert!((q - 2.8e-12).abs() < 0.1e-12, "{q}");
        for r in MEASURED_ROWS {
            let model = m().baseline_current + f64::from(r.cycle_count) * q / MEASURED_INTERVAL;
            assert!((model - r.reported_current).abs() <= 0.1e-6);
        }
    }

    #[test]
    fn fit_exact_line() {
        let mk = |n: u32| MeasuredRow {
            cycle_count: n,
            blinded_period: 0.0,
            controllable_gates: 0,
            reported_current: 1.4e-6 + f64::from(n) * 1e-12 / 2e-3,
        };
        let q = fit_charge_per_pulse(&[mk(100), mk(300)], &m(), 2e-3).unwrap();
        assert!((q - 1e-12).abs() < 1e-24);
        assert!(matches!(fit_charge_per_pulse(&[mk(100)], &m(), 2e-3), Err(Error::SingularFit(_))));
        assert!(matches!(fit_charge_per_pulse(&[mk(100), mk(100)], &m(), 2e-3), Err(Error::SingularFit(_))));
    }

    #[test]
    fn constant_blinding_scales_with_interval() {
        let e1 = constant_blinding_energy(5e-6, 1, 25e-9, &m()).unwrap();
        let e2 = constant_blinding_energy(10e-6, 1, 25e-9, &m()).unwrap();
        assert!((e2 / e1 - 2.0).abs() < 0.1, "{e1} {e2}");
    }

    #[test]
    fn constant_blinding_cycle_split() {
        let e1 = constant_blinding_energy(6e-6, 1, 25e-9, &m()).unwrap();
        let e3 = constant_blinding_energy(6e-6, 3, 25e-9, &m()).unwrap();
        assert!(((e3 - e1) / e1).abs() < 0.05, "{e1} {e3}");
    }

    #[test]
    fn constant_blinding_vanishes_with_interval() {
        let mut last = f64::INFINITY;
        for interval in [8e-6, 4e-6, 2e-6, 1e-6, 500e-9, 100e-9] {
            let e = constant_blinding_energy(interval, 1, 25e-9, &m()).unwrap();
            assert!(e > 0.0 && e < last, "{interval} {e}");
            last = e;
        }
    }

    #[test]
    fn unreachable_threshold() {
        let weak = MonitorParams { charge_per_pulse: 1e-30, ..m() };
        assert!(matches!(constant_blinding_energy(1e-3, 1, 25e-9, &weak), Err(Error::NotBlindable { .. })));
    }

    #[test]
    fn superposition() {
        let a: Vec<Pulse> = (0..40).map(|i| Pulse { time: i as f64 * 25e-9, energy: 13.32e-12 }).collect();
        let b: Vec<Pulse> = (0..25).map(|i| Pulse { time: 3e-6 + i as f64 * 50e-9, energy: 4e-12 }).collect();
        let both: Vec<Pulse> = a.iter().chain(&b).copied().collect();
        let ta = synthesize_from_pulses(&a, &m(), 20e-6, 5e-9, None).unwrap();
        let tb = synthesize_from_pulses(&b, &m(), 20e-6, 5e-9, None).unwrap();
        let tab = synthesize_from_pulses(&both, &m(), 20e-6, 5e-9, None).unwrap();
        for ((x, y), z) in ta.samples.iter().zip(&tb.samples).zip(&tab.samples) {
            let expect = x + y - m().baseline_current;
            assert!((z - expect).abs() <= 1e-12 * expect.abs());
        }
    }

    #[test]
    fn steady_state_insensitive_to_filter_and_decay() {
        let b = BlindingConfig::with_cycles(400);
        let base = monitor_report(&[b], &m()).unwrap()[0].reported;
        for (tau, fc) in [(0.5e-6, 10e3), (2e-6, 10e3), (1e-6, 3e3), (1e-6, 30e3)] {
            let mm = MonitorParams { decay_tau: tau, cutoff_freq: fc, ..m() };
            let r = monitor_report(&[b], &mm).unwrap()[0].reported;
            assert!((r - base).abs() < 0.005e-6, "{tau} {fc}: {r} vs {base}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]
            #[test]
            fn reported_monotone(i1 in 2e-6f64..50e-6, i2 in 2e-6f64..50e-6, e1 in 1e-12f64..20e-12, e2 in 1e-12f64..20e-12) {
                let mm = m();
                let mk = |interval: f64, pulse_energy: f64| BlindingConfig { cycle_count: 20, interval, pulse_energy, ..BlindingConfig::default() };
                let (ilo, ihi) = (i1.min(i2), i1.max(i2));
                let r = monitor_report(&[mk(ilo, e1), mk(ihi, e1)], &mm).unwrap();
                prop_assert!(r[1].reported <= r[0].reported * (1.0 + 1e-9));
                let (elo, ehi) = (e1.min(e2), e1.max(e2));
                let r = monitor_report(&[mk(i1, elo), mk(i1, ehi)], &mm).unwrap();
                prop_assert!(r[0].reported <= r[1].reported * (1.0 + 1e-9));
            }
        }
    }
}
