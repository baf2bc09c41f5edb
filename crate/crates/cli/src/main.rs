use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pulseblind::detector::{build_timeline, calibrate_blinded_period, calibrate_window, DEFAULT_PROBE_PHOTONS, MIN_TRIALS};
use pulseblind::monitor::{fit_charge_per_pulse, monitor_report, synthesize_photocurrent};
use pulseblind::montecarlo::{agreement, max_abs_z, simulate_session};
use pulseblind::params::{PHOTON_ENERGY_1550NM, MEASURED_ROWS, MEASURED_INTERVAL};
use pulseblind::scan::{find_crossovers, sweep, DEFAULT_SPAN, DEFAULT_STEP};
use pulseblind::{export, BlindingConfig, EffectiveConfig, GateState, MonitorParams, Scenario, SessionConfig, SimulatedDetector};

#[derive(Debug, Parser)]
#[command(name = "pulseblind", version, about = "Blinding-attack analysis for gated APD decoy-state BB84")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Built-in blinding profile (cycle count)
    #[arg(long)]
    cycles: Option<u32>,
    /// Configuration override, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct Span {
    #[arg(long, default_value_t = DEFAULT_SPAN.0)]
    l_start: f64,
    #[arg(long, default_value_t = DEFAULT_SPAN.1)]
    l_end: f64,
    /// Analyse the honest link instead of the attack
    #[arg(long)]
    no_attack: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key rates over a grid of channel lengths
    Sweep {
        #[command(flatten)]
        span: Span,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        l_step: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Distances where the estimated key rate overtakes the real bounds
    Crossover {
        #[command(flatten)]
        span: Span,
        #[command(flatten)]
        common: Common,
    },
    /// Gate-level simulation checked against the closed-form gains
    Montecarlo {
        /// Channel length (km)
        #[arg(long, default_value_t = 50.0)]
        length: f64,
        #[arg(long, default_value_t = 100_000)]
        intervals: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Reported monitor current for every built-in blinding profile
    Monitor {
        /// Also write one interval of the configured photocurrent here
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Blinded-period and control-energy calibration on a simulated detector
    Calibrate {
        #[arg(long, default_value_t = MIN_TRIALS)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(#[from] pulseblind::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 4,
        }
    }
}

/// Finished output plus whether an invariant or agreement check failed.
struct Outcome {
    files: Vec<(Option<PathBuf>, Vec<u8>)>,
    verdict: Option<String>,
    failed: bool,
}

fn load_config(common: &Common) -> Result<EffectiveConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            EffectiveConfig::from_json_str(&text)?
        }
        None => EffectiveConfig::default(),
    };
    if let Some(c) = common.cycles {
        cfg.select_cycles(c)?;
    }
    for o in &common.overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn header(cfg: &EffectiveConfig, extra: &[(&'static str, String)]) -> Vec<(&'static str, String)> {
    let mut h = cfg.entries();
    h.extend_from_slice(extra);
    h
}

fn buffer(f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn scenario(cfg: &EffectiveConfig, no_attack: bool) -> Result<Scenario, CliError> {
    Ok(if no_attack { Scenario::NoAttack } else { Scenario::Attack(cfg.profile()?) })
}

fn mode(no_attack: bool) -> String {
    if no_attack { "no_attack" } else { "attack" }.to_owned()
}

fn run(cmd: Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Sweep { span, l_step, common } => {
            let cfg = load_config(&common)?;
            let rows = sweep(&scenario(&cfg, span.no_attack)?, &cfg.protocol(), span.l_start, span.l_end, l_step)?;
            let h = header(&cfg, &[("scenario", mode(span.no_attack))]);
            let body = buffer(|w| export::write_sweep(w, &h, &rows));
            Ok(Outcome { files: vec![(common.out, body)], verdict: None, failed: false })
        }
        Command::Crossover { span, common } => {
            let cfg = load_config(&common)?;
            let report = find_crossovers(&scenario(&cfg, span.no_attack)?, &cfg.protocol(), span.l_start, span.l_end)?;
            let h = header(&cfg, &[("scenario", mode(span.no_attack))]);
            let body = buffer(|w| export::write_crossover(w, &h, &report));
            Ok(Outcome { files: vec![(common.out, body)], verdict: None, failed: false })
        }
        Command::Montecarlo { length, intervals, common } => {
            let cfg = load_config(&common)?;
            let params = cfg.protocol();
            let session = SessionConfig::solved(length, cfg.profile()?, &params, intervals, common.seed)?;
            let stats = simulate_session(&session, &params)?;
            let rows = agreement(&stats, &session, &params)?;
            let worst = max_abs_z(&rows);
            let h = header(
                &cfg,
                &[
                    ("length_km", length.to_string()),
                    ("intervals", intervals.to_string()),
                    ("seed", common.seed.to_string()),
                    ("case", session.solution.case_tag().to_string()),
                ],
            );
            let body = buffer(|w| export::write_agreement(w, &h, &rows));
            let failed = worst > 4.0;
            let verdict = format!("max |z| = {worst:.3}: {}", if failed { "FAIL" } else { "PASS" });
            Ok(Outcome { files: vec![(common.out, body)], verdict: Some(verdict), failed })
        }
        Command::Monitor { trace, common } => {
            let cfg = load_config(&common)?;
            let base = MonitorParams::default();
            let m = MonitorParams {
                charge_per_pulse: fit_charge_per_pulse(&MEASURED_ROWS, &base, MEASURED_INTERVAL)?,
                ..base
            };
            let schedules: Vec<BlindingConfig> = MEASURED_ROWS
                .iter()
                .map(|r| BlindingConfig { interval: MEASURED_INTERVAL, ..BlindingConfig::with_cycles(r.cycle_count) })
                .collect();
            let rows = monitor_report(&schedules, &m)?;
            let alarms = rows.iter().filter(|r| r.alarm).count();
            let h = header(&cfg, &[("charge_per_pulse_c", m.charge_per_pulse.to_string())]);
            let mut files = vec![(common.out, buffer(|w| export::write_monitor(w, &h, &rows)))];
            if let Some(path) = trace {
                let b = cfg.blinding();
                let t = synthesize_photocurrent(&b, &m, 1, b.pulse_period / 4.0)?;
                files.push((Some(path), buffer(|w| export::write_trace(w, &h, &t))));
            }
            let verdict = format!("{alarms} of {} built-in schedules alarm", rows.len());
            Ok(Outcome { files, verdict: Some(verdict), failed: alarms > 0 })
        }
        Command::Calibrate { trials, common } => {
            let cfg = load_config(&common)?;
            let profile = cfg.profile()?;
            let timeline = build_timeline(&profile, &cfg.blinding())?;
            let gates = sample_gates(timeline.states());
            let mut det = SimulatedDetector::with_default_response(timeline, &cfg.timing(), common.seed);
            let found = calibrate_blinded_period(&mut det, DEFAULT_PROBE_PHOTONS * PHOTON_ENERGY_1550NM)?;
            let grid: Vec<f64> = (0..=100).map(|i| f64::from(i) * 2e-17).collect();
            let records = calibrate_window(&mut det, &gates, &grid, trials)?;
            let ok = found == profile.n_blind;
            let h = header(
                &cfg,
                &[
                    ("seed", common.seed.to_string()),
                    ("trials", trials.to_string()),
                    ("n_blind_configured", profile.n_blind.to_string()),
                    ("n_blind_calibrated", found.to_string()),
                    ("round_trip", if ok { "PASS" } else { "FAIL" }.to_owned()),
                ],
            );
            let body = buffer(|w| export::write_calibration(w, &h, &records));
            let verdict = format!("blinded period {found} gates (configured {}): {}", profile.n_blind, if ok { "PASS" } else { "FAIL" });
            Ok(Outcome { files: vec![(common.out, body)], verdict: Some(verdict), failed: !ok })
        }
    }
}

/// First and last gate of each blinded sub-window.
fn sample_gates(states: &[GateState]) -> Vec<usize> {
    let mut gates = Vec::new();
    for s in [GateState::BlindedControllable, GateState::BlindedUncontrollable] {
        if let (Some(a), Some(b)) = (states.iter().position(|&x| x == s), states.iter().rposition(|&x| x == s)) {
            gates.push(a);
            if b != a {
                gates.push(b);
            }
        }
    }
    gates
}

fn emit(files: Vec<(Option<PathBuf>, Vec<u8>)>) -> Result<(), CliError> {
    for (path, body) in files {
        match path {
            Some(p) => fs::write(&p, body).map_err(|source| CliError::Io { path: p.display().to_string(), source })?,
            None => io::stdout()
                .write_all(&body)
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?,
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if let Err(e) = emit(outcome.files) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    if let Some(v) = outcome.verdict {
        eprintln!("{v}");
    }
    if outcome.failed {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
