//! Acceptance suite: one PASS/FAIL line per criterion, each under a wall-clock
//! budget. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pulseblind::attack::{normal_gain, normal_stats, solve_strategy};
use pulseblind::detector::{
    build_timeline, calibrate_blinded_period, full_control_condition, ControlEnergies, DEFAULT_PROBE_PHOTONS,
};
use pulseblind::keyrate::{binary_entropy, decoy_bounds, honest_single_photon, real_rate_bounds};
use pulseblind::monitor::{alarm, constant_blinding_energy, fit_charge_per_pulse, monitor_report};
use pulseblind::montecarlo::{agreement, max_abs_z, simulate_session};
use pulseblind::params::{PHOTON_ENERGY_1550NM, MEASURED_ROWS, MEASURED_INTERVAL};
use pulseblind::scan::{find_crossovers, sweep, Scenario};
use pulseblind::{
    AttackWindowProfile, BlindingConfig, MonitorParams, ProtocolParams, SessionConfig, SimulatedDetector,
};

type Check = Result<String, String>;

/// Identifier, description, check and time budget in seconds.
type Criterion = (&'static str, &'static str, fn() -> Check, u64);

fn within(x: f64, target: f64, frac: f64) -> bool {
    (x - target).abs() <= frac * target
}

fn profile(cycles: u32) -> AttackWindowProfile {
    AttackWindowProfile::measured(cycles).expect("built-in profile")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn crossovers(cycles: u32) -> Result<(f64, f64), String> {
    let r = find_crossovers(&Scenario::Attack(profile(cycles)), &ProtocolParams::default(), 0.0, 170.0)
        .map_err(|e| e.to_string())?;
    match (r.l_overestimate, r.l_insecure) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(format!("{cycles}-cycle crossovers missing: {r:?}")),
    }
}

fn ac1() -> Check {
    let (over, insecure) = crossovers(500)?;
    ensure(within(over, 20.0, 0.15) && within(insecure, 43.0, 0.15), || {
        format!("l_overestimate={over:.2} km, l_insecure={insecure:.2} km")
    })?;
    Ok(format!("l_overestimate={over:.2} km, l_insecure={insecure:.2} km"))
}

fn ac2() -> Check {
    let targets = [(350, 96.0, 99.5), (400, 62.0, 79.0), (450, 37.0, 60.0), (500, 20.0, 43.0)];
    let mut found = Vec::new();
    for (c, t1, t2) in targets {
        let (a, b) = crossovers(c)?;
        ensure(within(a, t1, 0.15) && within(b, t2, 0.15), || {
            format!("{c}-cycle: ({a:.2}, {b:.2}) vs ({t1}, {t2})")
        })?;
        found.push((c, a, b));
    }
    for w in found.windows(2) {
        ensure(w[1].1 < w[0].1 && w[1].2 < w[0].2, || format!("not decreasing: {w:?}"))?;
    }
    Ok(found.iter().map(|(c, a, b)| format!("{c}:({a:.1},{b:.1})")).collect::<Vec<_>>().join(" "))
}

fn ac3() -> Check {
    let rows = sweep(&Scenario::NoAttack, &ProtocolParams::default(), 0.0, 170.0, 0.25).map_err(|e| e.to_string())?;
    let mut min_near = f64::INFINITY;
    let mut max_far: f64 = 0.0;
    for r in &rows {
        let est = r.r_est.ok_or("missing r_est")?;
        if r.length_km <= 120.0 {
            min_near = min_near.min(est);
        }
        if r.length_km >= 140.0 {
            max_far = max_far.max(est);
        }
    }
    ensure(min_near > 1e-7 && max_far < 1e-7, || format!("min(L<=120)={min_near:e}, max(L>=140)={max_far:e}"))?;
    Ok(format!("min R_est(L<=120)={min_near:.3e}, max R_est(L>=140)={max_far:.3e}"))
}

fn ac4() -> Check {
    let params = ProtocolParams::default();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for row in MEASURED_ROWS {
        let rows = sweep(&Scenario::Attack(profile(row.cycle_count)), &params, 0.0, 170.0, 0.25)
            .map_err(|e| e.to_string())?;
        for r in rows.iter().filter(|r| r.is_feasible()) {
            let target = normal_gain(params.mu, r.length_km, &params).map_err(|e| e.to_string())?;
            worst = worst.max(((r.q_mu.ok_or("missing q_mu")? - target) / target).abs());
            points += 1;
        }
    }
    ensure(points > 0 && worst <= 1e-12, || format!("max relative mismatch {worst:e} over {points} points"))?;
    Ok(format!("max relative mismatch {worst:.2e} over {points} feasible points"))
}

fn ac5() -> Check {
    let params = ProtocolParams::default();
    let mut parts = Vec::new();
    for l in [30.0, 50.0, 100.0] {
        let cfg = SessionConfig::solved(l, profile(500), &params, 100_000, 20_240_101).map_err(|e| e.to_string())?;
        if !cfg.solution.is_feasible() {
            parts.push(format!("{l} km infeasible, skipped"));
            continue;
        }
        let stats = simulate_session(&cfg, &params).map_err(|e| e.to_string())?;
        let rows = agreement(&stats, &cfg, &params).map_err(|e| e.to_string())?;
        let z = max_abs_z(&rows);
        ensure(z <= 4.0, || format!("{l} km: max |z| = {z:.2}"))?;
        parts.push(format!("{l} km max|z|={z:.2}"));
    }
    Ok(parts.join(", "))
}

fn ac6() -> Check {
    let base = MonitorParams::default();
    let q = fit_charge_per_pulse(&MEASURED_ROWS, &base, MEASURED_INTERVAL).map_err(|e| e.to_string())?;
    let m = MonitorParams { charge_per_pulse: q, ..base };
    let schedules: Vec<BlindingConfig> = MEASURED_ROWS
        .iter()
        .map(|r| BlindingConfig { interval: MEASURED_INTERVAL, ..BlindingConfig::with_cycles(r.cycle_count) })
        .collect();
    let rows = monitor_report(&schedules, &m).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (row, t) in rows.iter().zip(MEASURED_ROWS) {
        worst = worst.max((row.reported - t.reported_current).abs());
        ensure(!row.alarm, || format!("{}-cycle schedule alarms at {:e} A", row.cycle_count, row.reported))?;
    }
    ensure(worst <= 0.1e-6, || format!("worst deviation {:.3} uA", worst * 1e6))?;

    // A c.w.-equivalent schedule: one pulse per microsecond, slightly above
    // the energy that holds the monitor at the constant-blinding level.
    let (interval, period) = (1e-6, 25e-9);
    let e = constant_blinding_energy(interval, 1, period, &m).map_err(|e| e.to_string())?;
    let cw = BlindingConfig { cycle_count: 1, pulse_energy: 1.01 * e, interval, pulse_period: period, ..BlindingConfig::default() };
    let r = monitor_report(&[cw], &m).map_err(|e| e.to_string())?[0];
    ensure(r.reported > m.constant_blind_threshold && r.alarm && alarm(r.reported, &m), || {
        format!("c.w.-equivalent schedule reports {:.2} uA without alarm", r.reported * 1e6)
    })?;
    Ok(format!(
        "q={:.3} pC, worst deviation {:.3} uA, c.w. schedule {:.1} uA alarms",
        q * 1e12,
        worst * 1e6,
        r.reported * 1e6
    ))
}

fn ac7() -> Check {
    let params = ProtocolParams::default();
    let mut done = Vec::new();

    // Binary entropy: symmetric, concave, maximal at one half.
    let h = |x: f64| binary_entropy(x).unwrap();
    ensure(h(0.0) == 0.0 && h(1.0) == 0.0 && (h(0.5) - 1.0).abs() < 1e-15, || "entropy endpoints".into())?;
    for i in 1..1000 {
        let x = f64::from(i) / 1000.0;
        ensure((h(x) - h(1.0 - x)).abs() < 1e-12, || format!("entropy asymmetric at {x}"))?;
        ensure(h(x) <= 1.0, || format!("entropy above 1 at {x}"))?;
        if i > 1 && i < 999 {
            let d = 1e-3;
            ensure(h(x - d) + h(x + d) <= 2.0 * h(x) + 1e-12, || format!("entropy not concave at {x}"))?;
        }
    }
    ensure(binary_entropy(1.5).is_err(), || "entropy accepted 1.5".into())?;
    done.push("entropy");

    // Decoy bounds under honest statistics bracket the true single-photon values.
    for i in 0..=150 {
        let l = f64::from(i);
        let s = normal_stats(l, &params).map_err(|e| e.to_string())?;
        let est = decoy_bounds(s.q_mu, s.q_nu, s.e_nu, &params).map_err(|e| e.to_string())?;
        let (y1, e1) = honest_single_photon(l, &params).map_err(|e| e.to_string())?;
        ensure(est.y1_lower <= y1 * (1.0 + 1e-9), || format!("{l} km: Y1L {} > Y1 {y1}", est.y1_lower))?;
        if let Some(e1u) = est.e1_upper {
            ensure(e1u >= e1 * (1.0 - 1e-9), || format!("{l} km: e1U {e1u} < e1 {e1}"))?;
        }
    }
    done.push("decoy directions");

    // Real lower bound never exceeds the upper bound.
    for row in MEASURED_ROWS {
        let p = profile(row.cycle_count);
        for i in 0..=680 {
            let l = f64::from(i) * 0.25;
            let sol = solve_strategy(l, &p, &params).map_err(|e| e.to_string())?;
            if sol.is_feasible() {
                let (lo, hi) = real_rate_bounds(&sol, &p, &params).map_err(|e| e.to_string())?;
                ensure(lo <= hi, || format!("{} cycles at {l} km: {lo} > {hi}", row.cycle_count))?;
            }
        }
    }
    done.push("real bounds ordered");

    // Calibration recovers every configured blinded period.
    for row in MEASURED_ROWS {
        let p = profile(row.cycle_count);
        let t = build_timeline(&p, &BlindingConfig::with_cycles(row.cycle_count)).map_err(|e| e.to_string())?;
        let mut det = SimulatedDetector::with_default_response(t, &Default::default(), 17);
        let n = calibrate_blinded_period(&mut det, DEFAULT_PROBE_PHOTONS * PHOTON_ENERGY_1550NM)
            .map_err(|e| e.to_string())?;
        ensure(n == p.n_blind, || format!("{} cycles: calibrated {n}, configured {}", row.cycle_count, p.n_blind))?;
    }
    done.push("calibration round trip");

    // Full-control predicate is strict at E_always = 2 E_never.
    let edge = ControlEnergies::new(2.0, 1.5, 1.0).map_err(|e| e.to_string())?;
    let inside = ControlEnergies::new(1.999, 1.5, 1.0).map_err(|e| e.to_string())?;
    ensure(!full_control_condition(&edge) && full_control_condition(&inside), || "full-control boundary".into())?;
    done.push("full-control boundary");

    // Monitor current rises with pulse energy and falls with group spacing.
    let m = MonitorParams::default();
    let mk = |interval: f64, pulse_energy: f64| BlindingConfig {
        cycle_count: 20,
        interval,
        pulse_energy,
        ..BlindingConfig::default()
    };
    let by_interval: Vec<f64> = [4e-6, 8e-6, 16e-6, 32e-6]
        .iter()
        .map(|&i| monitor_report(&[mk(i, 10e-12)], &m).map(|r| r[0].reported))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let by_energy: Vec<f64> = [2e-12, 5e-12, 10e-12, 20e-12]
        .iter()
        .map(|&e| monitor_report(&[mk(8e-6, e)], &m).map(|r| r[0].reported))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(by_interval.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing in interval: {by_interval:?}"))?;
    ensure(by_energy.windows(2).all(|w| w[1] > w[0]), || format!("not increasing in energy: {by_energy:?}"))?;
    done.push("monitor monotonicity");

    // Splitting a group into several cycles needs about the same total energy.
    let one = constant_blinding_energy(6e-6, 1, 25e-9, &m).map_err(|e| e.to_string())?;
    for cycles in [2, 5, 20] {
        let split = constant_blinding_energy(6e-6, cycles, 25e-9, &m).map_err(|e| e.to_string())?;
        ensure(((split - one) / one).abs() < 0.05, || format!("{cycles} cycles: {split:e} vs {one:e}"))?;
    }
    done.push("cycle-split equivalence");

    Ok(done.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("AC1", "500-cycle crossover reproduction", ac1, 5),
        ("AC2", "crossover ordering across profiles", ac2, 20),
        ("AC3", "no-attack baseline", ac3, 5),
        ("AC4", "gain-match invariant", ac4, 5),
        ("AC5", "Monte Carlo oracle agreement", ac5, 60),
        ("AC6", "monitor fit and alarm", ac6, 5),
        ("AC7", "property suites", ac7, 30),
    ];
    let mut failures = 0;
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (verdict, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; exceeded {budget} s budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if verdict == "FAIL" {
            failures += 1;
        }
        println!("{id} {verdict} [{:.2} s / {budget} s] {name}: {detail}", elapsed.as_secs_f64());
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
