//! Byte-stable text output: CSV tables and `key=value` reports, each preceded
//! by `#` comment lines echoing the effective configuration.

use std::io::{self, Write};

use crate::detector::CalibrationRecord;
use crate::monitor::{MonitorRow, PhotocurrentTrace};
use crate::montecarlo::Agreement;
use crate::scan::{CrossoverReport, SweepRow};

pub const SWEEP_HEADER: &str =
    "length_km,case,p,gamma,q_mu,e_mu,q_nu,e_nu,q_nu_normal,y1_lower,e1_upper,r_est,r_real_lower,r_real_upper";
pub const CALIBRATION_HEADER: &str = "gate_index,e_never_j,e_half_j,e_always_j,fully_controllable";
pub const MONITOR_HEADER: &str = "cycle_count,interval_s,reported_uA,alarm";
pub const TRACE_HEADER: &str = "t_s,i_amp";

/// Nine significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_header<W: Write>(w: &mut W, entries: &[(&str, String)]) -> io::Result<()> {
    for (k, v) in entries {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

pub fn write_sweep<W: Write>(w: &mut W, entries: &[(&str, String)], rows: &[SweepRow]) -> io::Result<()> {
    write_header(w, entries)?;
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        let case = r.case.map_or_else(|| "NO_ATTACK".to_owned(), |c| c.to_string());
        let fields = [
            num(r.length_km),
            case,
            opt(r.p),
            opt(r.gamma),
            opt(r.q_mu),
            opt(r.e_mu),
            opt(r.q_nu),
            opt(r.e_nu),
            num(r.q_nu_normal),
            opt(r.y1_lower),
            opt(r.e1_upper),
            opt(r.r_est),
            opt(r.r_real_lower),
            opt(r.r_real_upper),
        ];
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_crossover<W: Write>(w: &mut W, entries: &[(&str, String)], r: &CrossoverReport) -> io::Result<()> {
    let show = |x: Option<f64>| x.map_or_else(|| "NONE".to_owned(), num);
    write_header(w, entries)?;
    writeln!(w, "l_overestimate_km={}", show(r.l_overestimate))?;
    writeln!(w, "l_insecure_km={}", show(r.l_insecure))?;
    writeln!(w, "feasible_min_km={}", show(r.feasible_range.map(|f| f.0)))?;
    writeln!(w, "feasible_max_km={}", show(r.feasible_range.map(|f| f.1)))
}

pub fn write_calibration<W: Write>(
    w: &mut W,
    entries: &[(&str, String)],
    rows: &[CalibrationRecord],
) -> io::Result<()> {
    write_header(w, entries)?;
    writeln!(w, "{CALIBRATION_HEADER}")?;
    for r in rows {
        let e = &r.energies;
        writeln!(
            w,
            "{},{},{},{},{}",
            r.gate_index,
            num(e.e_never),
            num(e.e_half),
            num(e.e_always),
            u8::from(r.fully_controllable)
        )?;
    }
    Ok(())
}

pub fn write_monitor<W: Write>(w: &mut W, entries: &[(&str, String)], rows: &[MonitorRow]) -> io::Result<()> {
    write_header(w, entries)?;
    writeln!(w, "{MONITOR_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.cycle_count, num(r.interval), num(r.reported * 1e6), u8::from(r.alarm))?;
    }
    Ok(())
}

pub fn write_trace<W: Write>(w: &mut W, entries: &[(&str, String)], trace: &PhotocurrentTrace) -> io::Result<()> {
    write_header(w, entries)?;
    writeln!(w, "{TRACE_HEADER}")?;
    for (i, s) in trace.samples.iter().enumerate() {
        writeln!(w, "{},{}", num(trace.time(i)), num(*s))?;
    }
    Ok(())
}

/// Monte Carlo agreement summary: `<label>_emp`, `<label>_analytic`,
/// `<label>_sigma` and `<label>_z_score` per quantity, then the worst `z_score`.
pub fn write_agreement<W: Write>(w: &mut W, entries: &[(&str, String)], rows: &[Agreement]) -> io::Result<()> {
    write_header(w, entries)?;
    for a in rows {
        writeln!(w, "{}_emp={}", a.label, num(a.empirical))?;
        writeln!(w, "{}_analytic={}", a.label, num(a.analytic))?;
        writeln!(w, "{}_sigma={}", a.label, num(a.sigma))?;
        writeln!(w, "{}_z_score={}", a.label, num(a.z_score))?;
    }
    writeln!(w, "z_score={}", num(crate::montecarlo::max_abs_z(rows)))
}
