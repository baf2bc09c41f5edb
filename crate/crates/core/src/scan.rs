//! Distance sweeps of the whole pipeline and the two crossover distances:
//! where the estimated rate first exceeds the real lower bound, and where it
//! first exceeds the real upper bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{attacked_stats, normal_stats, solve_strategy, CaseTag};
use crate::error::{check, Result};
use crate::keyrate::{decoy_bounds, gllp_rate, real_rate_bounds};
use crate::params::{AttackWindowProfile, ProtocolParams};

/// Default sweep span and step (km).
pub const DEFAULT_SPAN: (f64, f64) = (0.0, 170.0);
pub const DEFAULT_STEP: f64 = 0.25;

/// Sign-sampling resolution used to bracket crossovers (km).
pub const BRACKET_STEP: f64 = 0.5;
/// Bisection stops once the bracket is narrower than this (km).
pub const BISECTION_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scenario {
    NoAttack,
    Attack(AttackWindowProfile),
}

/// One sweep point. Fields Eve's strategy does not determine are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub length_km: f64,
    /// `None` in no-attack mode.
    pub case: Option<CaseTag>,
    pub p: Option<f64>,
    pub gamma: Option<f64>,
    pub q_mu: Option<f64>,
    pub e_mu: Option<f64>,
    pub q_nu: Option<f64>,
    pub e_nu: Option<f64>,
    /// Decoy gain of the honest link, kept to show the decoy mismatch.
    pub q_nu_normal: f64,
    pub y1_lower: Option<f64>,
    pub e1_upper: Option<f64>,
    pub r_est: Option<f64>,
    pub r_real_lower: Option<f64>,
    pub r_real_upper: Option<f64>,
}

impl SweepRow {
    pub fn is_feasible(&self) -> bool {
        self.case != Some(CaseTag::Infeasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub l_overestimate: Option<f64>,
    pub l_insecure: Option<f64>,
    pub feasible_range: Option<(f64, f64)>,
}

impl CrossoverReport {
    pub const NONE: CrossoverReport = CrossoverReport { l_overestimate: None, l_insecure: None, feasible_range: None };
}

/// Runs the full pipeline at one channel length.
pub fn evaluate(scenario: &Scenario, params: &ProtocolParams, length_km: f64) -> Result<SweepRow> {
    params.validate()?;
    let honest = normal_stats(length_km, params)?;
    let mut row = SweepRow {
        length_km,
        case: None,
        p: None,
        gamma: None,
        q_mu: None,
        e_mu: None,
        q_nu: None,
        e_nu: None,
        q_nu_normal: honest.q_nu,
        y1_lower: None,
        e1_upper: None,
        r_est: None,
        r_real_lower: None,
        r_real_upper: None,
    };
    let stats = match scenario {
        Scenario::NoAttack => honest,
        Scenario::Attack(profile) => {
            let sol = solve_strategy(length_km, profile, params)?;
            row.case = Some(sol.case_tag());
            let Some(s) = sol.strategy() else {
                return Ok(row);
            };
            row.p = Some(s.p);
            row.gamma = Some(s.gamma);
            let (lo, hi) = real_rate_bounds(&sol, profile, params)?;
            row.r_real_lower = Some(lo);
            row.r_real_upper = Some(hi);
            attacked_stats(s, profile, params)?
        }
    };
    row.q_mu = Some(stats.q_mu);
    row.e_mu = Some(stats.e_mu);
    row.q_nu = Some(stats.q_nu);
    row.e_nu = Some(stats.e_nu);
    let est = decoy_bounds(stats.q_mu, stats.q_nu, stats.e_nu, params)?;
    row.y1_lower = Some(est.y1_lower);
    row.e1_upper = est.e1_upper;
    row.r_est = Some(gllp_rate(stats.q_mu, stats.e_mu, &est, params));
    Ok(row)
}

fn grid(l_start: f64, l_end: f64, step: f64) -> Vec<f64> {
    let n = ((l_end - l_start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| l_start + i as f64 * step).collect()
}

/// Evaluates every grid point in `[l_start, l_end]`. An empty range gives no rows.
pub fn sweep(
    scenario: &Scenario,
    params: &ProtocolParams,
    l_start: f64,
    l_end: f64,
    step: f64,
) -> Result<Vec<SweepRow>> {
    check(l_start >= 0.0, "l_start", || format!("{l_start} < 0"))?;
    check(step > 0.0 && step.is_finite(), "step", || format!("{step} is not a positive step"))?;
    if !(l_start < l_end) {
        return Ok(Vec::new());
    }
    grid(l_start, l_end, step).into_par_iter().map(|l| evaluate(scenario, params, l)).collect()
}

/// Bisects a predicate that is false at `lo` and true at `hi`.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, mut pred: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn feasible_at(profile: &AttackWindowProfile, params: &ProtocolParams, l: f64) -> Result<bool> {
    Ok(solve_strategy(l, profile, params)?.is_feasible())
}

/// Feasible sub-interval of `[l_min, l_max]`, assuming it is a single interval.
pub fn feasible_range(
    profile: &AttackWindowProfile,
    params: &ProtocolParams,
    l_min: f64,
    l_max: f64,
    sample_step: f64,
) -> Result<Option<(f64, f64)>> {
    let pts = grid(l_min, l_max, sample_step);
    let flags = pts.iter().map(|&l| feasible_at(profile, params, l)).collect::<Result<Vec<_>>>()?;
    let (Some(first), Some(last)) = (flags.iter().position(|&f| f), flags.iter().rposition(|&f| f)) else {
        return Ok(None);
    };
    let lo = if first == 0 {
        pts[0]
    } else {
        bisect(pts[first - 1], pts[first], 1e-6, |l| feasible_at(profile, params, l))?
    };
    let hi = if last + 1 == pts.len() {
        pts[last]
    } else {
        bisect(pts[last], pts[last + 1], 1e-6, |l| Ok(!feasible_at(profile, params, l)?))?
    };
    Ok(Some((lo, hi)))
}

/// First length in `[lo, hi]` where `g > 0`, bracketed by sign sampling.
fn first_crossing(
    lo: f64,
    hi: f64,
    sample_step: f64,
    g: impl Fn(f64) -> Result<f64>,
) -> Result<Option<f64>> {
    let mut pts = grid(lo, hi, sample_step);
    if pts.last().is_some_and(|&l| l < hi) {
        pts.push(hi);
    }
    let mut prev = None;
    for l in pts {
        if g(l)? > 0.0 {
            return match prev {
                None => Ok(Some(l)),
                Some(a) => Ok(Some(bisect(a, l, BISECTION_TOL, |x| Ok(g(x)? > 0.0))?)),
            };
        }
        prev = Some(l);
    }
    Ok(None)
}

pub fn find_crossovers(
    scenario: &Scenario,
    params: &ProtocolParams,
    l_min: f64,
    l_max: f64,
) -> Result<CrossoverReport> {
    find_crossovers_with_step(scenario, params, l_min, l_max, BRACKET_STEP)
}

/// As [`find_crossovers`] with a custom bracketing step.
pub fn find_crossovers_with_step(
    scenario: &Scenario,
    params: &ProtocolParams,
    l_min: f64,
    l_max: f64,
    sample_step: f64,
) -> Result<CrossoverReport> {
    params.validate()?;
    check(0.0 <= l_min && l_min < l_max, "l_min", || format!("need 0 <= l_min < l_max, got [{l_min}, {l_max}]"))?;
    check(sample_step > 0.0, "sample_step", || format!("{sample_step} <= 0"))?;
    let Scenario::Attack(profile) = scenario else {
        return Ok(CrossoverReport::NONE);
    };
    let Some((lo, hi)) = feasible_range(profile, params, l_min, l_max, sample_step)? else {
        return Ok(CrossoverReport::NONE);
    };
    let gap = |upper: bool| {
        move |l: f64| -> Result<f64> {
            let row = evaluate(scenario, params, l)?;
            let real = if upper { row.r_real_upper } else { row.r_real_lower };
            match (row.r_est, real) {
                (Some(est), Some(real)) => Ok(est - real),
                _ => Ok(f64::NEG_INFINITY),
            }
        }
    };
    Ok(CrossoverReport {
        l_overestimate: first_crossing(lo, hi, sample_step, gap(false))?,
        l_insecure: first_crossing(lo, hi, sample_step, gap(true))?,
        feasible_range: Some((lo, hi)),
    })
}
