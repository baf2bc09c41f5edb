//! Gains and QBER under the pulse-illumination attack, the honest-channel
//! baseline, and Eve's gain-matching strategy.
//!
//! Eve keeps the signal-state gain at its normal value by tuning two knobs:
//! `p`, the fraction of fully controllable gates she fills with fake states,
//! and `gamma`, the fraction of unblinded gates in which she forwards Alice's
//! pulse over a lossless line instead of blocking it. She prefers `p = 1,
//! gamma = 0`; when that overshoots the normal gain she lowers `p` (case I),
//! when it undershoots she raises `gamma` (case II).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{channel_transmittance, AttackWindowProfile, ProtocolParams};

/// `1 - e^{-x}` without cancellation for small `x`.
pub(crate) fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// A point in Eve's strategy space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub p: f64,
    pub gamma: f64,
}

impl Strategy {
    pub fn new(p: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("gamma", gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter { name, reason: format!("{v} not in [0,1]") });
            }
        }
        Ok(Self { p, gamma })
    }

    /// Eve does nothing in the controllable window and blocks every unblinded gate.
    pub const IDLE: Strategy = Strategy { p: 0.0, gamma: 0.0 };
    /// Full fake-state attack, everything else blocked.
    pub const MAXIMAL: Strategy = Strategy { p: 1.0, gamma: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    CaseI,
    CaseII,
    Infeasible,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::CaseI => "CASE_I",
            CaseTag::CaseII => "CASE_II",
            CaseTag::Infeasible => "INFEASIBLE",
        })
    }
}

/// Eve's solved strategy at one channel length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AttackSolution {
    /// `gamma = 0`, fake-state fraction reduced to `p`.
    CaseI { p: f64 },
    /// `p = 1`, a fraction `gamma` of unblinded signals forwarded.
    CaseII { gamma: f64 },
    /// Eve cannot match the normal gain at this length.
    Infeasible,
}

impl AttackSolution {
    pub fn case_tag(&self) -> CaseTag {
        match self {
            AttackSolution::CaseI { .. } => CaseTag::CaseI,
            AttackSolution::CaseII { .. } => CaseTag::CaseII,
            AttackSolution::Infeasible => CaseTag::Infeasible,
        }
    }

    pub fn strategy(&self) -> Option<Strategy> {
        match *self {
            AttackSolution::CaseI { p } => Some(Strategy { p, gamma: 0.0 }),
            AttackSolution::CaseII { gamma } => Some(Strategy { p: 1.0, gamma }),
            AttackSolution::Infeasible => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, AttackSolution::Infeasible)
    }
}

/// Gains and QBERs for the three source intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainStats {
    pub q_mu: f64,
    pub q_nu: f64,
    pub q_vac: f64,
    pub e_mu: f64,
    pub e_nu: f64,
}

/// Gain of Eve's ideal intercept followed by a basis-matched resend.
pub fn gain_eve(omega: f64) -> f64 {
    0.5 * one_minus_exp_neg(omega)
}

/// Gain when Eve forwards Alice's pulse over a lossless line.
pub fn gain_pass(omega: f64, params: &ProtocolParams) -> f64 {
    params.y0 + one_minus_exp_neg(params.eta_bob * omega)
}

/// `E^pass * Q^pass` for a forwarded pulse.
pub fn error_gain_pass(omega: f64, params: &ProtocolParams) -> f64 {
    params.e0 * params.y0 + params.e_det * one_minus_exp_neg(params.eta_bob * omega)
}

pub fn total_gain(
    omega: f64,
    s: Strategy,
    profile: &AttackWindowProfile,
    params: &ProtocolParams,
) -> f64 {
    let unblinded = 1.0 - profile.beta;
    1.0 / profile.n_interval as f64
        + s.p * gain_eve(omega) * profile.alpha
        + unblinded * (s.gamma * gain_pass(omega, params) + (1.0 - s.gamma) * params.y0)
}

/// Numerator of the attacked QBER, i.e. `E_omega * Q_omega`.
pub fn total_error_gain(
    omega: f64,
    s: Strategy,
    profile: &AttackWindowProfile,
    params: &ProtocolParams,
) -> f64 {
    let unblinded = 1.0 - profile.beta;
    params.e0 / profile.n_interval as f64
        + s.p * gain_eve(omega) * profile.alpha * params.e_det
        + unblinded
            * (s.gamma * error_gain_pass(omega, params) + (1.0 - s.gamma) * params.y0 * params.e0)
}

pub fn total_qber(
    omega: f64,
    s: Strategy,
    profile: &AttackWindowProfile,
    params: &ProtocolParams,
) -> Result<f64> {
    let q = total_gain(omega, s, profile, params);
    if !(q > 0.0) {
        return Err(Error::UndefinedQber);
    }
    Ok(total_error_gain(omega, s, profile, params) / q)
}

pub fn attacked_stats(s: Strategy, profile: &AttackWindowProfile, params: &ProtocolParams) -> Result<GainStats> {
    Ok(GainStats {
        q_mu: total_gain(params.mu, s, profile, params),
        q_nu: total_gain(params.nu, s, profile, params),
        q_vac: total_gain(0.0, s, profile, params),
        e_mu: total_qber(params.mu, s, profile, params)?,
        e_nu: total_qber(params.nu, s, profile, params)?,
    })
}

fn normal_mean_detected(omega: f64, length_km: f64, params: &ProtocolParams) -> Result<f64> {
    let eta_ch = channel_transmittance(length_km, params.loss_coeff)?;
    Ok(one_minus_exp_neg(params.eta_bob * eta_ch * omega))
}

/// Gain of the honest link at `length_km`.
pub fn normal_gain(omega: f64, length_km: f64, params: &ProtocolParams) -> Result<f64> {
    Ok(params.y0 + normal_mean_detected(omega, length_km, params)?)
}

pub fn normal_error_gain(omega: f64, length_km: f64, params: &ProtocolParams) -> Result<f64> {
    Ok(params.e0 * params.y0 + params.e_det * normal_mean_detected(omega, length_km, params)?)
}

pub fn normal_qber(omega: f64, length_km: f64, params: &ProtocolParams) -> Result<f64> {
    let q = normal_gain(omega, length_km, params)?;
    if !(q > 0.0) {
        return Err(Error::UndefinedQber);
    }
    Ok(normal_error_gain(omega, length_km, params)? / q)
}

pub fn normal_stats(length_km: f64, params: &ProtocolParams) -> Result<GainStats> {
    Ok(GainStats {
        q_mu: normal_gain(params.mu, length_km, params)?,
        q_nu: normal_gain(params.nu, length_km, params)?,
        q_vac: normal_gain(0.0, length_km, params)?,
        e_mu: normal_qber(params.mu, length_km, params)?,
        e_nu: normal_qber(params.nu, length_km, params)?,
    })
}

/// Solves for the strategy that reproduces the normal signal-state gain.
///
/// Out-of-range `p` or `gamma` yield [`AttackSolution::Infeasible`] rather
/// than being clamped, so every feasible solution matches the gain exactly.
pub fn solve_strategy(
    length_km: f64,
    profile: &AttackWindowProfile,
    params: &ProtocolParams,
) -> Result<AttackSolution> {
    let mu = params.mu;
    let target = normal_gain(mu, length_km, params)?;
    let unblinded = 1.0 - profile.beta;
    let click = 1.0 / profile.n_interval as f64;
    let fake = gain_eve(mu) * profile.alpha;

    if total_gain(mu, Strategy::MAXIMAL, profile, params) >= target {
        if fake <= 0.0 {
            return Ok(AttackSolution::Infeasible);
        }
        let p = (target - click - unblinded * params.y0) / fake;
        if !(0.0..=1.0).contains(&p) {
            return Ok(AttackSolution::Infeasible);
        }
        Ok(AttackSolution::CaseI { p })
    } else {
        let slope = unblinded * (gain_pass(mu, params) - params.y0);
        if slope <= 0.0 {
            return Ok(AttackSolution::Infeasible);
        }
        let gamma = (target - click - fake - unblinded * params.y0) / slope;
        if !(0.0..=1.0).contains(&gamma) {
            return Ok(AttackSolution::Infeasible);
        }
        Ok(AttackSolution::CaseII { gamma })
    }
}
