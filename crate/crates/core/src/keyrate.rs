//! Decoy-state single-photon bounds, the GLLP rate Alice and Bob estimate,
//! and the real rate bounds when the link is under attack.

use serde::{Deserialize, Serialize};

use crate::attack::{error_gain_pass, gain_pass, AttackSolution};
use crate::error::{Error, Result};
use crate::params::{AttackWindowProfile, ProtocolParams};

/// Shannon binary entropy in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter { name: "x", reason: format!("{x} not in [0,1]") });
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Entropy of an error rate clamped into `[0, 1/2]`.
fn clamped_entropy(e: f64) -> f64 {
    binary_entropy(e.clamp(0.0, 0.5)).unwrap_or(1.0)
}

/// Lower bound on the single-photon yield and upper bound on its error rate.
///
/// A non-positive yield bound is floored to zero and leaves `e1_upper` unset;
/// such an estimate contributes no key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyEstimates {
    pub y1_lower: f64,
    pub e1_upper: Option<f64>,
}

impl DecoyEstimates {
    pub const DEGENERATE: DecoyEstimates = DecoyEstimates { y1_lower: 0.0, e1_upper: None };

    pub fn is_degenerate(&self) -> bool {
        self.e1_upper.is_none()
    }
}

/// Key rates per gate at one channel length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateTriple {
    pub r_est_lower: f64,
    pub r_real_lower: f64,
    pub r_real_upper: f64,
    /// Set when any of the three was negative before flooring at zero.
    pub floored: bool,
}

pub fn decoy_bounds(q_mu: f64, q_nu: f64, e_nu: f64, params: &ProtocolParams) -> Result<DecoyEstimates> {
    let (mu, nu, y0) = (params.mu, params.nu, params.y0);
    if !(nu > 0.0 && nu < mu) {
        return Err(Error::InvalidParameter { name: "nu", reason: format!("need 0 < nu < mu, got {nu}") });
    }
    for (name, q) in [("q_mu", q_mu), ("q_nu", q_nu)] {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidParameter { name, reason: format!("{q} not in (0,1]") });
        }
    }
    let y1 = mu / (mu * nu - nu * nu)
        * (q_nu * nu.exp() - q_mu * mu.exp() * nu * nu / (mu * mu) - (mu * mu - nu * nu) / (mu * mu) * y0);
    if !(y1 > 0.0) {
        return Ok(DecoyEstimates::DEGENERATE);
    }
    let e1 = (e_nu * q_nu * nu.exp() - params.e0 * y0) / (y1 * nu);
    Ok(DecoyEstimates { y1_lower: y1, e1_upper: Some(e1) })
}

/// GLLP rate before flooring at zero.
pub fn gllp_rate_unfloored(q_mu: f64, e_mu: f64, est: &DecoyEstimates, params: &ProtocolParams) -> f64 {
    let mu = params.mu;
    let single = match est.e1_upper {
        Some(e1) => mu * (-mu).exp() * est.y1_lower * (1.0 - clamped_entropy(e1)),
        None => 0.0,
    };
    params.q_sift * (-q_mu * params.f_ec * clamped_entropy(e_mu) + single)
}

/// Lower bound on the key rate Alice and Bob estimate from observed statistics.
pub fn gllp_rate(q_mu: f64, e_mu: f64, est: &DecoyEstimates, params: &ProtocolParams) -> f64 {
    gllp_rate_unfloored(q_mu, e_mu, est, params).max(0.0)
}

/// Yield and error rate of single photons Eve actually forwards.
pub fn real_single_photon(params: &ProtocolParams) -> (f64, f64) {
    let y1 = params.y0 + params.eta_bob - params.y0 * params.eta_bob;
    let e1 = (params.e_det * params.eta_bob + params.e0 * params.y0) / y1;
    (y1, e1)
}

/// Single-photon yield and error rate of the honest link at `length_km`,
/// consistent with the gain model `Q = Y0 + 1 - e^{-eta * omega}`.
pub fn honest_single_photon(length_km: f64, params: &ProtocolParams) -> Result<(f64, f64)> {
    let eta = params.eta_bob * crate::params::channel_transmittance(length_km, params.loss_coeff)?;
    let y1 = params.y0 + eta;
    Ok((y1, (params.e0 * params.y0 + params.e_det * eta) / y1))
}

/// Real lower and upper key-rate bounds before flooring.
pub fn real_rate_bounds_unfloored(
    sol: &AttackSolution,
    profile: &AttackWindowProfile,
    params: &ProtocolParams,
) -> Result<(f64, f64)> {
    let s = sol.strategy().ok_or(Error::InfeasibleSolution)?;
    let mu = params.mu;
    let (y1, e1) = real_single_photon(params);
    let prefactor = 0.5 * (1.0 - profile.beta) * s.gamma;
    let single = mu * (-mu).exp() * y1 * (1.0 - clamped_entropy(e1));
    let q_pass = gain_pass(mu, params);
    let e_pass = error_gain_pass(mu, params) / q_pass;
    let leak = q_pass * params.f_ec * clamped_entropy(e_pass);
    Ok((prefactor * (single - leak), prefactor * single))
}

/// Real lower and upper key-rate bounds, floored at zero.
pub fn real_rate_bounds(
    sol: &AttackSolution,
    profile: &AttackWindowProfile,
    params: &ProtocolParams,
) -> Result<(f64, f64)> {
    let (lo, hi) = real_rate_bounds_unfloored(sol, profile, params)?;
    Ok((lo.max(0.0), hi.max(0.0)))
}
