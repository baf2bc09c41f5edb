//! Gate-level simulation of a BB84 session under the blinding attack, used as
//! an independent check of the closed-form attacked gains and error gains.
//!
//! Gates within one class of the timeline are exchangeable, so each interval
//! is simulated as staged binomial draws over gate classes and source
//! intensities. This has the same distribution as one Bernoulli trial per gate
//! at a fraction of the cost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{solve_strategy, total_error_gain, total_gain, AttackSolution, Strategy};
use crate::error::{check, Error, Result};
use crate::params::{AttackWindowProfile, ProtocolParams};

/// Labels for the three source intensities, in simulation order.
pub const OMEGA_LABELS: [&str; 3] = ["mu", "nu", "vac"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub length_km: f64,
    pub profile: AttackWindowProfile,
    pub solution: AttackSolution,
    /// Number of blinding-group intervals.
    pub intervals: u64,
    pub seed: u64,
    /// Probabilities of sending signal, decoy and vacuum.
    pub omega_probs: [f64; 3],
}

impl SessionConfig {
    pub fn new(length_km: f64, profile: AttackWindowProfile, solution: AttackSolution, intervals: u64, seed: u64) -> Self {
        Self { length_km, profile, solution, intervals, seed, omega_probs: [1.0 / 3.0; 3] }
    }

    /// Configuration using Eve's solved strategy at `length_km`.
    pub fn solved(
        length_km: f64,
        profile: AttackWindowProfile,
        params: &ProtocolParams,
        intervals: u64,
        seed: u64,
    ) -> Result<Self> {
        let solution = solve_strategy(length_km, &profile, params)?;
        Ok(Self::new(length_km, profile, solution, intervals, seed))
    }

    pub fn validate(&self) -> Result<Strategy> {
        check(self.intervals >= 1, "intervals", || "need at least one interval".into())?;
        let sum: f64 = self.omega_probs.iter().sum();
        check(
            self.omega_probs.iter().all(|&x| x >= 0.0) && (sum - 1.0).abs() < 1e-9,
            "omega_probs",
            || format!("{:?} is not a distribution", self.omega_probs),
        )?;
        if self.profile.n_dead == 0 {
            return Err(Error::InconsistentProfile("simulation needs a blinding group with dead gates".into()));
        }
        self.solution.strategy().ok_or(Error::InfeasibleSolution)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaCounts {
    pub gates: u64,
    pub clicks: u64,
    pub errors: u64,
}

impl OmegaCounts {
    fn add(self, o: Self) -> Self {
        Self { gates: self.gates + o.gates, clicks: self.clicks + o.clicks, errors: self.errors + o.errors }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub intervals: u64,
    /// Indexed like [`OMEGA_LABELS`].
    pub counts: [OmegaCounts; 3],
}

fn rate(k: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

fn binomial_se(x: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (x * (1.0 - x) / n as f64).sqrt()
    }
}

impl EmpiricalStats {
    pub fn gain(&self, k: usize) -> f64 {
        rate(self.counts[k].clicks, self.counts[k].gates)
    }

    /// Wrong-bit clicks per gate.
    pub fn error_gain(&self, k: usize) -> f64 {
        rate(self.counts[k].errors, self.counts[k].gates)
    }

    pub fn qber(&self, k: usize) -> Option<f64> {
        (self.counts[k].clicks > 0).then(|| rate(self.counts[k].errors, self.counts[k].clicks))
    }

    pub fn gain_se(&self, k: usize) -> f64 {
        binomial_se(self.gain(k), self.counts[k].gates)
    }

    pub fn error_gain_se(&self, k: usize) -> f64 {
        binomial_se(self.error_gain(k), self.counts[k].gates)
    }
}

fn binom<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).map(|b| b.sample(rng)).unwrap_or(0)
    }
}

/// Splits `n` gates over the three intensities.
fn split<R: Rng>(rng: &mut R, n: u64, probs: &[f64; 3]) -> [u64; 3] {
    let a = binom(rng, n, probs[0]);
    let rest = 1.0 - probs[0];
    let b = if rest > 0.0 { binom(rng, n - a, probs[1] / rest) } else { 0 };
    [a, b, n - a - b]
}

struct Plan {
    silent: u64,
    control: u64,
    normal: u64,
    intensities: [f64; 3],
    probs: [f64; 3],
    s: Strategy,
    e0: f64,
    e_det: f64,
    y0: f64,
    /// Passed-signal click probability per intensity.
    signal: [f64; 3],
}

fn simulate_interval(plan: &Plan, seed: u64, index: u64) -> [OmegaCounts; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut out = [OmegaCounts::default(); 3];

    // Gate 0: the blinding group forces a click carrying a random bit.
    let u: f64 = rng.random();
    let k0 = if u < plan.probs[0] {
        0
    } else if u < plan.probs[0] + plan.probs[1] {
        1
    } else {
        2
    };
    out[k0].gates += 1;
    out[k0].clicks += 1;
    out[k0].errors += u64::from(rng.random_bool(plan.e0));

    for (k, n) in split(&mut rng, plan.silent, &plan.probs).into_iter().enumerate() {
        out[k].gates += n;
    }

    for (k, n) in split(&mut rng, plan.control, &plan.probs).into_iter().enumerate() {
        let omega = plan.intensities[k];
        let intercepted = binom(&mut rng, n, plan.s.p);
        let detected = binom(&mut rng, intercepted, -(-omega).exp_m1());
        // A basis mismatch at Bob halves the trigger energy: no click.
        let clicks = binom(&mut rng, detected, 0.5);
        out[k].gates += n;
        out[k].clicks += clicks;
        out[k].errors += binom(&mut rng, clicks, plan.e_det);
    }

    for (k, n) in split(&mut rng, plan.normal, &plan.probs).into_iter().enumerate() {
        let passed = binom(&mut rng, n, plan.s.gamma);
        let sig = plan.signal[k];
        let signal = binom(&mut rng, passed, sig);
        let dark_rest = if sig < 1.0 { (plan.y0 / (1.0 - sig)).min(1.0) } else { 0.0 };
        let dark = binom(&mut rng, passed - signal, dark_rest) + binom(&mut rng, n - passed, plan.y0);
        out[k].gates += n;
        out[k].clicks += signal + dark;
        out[k].errors += binom(&mut rng, signal, plan.e_det) + binom(&mut rng, dark, plan.e0);
    }
    out
}

/// Simulates `cfg.intervals` blinding intervals. Intervals draw from
/// independent RNG streams, so the result does not depend on scheduling.
pub fn simulate_session(cfg: &SessionConfig, params: &ProtocolParams) -> Result<EmpiricalStats> {
    params.validate()?;
    let s = cfg.validate()?;
    let p = &cfg.profile;
    let intensities = [params.mu, params.nu, 0.0];
    let plan = Plan {
        silent: p.n_dead - 1 + (p.n_blind - p.n_control),
        control: p.n_control,
        normal: p.n_normal(),
        intensities,
        probs: cfg.omega_probs,
        s,
        e0: params.e0,
        e_det: params.e_det,
        y0: params.y0,
        signal: intensities.map(|w| -(-params.eta_bob * w).exp_m1()),
    };
    let counts = (0..cfg.intervals)
        .into_par_iter()
        .map(|i| simulate_interval(&plan, cfg.seed, i))
        .reduce(
            || [OmegaCounts::default(); 3],
            |a, b| [a[0].add(b[0]), a[1].add(b[1]), a[2].add(b[2])],
        );
    Ok(EmpiricalStats { intervals: cfg.intervals, counts })
}

/// One empirical quantity against its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// `q_<omega>` for gains, `eq_<omega>` for error gains.
    pub label: String,
    pub empirical: f64,
    pub analytic: f64,
    /// Binomial standard error at the analytic value.
    pub sigma: f64,
    pub z_score: f64,
}

/// Compares gains and error gains for every intensity.
pub fn agreement(stats: &EmpiricalStats, cfg: &SessionConfig, params: &ProtocolParams) -> Result<Vec<Agreement>> {
    let s = cfg.validate()?;
    let intensities = [params.mu, params.nu, 0.0];
    let mut out = Vec::with_capacity(6);
    for (k, &omega) in intensities.iter().enumerate() {
        let n = stats.counts[k].gates;
        let pairs = [
            ("q", stats.gain(k), total_gain(omega, s, &cfg.profile, params)),
            ("eq", stats.error_gain(k), total_error_gain(omega, s, &cfg.profile, params)),
        ];
        for (prefix, empirical, analytic) in pairs {
            let sigma = binomial_se(analytic, n);
            let z_score = if sigma > 0.0 {
                (empirical - analytic) / sigma
            } else if empirical == analytic {
                0.0
            } else {
                f64::INFINITY
            };
            out.push(Agreement { label: format!("{prefix}_{}", OMEGA_LABELS[k]), empirical, analytic, sigma, z_score });
        }
    }
    Ok(out)
}

pub fn max_abs_z(rows: &[Agreement]) -> f64 {
    rows.iter().map(|a| a.z_score.abs()).fold(0.0, f64::max)
}
