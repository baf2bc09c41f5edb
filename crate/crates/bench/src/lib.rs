//! Fixtures shared by the pipeline benchmarks.

use pulseblind::{AttackWindowProfile, ProtocolParams, Scenario};

/// The 500-cycle attack with default protocol parameters.
pub fn attack_500() -> (Scenario, ProtocolParams) {
    let profile = AttackWindowProfile::measured(500).expect("500-cycle profile is built in");
    (Scenario::Attack(profile), ProtocolParams::default())
}
