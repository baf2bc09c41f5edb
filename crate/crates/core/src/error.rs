use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("inconsistent window profile: {0}")]
    InconsistentProfile(String),

    #[error("channel length must be non-negative, got {0} km")]
    NegativeLength(f64),

    #[error("degenerate linear-mode response: E_never = {0} J is not positive")]
    DegenerateResponse(f64),

    #[error("calibration ambiguous: {0}")]
    CalibrationAmbiguous(String),

    #[error("energy grid does not bracket the click transition at gate {gate}")]
    GridTooNarrow { gate: usize },

    #[error("trace spans {have} s but at least {need} s is required")]
    InsufficientSpan { have: f64, need: f64 },

    #[error("singular least-squares fit: {0}")]
    SingularFit(String),

    #[error("threshold not reachable below {max_energy} J per group")]
    NotBlindable { max_energy: f64 },

    #[error("QBER undefined for zero gain")]
    UndefinedQber,

    #[error("attack solution is infeasible")]
    InfeasibleSolution,

    #[error("no built-in profile for {0}-cycle blinding")]
    UnknownCycleCount(u32),

    #[error("configuration: {0}")]
    Config(String),
}

pub(crate) fn check(cond: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: reason() })
    }
}
