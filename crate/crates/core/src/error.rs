use thiserror::Error;

/// Failures surfaced by state construction, distribution builders and the
/// CH-ratio machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("local-oscillator amplitude {amplitude} exceeds the count-window table bound {max}")]
    WindowOverflow { amplitude: f64, max: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("captured probability mass is short by {deficit:e} (limit {limit:e})")]
    MassDeficit { deficit: f64, limit: f64 },

    #[error("CH denominator {0:e} is degenerate")]
    DegenerateDenominator(f64),

    #[error(
        "S(sigma) rose from {s_before} at sigma = {sigma_before} to {s_after} at sigma = {sigma_after}"
    )]
    NonMonotone {
        sigma_before: f64,
        s_before: f64,
        sigma_after: f64,
        s_after: f64,
    },

    #[error("S(sigma) still exceeds 1 at the end of the scan (sigma = {0})")]
    CutoffNotBracketed(f64),

    #[error("truncated Fock tensor misses {0:e} of the norm")]
    CutoffMass(f64),
}

impl Error {
    /// True for failures of a numerical guard (as opposed to bad input).
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::MassDeficit { .. }
                | Error::DegenerateDenominator(_)
                | Error::NonMonotone { .. }
                | Error::CutoffNotBracketed(_)
                | Error::CutoffMass(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        reason,
    }
}
