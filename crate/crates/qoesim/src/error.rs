//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is missing, malformed, or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// No profile of the application can satisfy a client type's MoS floor.
    #[error("no profile reaches the MoS floor {floor} of client type {level}")]
    InfeasibleSla { level: u8, floor: f64 },

    /// A UE cannot carry any traffic (zero bits per PRB).
    #[error("UE {ue} is unservable: channel supports zero bits per PRB")]
    UnservableUe { ue: u32 },

    /// Baseline profiles alone exceed the PRB budget; admission must trim first.
    #[error("baseline allocation needs {needed} PRBs but the budget is {budget}")]
    BaselineInfeasible { needed: u32, budget: u32 },

    /// EPON capacity cannot cover backhaul plus wired minimums.
    #[error("EPON capacity short by {shortfall:.3} Mbps for backhaul plus wired minimums")]
    CapacityInfeasible { shortfall: f64 },

    /// An exhaustive search was asked to enumerate too many assignments.
    #[error("instance too large for exhaustive search: {vectors} choice vectors")]
    InstanceTooLarge { vectors: u128 },

    /// An ONU was granted less than its guaranteed minimum.
    #[error("grant {grant:.3} Mbps is below the ONU minimum {min:.3} Mbps")]
    GrantBelowMinimum { grant: f64, min: f64 },

    /// A failure inside a simulation run, tagged with the TTI it occurred in.
    #[error("tti {tti}: {source}")]
    InRun {
        tti: u32,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Walks `InRun` wrappers down to the root cause.
    pub fn root(&self) -> &Error {
        match self {
            Error::InRun { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn at_tti(self, tti: u32) -> Error {
        Error::InRun {
            tti,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
