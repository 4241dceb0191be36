use thiserror::Error;

/// Errors raised by the solvers and the domain model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ambulance placed on zone {zone}, which is not a base")]
    InvalidPlacement { zone: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("total benefit {total} lies outside the benefit bounds [{lower}, {upper}]")]
    InconsistentBounds {
        total: String,
        lower: String,
        upper: String,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("exhaustive search needs more than {budget} nodes")]
    OracleTooLarge { budget: u64 },

    #[error("state space of {states} exceeds the budget of {budget}")]
    StateBudget { states: u128, budget: u64 },

    #[error("simplex stalled after {iterations} iterations: {log}")]
    SolverFailure { iterations: usize, log: String },

    #[error("no configuration meets the coverage floor")]
    PricingInfeasible,

    #[error("iteration cap of {cap} exceeded")]
    IterationCap { cap: u64 },

    #[error("no closed-form construction is guaranteed: {0}")]
    NotGuaranteed(String),

    #[error("instance generation failed: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
