use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative weight {weight} at value {value}")]
    NegativeWeight { value: u64, weight: f64 },
    #[error("all weights are zero")]
    AllZero,
    #[error("non-finite weight at value {value}")]
    NonFinite { value: u64 },
    #[error("invalid skew-normal scale {0} (must be finite and >= 0)")]
    InvalidScale(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid probability {0} (must lie in [0, 1])")]
    InvalidProbability(f64),
    #[error("inter-batch law puts mass on 0")]
    ZeroSupport,
    #[error("inter-batch law has period {0} > 1")]
    PeriodicSupport(u64),
    #[error("renewal table covers n <= {available}, but n = {needed} was requested")]
    TableTooShort { needed: u64, available: u64 },
    #[error("expected u <= v, got u = {u}, v = {v}")]
    BadOrder { u: u64, v: u64 },
    #[error("variance evaluated to {0} < 0")]
    NegativeVarianceComputed(f64),
    #[error("inter-batch law is not degenerate")]
    NonDegenerateTau,
    #[error("characteristic-function inversion left {clipped_mass:e} of negative mass")]
    InversionResidual { clipped_mass: f64 },
    #[error("invalid rate: {0}")]
    InvalidRate(String),
    #[error("day {day} is not past the lifetime bound {bound}")]
    DayBeforeStationarity { day: i64, bound: u64 },
    #[error("egg-batch law is not Poisson")]
    NotPoissonModel,
    #[error("no extinction threshold configured")]
    MissingThreshold,
    #[error("trace contains no swarm events")]
    NoSwarmEvents,
    #[error("invalid seasonal profile: {0}")]
    InvalidProfile(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}
