//! Marked renewal process model of honey-bee colony size.

pub mod cyclic;
pub mod distributions;
pub mod error;
pub mod renewal;
pub mod rng;
pub mod scalar;
pub mod simulator;
pub mod stationary;

use num_rational::BigRational;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Pmf = distributions::IntegerPmf<f64>;
pub type ExactPmf = distributions::IntegerPmf<BigRational>;
pub type Renewal = renewal::RenewalSpec<f64>;
pub type ExactRenewal = renewal::RenewalSpec<BigRational>;
pub type Model = stationary::ColonyModel<f64>;
pub type ExactModel = stationary::ColonyModel<BigRational>;
pub type Cyclic = cyclic::CyclicModel<f64>;
pub type ExactCyclic = cyclic::CyclicModel<BigRational>;
