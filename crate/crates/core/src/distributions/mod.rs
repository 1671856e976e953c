//! Integer-valued laws: the PMF carrier, discretized skew-normal lifetimes,
//! truncated Poisson batches and fast samplers.

mod pmf;
mod poisson;
mod sampler;
mod skew_normal;

pub use pmf::{mixed_binomial_moments, tv_distance, HatchProbability, IntegerPmf, PmfRecord};
pub use poisson::{poisson_cdf_below, poisson_ln_pmf, truncated_poisson, POISSON_TAIL_EPS};
pub use sampler::{binomial, merge_same_day_batches, AliasSampler};
pub use skew_normal::{
    normal_cdf, normal_pdf, skew_normal_cdf, SkewNormalParams, DEFAULT_TAIL_EPS,
};
