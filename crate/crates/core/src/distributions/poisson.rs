use super::IntegerPmf;
use crate::error::{Error, Result};

/// Tail mass dropped when a Poisson law is stored as a finite PMF.
pub const POISSON_TAIL_EPS: f64 = 1e-12;

/// `ln P(X = k)` for `X ~ Pn(lambda)`, `lambda > 0`.
pub fn poisson_ln_pmf(lambda: f64, k: u64) -> f64 {
    let k = k as f64;
    k * lambda.ln() - lambda - libm::lgamma(k + 1.0)
}

/// `P(X < threshold)` for `X ~ Pn(lambda)`.
pub fn poisson_cdf_below(lambda: f64, threshold: u64) -> f64 {
    if threshold == 0 {
        return 0.0;
    }
    if lambda == 0.0 {
        return 1.0;
    }
    let mut total = 0.0;
    for k in (0..threshold).rev() {
        let term = poisson_ln_pmf(lambda, k).exp();
        total += term;
        if (k as f64) < lambda && term < total * 1e-18 {
            break;
        }
    }
    total.min(1.0)
}

/// Poisson law truncated to the central range holding all but `tail_eps`
/// of the mass, renormalized.
pub fn truncated_poisson(lambda: f64, tail_eps: f64) -> Result<IntegerPmf> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidRate(format!("Poisson mean {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(IntegerPmf::point_mass(0));
    }
    let hi = (lambda + 40.0 * lambda.sqrt() + 60.0).ceil() as u64;
    let probs: Vec<f64> = (0..=hi).map(|k| poisson_ln_pmf(lambda, k).exp()).collect();

    let half = 0.5 * tail_eps;
    let mut lo = 0usize;
    let mut lower = 0.0;
    while lo < probs.len() && lower + probs[lo] < half {
        lower += probs[lo];
        lo += 1;
    }
    let mut top = probs.len() - 1;
    let mut upper = 0.0;
    while top > lo && upper + probs[top] < half {
        upper += probs[top];
        top -= 1;
    }
    IntegerPmf::from_weights(lo as u64, probs[lo..=top].to_vec())
}
