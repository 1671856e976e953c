use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Binomial, Distribution};

use super::IntegerPmf;
use crate::error::{Error, Result};

/// `Bin(n, p)` draw; `p` is clamped into `[0, 1]` against rounding.
pub fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

/// O(1) sampler for a fixed PMF (Walker alias table).
#[derive(Debug, Clone)]
pub struct AliasSampler {
    min_value: u64,
    /// Weights kept for the conditional-binomial multinomial path.
    probs: Vec<f64>,
    alias: Option<WeightedAliasIndex<f64>>,
}

impl AliasSampler {
    pub fn new(pmf: &IntegerPmf) -> Self {
        let alias = if pmf.is_point_mass() {
            None
        } else {
            Some(WeightedAliasIndex::new(pmf.probs().to_vec()).expect("valid PMF weights"))
        };
        Self {
            min_value: pmf.min_value(),
            probs: pmf.probs().to_vec(),
            alias,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.alias {
            None => self.min_value,
            Some(alias) => self.min_value + alias.sample(rng) as u64,
        }
    }

    /// Distributes `n` independent draws over the support and reports each
    /// non-empty `(value, count)` cell to `emit`, in increasing value order
    /// when the multinomial path is taken.
    pub fn sample_counts<R: Rng + ?Sized>(
        &self,
        n: u64,
        rng: &mut R,
        mut emit: impl FnMut(u64, u64),
    ) {
        if n == 0 {
            return;
        }
        if self.alias.is_none() {
            emit(self.min_value, n);
            return;
        }
        if (n as usize) < self.probs.len() {
            for _ in 0..n {
                emit(self.sample(rng), 1);
            }
            return;
        }
        // multinomial as a chain of conditional binomials
        let mut left = n;
        let mut mass_left = 1.0;
        for (i, &p) in self.probs.iter().enumerate() {
            if left == 0 {
                break;
            }
            let last = i + 1 == self.probs.len();
            let c = if last {
                left
            } else {
                binomial(left, p / mass_left, rng)
            };
            if c > 0 {
                emit(self.min_value + i as u64, c);
            }
            left -= c;
            mass_left -= p;
        }
    }
}

/// Rewrites a model whose inter-batch law puts mass on zero into an
/// equivalent one with strictly positive gaps: all batches laid on the same
/// day are merged. A laying day carries a geometric number
/// `G >= 1` of batches with `P(G = g) = p0^(g-1) (1 - p0)`, so the merged
/// batch law is the `G`-fold convolution of `zeta`, and the new gap law is
/// `tau` conditioned on being positive. Powers with `p0^g < tail_eps` are
/// dropped.
pub fn merge_same_day_batches(
    tau: &IntegerPmf,
    zeta: &IntegerPmf,
    tail_eps: f64,
) -> Result<(IntegerPmf, IntegerPmf)> {
    let p0 = tau.prob(0);
    if p0 == 0.0 {
        return Ok((tau.clone(), zeta.clone()));
    }
    if p0 >= 1.0 {
        return Err(Error::InvalidParameter(
            "inter-batch law is a point mass at 0".into(),
        ));
    }
    let positive: Vec<f64> = (1..=tau.max_value()).map(|k| tau.prob(k)).collect();
    let new_tau = IntegerPmf::from_weights(1, positive)?;

    // dense over 0..=max of the running convolution power
    let base: Vec<f64> = (0..=zeta.max_value()).map(|k| zeta.prob(k)).collect();
    let mut power = base.clone();
    let mut merged = vec![0.0; base.len()];
    let mut weight = 1.0 - p0;
    loop {
        if merged.len() < power.len() {
            merged.resize(power.len(), 0.0);
        }
        for (m, p) in merged.iter_mut().zip(&power) {
            *m += weight * p;
        }
        weight *= p0;
        if weight < tail_eps {
            break;
        }
        power = convolve(&power, &base);
    }
    Ok((new_tau, IntegerPmf::from_weights(0, merged)?))
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
