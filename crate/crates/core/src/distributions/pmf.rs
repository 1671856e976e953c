use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Finite probability mass function on the non-negative integers.
///
/// Stored densely over `[min_value, max_value]`; the first and last weights
/// are always strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerPmf<T = f64> {
    min_value: u64,
    probs: Vec<T>,
}

/// JSON form `{"min_value": int, "probs": [real, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfRecord {
    pub min_value: u64,
    pub probs: Vec<f64>,
}

impl<T: Scalar> IntegerPmf<T> {
    /// Normalizes `weights` (for values `min_value, min_value + 1, ...`) and
    /// trims zero weights at both ends.
    pub fn from_weights(min_value: u64, weights: Vec<T>) -> Result<Self> {
        let mut total = T::zero();
        for (i, w) in weights.iter().enumerate() {
            let value = min_value + i as u64;
            if !w.is_finite_value() {
                return Err(Error::NonFinite { value });
            }
            if w.is_negative() {
                return Err(Error::NegativeWeight {
                    value,
                    weight: w.to_f64_lossy(),
                });
            }
            total = total + w.clone();
        }
        if total.is_zero() {
            return Err(Error::AllZero);
        }
        let first = weights.iter().position(|w| !w.is_zero()).unwrap();
        let last = weights.iter().rposition(|w| !w.is_zero()).unwrap();
        let probs: Vec<T> = weights[first..=last]
            .iter()
            .map(|w| w.clone() / total.clone())
            .collect();
        Ok(Self {
            min_value: min_value + first as u64,
            probs,
        })
    }

    pub fn point_mass(value: u64) -> Self {
        Self {
            min_value: value,
            probs: vec![T::one()],
        }
    }

    /// Uniform law on `lo..=hi`.
    pub fn uniform(lo: u64, hi: u64) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidParameter(format!(
                "uniform range {lo}..={hi} is empty"
            )));
        }
        Self::from_weights(lo, vec![T::one(); (hi - lo + 1) as usize])
    }

    /// Builds a PMF from `(value, weight)` pairs; repeated values accumulate.
    pub fn from_pairs(pairs: &[(u64, T)]) -> Result<Self> {
        let lo = pairs.iter().map(|p| p.0).min().ok_or(Error::AllZero)?;
        let hi = pairs.iter().map(|p| p.0).max().unwrap();
        let mut weights = vec![T::zero(); (hi - lo + 1) as usize];
        for (value, w) in pairs {
            let slot = &mut weights[(value - lo) as usize];
            *slot = slot.clone() + w.clone();
        }
        Self::from_weights(lo, weights)
    }

    pub fn min_value(&self) -> u64 {
        self.min_value
    }

    pub fn max_value(&self) -> u64 {
        self.min_value + self.probs.len() as u64 - 1
    }

    /// Weights for `min_value..=max_value`.
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, k: u64) -> T {
        if k < self.min_value {
            return T::zero();
        }
        self.probs
            .get((k - self.min_value) as usize)
            .cloned()
            .unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &T)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, p)| (self.min_value + i as u64, p))
    }

    pub fn is_point_mass(&self) -> bool {
        self.probs.len() == 1
    }

    pub fn mean(&self) -> T {
        self.iter()
            .fold(T::zero(), |acc, (k, p)| acc + T::from_count(k) * p.clone())
    }

    pub fn variance(&self) -> T {
        let mean = self.mean();
        self.iter().fold(T::zero(), |acc, (k, p)| {
            let d = T::from_count(k) - mean.clone();
            acc + d.clone() * d * p.clone()
        })
    }

    pub fn moments(&self) -> (T, T) {
        (self.mean(), self.variance())
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: i64) -> T {
        if x < self.min_value as i64 {
            return T::zero();
        }
        if x >= self.max_value() as i64 {
            return T::one();
        }
        let upto = (x as u64 - self.min_value) as usize;
        self.probs[..=upto]
            .iter()
            .fold(T::zero(), |acc, p| acc + p.clone())
    }

    /// `P(X > x)`, summed from the top so small tails keep their precision.
    pub fn survival(&self, x: i64) -> T {
        if x < self.min_value as i64 {
            return T::one();
        }
        if x >= self.max_value() as i64 {
            return T::zero();
        }
        let from = (x as u64 - self.min_value) as usize + 1;
        self.probs[from..]
            .iter()
            .fold(T::zero(), |acc, p| acc + p.clone())
    }

    /// `P(X >= k)` for `k = 0..=max_value + 1`.
    pub fn tail_table(&self) -> Vec<T> {
        let top = self.max_value() as usize;
        let mut tail = vec![T::zero(); top + 2];
        for k in (0..=top).rev() {
            tail[k] = tail[k + 1].clone() + self.prob(k as u64);
        }
        tail
    }

    /// Greatest common divisor of the support points carrying mass.
    pub fn gcd_of_support(&self) -> Result<u64> {
        if self.min_value == 0 {
            return Err(Error::ZeroSupport);
        }
        Ok(self
            .iter()
            .filter(|(_, p)| !p.is_zero())
            .fold(0, |g, (k, _)| gcd(g, k)))
    }

    /// Law of the forward recurrence time of a stationary renewal process
    /// with this inter-renewal law: `pi_k = P(X >= k) / E X`, `k >= 1`.
    pub fn equilibrium_distribution(&self) -> Result<Self> {
        match self.gcd_of_support()? {
            1 => {}
            d => return Err(Error::PeriodicSupport(d)),
        }
        let mean = self.mean();
        let tail = self.tail_table();
        let weights = (1..=self.max_value())
            .map(|k| tail[k as usize].clone() / mean.clone())
            .collect();
        Self::from_weights(1, weights)
    }

    /// Law of `min(X, X')` for independent copies:
    /// `q'_u = q_u^2 + 2 q_u P(X > u)`.
    pub fn min_pair_pmf(&self) -> Self {
        let mut above = T::zero();
        let mut weights = vec![T::zero(); self.probs.len()];
        for i in (0..self.probs.len()).rev() {
            let q = self.probs[i].clone();
            let two = T::one() + T::one();
            weights[i] = q.clone() * q.clone() + two * q.clone() * above.clone();
            above = above + q;
        }
        Self::from_weights(self.min_value, weights).expect("min of a valid law is valid")
    }

    /// Converts the weights to `f64` (renormalizing away rounding).
    pub fn to_f64(&self) -> IntegerPmf<f64> {
        IntegerPmf::from_weights(
            self.min_value,
            self.probs.iter().map(|p| p.to_f64_lossy()).collect(),
        )
        .expect("converted weights stay valid")
    }

    pub fn to_record(&self) -> PmfRecord {
        PmfRecord {
            min_value: self.min_value,
            probs: self.probs.iter().map(|p| p.to_f64_lossy()).collect(),
        }
    }

    pub fn from_record(record: &PmfRecord) -> Result<Self> {
        let weights = record
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                T::from_f64_value(p).ok_or(Error::NonFinite {
                    value: record.min_value + i as u64,
                })
            })
            .collect::<Result<Vec<T>>>()?;
        Self::from_weights(record.min_value, weights)
    }
}

impl IntegerPmf<f64> {
    /// One draw by inversion of the cumulative weights.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.is_point_mass() {
            return self.min_value;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return self.min_value + i as u64;
            }
        }
        self.max_value()
    }

    /// Empirical law of a sample.
    pub fn from_samples(samples: &[u64]) -> Result<Self> {
        let lo = *samples.iter().min().ok_or(Error::AllZero)?;
        let hi = *samples.iter().max().unwrap();
        let mut counts = vec![0.0; (hi - lo + 1) as usize];
        for &s in samples {
            counts[(s - lo) as usize] += 1.0;
        }
        Self::from_weights(lo, counts)
    }
}

impl Serialize for IntegerPmf<f64> {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntegerPmf<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let record = PmfRecord::deserialize(deserializer)?;
        Self::from_record(&record).map_err(serde::de::Error::custom)
    }
}

/// First and second moments of the hatched count `xi = Bin(zeta, r)`:
/// `(r E zeta, r(1-r) E zeta + r^2 Var zeta)`.
pub fn mixed_binomial_moments<T: Scalar>(zeta: &IntegerPmf<T>, r: &HatchProbability<T>) -> (T, T) {
    let (mean, var) = zeta.moments();
    let r = r.value().clone();
    let one_minus = T::one() - r.clone();
    (
        r.clone() * mean.clone(),
        r.clone() * one_minus * mean + r.clone() * r * var,
    )
}

/// Probability that an egg hatches.
#[derive(Debug, Clone, PartialEq)]
pub struct HatchProbability<T = f64>(T);

impl<T: Scalar> HatchProbability<T> {
    pub fn new(r: T) -> Result<Self> {
        if !r.is_finite_value() || r.is_negative() || r > T::one() {
            return Err(Error::InvalidProbability(r.to_f64_lossy()));
        }
        Ok(Self(r))
    }

    pub fn value(&self) -> &T {
        &self.0
    }
}

impl HatchProbability<f64> {
    pub fn get(&self) -> f64 {
        self.0
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Total variation distance `1/2 sum |a_k - b_k|`.
pub fn tv_distance(a: &IntegerPmf<f64>, b: &IntegerPmf<f64>) -> f64 {
    let lo = a.min_value().min(b.min_value());
    let hi = a.max_value().max(b.max_value());
    0.5 * (lo..=hi)
        .map(|k| (a.prob(k) - b.prob(k)).abs())
        .sum::<f64>()
}
