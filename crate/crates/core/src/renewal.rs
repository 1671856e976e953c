//! Discrete renewal machinery: the renewal function `H(n) = E N_n`, the
//! first two moments of the stationary (delayed) counting process, and an
//! epoch sampler for that process.
//!
//! The ordinary process starts with a renewal at time 0 that is not counted.
//! The stationary process draws its first epoch from the equilibrium law
//! `pi_k = P(tau >= k) / E tau` and every later gap from `tau`.

use rand::Rng;

use crate::distributions::{AliasSampler, IntegerPmf};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Inter-batch law with its mean cached. The law must be aperiodic and put
/// no mass on 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalSpec<T = f64> {
    tau: IntegerPmf<T>,
    mean_tau: T,
}

impl<T: Scalar> RenewalSpec<T> {
    pub fn new(tau: IntegerPmf<T>) -> Result<Self> {
        match tau.gcd_of_support()? {
            1 => {}
            d => return Err(Error::PeriodicSupport(d)),
        }
        let mean_tau = tau.mean();
        Ok(Self { tau, mean_tau })
    }

    pub fn tau(&self) -> &IntegerPmf<T> {
        &self.tau
    }

    pub fn mean_tau(&self) -> &T {
        &self.mean_tau
    }

    /// Tabulates `H(0..=n_max)` by the forward recursion
    /// `H(n) = F(n) + sum_{k=1}^{n} H(n - k) f_k`.
    pub fn renewal_function(&self, n_max: u64) -> RenewalTable<T> {
        let n_max = n_max as usize;
        let mut h = vec![T::zero(); n_max + 1];
        let mut cdf = T::zero();
        for n in 1..=n_max {
            cdf = cdf + self.tau.prob(n as u64);
            let lo = self.tau.min_value() as usize;
            let hi = (self.tau.max_value() as usize).min(n);
            let mut acc = cdf.clone();
            for k in lo..=hi {
                acc = acc + h[n - k].clone() * self.tau.prob(k as u64);
            }
            h[n] = acc;
        }
        RenewalTable::from_values(h)
    }

    /// `E N_v = v / E tau` for the stationary process.
    pub fn equilibrium_count_mean(&self, v: u64) -> T {
        T::from_count(v) / self.mean_tau.clone()
    }

    /// `E N_u^2 = (2 sum_{i=1}^{u-1} H(i) + u) / E tau`.
    pub fn equilibrium_count_second_moment(&self, table: &RenewalTable<T>, u: u64) -> Result<T> {
        if u == 0 {
            return Ok(T::zero());
        }
        let two = T::from_count(2);
        Ok((two * table.prefix_sum(u - 1)? + T::from_count(u)) / self.mean_tau.clone())
    }

    /// `E N_u N_v = (sum_{i=1}^{u-1} H(i) + u + sum_{i=v-u}^{v-1} H(i)) / E tau`
    /// for `u < v`; the second moment when `u == v`.
    pub fn equilibrium_count_cross_moment(
        &self,
        table: &RenewalTable<T>,
        u: u64,
        v: u64,
    ) -> Result<T> {
        if u > v {
            return Err(Error::BadOrder { u, v });
        }
        if u == v {
            return self.equilibrium_count_second_moment(table, u);
        }
        if u == 0 {
            // still validates the table length
            table.prefix_sum(v - 1)?;
            return Ok(T::zero());
        }
        let window = table.range_sum(v - u, v - 1)?;
        Ok((table.prefix_sum(u - 1)? + T::from_count(u) + window) / self.mean_tau.clone())
    }
}

impl RenewalSpec<f64> {
    pub fn epoch_sampler(&self) -> EquilibriumEpochSampler {
        EquilibriumEpochSampler::new(self)
    }

    /// Epochs `S_1 < S_2 < ... <= horizon` of the stationary process.
    pub fn sample_equilibrium_epochs<R: Rng + ?Sized>(
        &self,
        horizon: u64,
        rng: &mut R,
    ) -> Vec<u64> {
        self.epoch_sampler().sample(horizon, rng)
    }
}

/// Reusable sampler for stationary renewal epochs.
#[derive(Debug, Clone)]
pub struct EquilibriumEpochSampler {
    first: AliasSampler,
    gap: AliasSampler,
}

impl EquilibriumEpochSampler {
    pub fn new(spec: &RenewalSpec<f64>) -> Self {
        let pi = spec
            .tau()
            .equilibrium_distribution()
            .expect("spec already checked aperiodic");
        Self {
            first: AliasSampler::new(&pi),
            gap: AliasSampler::new(spec.tau()),
        }
    }

    pub fn first_epoch<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.first.sample(rng)
    }

    pub fn gap<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.gap.sample(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, horizon: u64, rng: &mut R) -> Vec<u64> {
        let mut epochs = Vec::new();
        if horizon == 0 {
            return epochs;
        }
        let mut s = self.first_epoch(rng);
        while s <= horizon {
            epochs.push(s);
            s += self.gap(rng);
        }
        epochs
    }
}

/// `H(0..=n_max)` with cached prefix sums `sum_{i=1}^{n} H(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalTable<T = f64> {
    h: Vec<T>,
    prefix: Vec<T>,
}

impl<T: Scalar> RenewalTable<T> {
    pub fn from_values(h: Vec<T>) -> Self {
        let mut prefix = Vec::with_capacity(h.len());
        let mut acc = T::zero();
        for (n, value) in h.iter().enumerate() {
            if n > 0 {
                acc = acc + value.clone();
            }
            prefix.push(acc.clone());
        }
        Self { h, prefix }
    }

    pub fn values(&self) -> &[T] {
        &self.h
    }

    pub fn n_max(&self) -> u64 {
        self.h.len() as u64 - 1
    }

    pub fn get(&self, n: u64) -> Result<T> {
        self.h.get(n as usize).cloned().ok_or(Error::TableTooShort {
            needed: n,
            available: self.n_max(),
        })
    }

    /// `sum_{i=1}^{n} H(i)`.
    pub fn prefix_sum(&self, n: u64) -> Result<T> {
        self.prefix
            .get(n as usize)
            .cloned()
            .ok_or(Error::TableTooShort {
                needed: n,
                available: self.n_max(),
            })
    }

    /// `sum_{i=a}^{b} H(i)`, zero when `a > b`.
    pub fn range_sum(&self, a: u64, b: u64) -> Result<T> {
        if a > b {
            return Ok(T::zero());
        }
        let upper = self.prefix_sum(b)?;
        if a == 0 {
            return Ok(upper);
        }
        Ok(upper - self.prefix_sum(a - 1)?)
    }

    /// `P(renewal at n) = H(n) - H(n - 1)` for the ordinary process.
    pub fn renewal_mass(&self, n: u64) -> Result<T> {
        if n == 0 {
            return Ok(T::zero());
        }
        Ok(self.get(n)? - self.get(n - 1)?)
    }

    /// Returns a copy with every `H(n)`, `n >= 1`, shifted by `delta`.
    /// Used to check that the validation suite notices a corrupted table.
    pub fn perturbed(&self, delta: T) -> Self {
        let h = self
            .h
            .iter()
            .enumerate()
            .map(|(n, v)| {
                if n == 0 {
                    v.clone()
                } else {
                    v.clone() + delta.clone()
                }
            })
            .collect();
        Self::from_values(h)
    }

    /// CSV with header `n,H`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,H\n");
        for (n, v) in self.h.iter().enumerate() {
            out.push_str(&format!("{n},{}\n", v.to_f64_lossy()));
        }
        out
    }
}
