//! Stationary colony size for the time-homogeneous model.
//!
//! With batch epochs `S_i` of the stationary renewal process, the limit law
//! of the daily count is that of
//! `M = sum_i sum_{j <= xi_i} 1{S_i <= eta_ij + 1}`. This module evaluates
//! its mean and variance in closed form, samples it directly, and (for
//! deterministic gaps) recovers its PMF from the characteristic function.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::distributions::{
    binomial, truncated_poisson, AliasSampler, HatchProbability, IntegerPmf, POISSON_TAIL_EPS,
};
use crate::error::{Error, Result};
use crate::renewal::{EquilibriumEpochSampler, RenewalSpec, RenewalTable};
use crate::scalar::Scalar;

/// Atoms below this magnitude after inversion are numerical noise.
const INVERSION_NOISE: f64 = 1e-15;
/// Largest negative atom tolerated (and clipped) after inversion.
const CLIP_ATOM: f64 = 1e-9;
/// Largest total clipped mass before inversion is declared failed.
const CLIP_MASS: f64 = 1e-7;
/// Grid points where the partial CF product drops below this are set to 0.
const CF_UNDERFLOW: f64 = 1e-30;

/// Inter-batch law, eggs per batch, hatch probability and bee lifetime.
#[derive(Debug, Clone, PartialEq)]
pub struct ColonyModel<T = f64> {
    renewal: RenewalSpec<T>,
    zeta: IntegerPmf<T>,
    r: HatchProbability<T>,
    eta: IntegerPmf<T>,
    poisson_rate: Option<T>,
}

impl<T: Scalar> ColonyModel<T> {
    pub fn new(
        tau: IntegerPmf<T>,
        zeta: IntegerPmf<T>,
        r: HatchProbability<T>,
        eta: IntegerPmf<T>,
    ) -> Result<Self> {
        Ok(Self {
            renewal: RenewalSpec::new(tau)?,
            zeta,
            r,
            eta,
            poisson_rate: None,
        })
    }

    pub fn renewal(&self) -> &RenewalSpec<T> {
        &self.renewal
    }

    pub fn tau(&self) -> &IntegerPmf<T> {
        self.renewal.tau()
    }

    pub fn zeta(&self) -> &IntegerPmf<T> {
        &self.zeta
    }

    pub fn hatch(&self) -> &HatchProbability<T> {
        &self.r
    }

    pub fn eta(&self) -> &IntegerPmf<T> {
        &self.eta
    }

    /// `lambda` when the batch law is a (truncated) Poisson law.
    pub fn poisson_rate(&self) -> Option<&T> {
        self.poisson_rate.as_ref()
    }

    /// Largest possible lifetime `K`.
    pub fn lifetime_bound(&self) -> u64 {
        self.eta.max_value()
    }

    /// The constant gap `c` when the inter-batch law is degenerate.
    pub fn constant_gap(&self) -> Option<u64> {
        self.tau().is_point_mass().then(|| self.tau().min_value())
    }

    /// `r E zeta`.
    pub fn mean_hatched(&self) -> T {
        self.r.value().clone() * self.zeta.mean()
    }

    /// `E M = r E zeta (E eta + 1) / E tau`.
    pub fn stationary_mean(&self) -> T {
        self.mean_hatched() * (self.eta.mean() + T::one()) / self.renewal.mean_tau().clone()
    }

    pub fn stationary_variance(&self) -> Result<T> {
        let table = self.renewal.renewal_function(self.lifetime_bound());
        self.variance_with_table(&table)
    }

    /// Variance evaluated against a caller-supplied renewal table covering
    /// `H(0..=K)`.
    pub fn variance_with_table(&self, table: &RenewalTable<T>) -> Result<T> {
        let k = self.lifetime_bound();
        if table.n_max() < k {
            return Err(Error::TableTooShort {
                needed: k,
                available: table.n_max(),
            });
        }
        let mean_tau = self.renewal.mean_tau().clone();
        let r = self.r.value().clone();
        let (zeta_mean, zeta_var) = self.zeta.moments();
        let em = self.stationary_mean();
        let min_mean = self.eta.min_pair_pmf().mean();
        let one = T::one();
        let two = one.clone() + one.clone();

        let pair_term =
            r.clone() * r.clone() * (zeta_var - zeta_mean.clone()) * (min_mean + one.clone())
                / mean_tau.clone();

        // sum_v (2 sum_{i<=v} H(i) + v + 1) q_v^2
        let mut diagonal = T::zero();
        // sum_{v1<v2} (sum_{i<=v1} H(i) + v1 + 1 + sum_{i=v2-v1}^{v2} H(i)) q_v1 q_v2
        let mut off_diagonal = T::zero();
        let support: Vec<(u64, T)> = self.eta.iter().map(|(v, q)| (v, q.clone())).collect();
        for (a, (v1, q1)) in support.iter().enumerate() {
            let s1 = table.prefix_sum(*v1)?;
            let base = s1.clone() + T::from_count(*v1) + one.clone();
            diagonal = diagonal
                + (two.clone() * s1.clone() + T::from_count(*v1) + one.clone())
                    * q1.clone()
                    * q1.clone();
            let mut row = T::zero();
            for (v2, q2) in &support[a + 1..] {
                if q2.is_zero() {
                    continue;
                }
                let window = table.range_sum(v2 - v1, *v2)?;
                row = row + (base.clone() + window) * q2.clone();
            }
            off_diagonal = off_diagonal + row * q1.clone();
        }
        let scale = self.mean_hatched() * self.mean_hatched() / mean_tau;
        let var = em.clone() - em.clone() * em.clone()
            + pair_term
            + scale.clone() * diagonal
            + two * scale * off_diagonal;

        if var.is_negative() {
            let magnitude = em.to_f64_lossy().abs() * (em.to_f64_lossy().abs() + 1.0);
            if (-var.clone()).to_f64_lossy() > 1e-9 * (magnitude + 1.0) {
                return Err(Error::NegativeVarianceComputed(var.to_f64_lossy()));
            }
            return Ok(T::zero());
        }
        Ok(var)
    }

    /// Upper bound `r E zeta E max(eta + 1 - n, 0)` on the total variation
    /// distance between the day-`n` count and the stationary law, valid for
    /// a deterministic inter-batch law.
    pub fn convergence_bound(&self, n: u64) -> Result<T> {
        if self.constant_gap().is_none() {
            return Err(Error::NonDegenerateTau);
        }
        let excess = self.eta.iter().fold(T::zero(), |acc, (k, q)| {
            if k + 1 > n {
                acc + T::from_count(k + 1 - n) * q.clone()
            } else {
                acc
            }
        });
        Ok(self.mean_hatched() * excess)
    }

    /// Exact `E M_t` for `t = 1..=horizon` when the colony starts empty and
    /// the first batch is laid on day `tau_1`:
    /// `E M_t = r E zeta sum_{s <= t} P(batch on day s) P(eta >= t - s)`.
    pub fn mean_path(&self, horizon: u64) -> Vec<T> {
        let table = self.renewal.renewal_function(horizon);
        let tail = self.eta.tail_table();
        let k = self.lifetime_bound();
        let hatched = self.mean_hatched();
        (1..=horizon)
            .map(|t| {
                let first = t.saturating_sub(k).max(1);
                let mut acc = T::zero();
                for s in first..=t {
                    let mass = table.renewal_mass(s).expect("table covers horizon");
                    acc = acc + mass * tail[(t - s) as usize].clone();
                }
                hatched.clone() * acc
            })
            .collect()
    }

    pub fn to_f64(&self) -> ColonyModel<f64> {
        ColonyModel {
            renewal: RenewalSpec::new(self.tau().to_f64()).expect("same support"),
            zeta: self.zeta.to_f64(),
            r: HatchProbability::new(self.r.value().to_f64_lossy()).expect("same value"),
            eta: self.eta.to_f64(),
            poisson_rate: self.poisson_rate.as_ref().map(Scalar::to_f64_lossy),
        }
    }
}

impl ColonyModel<f64> {
    /// Model whose batch law is `Pn(lambda)` truncated at tail mass 1e-12;
    /// `lambda` is kept alongside the PMF.
    pub fn with_poisson_eggs(
        tau: IntegerPmf,
        lambda: f64,
        r: HatchProbability,
        eta: IntegerPmf,
    ) -> Result<Self> {
        let zeta = truncated_poisson(lambda, POISSON_TAIL_EPS)?;
        let mut model = Self::new(tau, zeta, r, eta)?;
        model.poisson_rate = Some(lambda);
        Ok(model)
    }

    pub fn sampler(&self) -> StationarySampler {
        StationarySampler::new(self)
    }

    /// One draw of the stationary colony size.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sampler().sample(rng)
    }

    /// Characteristic function
    /// `prod_i psi_zeta(r (e^{iu} - 1) P(eta >= S_i - 1) + 1)` with `S_i = i c`.
    pub fn stationary_cf(&self, u: f64) -> Result<Complex64> {
        let factors = self.cf_factors()?;
        let z = Complex64::from_polar(1.0, u);
        let r = self.r.get();
        Ok(factors
            .iter()
            .map(|&survive| pgf(&self.zeta, r * (z - 1.0) * survive + 1.0))
            .product())
    }

    /// Survival weights `P(eta >= S_i - 1)` of the non-trivial CF factors,
    /// largest first.
    fn cf_factors(&self) -> Result<Vec<f64>> {
        let c = self.constant_gap().ok_or(Error::NonDegenerateTau)?;
        let bound = self.lifetime_bound() + 1;
        Ok((1..)
            .map(|i| i * c)
            .take_while(|&s| s <= bound)
            .map(|s| self.eta.survival(s as i64 - 2))
            .collect())
    }

    /// Recovers the stationary PMF by inverting the CF on an `N`-point grid,
    /// `N` the smallest power of two above `mean + 12 sd + 16`.
    pub fn stationary_pmf_via_cf(&self) -> Result<IntegerPmf> {
        let mean = self.stationary_mean();
        let sd = self.stationary_variance()?.sqrt();
        let target = mean + 12.0 * sd + 16.0;
        let mut n = 1usize;
        while (n as f64) <= target {
            n <<= 1;
        }
        self.pmf_on_grid(n)
    }

    pub fn pmf_on_grid(&self, n: usize) -> Result<IntegerPmf> {
        let factors = self.cf_factors()?;
        let r = self.r.get();
        let mut values = vec![Complex64::zero(); n];
        for j in 0..=n / 2 {
            let z = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
            let mut acc = Complex64::one();
            for &survive in &factors {
                acc *= pgf(&self.zeta, r * (z - 1.0) * survive + 1.0);
                if acc.norm_sqr() < CF_UNDERFLOW * CF_UNDERFLOW {
                    acc = Complex64::zero();
                    break;
                }
            }
            values[j] = acc;
            if j > 0 && j < n - j {
                values[n - j] = acc.conj();
            }
        }
        FftPlanner::new().plan_fft_forward(n).process(&mut values);

        let mut clipped = 0.0;
        let mut atoms = Vec::with_capacity(n);
        for v in &values {
            let p = v.re / n as f64;
            if p < 0.0 {
                if p < -CLIP_ATOM {
                    return Err(Error::InversionResidual { clipped_mass: -p });
                }
                if p < -INVERSION_NOISE {
                    clipped -= p;
                }
                atoms.push(0.0);
            } else if p < INVERSION_NOISE {
                atoms.push(0.0);
            } else {
                atoms.push(p);
            }
        }
        if clipped > CLIP_MASS {
            return Err(Error::InversionResidual {
                clipped_mass: clipped,
            });
        }
        IntegerPmf::from_weights(0, atoms)
    }
}

/// `psi(s) = sum_k P(X = k) s^k`, Horner over the dense weights.
pub(crate) fn pgf(pmf: &IntegerPmf, s: Complex64) -> Complex64 {
    let inner = pmf
        .probs()
        .iter()
        .rev()
        .fold(Complex64::zero(), |acc, &p| acc * s + p);
    if pmf.min_value() == 0 {
        inner
    } else {
        inner * s.powu(pmf.min_value() as u32)
    }
}

/// Poisson mean `r lambda sum_{i >= 1} P(eta >= i c - 1)` of the stationary
/// law when batches are `Pn(lambda)` and laid every `c` days.
pub fn stationary_poisson_mean(lambda: f64, r: &HatchProbability, c: u64, eta: &IntegerPmf) -> f64 {
    let bound = eta.max_value() + 1;
    let sum: f64 = (1..)
        .map(|i| i * c.max(1))
        .take_while(|&s| s <= bound)
        .map(|s| eta.survival(s as i64 - 2))
        .sum();
    r.get() * lambda * sum
}

/// Direct sampler for the stationary colony size.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    epochs: EquilibriumEpochSampler,
    zeta: AliasSampler,
    r: f64,
    /// `survive[s] = P(eta >= s - 1)` for `s = 1..=K + 1`.
    survive: Vec<f64>,
}

impl StationarySampler {
    pub fn new(model: &ColonyModel) -> Self {
        let bound = model.lifetime_bound() + 1;
        let survive = (0..=bound)
            .map(|s| {
                if s == 0 {
                    1.0
                } else {
                    model.eta.survival(s as i64 - 2)
                }
            })
            .collect();
        Self {
            epochs: model.renewal.epoch_sampler(),
            zeta: AliasSampler::new(&model.zeta),
            r: model.r.get(),
            survive,
        }
    }

    /// Walks stationary epochs until they pass `K + 1`; each batch is
    /// thinned by hatching and then by survival to the observation day.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let bound = self.survive.len() as u64 - 1;
        let mut total = 0;
        let mut s = self.epochs.first_epoch(rng);
        while s <= bound {
            let eggs = self.zeta.sample(rng);
            let hatched = binomial(eggs, self.r, rng);
            total += binomial(hatched, self.survive[s as usize], rng);
            s += self.epochs.gap(rng);
        }
        total
    }
}

/// Summary of the stationary law written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryLaw {
    pub mean: f64,
    pub variance: f64,
    pub poisson_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pmf: Option<IntegerPmf>,
}

impl StationaryLaw {
    /// Mean and variance always; the PMF (and the Poisson mean, for Poisson
    /// batches) when the inter-batch law is deterministic.
    pub fn compute(model: &ColonyModel, with_pmf: bool) -> Result<Self> {
        let mean = model.stationary_mean();
        let variance = model.stationary_variance()?;
        let gap = model.constant_gap();
        let poisson_mean = match (model.poisson_rate(), gap) {
            (Some(&lambda), Some(c)) => Some(stationary_poisson_mean(
                lambda,
                model.hatch(),
                c,
                model.eta(),
            )),
            _ => None,
        };
        let pmf = match gap {
            Some(_) if with_pmf => Some(model.stationary_pmf_via_cf()?),
            _ => None,
        };
        Ok(Self {
            mean,
            variance,
            poisson_mean,
            pmf,
        })
    }
}
