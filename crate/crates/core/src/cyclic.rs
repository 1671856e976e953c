//! Seasonal model: batches every day, with day-of-cycle dependent laws.
//!
//! Day `i` of the cycle carries its own batch law, hatch probability and
//! lifetime law; absolute day `N` uses the laws of cycle day
//! `((N - 1) mod D) + 1`. Past the lifetime bound `K` the law of the count
//! on a given cycle day no longer depends on the year.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Read;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::distributions::{truncated_poisson, HatchProbability, IntegerPmf, POISSON_TAIL_EPS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stationary::{pgf, ColonyModel};

pub const DEFAULT_PERIOD: usize = 365;

/// `D`-periodic per-day laws with a global lifetime bound `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicModel<T = f64> {
    zeta: Vec<IntegerPmf<T>>,
    r: Vec<HatchProbability<T>>,
    eta: Vec<IntegerPmf<T>>,
    poisson_rates: Option<Vec<T>>,
    bound: u64,
}

impl<T: Scalar> CyclicModel<T> {
    pub fn new(
        zeta: Vec<IntegerPmf<T>>,
        r: Vec<HatchProbability<T>>,
        eta: Vec<IntegerPmf<T>>,
    ) -> Result<Self> {
        let period = zeta.len();
        if period == 0 {
            return Err(Error::InvalidParameter("period must be at least 1".into()));
        }
        if r.len() != period || eta.len() != period {
            return Err(Error::InvalidParameter(format!(
                "per-day lists differ in length: {} batch laws, {} hatch probabilities, {} lifetime laws",
                period,
                r.len(),
                eta.len()
            )));
        }
        let bound = eta.iter().map(IntegerPmf::max_value).max().unwrap_or(0);
        Ok(Self {
            zeta,
            r,
            eta,
            poisson_rates: None,
            bound,
        })
    }

    /// The homogeneous model with daily batches, repeated over `period` days.
    pub fn from_homogeneous(model: &ColonyModel<T>, period: usize) -> Result<Self> {
        if model.constant_gap() != Some(1) {
            return Err(Error::InvalidParameter(
                "seasonal model needs a batch every day".into(),
            ));
        }
        let mut cyclic = Self::new(
            vec![model.zeta().clone(); period],
            vec![model.hatch().clone(); period],
            vec![model.eta().clone(); period],
        )?;
        cyclic.poisson_rates = model.poisson_rate().map(|l| vec![l.clone(); period]);
        Ok(cyclic)
    }

    pub fn period(&self) -> usize {
        self.zeta.len()
    }

    pub fn lifetime_bound(&self) -> u64 {
        self.bound
    }

    pub fn zeta(&self, day: i64) -> &IntegerPmf<T> {
        &self.zeta[self.cycle_index(day)]
    }

    pub fn hatch(&self, day: i64) -> &HatchProbability<T> {
        &self.r[self.cycle_index(day)]
    }

    pub fn eta(&self, day: i64) -> &IntegerPmf<T> {
        &self.eta[self.cycle_index(day)]
    }

    pub fn poisson_rates(&self) -> Option<&[T]> {
        self.poisson_rates.as_deref()
    }

    /// Zero-based cycle position of absolute day `day` (1-based, any sign).
    pub fn cycle_index(&self, day: i64) -> usize {
        (day - 1).rem_euclid(self.period() as i64) as usize
    }

    /// `r_i E zeta_i` for each cycle day.
    pub fn hatch_means(&self) -> Vec<T> {
        self.zeta
            .iter()
            .zip(&self.r)
            .map(|(z, r)| r.value().clone() * z.mean())
            .collect()
    }

    /// Per-cycle-day `P(eta_i >= j)` for `j = 0..=K`.
    fn survival_tables(&self) -> Vec<Vec<T>> {
        self.eta
            .iter()
            .map(|eta| {
                let mut tail = eta.tail_table();
                tail.resize(self.bound as usize + 1, T::zero());
                tail
            })
            .collect()
    }

    /// Sum over the bees laid on days `day - age` for ages `0..=max_age` of
    /// `weight_i P(eta_i >= age)`.
    fn age_sum(&self, weights: &[T], tails: &[Vec<T>], day: i64, max_age: u64) -> T {
        (0..=max_age.min(self.bound)).fold(T::zero(), |acc, age| {
            let i = self.cycle_index(day - age as i64);
            acc + weights[i].clone() * tails[i][age as usize].clone()
        })
    }

    /// Stationary mean for each cycle day `n = 1..=D`:
    /// `E M_n = sum_{i=n-K}^{n} P(eta_i > n - i - 1) r_i E zeta_i`.
    pub fn mean_profile(&self) -> Vec<T> {
        let weights = self.hatch_means();
        let tails = self.survival_tables();
        (1..=self.period() as i64)
            .map(|n| self.age_sum(&weights, &tails, n, self.bound))
            .collect()
    }

    /// Exact `E M_N` for absolute days `first_day..=last_day` when the colony
    /// is empty before `first_day` and the first batch is laid that day.
    pub fn transient_means(&self, first_day: i64, last_day: i64) -> Vec<T> {
        let weights = self.hatch_means();
        let tails = self.survival_tables();
        (first_day..=last_day)
            .map(|day| self.age_sum(&weights, &tails, day, (day - first_day) as u64))
            .collect()
    }

    /// Mean of the Poisson law of the count on absolute day `day`, for
    /// Poisson batch laws: `sum_i r_i lambda_i P(eta_i > day - i - 1)`.
    pub fn poisson_mean(&self, day: i64) -> Result<T> {
        let rates = self.poisson_rates.as_ref().ok_or(Error::NotPoissonModel)?;
        let weights: Vec<T> = rates
            .iter()
            .zip(&self.r)
            .map(|(l, r)| r.value().clone() * l.clone())
            .collect();
        Ok(self.age_sum(&weights, &self.survival_tables(), day, self.bound))
    }

    pub fn to_f64(&self) -> CyclicModel<f64> {
        CyclicModel {
            zeta: self.zeta.iter().map(IntegerPmf::to_f64).collect(),
            r: self
                .r
                .iter()
                .map(|r| HatchProbability::new(r.value().to_f64_lossy()).expect("same value"))
                .collect(),
            eta: self.eta.iter().map(IntegerPmf::to_f64).collect(),
            poisson_rates: self
                .poisson_rates
                .as_ref()
                .map(|v| v.iter().map(Scalar::to_f64_lossy).collect()),
            bound: self.bound,
        }
    }
}

impl CyclicModel<f64> {
    /// Characteristic function of the count on absolute day `day > K`:
    /// `prod_{i=day-K}^{day} psi_{zeta,i}(r_i (e^{it} - 1) P(eta_i >= day - i) + 1)`.
    pub fn cf(&self, day: i64, t: f64) -> Result<Complex64> {
        if day <= self.bound as i64 {
            return Err(Error::DayBeforeStationarity {
                day,
                bound: self.bound,
            });
        }
        let z = Complex64::from_polar(1.0, t) - 1.0;
        let mut acc = Complex64::one();
        for age in 0..=self.bound {
            let i = self.cycle_index(day - age as i64);
            let survive = self.eta[i].survival(age as i64 - 1);
            if survive == 0.0 {
                continue;
            }
            acc *= pgf(&self.zeta[i], z * (self.r[i].get() * survive) + 1.0);
            if acc.is_zero() {
                break;
            }
        }
        Ok(acc)
    }
}

/// Builds the seasonal model with hatch means `L seas(i) + base` per day,
/// i.e. truncated Poisson batches with `lambda_i = (L seas(i) + base) / r`,
/// and the same hatch probability and lifetime law every day.
pub fn cyclic_model_from_profile(
    profile: &SeasonalProfile,
    amplitude: f64,
    base: f64,
    r: HatchProbability,
    eta: IntegerPmf,
) -> Result<CyclicModel> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidRate(format!("amplitude {amplitude}")));
    }
    if !(base >= 0.0 && base.is_finite()) {
        return Err(Error::InvalidRate(format!("base {base}")));
    }
    if r.get() <= 0.0 {
        return Err(Error::InvalidRate(
            "hatch probability 0 leaves the egg rate undefined".into(),
        ));
    }
    let rates: Vec<f64> = profile
        .values()
        .iter()
        .map(|s| (amplitude * s + base) / r.get())
        .collect();
    let mut cache: HashMap<u64, IntegerPmf> = HashMap::new();
    let mut zeta = Vec::with_capacity(rates.len());
    for &lambda in &rates {
        let law = match cache.get(&lambda.to_bits()) {
            Some(law) => law.clone(),
            None => {
                let law = truncated_poisson(lambda, POISSON_TAIL_EPS)?;
                cache.insert(lambda.to_bits(), law.clone());
                law
            }
        };
        zeta.push(law);
    }
    let period = rates.len();
    let mut model = CyclicModel::new(zeta, vec![r; period], vec![eta; period])?;
    model.poisson_rates = Some(rates);
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileSource {
    Tabulated,
    Builtin,
}

/// Relative egg-laying intensity `seas(i)` in `[0, 1]` for each cycle day.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalProfile {
    values: Vec<f64>,
    source: ProfileSource,
}

impl SeasonalProfile {
    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidProfile("no values".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidProfile(format!(
                "day {}: value {v} outside [0, 1]",
                i + 1
            )));
        }
        Ok(Self {
            values,
            source: ProfileSource::Tabulated,
        })
    }

    /// Raised-cosine bump over days 60 to 300 of a 365-day year (rescaled to
    /// period `D`), peaking at 1 mid-summer and exactly 0 in winter.
    ///
    /// This is a smooth stand-in for the empirical seasonal curve; load a
    /// tabulated profile to use measured values.
    pub fn builtin(period: usize) -> Self {
        let scale = period as f64 / 365.0;
        let (start, end) = (60.0 * scale, 300.0 * scale);
        let values = (1..=period)
            .map(|d| {
                let d = d as f64;
                if d < start || d > end {
                    0.0
                } else {
                    0.5 * (1.0 - (2.0 * PI * (d - start) / (end - start)).cos())
                }
            })
            .collect();
        Self {
            values,
            source: ProfileSource::Builtin,
        }
    }

    /// Reads a `day,seas` CSV with a header row; days must run `1..=D`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut values = Vec::new();
        for (row, record) in rdr.deserialize::<(u64, f64)>().enumerate() {
            let (day, seas) =
                record.map_err(|e| Error::InvalidProfile(format!("row {}: {e}", row + 1)))?;
            if day != row as u64 + 1 {
                return Err(Error::InvalidProfile(format!(
                    "expected day {} but found day {day}",
                    row + 1
                )));
            }
            values.push(seas);
        }
        Self::tabulated(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn source(&self) -> ProfileSource {
        self.source
    }
}

/// `day,mean` CSV of a per-day mean curve starting at `first_day`.
pub fn mean_profile_csv(first_day: i64, means: &[f64]) -> String {
    let mut out = String::from("day,mean\n");
    for (i, m) in means.iter().enumerate() {
        out.push_str(&format!("{},{}\n", first_day + i as i64, m));
    }
    out
}
