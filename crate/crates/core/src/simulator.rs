//! Day-stepping Monte Carlo of the colony.
//!
//! Bees are kept in expiry buckets: a bee laid on day `s` with lifetime
//! `eta` is alive on days `s..=s + eta` and sits in the bucket emptied on
//! day `s + eta + 1`. Each day applies scheduled deaths, then the day's
//! births, then the swarm rule; the recorded count is the population after
//! all three.

use rand::Rng;
use rand_distr::{Distribution, Hypergeometric};
use rayon::prelude::*;
use serde::Serialize;

use crate::cyclic::CyclicModel;
use crate::distributions::{binomial, poisson_cdf_below, AliasSampler, IntegerPmf};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Purpose};
use crate::stationary::ColonyModel;

#[derive(Debug, Clone, PartialEq)]
pub enum SimModel {
    Homogeneous(ColonyModel),
    Cyclic(CyclicModel),
}

impl SimModel {
    pub fn lifetime_bound(&self) -> u64 {
        match self {
            Self::Homogeneous(m) => m.lifetime_bound(),
            Self::Cyclic(m) => m.lifetime_bound(),
        }
    }

    /// Exact expected count on sim days `1..=horizon` without swarming.
    pub fn mean_path(&self, horizon: u64, start_day: i64) -> Vec<f64> {
        match self {
            Self::Homogeneous(m) => m.mean_path(horizon),
            Self::Cyclic(m) => m.transient_means(start_day, start_day + horizon as i64 - 1),
        }
    }

    /// Per-day Poisson means of the count when it is exactly Poisson
    /// (Poisson batches laid every day), else `None`.
    fn poisson_path(&self, horizon: u64, start_day: i64) -> Option<Vec<f64>> {
        let exact = match self {
            Self::Homogeneous(m) => m.poisson_rate().is_some() && m.constant_gap() == Some(1),
            Self::Cyclic(m) => m.poisson_rates().is_some(),
        };
        exact.then(|| self.mean_path(horizon, start_day))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwarmMode {
    /// Every bee leaves independently with the leave probability.
    #[default]
    PerBee,
    /// Exactly `floor(p M)` bees leave, chosen uniformly without replacement.
    ExactHalf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmRule {
    pub threshold: u64,
    pub leave_probability: f64,
    pub mode: SwarmMode,
    /// Stop swarming after this many events.
    pub max_swarms: Option<u32>,
}

impl SwarmRule {
    pub fn new(threshold: u64, leave_probability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&leave_probability) {
            return Err(Error::InvalidProbability(leave_probability));
        }
        if threshold == 0 {
            return Err(Error::InvalidParameter(
                "swarm threshold must be positive".into(),
            ));
        }
        Ok(Self {
            threshold,
            leave_probability,
            mode: SwarmMode::PerBee,
            max_swarms: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: SimModel,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    /// Cycle day of sim day 1 (seasonal models only).
    pub start_day: i64,
    pub swarm: Option<SwarmRule>,
    pub extinction_threshold: Option<u64>,
    /// Empty the colony for good once it is declared extinct.
    pub stop_on_extinction: bool,
    pub record_events: bool,
}

impl SimConfig {
    pub fn new(model: SimModel, horizon: u64, replications: u64, seed: u64) -> Self {
        Self {
            model,
            horizon,
            replications,
            seed,
            start_day: 1,
            swarm: None,
            extinction_threshold: None,
            stop_on_extinction: false,
            record_events: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter(
                "replications must be at least 1".into(),
            ));
        }
        if let SimModel::Cyclic(m) = &self.model {
            if !(1..=m.period() as i64).contains(&self.start_day) {
                return Err(Error::InvalidParameter(format!(
                    "start day {} outside 1..={}",
                    self.start_day,
                    m.period()
                )));
            }
        }
        if let Some(rule) = &self.swarm {
            SwarmRule::new(rule.threshold, rule.leave_probability)?;
        }
        if self.extinction_threshold == Some(0) && self.stop_on_extinction {
            return Err(Error::InvalidParameter(
                "extinction threshold must be positive to stop on extinction".into(),
            ));
        }
        Ok(())
    }

    pub fn mean_path(&self) -> Vec<f64> {
        self.model.mean_path(self.horizon, self.start_day)
    }
}

/// Daily accounting kept when `record_events` is set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    pub births: Vec<u64>,
    pub deaths: Vec<u64>,
    pub departed: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrace {
    pub replication: u64,
    /// `counts[t - 1]` is the population on sim day `t`.
    pub counts: Vec<u64>,
    pub swarm_days: Vec<u64>,
    /// First day below the extinction threshold after having reached it.
    pub extinct_day: Option<u64>,
    pub events: Option<EventLog>,
}

impl SimTrace {
    pub fn count(&self, day: u64) -> u64 {
        self.counts[(day - 1) as usize]
    }

    /// For each swarm on day `s`, the smallest `d` with `counts[s + d]`
    /// within the relative `band` of the no-swarm mean `mean_path`; `None`
    /// if the trace ends first. Every bee alive at the swarm is dead by day
    /// `s + K + 1`, so from then on the count has its no-swarm law again.
    pub fn recovery_times(&self, mean_path: &[f64], band: f64) -> Result<Vec<Option<u64>>> {
        if self.swarm_days.is_empty() {
            return Err(Error::NoSwarmEvents);
        }
        let horizon = self.counts.len() as u64;
        Ok(self
            .swarm_days
            .iter()
            .map(|&s| {
                (0..=horizon - s).find(|&d| {
                    let target = mean_path[(s + d - 1) as usize];
                    (self.count(s + d) as f64 - target).abs() <= band * target
                })
            })
            .collect())
    }
}

struct DaySampler {
    zeta: AliasSampler,
    r: f64,
    eta: AliasSampler,
}

impl DaySampler {
    fn new(zeta: &IntegerPmf, r: f64, eta: &IntegerPmf) -> Self {
        Self {
            zeta: AliasSampler::new(zeta),
            r,
            eta: AliasSampler::new(eta),
        }
    }
}

enum Schedule {
    Renewal(AliasSampler),
    Daily { start_day: i64 },
}

/// Precomputed samplers shared by all replications of one config.
pub struct Simulator<'a> {
    config: &'a SimConfig,
    days: Vec<DaySampler>,
    schedule: Schedule,
    bound: u64,
}

impl<'a> Simulator<'a> {
    pub fn new(config: &'a SimConfig) -> Result<Self> {
        config.validate()?;
        let (days, schedule) = match &config.model {
            SimModel::Homogeneous(m) => (
                vec![DaySampler::new(m.zeta(), m.hatch().get(), m.eta())],
                Schedule::Renewal(AliasSampler::new(m.tau())),
            ),
            SimModel::Cyclic(m) => (
                (1..=m.period() as i64)
                    .map(|d| DaySampler::new(m.zeta(d), m.hatch(d).get(), m.eta(d)))
                    .collect(),
                Schedule::Daily {
                    start_day: config.start_day,
                },
            ),
        };
        Ok(Self {
            config,
            days,
            schedule,
            bound: config.model.lifetime_bound(),
        })
    }

    pub fn run(&self, replication: u64) -> SimTrace {
        let mut rng = stream_rng(self.config.seed, replication, Purpose::Simulation);
        self.run_with(replication, self.config.horizon, &mut rng)
    }

    fn run_with<R: Rng + ?Sized>(&self, replication: u64, horizon: u64, rng: &mut R) -> SimTrace {
        let cfg = self.config;
        let len = self.bound as usize + 2;
        let mut buckets = vec![0u64; len];
        let mut alive = 0u64;
        let mut counts = Vec::with_capacity(horizon as usize);
        let mut swarm_days = Vec::new();
        let mut extinct_day = None;
        let mut established = false;
        let mut events = cfg.record_events.then(EventLog::default);
        let mut next_batch = match &self.schedule {
            Schedule::Renewal(tau) => tau.sample(rng),
            Schedule::Daily { .. } => 1,
        };

        for t in 1..=horizon {
            let slot = t as usize % len;
            let died = std::mem::take(&mut buckets[slot]);
            alive -= died;

            let mut born = 0;
            let dead_colony = cfg.stop_on_extinction && extinct_day.is_some();
            if t == next_batch {
                let day = match &self.schedule {
                    Schedule::Renewal(tau) => {
                        next_batch += tau.sample(rng);
                        &self.days[0]
                    }
                    Schedule::Daily { start_day } => {
                        next_batch += 1;
                        let period = self.days.len() as i64;
                        &self.days[(t as i64 + start_day - 2).rem_euclid(period) as usize]
                    }
                };
                if !dead_colony {
                    let eggs = day.zeta.sample(rng);
                    born = binomial(eggs, day.r, rng);
                    day.eta.sample_counts(born, rng, |eta, c| {
                        buckets[(t + eta + 1) as usize % len] += c;
                    });
                    alive += born;
                }
            }

            let mut departed = 0;
            if let Some(rule) = &cfg.swarm {
                let allowed = rule
                    .max_swarms
                    .is_none_or(|m| swarm_days.len() < m as usize);
                if alive > rule.threshold && allowed {
                    departed = apply_swarm(&mut buckets, rule, rng);
                    alive -= departed;
                    swarm_days.push(t);
                }
            }

            if let Some(threshold) = cfg.extinction_threshold {
                if alive >= threshold {
                    established = true;
                } else if established && extinct_day.is_none() {
                    extinct_day = Some(t);
                    if cfg.stop_on_extinction {
                        departed += alive;
                        alive = 0;
                        buckets.iter_mut().for_each(|b| *b = 0);
                    }
                }
            }

            if let Some(log) = events.as_mut() {
                log.births.push(born);
                log.deaths.push(died);
                log.departed.push(departed);
            }
            counts.push(alive);
        }

        SimTrace {
            replication,
            counts,
            swarm_days,
            extinct_day,
            events,
        }
    }
}

/// Removes departing bees from the expiry buckets and returns how many left.
pub fn apply_swarm<R: Rng + ?Sized>(buckets: &mut [u64], rule: &SwarmRule, rng: &mut R) -> u64 {
    let p = rule.leave_probability;
    match rule.mode {
        SwarmMode::PerBee => buckets
            .iter_mut()
            .map(|b| {
                let gone = binomial(*b, p, rng);
                *b -= gone;
                gone
            })
            .sum(),
        SwarmMode::ExactHalf => {
            let mut population: u64 = buckets.iter().sum();
            let leaving = (p * population as f64).floor() as u64;
            let mut left_to_remove = leaving;
            for b in buckets.iter_mut() {
                if left_to_remove == 0 {
                    break;
                }
                let gone = if *b == population {
                    left_to_remove
                } else if *b == 0 {
                    0
                } else {
                    Hypergeometric::new(population, *b, left_to_remove)
                        .expect("valid urn")
                        .sample(rng)
                };
                population -= *b;
                *b -= gone;
                left_to_remove -= gone;
            }
            leaving
        }
    }
}

pub fn simulate_colony(config: &SimConfig, replication: u64) -> Result<SimTrace> {
    Ok(Simulator::new(config)?.run(replication))
}

/// All replications, in replication order.
pub fn run_traces(config: &SimConfig) -> Result<Vec<SimTrace>> {
    let sim = Simulator::new(config)?;
    Ok((0..config.replications)
        .into_par_iter()
        .map(|i| sim.run(i))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryStats {
    pub events: usize,
    pub recovered: usize,
    pub mean_delay: Option<f64>,
    pub max_delay: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub replications: u64,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub extinction_fraction: f64,
    pub swarm_events: usize,
    pub recovery: Option<RecoveryStats>,
}

impl EnsembleSummary {
    /// Standard error of the day-`t` mean.
    pub fn std_error(&self, day: u64) -> f64 {
        self.sd[(day - 1) as usize] / (self.replications as f64).sqrt()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("day,mean,sd\n");
        for (i, (m, s)) in self.mean.iter().zip(&self.sd).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, m, s));
        }
        out
    }
}

/// Relative band used for recovery after swarming.
pub const RECOVERY_BAND: f64 = 0.05;

/// Day-wise mean and sample standard deviation over traces, extinction
/// fraction and recovery statistics. Sums are exact integers, so the result
/// does not depend on trace order.
pub fn summarize(config: &SimConfig, traces: &[SimTrace]) -> EnsembleSummary {
    let horizon = config.horizon as usize;
    let n = traces.len() as u64;
    let mut sum = vec![0u128; horizon];
    let mut sum_sq = vec![0u128; horizon];
    for trace in traces {
        for (i, &c) in trace.counts.iter().enumerate() {
            sum[i] += c as u128;
            sum_sq[i] += (c as u128) * (c as u128);
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|&s| s as f64 / nf).collect();
    let sd = sum
        .iter()
        .zip(&sum_sq)
        .map(|(&s, &q)| {
            if n < 2 {
                return 0.0;
            }
            // n sum x^2 - (sum x)^2 is exact in integers
            let spread = (n as u128) * q - s * s;
            (spread as f64 / (nf * (nf - 1.0))).sqrt()
        })
        .collect();
    let extinct = traces.iter().filter(|t| t.extinct_day.is_some()).count();
    let swarm_events = traces.iter().map(|t| t.swarm_days.len()).sum();

    let recovery = (swarm_events > 0).then(|| {
        let path = config.mean_path();
        let delays: Vec<Option<u64>> = traces
            .iter()
            .filter_map(|t| t.recovery_times(&path, RECOVERY_BAND).ok())
            .flatten()
            .collect();
        let done: Vec<u64> = delays.iter().flatten().copied().collect();
        RecoveryStats {
            events: delays.len(),
            recovered: done.len(),
            mean_delay: (!done.is_empty())
                .then(|| done.iter().sum::<u64>() as f64 / done.len() as f64),
            max_delay: done.iter().max().copied(),
        }
    });

    EnsembleSummary {
        replications: n,
        mean,
        sd,
        extinction_fraction: extinct as f64 / nf,
        swarm_events,
        recovery,
    }
}

pub fn run_ensemble(config: &SimConfig) -> Result<EnsembleSummary> {
    Ok(summarize(config, &run_traces(config)?))
}

/// Empirical law of the count on `day` over `samples` replications.
pub fn empirical_day_law(config: &SimConfig, day: u64, samples: u64) -> Result<IntegerPmf> {
    let counts = day_counts(config, day, samples)?;
    IntegerPmf::from_samples(&counts)
}

/// Counts on `day` from replications `0..samples`, simulated only up to
/// `day`.
pub fn day_counts(config: &SimConfig, day: u64, samples: u64) -> Result<Vec<u64>> {
    if day == 0 || day > config.horizon {
        return Err(Error::InvalidParameter(format!(
            "day {day} outside 1..={}",
            config.horizon
        )));
    }
    let sim = Simulator::new(config)?;
    Ok((0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, i, Purpose::Simulation);
            *sim.run_with(i, day, &mut rng)
                .counts
                .last()
                .expect("day >= 1")
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtinctionEstimate {
    pub probability: f64,
    pub std_error: f64,
    /// `max_n P(M_n < threshold)` over the window from the exact Poisson
    /// law of the count, when batches are Poisson and laid daily.
    pub analytic_lower_bound: Option<f64>,
}

/// Fraction of replications whose minimum over sim days `window` falls
/// below the extinction threshold.
pub fn extinction_probability(
    config: &SimConfig,
    window: (u64, u64),
) -> Result<ExtinctionEstimate> {
    let threshold = config.extinction_threshold.ok_or(Error::MissingThreshold)?;
    let (a, b) = window;
    if a == 0 || a > b || b > config.horizon {
        return Err(Error::InvalidParameter(format!(
            "window {a}..={b} outside 1..={}",
            config.horizon
        )));
    }
    let mut cfg = config.clone();
    cfg.horizon = b;
    let sim = Simulator::new(&cfg)?;
    let hits: u64 = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let trace = sim.run(i);
            let low = trace.counts[(a - 1) as usize..]
                .iter()
                .min()
                .copied()
                .unwrap_or(0);
            u64::from(low < threshold)
        })
        .sum();
    let n = cfg.replications as f64;
    let p = hits as f64 / n;
    let analytic_lower_bound = cfg.model.poisson_path(b, cfg.start_day).map(|path| {
        path[(a - 1) as usize..]
            .iter()
            .map(|&mu| poisson_cdf_below(mu, threshold))
            .fold(0.0, f64::max)
    });
    Ok(ExtinctionEstimate {
        probability: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        analytic_lower_bound,
    })
}

/// `replication,day,count,swarmed,extinct` rows for every trace.
pub fn traces_csv(traces: &[SimTrace]) -> String {
    let mut out = String::from("replication,day,count,swarmed,extinct\n");
    for trace in traces {
        let mut swarms = trace.swarm_days.iter().peekable();
        for (i, c) in trace.counts.iter().enumerate() {
            let day = i as u64 + 1;
            let swarmed = swarms.next_if_eq(&&day).is_some();
            let extinct = trace.extinct_day.is_some_and(|e| day >= e);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                trace.replication,
                day,
                c,
                u8::from(swarmed),
                u8::from(extinct)
            ));
        }
    }
    out
}
