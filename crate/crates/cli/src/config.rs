//! Run configuration documents.
//!
//! One JSON file describes a model (homogeneous or seasonal), the
//! simulation settings and the optional extinction sweep, validation and
//! density sections. Unknown keys are rejected everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use colony::cyclic::{cyclic_model_from_profile, CyclicModel, SeasonalProfile, DEFAULT_PERIOD};
use colony::distributions::{
    truncated_poisson, HatchProbability, IntegerPmf, SkewNormalParams, POISSON_TAIL_EPS,
};
use colony::simulator::{SimConfig, SimModel, SwarmMode, SwarmRule};
use colony::stationary::ColonyModel;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub simulation: Option<SimulationSpec>,
    #[serde(default)]
    pub extinction: Option<ExtinctionSpec>,
    #[serde(default)]
    pub validation: Option<ValidationSpec>,
    #[serde(default)]
    pub densities: Vec<DensitySpec>,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Homogeneous(HomogeneousSpec),
    Cyclic(CyclicSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogeneousSpec {
    pub tau: DistSpec,
    pub zeta: DistSpec,
    pub hatch_probability: f64,
    pub eta: DistSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclicSpec {
    #[serde(default = "default_period")]
    pub period: usize,
    pub profile: ProfileSpec,
    /// `L` in the daily hatch mean `L seas(i) + base`.
    pub amplitude: f64,
    pub base: f64,
    pub hatch_probability: f64,
    pub eta: DistSpec,
    #[serde(default)]
    pub variants: Vec<VariantSpec>,
}

fn default_period() -> usize {
    DEFAULT_PERIOD
}

/// A labelled copy of the seasonal model with some fields replaced.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub label: String,
    #[serde(default)]
    pub eta: Option<DistSpec>,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub base: Option<f64>,
    #[serde(default)]
    pub hatch_probability: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Builtin,
    /// `day,seas` CSV file.
    Csv(PathBuf),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Point(u64),
    Pmf {
        min_value: u64,
        probs: Vec<f64>,
    },
    Poisson {
        lambda: f64,
    },
    SkewNormal {
        xi: f64,
        omega: f64,
        alpha: f64,
        #[serde(default)]
        tail_eps: Option<f64>,
    },
    Uniform {
        min: u64,
        max: u64,
    },
}

impl DistSpec {
    pub fn build(&self) -> colony::Result<IntegerPmf> {
        match self {
            Self::Point(k) => Ok(IntegerPmf::point_mass(*k)),
            Self::Pmf { min_value, probs } => IntegerPmf::from_weights(*min_value, probs.clone()),
            Self::Poisson { lambda } => truncated_poisson(*lambda, POISSON_TAIL_EPS),
            Self::SkewNormal {
                xi,
                omega,
                alpha,
                tail_eps,
            } => SkewNormalParams::new(*xi, *omega, *alpha)?
                .discretize(tail_eps.unwrap_or(colony::distributions::DEFAULT_TAIL_EPS)),
            Self::Uniform { min, max } => IntegerPmf::uniform(*min, *max),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub horizon: u64,
    #[serde(default = "one")]
    pub replications: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_i64")]
    pub start_day: i64,
    #[serde(default)]
    pub swarm: Option<SwarmSpec>,
    #[serde(default)]
    pub extinction_threshold: Option<u64>,
    #[serde(default)]
    pub stop_on_extinction: bool,
    #[serde(default)]
    pub record_events: bool,
    /// Write every trace to `traces.csv`.
    #[serde(default = "yes")]
    pub write_traces: bool,
}

fn one() -> u64 {
    1
}

fn one_i64() -> i64 {
    1
}

fn yes() -> bool {
    true
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmSpec {
    pub threshold: u64,
    #[serde(default = "half")]
    pub leave_probability: f64,
    #[serde(default)]
    pub mode: SwarmMode,
    #[serde(default)]
    pub max_swarms: Option<u32>,
}

/// Sweep over the daily hatch mean `L`: the Poisson batch rate is `L / r`
/// for homogeneous models and the seasonal base is `L` for cyclic ones.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtinctionSpec {
    /// Sim days `[first, last]` over which the minimum is taken.
    pub window: [u64; 2],
    pub sweep: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSpec {
    /// Adds this amount to every renewal-function value used by the checks.
    #[serde(default)]
    pub perturb_renewal: Option<f64>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Continuous skew-normal lifetime density to tabulate.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub label: String,
    pub xi: f64,
    pub omega: f64,
    pub alpha: f64,
}

/// A model ready for the analytic and simulation commands.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    Homogeneous(ColonyModel),
    Cyclic(CyclicModel),
}

impl BuiltModel {
    pub fn into_sim_model(self) -> SimModel {
        match self {
            Self::Homogeneous(m) => SimModel::Homogeneous(m),
            Self::Cyclic(m) => SimModel::Cyclic(m),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.check()?;
        Ok(cfg)
    }

    /// Schema-level bounds that serde cannot express.
    fn check(&self) -> Result<(), CliError> {
        if let Some(sim) = &self.simulation {
            if sim.horizon == 0 {
                return Err(CliError::Config(
                    "simulation.horizon must be at least 1".into(),
                ));
            }
            if sim.replications == 0 {
                return Err(CliError::Config(
                    "simulation.replications must be at least 1".into(),
                ));
            }
        }
        if let Some(ext) = &self.extinction {
            let [a, b] = ext.window;
            if a == 0 || a > b {
                return Err(CliError::Config(format!(
                    "extinction.window [{a}, {b}] is not a day range"
                )));
            }
            if ext.sweep.is_empty() {
                return Err(CliError::Config("extinction.sweep is empty".into()));
            }
        }
        if let Some(ModelSpec::Cyclic(c)) = &self.model {
            let mut labels: Vec<&str> = c.variants.iter().map(|v| v.label.as_str()).collect();
            labels.sort_unstable();
            if labels.windows(2).any(|w| w[0] == w[1]) {
                return Err(CliError::Config("variant labels must be unique".into()));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<&ModelSpec, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Config("missing model section".into()))
    }

    pub fn simulation(&self) -> Result<&SimulationSpec, CliError> {
        self.simulation
            .as_ref()
            .ok_or_else(|| CliError::Config("missing simulation section".into()))
    }

    pub fn build_model(&self) -> Result<BuiltModel, CliError> {
        match self.model()? {
            ModelSpec::Homogeneous(h) => Ok(BuiltModel::Homogeneous(h.build(None)?)),
            ModelSpec::Cyclic(c) => Ok(BuiltModel::Cyclic(self.build_cyclic(c, None)?)),
        }
    }

    /// The seasonal model and each of its variants, labelled.
    pub fn build_cyclic_variants(&self) -> Result<Vec<(Option<String>, CyclicModel)>, CliError> {
        let ModelSpec::Cyclic(spec) = self.model()? else {
            return Err(CliError::Config("expected a cyclic model".into()));
        };
        if spec.variants.is_empty() {
            return Ok(vec![(None, self.build_cyclic(spec, None)?)]);
        }
        spec.variants
            .iter()
            .map(|v| Ok((Some(v.label.clone()), self.build_cyclic(spec, Some(v))?)))
            .collect()
    }

    pub fn build_variant(&self, label: &str) -> Result<CyclicModel, CliError> {
        let ModelSpec::Cyclic(spec) = self.model()? else {
            return Err(CliError::Config("expected a cyclic model".into()));
        };
        let variant = spec
            .variants
            .iter()
            .find(|v| v.label == label)
            .ok_or_else(|| CliError::Config(format!("no variant labelled {label}")))?;
        self.build_cyclic(spec, Some(variant))
    }

    fn build_cyclic(
        &self,
        spec: &CyclicSpec,
        variant: Option<&VariantSpec>,
    ) -> Result<CyclicModel, CliError> {
        let profile = self.profile(spec)?;
        let eta = variant
            .and_then(|v| v.eta.as_ref())
            .unwrap_or(&spec.eta)
            .build()?;
        let amplitude = variant.and_then(|v| v.amplitude).unwrap_or(spec.amplitude);
        let base = variant.and_then(|v| v.base).unwrap_or(spec.base);
        let r = variant
            .and_then(|v| v.hatch_probability)
            .unwrap_or(spec.hatch_probability);
        Ok(cyclic_model_from_profile(
            &profile,
            amplitude,
            base,
            HatchProbability::new(r)?,
            eta,
        )?)
    }

    fn profile(&self, spec: &CyclicSpec) -> Result<SeasonalProfile, CliError> {
        let profile = match &spec.profile {
            ProfileSpec::Builtin => SeasonalProfile::builtin(spec.period),
            ProfileSpec::Values(v) => SeasonalProfile::tabulated(v.clone())?,
            ProfileSpec::Csv(path) => {
                let path = self.base_dir.join(path);
                let file = fs::File::open(&path).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                SeasonalProfile::from_csv(file)?
            }
        };
        if profile.period() != spec.period {
            return Err(CliError::Config(format!(
                "profile has {} days but period is {}",
                profile.period(),
                spec.period
            )));
        }
        Ok(profile)
    }

    /// Model for one extinction sweep point `L`.
    pub fn model_for_rate(&self, rate: f64) -> Result<BuiltModel, CliError> {
        match self.model()? {
            ModelSpec::Homogeneous(h) => Ok(BuiltModel::Homogeneous(h.build(Some(rate))?)),
            ModelSpec::Cyclic(c) => {
                let spec = CyclicSpec {
                    base: rate,
                    ..c.clone()
                };
                Ok(BuiltModel::Cyclic(self.build_cyclic(&spec, None)?))
            }
        }
    }

    pub fn sim_config(
        &self,
        model: BuiltModel,
        seed_override: Option<u64>,
    ) -> Result<SimConfig, CliError> {
        let spec = self.simulation()?;
        let mut cfg = SimConfig::new(
            model.into_sim_model(),
            spec.horizon,
            spec.replications,
            spec.seed,
        );
        if let Some(seed) = seed_override {
            cfg.seed = seed;
        }
        cfg.start_day = spec.start_day;
        cfg.extinction_threshold = spec.extinction_threshold;
        cfg.stop_on_extinction = spec.stop_on_extinction;
        cfg.record_events = spec.record_events;
        if let Some(s) = &spec.swarm {
            let mut rule = SwarmRule::new(s.threshold, s.leave_probability)?;
            rule.mode = s.mode;
            rule.max_swarms = s.max_swarms;
            cfg.swarm = Some(rule);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl HomogeneousSpec {
    /// Builds the model; `hatch_mean` replaces the batch law by
    /// `Pn(hatch_mean / r)`.
    pub fn build(&self, hatch_mean: Option<f64>) -> Result<ColonyModel, CliError> {
        let r = HatchProbability::new(self.hatch_probability)?;
        let tau = self.tau.build()?;
        let eta = self.eta.build()?;
        let lambda = match (hatch_mean, &self.zeta) {
            (Some(l), _) if r.get() > 0.0 => Some(l / r.get()),
            (Some(_), _) => {
                return Err(CliError::Model(colony::Error::InvalidRate(
                    "hatch probability 0 leaves the egg rate undefined".into(),
                )))
            }
            (None, DistSpec::Poisson { lambda }) => Some(*lambda),
            (None, _) => None,
        };
        let model = match lambda {
            Some(l) => ColonyModel::with_poisson_eggs(tau, l, r, eta)?,
            None => ColonyModel::new(tau, self.zeta.build()?, r, eta)?,
        };
        Ok(model)
    }
}
