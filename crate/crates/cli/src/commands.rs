//! Subcommands. Each writes its artifacts into the output directory and
//! returns a one-line summary for standard output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use colony::cyclic::mean_profile_csv;
use colony::distributions::{IntegerPmf, SkewNormalParams};
use colony::simulator::{extinction_probability, run_traces, summarize, traces_csv};
use colony::stationary::StationaryLaw;

use crate::config::{BuiltModel, ModelSpec, RunConfig};
use crate::validate::{run_suite, Report, SuiteOptions};
use crate::CliError;

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.0.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    pub fn path(&self) -> &Path {
        &self.0
    }
}

fn json(value: &impl serde::Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    text
}

fn suffixed(stem: &str, label: Option<&str>) -> String {
    match label {
        Some(l) => format!("{stem}_{l}.csv"),
        None => format!("{stem}.csv"),
    }
}

pub fn pmf_csv(pmf: &IntegerPmf) -> String {
    let mut out = String::from("k,prob\n");
    for (k, p) in pmf.iter() {
        writeln!(out, "{k},{p}").unwrap();
    }
    out
}

/// `stationary.json` and, for a deterministic gap, `stationary_pmf.csv`.
pub fn stationary(cfg: &RunConfig, out: &OutDir) -> Result<String, CliError> {
    let BuiltModel::Homogeneous(model) = cfg.build_model()? else {
        return Err(CliError::Config(
            "stationary needs a homogeneous model".into(),
        ));
    };
    let mut law = StationaryLaw::compute(&model, true)?;
    if let Some(pmf) = law.pmf.take() {
        out.write("stationary_pmf.csv", &pmf_csv(&pmf))?;
    }
    let path = out.write("stationary.json", &json(&law))?;
    Ok(format!(
        "mean {} variance {}; wrote {}",
        law.mean,
        law.variance,
        path.display()
    ))
}

/// `mean_profile[_label].csv` and `poisson_means[_label].csv` per variant.
pub fn cyclic(cfg: &RunConfig, out: &OutDir) -> Result<String, CliError> {
    let variants = cfg.build_cyclic_variants()?;
    let mut peaks = Vec::new();
    for (label, model) in &variants {
        let profile = model.mean_profile();
        out.write(
            &suffixed("mean_profile", label.as_deref()),
            &mean_profile_csv(1, &profile),
        )?;
        if model.poisson_rates().is_some() {
            let mut text = String::from("day,poisson_mean\n");
            let k = model.lifetime_bound() as i64;
            let period = model.period() as i64;
            // a representative absolute day past the lifetime bound
            let shift = (k / period + 1) * period;
            for n in 1..=period {
                writeln!(text, "{n},{}", model.poisson_mean(n + shift)?).unwrap();
            }
            out.write(&suffixed("poisson_means", label.as_deref()), &text)?;
        }
        let peak = profile.iter().copied().fold(0.0, f64::max);
        peaks.push(format!("{}={peak:.1}", label.as_deref().unwrap_or("peak")));
    }
    Ok(format!(
        "profiles {}; wrote {}",
        peaks.join(" "),
        out.path().display()
    ))
}

/// `traces.csv`, `summary.csv`, `summary.json` and the no-swarm
/// `mean_path.csv`.
pub fn simulate(
    cfg: &RunConfig,
    out: &OutDir,
    seed_override: Option<u64>,
) -> Result<String, CliError> {
    let sim = cfg.sim_config(cfg.build_model()?, seed_override)?;
    let traces = run_traces(&sim)?;
    let summary = summarize(&sim, &traces);
    if cfg.simulation()?.write_traces {
        out.write("traces.csv", &traces_csv(&traces))?;
    }
    out.write("summary.csv", &summary.to_csv())?;
    out.write("mean_path.csv", &mean_profile_csv(1, &sim.mean_path()))?;
    let path = out.write("summary.json", &json(&summary))?;
    Ok(format!(
        "extinction fraction {} swarm events {}; wrote {}",
        summary.extinction_fraction,
        summary.swarm_events,
        path.display()
    ))
}

/// `extinction.csv` with one row per sweep rate, sorted by rate.
pub fn extinction(
    cfg: &RunConfig,
    out: &OutDir,
    seed_override: Option<u64>,
) -> Result<String, CliError> {
    let spec = cfg
        .extinction
        .as_ref()
        .ok_or_else(|| CliError::Config("missing extinction section".into()))?;
    if cfg.simulation()?.extinction_threshold.is_none() {
        return Err(CliError::Config(
            "simulation.extinction_threshold is required".into(),
        ));
    }
    let [a, b] = spec.window;
    if b > cfg.simulation()?.horizon {
        return Err(CliError::Config(format!(
            "extinction window ends after the horizon ({b})"
        )));
    }
    let mut rates = spec.sweep.clone();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    let mut text = String::from("L,probability,std_error,analytic_lower_bound\n");
    for &rate in &rates {
        let sim = cfg.sim_config(cfg.model_for_rate(rate)?, seed_override)?;
        let est = extinction_probability(&sim, (a, b))?;
        let bound = est
            .analytic_lower_bound
            .map(|v| v.to_string())
            .unwrap_or_default();
        writeln!(text, "{rate},{},{},{bound}", est.probability, est.std_error).unwrap();
    }
    let path = out.write("extinction.csv", &text)?;
    Ok(format!(
        "{} sweep points; wrote {}",
        rates.len(),
        path.display()
    ))
}

/// `density_<label>.csv`: the continuous lifetime density on a grid of
/// step 0.25 covering `xi -/+ 6 omega`.
pub fn density(cfg: &RunConfig, out: &OutDir) -> Result<String, CliError> {
    if cfg.densities.is_empty() {
        return Err(CliError::Config("no densities listed".into()));
    }
    for spec in &cfg.densities {
        let params = SkewNormalParams::new(spec.xi, spec.omega, spec.alpha)?;
        let lo = ((spec.xi - 6.0 * spec.omega) * 4.0).floor() as i64;
        let hi = ((spec.xi + 6.0 * spec.omega) * 4.0).ceil() as i64;
        let mut text = String::from("x,density\n");
        for i in lo..=hi {
            let x = i as f64 * 0.25;
            writeln!(text, "{x},{}", params.density(x)).unwrap();
        }
        out.write(&suffixed("density", Some(&spec.label)), &text)?;
    }
    Ok(format!(
        "{} densities; wrote {}",
        cfg.densities.len(),
        out.path().display()
    ))
}

/// Runs the oracle suite and writes `validation_report.json`.
pub fn validate(
    cfg: Option<&RunConfig>,
    out: &OutDir,
    seed_override: Option<u64>,
) -> Result<String, CliError> {
    let mut options = SuiteOptions::default();
    if let Some(v) = cfg.and_then(|c| c.validation.as_ref()) {
        options.perturb_renewal = v.perturb_renewal;
        options.samples = v.samples.unwrap_or(options.samples);
        options.seed = v.seed.unwrap_or(options.seed);
    }
    if let Some(seed) = seed_override {
        options.seed = seed;
    }
    if let Some(Some(ModelSpec::Homogeneous(_))) = cfg.map(|c| &c.model) {
        if let Some(BuiltModel::Homogeneous(m)) = cfg.map(RunConfig::build_model).transpose()? {
            options.extra_model = Some(m);
        }
    }
    let report: Report = run_suite(&options);
    let path = out.write("validation_report.json", &json(&report))?;
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(format!(
            "{} checks passed; wrote {}",
            report.checks.len(),
            path.display()
        ))
    } else {
        Err(CliError::Validation(format!(
            "{} of {} checks failed ({}); see {}",
            failed.len(),
            report.checks.len(),
            failed.join(", "),
            path.display()
        )))
    }
}
