//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are fixed here and nowhere else.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use colony::cyclic::CyclicModel;
use colony::distributions::{
    tv_distance, HatchProbability, IntegerPmf, SkewNormalParams, DEFAULT_TAIL_EPS,
};
use colony::renewal::RenewalSpec;
use colony::rng::{stream_rng, Purpose};
use colony::scalar::ratio;
use colony::simulator::{
    day_counts, extinction_probability, run_traces, summarize, SimConfig, SimModel, RECOVERY_BAND,
};
use colony::stationary::ColonyModel;
use colony::ExactModel;
use colony_cli::config::{BuiltModel, RunConfig};
use colony_cli::validate::enumerate_renewals;
use tempfile::TempDir;

const POISSON_VARIANCE_REL: f64 = 1e-6;
const POISSON_TV: f64 = 1e-7;
const VARIANCE_Z: f64 = 4.0;
const RENEWAL_ENUM_ABS: f64 = 1e-12;
const RENEWAL_MOMENT_Z: f64 = 3.0;
const ONSET_TV: f64 = 0.015;
const TWO_SAMPLE_NOISE: f64 = 0.02;
const CYCLIC_Z: f64 = 3.0;
const CYCLIC_TV: f64 = 0.02;
const SIGMOID_SLACK_SE: f64 = 2.0;
const RECOVERY_DAYS: u64 = 81;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../recipes")
        .join(name)
}

fn hatch(r: f64) -> HatchProbability {
    HatchProbability::new(r).unwrap()
}

fn pmf(min: u64, w: &[f64]) -> IntegerPmf {
    IntegerPmf::from_weights(min, w.to_vec()).unwrap()
}

fn skew_normal(xi: f64, omega: f64, alpha: f64) -> IntegerPmf {
    SkewNormalParams::new(xi, omega, alpha)
        .unwrap()
        .discretize(DEFAULT_TAIL_EPS)
        .unwrap()
}

fn check(pass: bool, detail: String) -> Outcome {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn elapsed_ok(start: Instant, limit_s: f64) -> (bool, String) {
    let t = start.elapsed().as_secs_f64();
    (t < limit_s, format!("{t:.1}s/{limit_s}s"))
}

/// Mean, unbiased variance, and standard errors of both.
fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    (
        mean,
        var,
        (var / n).sqrt(),
        ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    )
}

fn exact_means() -> Outcome {
    let cases = [
        (1875, (4, 5), 63, 96_000),
        (1600, (3, 4), 63, 76_800),
        (1600, (3, 4), 50, 61_200),
    ];
    let mut got = Vec::new();
    for (zeta, (a, b), eta, want) in cases {
        let model = ExactModel::new(
            IntegerPmf::point_mass(1),
            IntegerPmf::point_mass(zeta),
            HatchProbability::new(ratio(a, b)).unwrap(),
            IntegerPmf::point_mass(eta),
        )
        .map_err(|e| e.to_string())?;
        let mean = model.stationary_mean();
        if mean != ratio(want, 1) {
            return Err(format!("expected {want}, got {mean}"));
        }
        got.push(mean.to_string());
    }
    Ok(got.join(" "))
}

/// `ln k!` by direct summation, extended one step at a time.
struct LnFactorial {
    k: u64,
    value: f64,
}

impl LnFactorial {
    fn at(&mut self, k: u64) -> f64 {
        while self.k < k {
            self.k += 1;
            self.value += (self.k as f64).ln();
        }
        self.value
    }
}

fn poisson_reduction() -> Outcome {
    let start = Instant::now();
    let mut worst_rel: f64 = 0.0;
    let mut worst_tv: f64 = 0.0;
    for lambda in [5.0, 100.0, 1500.0] {
        for r in [0.5, 0.8] {
            for eta in [IntegerPmf::point_mass(3), skew_normal(63.0, 10.0, -6.0)] {
                let model = ColonyModel::with_poisson_eggs(
                    IntegerPmf::point_mass(1),
                    lambda,
                    hatch(r),
                    eta,
                )
                .map_err(|e| e.to_string())?;
                let mean = model.stationary_mean();
                let var = model.stationary_variance().map_err(|e| e.to_string())?;
                worst_rel = worst_rel.max((var - mean).abs() / mean);
                let law = model.stationary_pmf_via_cf().map_err(|e| e.to_string())?;
                let mut ln_fact = LnFactorial { k: 0, value: 0.0 };
                let mut inside = 0.0;
                let mut diff = 0.0;
                for (k, p) in law.iter() {
                    let q = (-mean + k as f64 * mean.ln() - ln_fact.at(k)).exp();
                    inside += q;
                    diff += (p - q).abs();
                }
                worst_tv = worst_tv.max(0.5 * (diff + (1.0 - inside).max(0.0)));
            }
        }
    }
    let (fast, time) = elapsed_ok(start, 5.0);
    check(
        worst_rel < POISSON_VARIANCE_REL && worst_tv < POISSON_TV && fast,
        format!("max |var-mean|/mean {worst_rel:.1e}, max TV {worst_tv:.1e}, {time}"),
    )
}

fn variance_vs_monte_carlo() -> Outcome {
    let start = Instant::now();
    let models = [
        ColonyModel::new(
            pmf(1, &[0.5, 0.5]),
            pmf(2, &[0.5, 0.0, 0.0, 0.5]),
            hatch(0.7),
            IntegerPmf::point_mass(5),
        ),
        ColonyModel::new(
            IntegerPmf::point_mass(1),
            pmf(0, &[0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.7]),
            hatch(0.5),
            IntegerPmf::uniform(2, 6).unwrap(),
        ),
        ColonyModel::with_poisson_eggs(
            pmf(1, &[0.5, 0.5]),
            20.0,
            hatch(0.8),
            skew_normal(20.0, 5.0, -3.0),
        ),
        ColonyModel::new(
            pmf(1, &[0.2, 0.5, 0.3]),
            IntegerPmf::uniform(0, 8).unwrap(),
            hatch(0.9),
            IntegerPmf::from_pairs(&[(3, 0.5), (9, 0.5)]).unwrap(),
        ),
        ColonyModel::new(
            IntegerPmf::point_mass(1),
            IntegerPmf::point_mass(40),
            hatch(0.3),
            skew_normal(30.0, 8.0, -6.0),
        ),
        ColonyModel::new(
            pmf(1, &[0.5, 0.5]),
            IntegerPmf::from_pairs(&[(1, 0.5), (30, 0.5)]).unwrap(),
            hatch(0.6),
            IntegerPmf::uniform(0, 15).unwrap(),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (i, model) in models.into_iter().enumerate() {
        let model = model.map_err(|e| e.to_string())?;
        let formula = model.stationary_variance().map_err(|e| e.to_string())?;
        let sampler = model.sampler();
        let mut rng = stream_rng(11, i as u64, Purpose::Stationary);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sampler.sample(&mut rng) as f64)
            .collect();
        let (_, var, _, se_var) = moments(&draws);
        worst = worst.max((var - formula).abs() / se_var);
    }
    let (fast, time) = elapsed_ok(start, 60.0);
    check(
        worst < VARIANCE_Z && fast,
        format!("6 models, max z {worst:.2}, {time}"),
    )
}

fn renewal_oracle() -> Outcome {
    let tau = pmf(1, &[0.5, 0.5]);
    let spec = RenewalSpec::new(tau.clone()).map_err(|e| e.to_string())?;
    let table = spec.renewal_function(20);
    let enum_err = (1..=12)
        .map(|n| (table.get(n).unwrap() - enumerate_renewals(&tau, n)).abs())
        .fold(0.0, f64::max);

    let grid = [1u64, 2, 5, 10, 15, 20];
    let sampler = spec.epoch_sampler();
    let mut rng = stream_rng(12, 0, Purpose::Renewal);
    let counts: Vec<Vec<u64>> = (0..100_000)
        .map(|_| {
            let epochs = sampler.sample(20, &mut rng);
            grid.iter()
                .map(|&u| epochs.iter().filter(|&&s| s <= u).count() as u64)
                .collect()
        })
        .collect();
    let mut worst_z: f64 = 0.0;
    for (i, &u) in grid.iter().enumerate() {
        for (j, &v) in grid.iter().enumerate().skip(i) {
            let products: Vec<f64> = counts.iter().map(|c| (c[i] * c[j]) as f64).collect();
            let (mean, _, se, _) = moments(&products);
            let closed = spec
                .equilibrium_count_cross_moment(&table, u, v)
                .map_err(|e| e.to_string())?;
            worst_z = worst_z.max((mean - closed).abs() / se);
        }
    }
    check(
        enum_err < RENEWAL_ENUM_ABS && worst_z < RENEWAL_MOMENT_Z,
        format!("max |H - enumeration| {enum_err:.1e}; E N_u N_v max z {worst_z:.2} over 21 pairs"),
    )
}

/// τ ≡ 1, ζ ~ Pn(1.25), r = 0.8, η ∈ {10, 80}: lifetime bound K = 80.
fn onset_model() -> ColonyModel {
    ColonyModel::with_poisson_eggs(
        IntegerPmf::point_mass(1),
        1.25,
        hatch(0.8),
        IntegerPmf::from_pairs(&[(10, 0.99), (80, 0.01)]).unwrap(),
    )
    .unwrap()
}

fn stationary_law(model: &ColonyModel, samples: u64, seed: u64) -> IntegerPmf {
    let sampler = model.sampler();
    let mut rng = stream_rng(seed, 0, Purpose::Stationary);
    let draws: Vec<u64> = (0..samples).map(|_| sampler.sample(&mut rng)).collect();
    IntegerPmf::from_samples(&draws).unwrap()
}

fn simulated_law(config: &SimConfig, day: u64, samples: u64) -> Result<IntegerPmf, String> {
    let counts = day_counts(config, day, samples).map_err(|e| e.to_string())?;
    IntegerPmf::from_samples(&counts).map_err(|e| e.to_string())
}

fn stationarity_onset() -> Outcome {
    let start = Instant::now();
    let model = onset_model();
    let reference = stationary_law(&model, 100_000, 21);
    let config = SimConfig::new(SimModel::Homogeneous(model), 181, 1, 22);
    let mut tvs = Vec::new();
    for day in [81, 181] {
        tvs.push(tv_distance(
            &simulated_law(&config, day, 100_000)?,
            &reference,
        ));
    }
    let (fast, time) = elapsed_ok(start, 180.0);
    check(
        tvs.iter().all(|&t| t < ONSET_TV) && fast,
        format!("TV day 81 {:.4}, day 181 {:.4}, {time}", tvs[0], tvs[1]),
    )
}

fn convergence_bound() -> Outcome {
    let model = onset_model();
    let k = model.lifetime_bound();
    let bounds: Vec<f64> = (1..=k + 10)
        .map(|n| model.convergence_bound(n))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let monotone = bounds.windows(2).all(|w| w[1] <= w[0]);
    let zero_at = bounds[k as usize] == 0.0;
    let reference = stationary_law(&model, 100_000, 31);
    let config = SimConfig::new(SimModel::Homogeneous(model), 60, 1, 32);
    let mut ok = monotone && zero_at;
    let mut detail = vec![format!("monotone {monotone}, zero at K+1 {zero_at}")];
    for n in [20u64, 40, 60] {
        let tv = tv_distance(&simulated_law(&config, n, 100_000)?, &reference);
        let bound = bounds[(n - 1) as usize];
        ok &= tv <= bound + TWO_SAMPLE_NOISE;
        detail.push(format!("n={n} TV {tv:.4} <= {bound:.4}+{TWO_SAMPLE_NOISE}"));
    }
    check(ok, detail.join(", "))
}

/// Daily Poisson batches with a 7-day cycle of rates; short lifetimes.
fn toy_cyclic() -> CyclicModel {
    let rates = [2.0, 5.0, 9.0, 12.0, 9.0, 5.0, 2.0];
    let r = 0.8;
    let zeta = rates
        .iter()
        .map(|&l| colony::distributions::truncated_poisson(l, 1e-12).unwrap())
        .collect();
    let eta = vec![IntegerPmf::from_pairs(&[(3, 0.6), (10, 0.4)]).unwrap(); 7];
    CyclicModel::new(zeta, vec![hatch(r); 7], eta).unwrap()
}

fn cyclic_stationarity() -> Outcome {
    let start = Instant::now();
    let cfg = RunConfig::load(&recipe("fig2.json")).map_err(|e| e.to_string())?;
    let period = 365u64;
    let checkpoints: Vec<u64> = (0..12).map(|m| period + 15 + 30 * m).collect();
    let mut worst_z: f64 = 0.0;
    for (label, model) in cfg.build_cyclic_variants().map_err(|e| e.to_string())? {
        let profile = model.mean_profile();
        let sim = cfg
            .sim_config(BuiltModel::Cyclic(model), None)
            .map_err(|e| e.to_string())?;
        let traces = run_traces(&sim).map_err(|e| e.to_string())?;
        let summary = summarize(&sim, &traces);
        for &day in &checkpoints {
            let absolute = day as i64 + sim.start_day - 1;
            let analytic = profile[(absolute - 1).rem_euclid(period as i64) as usize];
            let z = (summary.mean[(day - 1) as usize] - analytic).abs() / summary.std_error(day);
            if !z.is_finite() {
                return Err(format!("{label:?} day {day}: zero spread"));
            }
            worst_z = worst_z.max(z);
        }
    }

    let toy = toy_cyclic();
    let n = toy.lifetime_bound() + 3;
    let d = toy.period() as u64;
    let one = SimConfig::new(SimModel::Cyclic(toy.clone()), n + 2 * d, 1, 41);
    let two = SimConfig::new(SimModel::Cyclic(toy), n + 2 * d, 1, 42);
    let tv = tv_distance(
        &simulated_law(&one, n + d, 100_000)?,
        &simulated_law(&two, n + 2 * d, 100_000)?,
    );
    check(
        worst_z < CYCLIC_Z && tv < CYCLIC_TV,
        format!(
            "fig2 4 variants x 12 checkpoints max z {worst_z:.2}; toy TV(n+D, n+2D) {tv:.4}; {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn extinction_sigmoid() -> Outcome {
    let start = Instant::now();
    let cfg = RunConfig::load(&recipe("fig4.json")).map_err(|e| e.to_string())?;
    let spec = cfg
        .extinction
        .clone()
        .ok_or("fig4 recipe has no extinction section")?;
    let [a, b] = spec.window;
    let mut points = Vec::new();
    for l in 80..=95 {
        let sim = cfg
            .sim_config(
                cfg.model_for_rate(l as f64).map_err(|e| e.to_string())?,
                None,
            )
            .map_err(|e| e.to_string())?;
        let est = extinction_probability(&sim, (a, b)).map_err(|e| e.to_string())?;
        points.push((l, est.probability, est.std_error));
    }
    let monotone = points
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 + SIGMOID_SLACK_SE * (w[0].2.hypot(w[1].2)));
    let (p80, p95) = (points[0].1, points[15].1);
    let BuiltModel::Homogeneous(unit) = cfg.model_for_rate(1.0).map_err(|e| e.to_string())? else {
        return Err("fig4 recipe is not homogeneous".into());
    };
    let threshold = cfg
        .simulation
        .as_ref()
        .and_then(|s| s.extinction_threshold)
        .ok_or("no threshold")?;
    let crossing = threshold as f64 / unit.stationary_mean();
    let (fast, time) = elapsed_ok(start, 300.0);
    check(
        monotone && p80 >= 0.95 && p95 <= 0.05 && (85.0..=93.0).contains(&crossing) && fast,
        format!("monotone {monotone}, P(80) {p80}, P(95) {p95}, L* {crossing:.2}, {time}"),
    )
}

fn swarm_recovery() -> Outcome {
    let cfg = RunConfig::load(&recipe("fig5.json")).map_err(|e| e.to_string())?;
    let sim = cfg
        .sim_config(cfg.build_model().map_err(|e| e.to_string())?, None)
        .map_err(|e| e.to_string())?;
    let path = sim.mean_path();
    let traces = run_traces(&sim).map_err(|e| e.to_string())?;
    let mut swarms = 0;
    let mut delays = Vec::new();
    for trace in &traces {
        swarms += trace.swarm_days.len();
        for delay in trace
            .recovery_times(&path, RECOVERY_BAND)
            .map_err(|e| e.to_string())?
        {
            delays.push(delay);
        }
    }
    let ok = swarms >= 1 && delays.iter().all(|d| d.is_some_and(|d| d <= RECOVERY_DAYS));
    check(ok, format!("{swarms} swarm(s), recovery delays {delays:?}"))
}

fn run_binary(args: &[&str], config: Option<&Path>, out: &Path) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_colony"));
    cmd.args(args).arg("--out-dir").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    let output = cmd.output().map_err(|e| e.to_string())?;
    if output.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&output.stderr).trim()
        ))
    }
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let runs: [(&str, Option<&str>); 6] = [
        ("stationary", Some("stationary_96000.json")),
        ("cyclic", Some("fig2.json")),
        ("simulate", Some("fig5.json")),
        ("extinction", Some("fig3.json")),
        ("density", Some("fig1.json")),
        ("validate", None),
    ];
    let mut files = 0;
    for (cmd, cfg) in runs {
        let cfg = cfg.map(recipe);
        let mut outputs = Vec::new();
        for attempt in ["a", "b"] {
            let out = tmp.path().join(format!("{cmd}_{attempt}"));
            run_binary(&[cmd], cfg.as_deref(), &out)?;
            outputs.push(snapshot(&out));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{cmd} outputs differ between runs"));
        }
        files += outputs[0].len();
    }
    Ok(format!("6 subcommands, {files} files byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("mean formula exactness", exact_means),
        ("poisson reduction", poisson_reduction),
        ("variance formula vs monte carlo", variance_vs_monte_carlo),
        ("renewal oracle", renewal_oracle),
        ("exact stationarity onset", stationarity_onset),
        ("convergence bound", convergence_bound),
        ("cyclic stationarity", cyclic_stationarity),
        ("extinction sigmoid", extinction_sigmoid),
        ("swarming recovery", swarm_recovery),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
