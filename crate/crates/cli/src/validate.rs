//! Cross-checks between the closed forms and independent oracles: exact
//! enumeration, Poisson identities and Monte Carlo.

use std::f64::consts::PI;

use colony::cyclic::CyclicModel;
use colony::distributions::{
    poisson_ln_pmf, tv_distance, HatchProbability, IntegerPmf, SkewNormalParams, DEFAULT_TAIL_EPS,
};
use colony::renewal::{RenewalSpec, RenewalTable};
use colony::rng::{stream_rng, Purpose};
use colony::scalar::ratio;
use colony::simulator::{day_counts, run_traces, SimConfig, SimModel};
use colony::stationary::ColonyModel;
use colony::ExactModel;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Fault injection: shift every renewal-function value by this amount.
    pub perturb_renewal: Option<f64>,
    pub samples: u64,
    pub seed: u64,
    /// A model from the user's config, checked against its own sampler.
    pub extra_model: Option<ColonyModel>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            perturb_renewal: None,
            samples: 20_000,
            seed: 7,
            extra_model: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
}

struct Suite<'a> {
    options: &'a SuiteOptions,
    checks: Vec<Check>,
}

impl Suite<'_> {
    fn record(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    fn table(&self, spec: &RenewalSpec, n_max: u64) -> RenewalTable {
        let table = spec.renewal_function(n_max);
        match self.options.perturb_renewal {
            Some(delta) => table.perturbed(delta),
            None => table,
        }
    }

    fn variance(&self, model: &ColonyModel) -> colony::Result<f64> {
        model.variance_with_table(&self.table(model.renewal(), model.lifetime_bound()))
    }
}

fn hatch(r: f64) -> HatchProbability {
    HatchProbability::new(r).expect("valid probability")
}

fn pmf(min: u64, w: &[f64]) -> IntegerPmf {
    IntegerPmf::from_weights(min, w.to_vec()).expect("valid weights")
}

fn lifetime(xi: f64) -> IntegerPmf {
    SkewNormalParams::new(xi, 10.0, -6.0)
        .and_then(|p| p.discretize(DEFAULT_TAIL_EPS))
        .expect("valid skew normal")
}

/// `H(n)` as the probability-weighted count of partial sums `<= n` over
/// every gap sequence.
pub fn enumerate_renewals(tau: &IntegerPmf, n: u64) -> f64 {
    fn walk(tau: &IntegerPmf, n: u64, sum: u64, weight: f64) -> f64 {
        tau.iter()
            .filter(|&(k, _)| sum + k <= n)
            .map(|(k, p)| weight * p + walk(tau, n, sum + k, weight * p))
            .sum()
    }
    walk(tau, n, 0, 1.0)
}

fn sample_moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    let se_mean = (var / n).sqrt();
    let se_var = ((m4 - m2 * m2).max(0.0) / n).sqrt();
    (mean, var, se_mean, se_var)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn run_suite(options: &SuiteOptions) -> Report {
    let mut suite = Suite {
        options,
        checks: Vec::new(),
    };
    worked_means(&mut suite);
    renewal_enumeration(&mut suite);
    renewal_second_moment(&mut suite);
    poisson_variance(&mut suite);
    poisson_inversion(&mut suite);
    inversion_moments(&mut suite);
    sampler_moments(&mut suite, "sampler_mixed_model", &mixed_model());
    if let Some(model) = &options.extra_model {
        sampler_moments(&mut suite, "sampler_config_model", model);
    }
    skew_normal_discretization(&mut suite);
    convergence_bound(&mut suite);
    cyclic_reduction(&mut suite);
    cyclic_periodicity(&mut suite);
    simulator_onset(&mut suite);
    simulator_determinism(&mut suite);
    let passed = suite.checks.iter().all(|c| c.passed);
    Report {
        passed,
        checks: suite.checks,
    }
}

fn mixed_model() -> ColonyModel {
    ColonyModel::new(
        pmf(1, &[0.5, 0.5]),
        pmf(2, &[0.4, 0.0, 0.0, 0.6]),
        hatch(0.7),
        pmf(3, &[0.2, 0.0, 0.5, 0.3]),
    )
    .expect("valid model")
}

fn worked_means(suite: &mut Suite) {
    let cases = [
        (1875, (4, 5), 63, 96_000),
        (1600, (3, 4), 63, 76_800),
        (1600, (3, 4), 50, 61_200),
    ];
    let mut detail = Vec::new();
    let mut ok = true;
    for (zeta, (a, b), eta, expected) in cases {
        let model = ExactModel::new(
            IntegerPmf::point_mass(1),
            IntegerPmf::point_mass(zeta),
            HatchProbability::new(ratio(a, b)).expect("valid probability"),
            IntegerPmf::point_mass(eta),
        )
        .expect("valid model");
        let mean = model.stationary_mean();
        ok &= mean == ratio(expected, 1);
        detail.push(mean.to_string());
    }
    suite.record("worked_mean_examples", ok, detail.join(", "));
}

fn renewal_enumeration(suite: &mut Suite) {
    let tau = pmf(1, &[0.5, 0.5]);
    let spec = RenewalSpec::new(tau.clone()).expect("aperiodic");
    let table = suite.table(&spec, 12);
    let worst = (1..=12)
        .map(|n| (table.get(n).expect("in table") - enumerate_renewals(&tau, n)).abs())
        .fold(0.0, f64::max);
    suite.record(
        "renewal_enumeration",
        worst < 1e-12,
        format!("max |H - enumeration| = {worst:e}"),
    );
}

fn renewal_second_moment(suite: &mut Suite) {
    let spec = RenewalSpec::new(pmf(1, &[0.5, 0.5])).expect("aperiodic");
    let table = suite.table(&spec, 20);
    let mut rng = stream_rng(suite.options.seed, 0, Purpose::Validation);
    let n = suite.options.samples as usize;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for u in [5u64, 10, 20] {
        let squares: Vec<f64> = (0..n)
            .map(|_| {
                let epochs = spec.sample_equilibrium_epochs(u, &mut rng);
                (epochs.len() as f64).powi(2)
            })
            .collect();
        let (mean, _, se, _) = sample_moments(&squares);
        let closed = spec
            .equilibrium_count_second_moment(&table, u)
            .expect("table covers u");
        let z = (mean - closed).abs() / se;
        worst = worst.max(z);
        ok &= z < 4.0;
    }
    suite.record(
        "renewal_second_moment_mc",
        ok,
        format!("max z = {worst:.2}"),
    );
}

fn poisson_variance(suite: &mut Suite) {
    let model = ColonyModel::with_poisson_eggs(
        IntegerPmf::point_mass(1),
        100.0,
        hatch(0.8),
        lifetime(63.0),
    )
    .expect("valid model");
    let result = suite.variance(&model);
    let mean = model.stationary_mean();
    let (ok, detail) = match result {
        Ok(var) => (
            relative(var, mean) < 1e-6,
            format!("variance {var}, mean {mean}"),
        ),
        Err(e) => (false, e.to_string()),
    };
    suite.record("poisson_variance_equals_mean", ok, detail);
}

fn poisson_inversion(suite: &mut Suite) {
    let model =
        ColonyModel::with_poisson_eggs(IntegerPmf::point_mass(1), 5.0, hatch(0.5), lifetime(63.0))
            .expect("valid model");
    let mu = model.stationary_mean();
    let (ok, detail) = match model.stationary_pmf_via_cf() {
        Ok(law) => {
            let hi = law.max_value() + 50;
            let exact = IntegerPmf::from_weights(
                0,
                (0..=hi).map(|k| poisson_ln_pmf(mu, k).exp()).collect(),
            )
            .expect("valid weights");
            let tv = tv_distance(&law, &exact);
            (tv < 1e-7, format!("TV = {tv:e}"))
        }
        Err(e) => (false, e.to_string()),
    };
    suite.record("poisson_pmf_inversion", ok, detail);
}

fn inversion_moments(suite: &mut Suite) {
    let model = ColonyModel::new(
        IntegerPmf::point_mass(1),
        pmf(1, &[0.3, 0.0, 0.0, 0.7]),
        hatch(0.8),
        lifetime(40.0),
    )
    .expect("valid model");
    let (ok, detail) = match (model.stationary_pmf_via_cf(), suite.variance(&model)) {
        (Ok(law), Ok(var)) => {
            let (m, v) = law.moments();
            let em = model.stationary_mean();
            (
                relative(m, em) < 1e-6 && relative(v, var) < 1e-6,
                format!("inverted mean {m} vs {em}, variance {v} vs {var}"),
            )
        }
        (Err(e), _) | (_, Err(e)) => (false, e.to_string()),
    };
    suite.record("cf_inversion_moments", ok, detail);
}

fn sampler_moments(suite: &mut Suite, name: &str, model: &ColonyModel) {
    let sampler = model.sampler();
    let mut rng = stream_rng(suite.options.seed, 1, Purpose::Validation);
    let draws: Vec<f64> = (0..suite.options.samples)
        .map(|_| sampler.sample(&mut rng) as f64)
        .collect();
    let (mean, var, se_mean, se_var) = sample_moments(&draws);
    let (ok, detail) = match suite.variance(model) {
        Ok(analytic) => {
            let em = model.stationary_mean();
            let z_mean = (mean - em).abs() / se_mean.max(1e-12);
            let z_var = (var - analytic).abs() / se_var.max(1e-12);
            let exact = se_mean == 0.0 && mean == em && var == analytic;
            (
                exact || (z_mean < 4.0 && z_var < 4.0),
                format!("mean z = {z_mean:.2}, variance z = {z_var:.2}"),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    suite.record(name, ok, detail);
}

fn skew_normal_discretization(suite: &mut Suite) {
    let params = SkewNormalParams::new(63.0, 10.0, -6.0).expect("valid");
    let law = lifetime(63.0);
    let cont = params.mean();
    let mean = law.mean();
    let ok = law.max_value() == 73 && mean >= cont && mean <= cont + 1.0;
    suite.record(
        "skew_normal_discretization",
        ok,
        format!("K = {}, mean {mean} vs continuous {cont}", law.max_value()),
    );
}

fn convergence_bound(suite: &mut Suite) {
    let model = ColonyModel::new(
        IntegerPmf::point_mass(1),
        pmf(0, &[0.5, 0.5]),
        hatch(0.9),
        lifetime(30.0),
    )
    .expect("valid model");
    let k = model.lifetime_bound();
    let bounds: Vec<f64> = (0..=k + 3)
        .map(|n| model.convergence_bound(n).expect("degenerate gap"))
        .collect();
    let monotone = bounds.windows(2).all(|w| w[1] <= w[0]);
    let zero = bounds[(k + 1) as usize] == 0.0 && bounds[k as usize] > 0.0;
    suite.record(
        "convergence_bound_profile",
        monotone && zero,
        format!("bound(0) = {}, first zero at {k} + 1", bounds[0]),
    );
}

fn cyclic_reduction(suite: &mut Suite) {
    let model = mixed_model_daily();
    let cyclic = CyclicModel::from_homogeneous(&model, 7).expect("daily batches");
    let em = model.stationary_mean();
    let flat = cyclic
        .mean_profile()
        .iter()
        .all(|m| relative(*m, em) < 1e-12);
    let k = cyclic.lifetime_bound() as i64;
    let worst = (0..32)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / 32.0;
            (cyclic.cf(k + 1 + j, t).expect("past bound")
                - model.stationary_cf(t).expect("degenerate gap"))
            .norm()
        })
        .fold(0.0, f64::max);
    suite.record(
        "cyclic_reduction",
        flat && worst < 1e-12,
        format!("max CF difference {worst:e}"),
    );
}

fn mixed_model_daily() -> ColonyModel {
    ColonyModel::new(
        IntegerPmf::point_mass(1),
        pmf(2, &[0.4, 0.0, 0.6]),
        hatch(0.7),
        lifetime(20.0),
    )
    .expect("valid model")
}

fn cyclic_periodicity(suite: &mut Suite) {
    let model = CyclicModel::new(
        vec![
            pmf(0, &[0.5, 0.5]),
            IntegerPmf::point_mass(3),
            pmf(1, &[0.2, 0.0, 0.8]),
        ],
        vec![hatch(0.9), hatch(0.5), hatch(1.0)],
        vec![
            pmf(0, &[0.5, 0.5]),
            IntegerPmf::point_mass(4),
            pmf(2, &[0.3, 0.7]),
        ],
    )
    .expect("valid model");
    let mut ok = true;
    for n in 1..=3 {
        for j in 0..8 {
            let t = 0.7 * j as f64;
            ok &= model.cf(n + 6, t).ok() == model.cf(n + 9, t).ok();
        }
    }
    suite.record(
        "cyclic_cf_periodicity",
        ok,
        "CF at n + 2D equals CF at n + 3D".into(),
    );
}

fn simulator_onset(suite: &mut Suite) {
    let model = mixed_model_daily();
    let day = model.lifetime_bound() + 5;
    let cfg = SimConfig::new(
        SimModel::Homogeneous(model.clone()),
        day,
        1,
        suite.options.seed,
    );
    let n = (suite.options.samples / 4).max(100);
    let (ok, detail) = match day_counts(&cfg, day, n) {
        Ok(counts) => {
            let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            let (mean, _, se, _) = sample_moments(&xs);
            let z = (mean - model.stationary_mean()).abs() / se;
            (
                z < 4.0,
                format!("day {day}: ensemble mean {mean}, z = {z:.2}"),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    suite.record("simulator_stationary_mean", ok, detail);
}

fn simulator_determinism(suite: &mut Suite) {
    let cfg = SimConfig::new(
        SimModel::Homogeneous(mixed_model()),
        60,
        8,
        suite.options.seed,
    );
    let same = run_traces(&cfg).ok() == run_traces(&cfg).ok();
    suite.record(
        "simulator_determinism",
        same,
        "two runs with one seed".into(),
    );
}
