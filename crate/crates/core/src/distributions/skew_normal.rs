//! Skew-normal lifetimes discretized onto the positive integers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use super::IntegerPmf;
use crate::error::{Error, Result};

/// Default upper-tail mass folded into the top atom.
pub const DEFAULT_TAIL_EPS: f64 = 1e-10;

/// Beyond this many scales from the location the density integrates to
/// less than `2 Phi(-12) ~ 4e-33`.
const SCALE_SPAN: f64 = 12.0;

/// Location (`xi`), scale (`omega`) and slant (`alpha`) of SN(xi, omega^2, alpha).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewNormalParams {
    pub xi: f64,
    pub omega: f64,
    pub alpha: f64,
}

impl SkewNormalParams {
    pub fn new(xi: f64, omega: f64, alpha: f64) -> Result<Self> {
        let p = Self { xi, omega, alpha };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() || self.omega < 0.0 {
            return Err(Error::InvalidScale(self.omega));
        }
        if !self.xi.is_finite() || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "skew-normal location and slant must be finite, got {self:?}"
            )));
        }
        Ok(())
    }

    /// `xi + omega delta sqrt(2/pi)` with `delta = alpha / sqrt(1 + alpha^2)`.
    pub fn mean(&self) -> f64 {
        let delta = self.alpha / (1.0 + self.alpha * self.alpha).sqrt();
        self.xi + self.omega * delta * (2.0 / PI).sqrt()
    }

    /// Continuous density; requires `omega > 0`.
    pub fn density(&self, x: f64) -> f64 {
        let z = (x - self.xi) / self.omega;
        2.0 / self.omega * normal_pdf(z) * normal_cdf(self.alpha * z)
    }

    /// Discretizes by rounding up to the next integer, with everything at or
    /// below one sent to one. The upper tail is cut at the first `K` with
    /// `P(X > K) < tail_eps` and that remainder is added to `K`.
    pub fn discretize(&self, tail_eps: f64) -> Result<IntegerPmf> {
        self.validate()?;
        if !(tail_eps > 0.0 && tail_eps <= 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "tail_eps must lie in (0, 1e-6], got {tail_eps}"
            )));
        }
        if self.omega == 0.0 {
            return Ok(IntegerPmf::point_mass(self.xi.ceil().max(1.0) as u64));
        }

        let lo = self.xi - SCALE_SPAN * self.omega;
        let hi = self.xi + SCALE_SPAN * self.omega;
        if hi <= 1.0 {
            return Ok(IntegerPmf::point_mass(1));
        }
        let top = hi.ceil() as u64;

        // masses[k - 1] = P(k - 1 < X <= k), with masses[0] = P(X <= 1)
        let mut masses = Vec::with_capacity(top as usize);
        masses.push(self.integrate(lo, 1.0));
        for k in 2..=top {
            masses.push(self.integrate((k - 1) as f64, k as f64));
        }

        let mut above = 0.0;
        let mut cut = masses.len();
        for k in (1..=masses.len()).rev() {
            if above + masses[k - 1] >= tail_eps {
                cut = k;
                break;
            }
            above += masses[k - 1];
        }
        masses.truncate(cut);
        *masses.last_mut().unwrap() += above;
        IntegerPmf::from_weights(1, masses)
    }

    /// `int_a^b f(x) dx` restricted to the effective support.
    fn integrate(&self, a: f64, b: f64) -> f64 {
        let lo = self.xi - SCALE_SPAN * self.omega;
        let hi = self.xi + SCALE_SPAN * self.omega;
        let (a, b) = (a.max(lo), b.min(hi));
        if a >= b {
            return 0.0;
        }
        // unit-scale panels keep each adaptive call on a smooth piece
        let panels = ((b - a) / self.omega).ceil().max(1.0) as usize;
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let x0 = a + i as f64 * width;
                adaptive_simpson(&|x| self.density(x), x0, x0 + width, 1e-13)
            })
            .sum()
    }
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF via the complementary error function
/// (`libm::erfc`, accurate to a few ulp), so
/// `|Phi(z) - exact| <= 1e-15` in absolute terms.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Skew-normal CDF by numerical integration of the density.
pub fn skew_normal_cdf(params: &SkewNormalParams, x: f64) -> f64 {
    if params.omega == 0.0 {
        return if x >= params.xi { 1.0 } else { 0.0 };
    }
    let lo = params.xi - SCALE_SPAN * params.omega;
    params.integrate(lo, x).min(1.0)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sn(xi: f64, omega: f64, alpha: f64) -> SkewNormalParams {
        SkewNormalParams::new(xi, omega, alpha).unwrap()
    }

    /// Composite trapezoid over a wide fine grid; independent of the
    /// adaptive integrator used by the implementation.
    fn trapezoid_mean(p: &SkewNormalParams) -> (f64, f64) {
        let (lo, hi, n) = (p.xi - 15.0 * p.omega, p.xi + 15.0 * p.omega, 400_000);
        let h = (hi - lo) / n as f64;
        let (mut mass, mut first) = (0.0, 0.0);
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            mass += w * p.density(x) * h;
            first += w * x * p.density(x) * h;
        }
        (mass, first)
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-17);
        assert!((normal_cdf(-8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }

    #[test]
    fn mean_formula() {
        assert_eq!(sn(63.0, 0.0, -6.0).mean(), 63.0);
        assert_eq!(sn(63.0, 10.0, 0.0).mean(), 63.0);
        let expected = 63.0 - 10.0 * (6.0 / 37f64.sqrt()) * (2.0 / PI).sqrt();
        assert!((sn(63.0, 10.0, -6.0).mean() - expected).abs() < 1e-12);
        assert!((expected - 55.129_715).abs() < 1e-6);
        let (mass, first) = trapezoid_mean(&sn(63.0, 10.0, -6.0));
        assert!((mass - 1.0).abs() < 1e-9);
        assert!((first - expected).abs() < 1e-6);
    }

    #[test]
    fn degenerate_scale_is_a_point_mass() {
        let p = sn(63.0, 0.0, -6.0).discretize(DEFAULT_TAIL_EPS).unwrap();
        assert_eq!(p, IntegerPmf::point_mass(63));
        assert_eq!(p.moments(), (63.0, 0.0));
        let p = sn(0.2, 0.0, 0.0).discretize(DEFAULT_TAIL_EPS).unwrap();
        assert_eq!(p, IntegerPmf::point_mass(1));
        let p = sn(-4.0, 0.0, 0.0).discretize(DEFAULT_TAIL_EPS).unwrap();
        assert_eq!(p, IntegerPmf::point_mass(1));
    }

    #[test]
    fn rejects_negative_scale_and_bad_tail() {
        assert_eq!(
            SkewNormalParams::new(1.0, -1.0, 0.0),
            Err(Error::InvalidScale(-1.0))
        );
        assert!(sn(63.0, 10.0, -6.0).discretize(0.0).is_err());
        assert!(sn(63.0, 10.0, -6.0).discretize(1e-3).is_err());
    }

    #[test]
    fn discretized_mean_tracks_continuous_mean() {
        let p = sn(63.0, 10.0, -6.0);
        let pmf = p.discretize(DEFAULT_TAIL_EPS).unwrap();
        let (mass, cont) = trapezoid_mean(&p);
        assert!((mass - 1.0).abs() < 1e-9);
        let mean = pmf.mean();
        assert!((mean - cont).abs() < 0.6, "{mean} vs {cont}");
        assert!(mean >= cont && mean <= cont + 1.0);
        assert_eq!(pmf.min_value(), 1);
        // upper tail of SN(63, 10^2, -6) is lighter than normal
        assert_eq!(pmf.max_value(), 73);
    }

    #[test]
    fn discretized_atoms_match_cdf_differences() {
        let p = sn(40.0, 20.0, -3.0);
        let pmf = p.discretize(DEFAULT_TAIL_EPS).unwrap();
        assert!((pmf.prob(1) - skew_normal_cdf(&p, 1.0)).abs() < 1e-10);
        for k in [5u64, 20, 41, 60] {
            let expected = skew_normal_cdf(&p, k as f64) - skew_normal_cdf(&p, k as f64 - 1.0);
            assert!((pmf.prob(k) - expected).abs() < 1e-10);
        }
        let tail = 1.0 - skew_normal_cdf(&p, pmf.max_value() as f64);
        assert!(tail < DEFAULT_TAIL_EPS);
    }

    #[test]
    fn wider_scale_shifts_mass_left() {
        let means: Vec<f64> = [10.0, 20.0, 30.0, 40.0]
            .iter()
            .map(|&w| {
                sn(63.0, w, -6.0)
                    .discretize(DEFAULT_TAIL_EPS)
                    .unwrap()
                    .mean()
            })
            .collect();
        assert!(means.windows(2).all(|w| w[0] > w[1]), "{means:?}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn discretized_mean_within_rounding_band(
                xi in 5.0f64..90.0,
                omega in 0.5f64..30.0,
                alpha in -10.0f64..10.0,
            ) {
                let p = SkewNormalParams::new(xi, omega, alpha).unwrap();
                let pmf = p.discretize(DEFAULT_TAIL_EPS).unwrap();
                let total: f64 = pmf.probs().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!(pmf.min_value() >= 1);
                // ceiling adds at most one above one; below one the shift is 1 - x
                let (lo, n) = (xi - 15.0 * omega, 20_000);
                let shortfall = if lo < 1.0 {
                    let h = (1.0 - lo) / n as f64;
                    (0..n).map(|i| {
                        let x = lo + (i as f64 + 0.5) * h;
                        (1.0 - x) * p.density(x) * h
                    }).sum::<f64>()
                } else {
                    0.0
                };
                let lower = p.mean() - 1e-6;
                let upper = p.mean() + 1.0 + shortfall + 1e-6;
                prop_assert!(pmf.mean() >= lower && pmf.mean() <= upper,
                    "mean {} not in [{}, {}]", pmf.mean(), lower, upper);
            }
        }
    }
}
