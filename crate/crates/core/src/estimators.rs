//! Closed-form confidence intervals for the MOS.
//!
//! The four "unbounded" estimators (normal, Student, simultaneous multinomial,
//! Wald) are returned exactly as computed, even when a bound leaves the
//! rating scale. The binomial-proportion estimators (Wilson with continuity
//! correction, Clopper-Pearson, Jeffreys) treat the shifted rating sum as
//! `n (k - 1)` Bernoulli trials and map the proportion interval back with
//! `p (k - 1) + 1`, clamped to `[1, k]`.

use serde::{Deserialize, Serialize};

use crate::bootstrap::{bca_ci, BootstrapSpec};
use crate::model::{EstimatorId, Interval, RatingSample, Scale};
use crate::numerics::{beta_quantile, chi_square_quantile, normal_quantile, student_t_quantile, RngStream};
use crate::{Error, Result};

/// Significance level `alpha`; the confidence level is `1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ConfidenceSpec {
    alpha: f64,
}

impl ConfidenceSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(ConfidenceSpec { alpha })
        } else {
            Err(Error::Domain(format!("alpha must lie in (0, 1) (got {alpha})")))
        }
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    pub fn gamma(self) -> f64 {
        1.0 - self.alpha
    }

    /// `z_{1 - alpha/2}`, the positive two-sided normal critical value.
    pub fn z(self) -> f64 {
        normal_quantile(1.0 - self.alpha / 2.0).expect("alpha validated in (0, 1)")
    }
}

impl Default for ConfidenceSpec {
    fn default() -> Self {
        ConfidenceSpec { alpha: 0.05 }
    }
}

impl TryFrom<f64> for ConfidenceSpec {
    type Error = Error;

    fn try_from(alpha: f64) -> Result<Self> {
        ConfidenceSpec::new(alpha)
    }
}

impl From<ConfidenceSpec> for f64 {
    fn from(c: ConfidenceSpec) -> f64 {
        c.alpha
    }
}

fn symmetric(sample: &RatingSample, conf: ConfidenceSpec, id: EstimatorId, half: f64) -> Interval {
    let point = sample.mos();
    Interval { lower: point - half, upper: point + half, point, estimator: id, alpha: conf.alpha() }
}

fn bounded(sample: &RatingSample, conf: ConfidenceSpec, id: EstimatorId, lower: f64, upper: f64) -> Interval {
    let scale = sample.scale();
    Interval {
        lower: lower.max(scale.low()),
        upper: upper.min(scale.high()),
        point: sample.mos(),
        estimator: id,
        alpha: conf.alpha(),
    }
}

/// `MOS ± z S / √n` with the unbiased sample standard deviation.
pub fn normal_ci(sample: &RatingSample, conf: ConfidenceSpec) -> Result<Interval> {
    let stats = sample.sample_stats()?;
    let half = conf.z() * stats.sd / (sample.n() as f64).sqrt();
    Ok(symmetric(sample, conf, EstimatorId::Norm, half))
}

/// As [`normal_ci`] with the Student t quantile at `n - 1` degrees of freedom.
pub fn student_ci(sample: &RatingSample, conf: ConfidenceSpec) -> Result<Interval> {
    let stats = sample.sample_stats()?;
    let df = u32::try_from(sample.n() - 1)
        .map_err(|_| Error::Domain("sample too large for a t quantile".into()))?;
    let t = student_t_quantile(1.0 - conf.alpha() / 2.0, df)?;
    let half = t * stats.sd / (sample.n() as f64).sqrt();
    Ok(symmetric(sample, conf, EstimatorId::Stud, half))
}

/// Simultaneous multinomial interval: `MOS ± √(χ²_{1-α/k,1} / n · (Σ i² n_i/n - MOS²))`.
pub fn simultaneous_ci(sample: &RatingSample, conf: ConfidenceSpec) -> Result<Interval> {
    let k = f64::from(sample.scale().k());
    let chi = chi_square_quantile(1.0 - conf.alpha() / k, 1)?;
    let half = (chi / sample.n() as f64 * sample.plugin_variance()).sqrt();
    Ok(symmetric(sample, conf, EstimatorId::Simci, half))
}

/// Number of trials used in the Wald standard error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaldDivisor {
    /// `√(p̂(1 - p̂) / n)`, the reading used by [`wald_ci`].
    Subjects,
    /// `√(p̂(1 - p̂) / (n (k - 1)))`, the textbook binomial standard error.
    Trials,
}

/// Wald interval `MOS ± z √(p̂(1 - p̂)/n) (k - 1)` with `p̂ = (MOS - 1)/(k - 1)`.
pub fn wald_ci(sample: &RatingSample, conf: ConfidenceSpec) -> Result<Interval> {
    wald_ci_with(sample, conf, WaldDivisor::Subjects)
}

pub fn wald_ci_with(sample: &RatingSample, conf: ConfidenceSpec, divisor: WaldDivisor) -> Result<Interval> {
    let k0 = f64::from(sample.scale().k0());
    let p = (sample.mos() - 1.0) / k0;
    let trials = match divisor {
        WaldDivisor::Subjects => sample.n() as f64,
        WaldDivisor::Trials => sample.n() as f64 * k0,
    };
    let se = (p * (1.0 - p) / trials).max(0.0).sqrt();
    Ok(symmetric(sample, conf, EstimatorId::Wald, conf.z() * se * k0))
}

/// Maps a proportion interval `[p0, p1]` onto the rating scale, `p (k - 1) + 1`.
pub fn proportion_ci_to_mos_ci(p0: f64, p1: f64, scale: Scale) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) {
        return Err(Error::Domain(format!("proportion bounds [{p0}, {p1}] outside [0, 1]")));
    }
    if p0 > p1 {
        return Err(Error::Domain(format!("inverted proportion interval [{p0}, {p1}]")));
    }
    let k0 = f64::from(scale.k0());
    Ok((p0 * k0 + 1.0, p1 * k0 + 1.0))
}

/// Wilson score interval with continuity correction over `N = n (k - 1)` trials.
///
/// The same radicand `z² - 1/N + 4Np̂(1-p̂) + (4p̂ - 2)` is used for both bounds.
/// It is floored at zero, which only matters for very large alpha. With no
/// successes the lower bound is the scale minimum, with only successes the
/// upper bound is the scale maximum.
pub fn wilson_cc_ci(sample: &RatingSample, conf: ConfidenceSpec) -> Result<Interval> {
    let k0 = f64::from(sample.scale().k0());
    let sc = sample.success_count();
    let trials = sc.trials as f64;
    let p = (sample.mos() - 1.0) / k0;
    let z = conf.z();
    let z2 = z * z;
    let radicand = z2 - 1.0 / trials + 4.0 * trials * p * (1.0 - p) + (4.0 * p - 2.0);
    let d = 1.0 + z * radicand.max(0.0).sqrt();
    let denom = 2.0 * (trials + z2);
    let lower = if sc.successes == 0 { 1.0 } else { k0 * (2.0 * trials * p + z2 - d) / denom + 1.0 };
    let upper = if sc.successes == sc.trials {
        sample.scale().high()
    } else {
        k0 * (2.0 * trials * p + z2 + d) / denom + 1.0
    };
    Ok(bounded(sample, conf, EstimatorId::Wilson, lower, upper))
}

/// Central exact (Clopper-Pearson) interval from beta quantiles.
pub fn clopper_pearson_ci(sample: &RatingSample, conf: ConfidenceSpec) -> Result<Interval> {
    let sc = sample.success_count();
    let (c, n) = (sc.successes as f64, sc.trials as f64);
    let a = conf.alpha();
    let p0 = if sc.successes == 0 { 0.0 } else { beta_quantile(a / 2.0, c, n - c + 1.0)? };
    let p1 = if sc.successes == sc.trials { 1.0 } else { beta_quantile(1.0 - a / 2.0, c + 1.0, n - c)? };
    let (lower, upper) = proportion_ci_to_mos_ci(p0, p1, sample.scale())?;
    Ok(bounded(sample, conf, EstimatorId::Cp, lower, upper))
}

/// Jeffreys interval: equal-tailed Beta(c + ½, N - c + ½) credible interval.
pub fn jeffreys_ci(sample: &RatingSample, conf: ConfidenceSpec) -> Result<Interval> {
    let sc = sample.success_count();
    let (c, n) = (sc.successes as f64, sc.trials as f64);
    let a = conf.alpha();
    let p0 = if sc.successes == 0 { 0.0 } else { beta_quantile(a / 2.0, c + 0.5, n - c + 0.5)? };
    let p1 =
        if sc.successes == sc.trials { 1.0 } else { beta_quantile(1.0 - a / 2.0, c + 0.5, n - c + 0.5)? };
    let (lower, upper) = proportion_ci_to_mos_ci(p0, p1, sample.scale())?;
    Ok(bounded(sample, conf, EstimatorId::Jeffreys, lower, upper))
}

/// Computes the interval of any estimator. `resamples` and `rng` are only
/// consulted by the bootstrap.
pub fn estimate(
    id: EstimatorId,
    sample: &RatingSample,
    conf: ConfidenceSpec,
    resamples: usize,
    rng: RngStream,
) -> Result<Interval> {
    match id {
        EstimatorId::Norm => normal_ci(sample, conf),
        EstimatorId::Stud => student_ci(sample, conf),
        EstimatorId::Simci => simultaneous_ci(sample, conf),
        EstimatorId::Wald => wald_ci(sample, conf),
        EstimatorId::Cp => clopper_pearson_ci(sample, conf),
        EstimatorId::Wilson => wilson_cc_ci(sample, conf),
        EstimatorId::Jeffreys => jeffreys_ci(sample, conf),
        EstimatorId::Boot => bca_ci(sample, &BootstrapSpec::new(resamples, conf, rng)?),
    }
}
