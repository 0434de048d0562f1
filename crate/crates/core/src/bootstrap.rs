//! Non-parametric BCa (bias-corrected and accelerated) bootstrap interval for the MOS.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimators::ConfidenceSpec;
use crate::model::{EstimatorId, Interval, RatingSample};
use crate::numerics::{empirical_quantile, normal_cdf, normal_quantile, RngStream};
use crate::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const MIN_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub resamples: usize,
    pub conf: ConfidenceSpec,
    pub rng: RngStream,
}

impl BootstrapSpec {
    pub fn new(resamples: usize, conf: ConfidenceSpec, rng: RngStream) -> Result<Self> {
        if resamples < MIN_RESAMPLES {
            return Err(Error::Domain(format!(
                "bootstrap needs at least {MIN_RESAMPLES} resamples (got {resamples})"
            )));
        }
        Ok(BootstrapSpec { resamples, conf, rng })
    }
}

/// Intermediate quantities of a BCa interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcaDetail {
    /// Bias correction `z0`.
    pub bias: f64,
    /// Jackknife acceleration `â`.
    pub acceleration: f64,
    /// Adjusted percentile order of the lower bound.
    pub order_low: f64,
    /// Adjusted percentile order of the upper bound.
    pub order_high: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Jackknife acceleration from leave-one-out estimates; zero when they are all equal.
pub fn jackknife_acceleration(leave_one_out: &[f64]) -> f64 {
    let m = leave_one_out.len() as f64;
    let mean = leave_one_out.iter().sum::<f64>() / m;
    let (mut s2, mut s3) = (0.0, 0.0);
    for &t in leave_one_out {
        let d = mean - t;
        s2 += d * d;
        s3 += d * d * d;
    }
    if s2 <= 0.0 {
        0.0
    } else {
        s3 / (6.0 * s2.powf(1.5))
    }
}

/// BCa interval from a set of bootstrap replicates and jackknife estimates.
///
/// Replicates equal to `estimate` count half towards the bias proportion.
/// When every replicate equals the estimate the bias is defined as zero; a
/// proportion of exactly 0 or 1 is pulled in by half a replicate so that
/// the normal quantile stays finite.
pub fn bca_from_replicates(
    estimate: f64,
    replicates: &[f64],
    leave_one_out: &[f64],
    conf: ConfidenceSpec,
) -> Result<BcaDetail> {
    if replicates.is_empty() || leave_one_out.is_empty() {
        return Err(Error::Domain("BCa needs replicates and jackknife estimates".into()));
    }
    let b = replicates.len() as f64;
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);

    let below = sorted.iter().filter(|&&t| t < estimate).count() as f64;
    let ties = sorted.iter().filter(|&&t| t == estimate).count() as f64;
    let bias = if ties == b {
        0.0
    } else {
        let prop = ((below + 0.5 * ties) / b).clamp(0.5 / b, 1.0 - 0.5 / b);
        normal_quantile(prop)?
    };
    let acceleration = jackknife_acceleration(leave_one_out);

    let adjust = |z: f64| {
        let s = bias + z;
        normal_cdf(bias + s / (1.0 - acceleration * s))
    };
    let alpha = conf.alpha();
    let order_low = adjust(normal_quantile(alpha / 2.0)?);
    let order_high = adjust(normal_quantile(1.0 - alpha / 2.0)?);

    Ok(BcaDetail {
        bias,
        acceleration,
        order_low,
        order_high,
        lower: empirical_quantile(&sorted, order_low),
        upper: empirical_quantile(&sorted, order_high),
    })
}

/// Resample means and leave-one-out means for a sample, then BCa.
pub fn bca_detail(sample: &RatingSample, spec: &BootstrapSpec) -> Result<BcaDetail> {
    let n = sample.n() as usize;
    if n < 2 {
        return Err(Error::Domain("bootstrap needs at least two ratings".into()));
    }
    let ratings = sample.ratings();
    let total: u64 = ratings.iter().map(|&y| u64::from(y)).sum();
    let nf = n as f64;
    let estimate = total as f64 / nf;

    let mut rng = spec.rng.rng();
    let replicates: Vec<f64> = (0..spec.resamples)
        .map(|_| {
            let s: u64 = (0..n).map(|_| u64::from(ratings[rng.gen_range(0..n)])).sum();
            s as f64 / nf
        })
        .collect();

    let leave_one_out: Vec<f64> =
        ratings.iter().map(|&y| (total - u64::from(y)) as f64 / (nf - 1.0)).collect();

    bca_from_replicates(estimate, &replicates, &leave_one_out, spec.conf)
}

/// BCa bootstrap confidence interval for the MOS.
pub fn bca_ci(sample: &RatingSample, spec: &BootstrapSpec) -> Result<Interval> {
    let detail = bca_detail(sample, spec)?;
    Ok(Interval {
        lower: detail.lower,
        upper: detail.upper,
        point: sample.mos(),
        estimator: EstimatorId::Boot,
        alpha: spec.conf.alpha(),
    })
}
