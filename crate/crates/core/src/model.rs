//! Rating scales, samples and intervals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A discrete rating scale with categories `1..=k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Scale {
    k: u32,
}

impl Scale {
    pub fn new(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("a rating scale needs k >= 2 points (got {k})")));
        }
        Ok(Scale { k })
    }

    /// The five-point ACR scale.
    pub fn acr5() -> Self {
        Scale { k: 5 }
    }

    pub fn k(self) -> u32 {
        self.k
    }

    /// Number of binomial trials contributed by one rating, `k - 1`.
    pub fn k0(self) -> u32 {
        self.k - 1
    }

    pub fn low(self) -> f64 {
        1.0
    }

    pub fn high(self) -> f64 {
        f64::from(self.k)
    }

    pub fn contains(self, rating: u32) -> bool {
        (1..=self.k).contains(&rating)
    }
}

impl TryFrom<u32> for Scale {
    type Error = Error;

    fn try_from(k: u32) -> Result<Self> {
        Scale::new(k)
    }
}

impl From<Scale> for u32 {
    fn from(s: Scale) -> u32 {
        s.k
    }
}

/// Observed ratings of one test condition, stored as a histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingSample {
    scale: Scale,
    counts: Vec<u64>,
    n: u64,
}

/// Binomial view of a sample: `successes = Σ (y - 1)` out of `trials = n (k - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuccessCount {
    pub successes: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    /// Unbiased standard deviation (divisor `n - 1`).
    pub sd: f64,
}

impl RatingSample {
    pub fn from_ratings(scale: Scale, ratings: &[u32]) -> Result<Self> {
        let mut counts = vec![0u64; scale.k() as usize];
        for &y in ratings {
            if !scale.contains(y) {
                return Err(Error::Domain(format!("rating {y} outside the scale 1..={}", scale.k())));
            }
            counts[y as usize - 1] += 1;
        }
        Self::from_counts(scale, counts)
    }

    pub fn from_counts(scale: Scale, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != scale.k() as usize {
            return Err(Error::Domain(format!(
                "{} category counts for a {}-point scale",
                counts.len(),
                scale.k()
            )));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::Domain("a rating sample needs at least one rating".into()));
        }
        Ok(RatingSample { scale, counts, n })
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Category counts `n_1..n_k`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Ratings in ascending order.
    pub fn ratings(&self) -> Vec<u32> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i as u32 + 1, c as usize))
            .collect()
    }

    /// Mean opinion score `Σ i n_i / n`.
    pub fn mos(&self) -> f64 {
        1.0 + self.success_count().successes as f64 / self.n as f64
    }

    fn moment(&self, power: i32) -> f64 {
        self.counts.iter().enumerate().map(|(i, &c)| (i as f64 + 1.0).powi(power) * c as f64).sum()
    }

    pub fn success_count(&self) -> SuccessCount {
        let successes = self.counts.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();
        SuccessCount { successes, trials: self.n * u64::from(self.scale.k0()) }
    }

    pub fn sample_stats(&self) -> Result<SampleStats> {
        if self.n < 2 {
            return Err(Error::Domain("sample standard deviation needs at least two ratings".into()));
        }
        let mean = self.mos();
        let ss: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let d = i as f64 + 1.0 - mean;
                c as f64 * d * d
            })
            .sum();
        Ok(SampleStats { mean, sd: (ss / (self.n - 1) as f64).sqrt() })
    }

    /// `Σ i² n_i / n - (Σ i n_i / n)²`, the plug-in (divisor `n`) variance.
    pub fn plugin_variance(&self) -> f64 {
        let n = self.n as f64;
        let mean = self.mos();
        (self.moment(2) / n - mean * mean).max(0.0)
    }
}

/// The eight interval estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorId {
    Norm,
    Stud,
    Simci,
    Wald,
    Cp,
    Wilson,
    Jeffreys,
    Boot,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 8] = [
        EstimatorId::Norm,
        EstimatorId::Stud,
        EstimatorId::Simci,
        EstimatorId::Wald,
        EstimatorId::Cp,
        EstimatorId::Wilson,
        EstimatorId::Jeffreys,
        EstimatorId::Boot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorId::Norm => "norm",
            EstimatorId::Stud => "stud",
            EstimatorId::Simci => "simci",
            EstimatorId::Wald => "wald",
            EstimatorId::Cp => "cp",
            EstimatorId::Wilson => "wilson",
            EstimatorId::Jeffreys => "jeffreys",
            EstimatorId::Boot => "boot",
        }
    }

    /// Short row label used in tabular reports.
    pub fn label(self) -> &'static str {
        match self {
            EstimatorId::Norm => "norm.",
            EstimatorId::Stud => "stud.",
            EstimatorId::Simci => "sim.CI",
            EstimatorId::Wald => "Wald",
            EstimatorId::Cp => "C-P",
            EstimatorId::Wilson => "Wils.",
            EstimatorId::Jeffreys => "Jeff.",
            EstimatorId::Boot => "boot.",
        }
    }

    /// Whether the estimator clips its bounds to the rating scale.
    pub fn is_bounded(self) -> bool {
        matches!(self, EstimatorId::Cp | EstimatorId::Wilson | EstimatorId::Jeffreys | EstimatorId::Boot)
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        EstimatorId::ALL
            .into_iter()
            .find(|id| id.as_str() == lower || id.label().to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::Domain(format!("unknown estimator '{s}'")))
    }
}

/// A confidence interval `[lower, upper]` for the MOS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    /// The MOS of the sample the interval was built from.
    pub point: f64,
    pub estimator: EstimatorId,
    pub alpha: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    /// True when a bound leaves `[1, k]`.
    pub fn exceeds(&self, scale: Scale) -> bool {
        self.lower < scale.low() || self.upper > scale.high()
    }
}
