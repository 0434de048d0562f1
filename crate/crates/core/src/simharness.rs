//! Monte-Carlo evaluation of interval estimators.
//!
//! A study samples `n` ratings for each of `m` test conditions with known
//! expected rating `μ_x`, repeats that `r` times, and records for every cell
//! `(x, i)` whether the interval covers `μ_x`, whether it leaves the scale,
//! and its width. Marginals are then taken per condition (over runs) and per
//! run (over conditions).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimators::{estimate, ConfidenceSpec};
use crate::model::{EstimatorId, Interval, RatingSample, Scale};
use crate::numerics::{empirical_quantile, CategoricalSampler, RngStream};
use crate::{Error, Result};

pub const DEFAULT_SUBJECTS: u32 = 20;
pub const DEFAULT_CONDITIONS: u32 = 101;
pub const DEFAULT_RUNS: u32 = 200;

/// Family of rating distributions a study draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// `Bino(k - 1, p) + 1` over means `1..=k`.
    Binomial,
    /// `Bino(k - 3, p) + 2` over means `2..=k-1`; the scale edges are never used.
    LowVariance,
    /// Every category equally likely; a single condition.
    Uniform,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Binomial => "binomial",
            ScenarioKind::LowVariance => "low_variance",
            ScenarioKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "binomial" | "bino" => Ok(ScenarioKind::Binomial),
            "low_variance" | "lowvar" | "low_var" => Ok(ScenarioKind::LowVariance),
            "uniform" => Ok(ScenarioKind::Uniform),
            other => Err(Error::Domain(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub scale: Scale,
    /// Ratings per condition, `n`.
    pub subjects: u32,
    /// Test conditions, `m`. Forced to 1 for the uniform scenario.
    pub conditions: u32,
    /// Repetitions, `r`.
    pub runs: u32,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, scale: Scale) -> Self {
        ScenarioSpec {
            kind,
            scale,
            subjects: DEFAULT_SUBJECTS,
            conditions: if kind == ScenarioKind::Uniform { 1 } else { DEFAULT_CONDITIONS },
            runs: DEFAULT_RUNS,
            seed: 0,
        }
    }

    pub fn with_subjects(mut self, n: u32) -> Self {
        self.subjects = n;
        self
    }

    pub fn with_conditions(mut self, m: u32) -> Self {
        self.conditions = if self.kind == ScenarioKind::Uniform { 1 } else { m };
        self
    }

    pub fn with_runs(mut self, r: u32) -> Self {
        self.runs = r;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.subjects < 1 {
            return Err(Error::Domain("a study needs at least one subject".into()));
        }
        if self.conditions < 1 || self.runs < 1 {
            return Err(Error::Domain("a study needs m >= 1 conditions and r >= 1 runs".into()));
        }
        if self.kind == ScenarioKind::Uniform && self.conditions != 1 {
            return Err(Error::Domain("the uniform scenario has a single condition".into()));
        }
        if self.kind == ScenarioKind::LowVariance && self.scale.k() < 4 {
            return Err(Error::Domain("the low-variance scenario needs k >= 4".into()));
        }
        Ok(())
    }

    /// Grid bounds `(L, H)` of the target means.
    pub fn bounds(&self) -> (f64, f64) {
        let k = self.scale.high();
        match self.kind {
            ScenarioKind::Binomial => (1.0, k),
            ScenarioKind::LowVariance => (2.0, k - 1.0),
            ScenarioKind::Uniform => {
                let mid = (1.0 + k) / 2.0;
                (mid, mid)
            }
        }
    }

    /// Rating distribution of a condition with expected rating `mu`.
    pub fn distribution(&self, mu: f64) -> Result<Vec<f64>> {
        match self.kind {
            ScenarioKind::Binomial => binomial_scenario_dist(mu, self.scale),
            ScenarioKind::LowVariance => low_variance_scenario_dist(mu, self.scale),
            ScenarioKind::Uniform => Ok(uniform_scenario_dist(self.scale)),
        }
    }
}

/// Target means `μ_x = L + (x - 1)/(m - 1) (H - L)`, `x = 1..=m`.
pub fn mean_grid(spec: &ScenarioSpec) -> Vec<f64> {
    let (lo, hi) = spec.bounds();
    let m = spec.conditions.max(1);
    if m == 1 {
        return vec![lo];
    }
    (0..m).map(|x| if x == m - 1 { hi } else { lo + f64::from(x) / f64::from(m - 1) * (hi - lo) }).collect()
}

fn binomial_pmf(trials: u32, p: f64) -> Vec<f64> {
    let mut coef = 1.0f64;
    (0..=trials)
        .map(|j| {
            if j > 0 {
                coef = coef * f64::from(trials - j + 1) / f64::from(j);
            }
            coef * p.powi(j as i32) * (1.0 - p).powi((trials - j) as i32)
        })
        .collect()
}

/// `Bino(k - 1, p) + 1` with `p = (μ - 1)/(k - 1)`.
pub fn binomial_scenario_dist(mu: f64, scale: Scale) -> Result<Vec<f64>> {
    if !(scale.low()..=scale.high()).contains(&mu) {
        return Err(Error::Domain(format!("binomial scenario mean {mu} outside [1, {}]", scale.k())));
    }
    let k0 = scale.k0();
    Ok(binomial_pmf(k0, (mu - 1.0) / f64::from(k0)))
}

/// `Bino(k - 3, p) + 2` with `p = (μ - 2)/(k - 3)`; categories 1 and k get zero mass.
pub fn low_variance_scenario_dist(mu: f64, scale: Scale) -> Result<Vec<f64>> {
    let k = scale.k();
    if k < 4 {
        return Err(Error::Domain("the low-variance scenario needs k >= 4".into()));
    }
    if !(2.0..=f64::from(k - 1)).contains(&mu) {
        return Err(Error::Domain(format!("low-variance scenario mean {mu} outside [2, {}]", k - 1)));
    }
    let trials = k - 3;
    let mut probs = vec![0.0];
    probs.extend(binomial_pmf(trials, (mu - 2.0) / f64::from(trials)));
    probs.push(0.0);
    Ok(probs)
}

pub fn uniform_scenario_dist(scale: Scale) -> Vec<f64> {
    vec![1.0 / scale.high(); scale.k() as usize]
}

/// Interval estimator as seen by the harness.
pub trait CellEstimator: Sync {
    fn id(&self) -> EstimatorId;
    fn interval(&self, sample: &RatingSample, rng: RngStream) -> Result<Interval>;
}

/// One of the built-in estimators at a fixed confidence level.
#[derive(Debug, Clone, Copy)]
pub struct Standard {
    pub id: EstimatorId,
    pub conf: ConfidenceSpec,
    pub resamples: usize,
}

impl CellEstimator for Standard {
    fn id(&self) -> EstimatorId {
        self.id
    }

    fn interval(&self, sample: &RatingSample, rng: RngStream) -> Result<Interval> {
        estimate(self.id, sample, self.conf, self.resamples, rng)
    }
}

/// Outcome of one estimator in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub lower: f64,
    pub upper: f64,
    pub covered: bool,
    pub outlier: bool,
    pub width: f64,
}

/// Summary of the ratings drawn for one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSample {
    pub mos: f64,
    /// Unbiased sample variance; zero when `n = 1`.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCells {
    pub estimator: EstimatorId,
    /// Row-major over `(condition, run)`: index `x * r + i`.
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub spec: ScenarioSpec,
    pub means: Vec<f64>,
    pub samples: Vec<CellSample>,
    pub estimators: Vec<EstimatorCells>,
}

impl StudyResult {
    pub fn conditions(&self) -> usize {
        self.means.len()
    }

    pub fn runs(&self) -> usize {
        self.spec.runs as usize
    }
}

/// Stream used for a cell's ratings; estimators get lane 1 of the same cell.
pub fn cell_stream(spec: &ScenarioSpec, condition: u32, run: u32) -> RngStream {
    RngStream::new(spec.seed, condition, run)
}

/// Draws the `n` ratings of cell `(condition, run)`.
pub fn draw_sample(
    spec: &ScenarioSpec,
    sampler: &CategoricalSampler,
    condition: u32,
    run: u32,
) -> Result<RatingSample> {
    let mut rng = cell_stream(spec, condition, run).rng();
    let mut counts = vec![0u64; spec.scale.k() as usize];
    for _ in 0..spec.subjects {
        counts[sampler.sample(&mut rng) as usize - 1] += 1;
    }
    RatingSample::from_counts(spec.scale, counts)
}

/// Runs the built-in estimators over the full `m × r` grid.
pub fn run_study(
    spec: &ScenarioSpec,
    estimators: &[EstimatorId],
    conf: ConfidenceSpec,
    resamples: usize,
) -> Result<StudyResult> {
    let standard: Vec<Standard> = estimators.iter().map(|&id| Standard { id, conf, resamples }).collect();
    let dyns: Vec<&dyn CellEstimator> = standard.iter().map(|s| s as &dyn CellEstimator).collect();
    run_study_with(spec, &dyns)
}

/// Runs arbitrary estimators over the full grid. Cells are evaluated in
/// parallel; the result does not depend on the thread count.
pub fn run_study_with(spec: &ScenarioSpec, estimators: &[&dyn CellEstimator]) -> Result<StudyResult> {
    spec.validate()?;
    let means = mean_grid(spec);
    let samplers = means
        .iter()
        .map(|&mu| CategoricalSampler::new(&spec.distribution(mu)?))
        .collect::<Result<Vec<_>>>()?;
    let scale = spec.scale;
    let runs = spec.runs;
    let cells = means.len() * runs as usize;

    let per_cell: Vec<(CellSample, Vec<CellRecord>)> = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let x = (idx / runs as usize) as u32;
            let i = (idx % runs as usize) as u32;
            let mu = means[x as usize];
            let sample = draw_sample(spec, &samplers[x as usize], x, i)?;
            let summary = CellSample {
                mos: sample.mos(),
                variance: sample.sample_stats().map(|s| s.sd * s.sd).unwrap_or(0.0),
            };
            let lane = cell_stream(spec, x, i).lane(1);
            let records = estimators
                .iter()
                .map(|e| {
                    let ci = e.interval(&sample, lane)?;
                    Ok(CellRecord {
                        lower: ci.lower,
                        upper: ci.upper,
                        covered: ci.contains(mu),
                        outlier: ci.exceeds(scale),
                        width: ci.width(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((summary, records))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_estimator: Vec<EstimatorCells> = estimators
        .iter()
        .map(|e| EstimatorCells { estimator: e.id(), cells: Vec::with_capacity(cells) })
        .collect();
    let mut samples = Vec::with_capacity(cells);
    for (summary, records) in per_cell {
        samples.push(summary);
        for (slot, rec) in per_estimator.iter_mut().zip(records) {
            slot.cells.push(rec);
        }
    }

    Ok(StudyResult { spec: *spec, means, samples, estimators: per_estimator })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Tukey boxplot: linearly interpolated quartiles, whiskers at the most
/// extreme points within 1.5 IQR of the box, everything beyond is an outlier.
pub fn boxplot_stats(values: &[f64]) -> Result<BoxplotStats> {
    if values.is_empty() {
        return Err(Error::Domain("boxplot of an empty list".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = empirical_quantile(&sorted, 0.25);
    let median = empirical_quantile(&sorted, 0.5);
    let q3 = empirical_quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (fence_low, fence_high) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = |v: &&f64| **v >= fence_low && **v <= fence_high;
    let whisker_low = *sorted.iter().find(inside).expect("quartiles lie inside the fences");
    let whisker_high = *sorted.iter().rev().find(inside).expect("quartiles lie inside the fences");
    let outliers = sorted.iter().copied().filter(|v| *v < fence_low || *v > fence_high).collect();
    Ok(BoxplotStats { median, q1, q3, whisker_low, whisker_high, outliers })
}

/// Per-condition and per-run marginals of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    /// Test-condition perspective, one value per condition (averaged over runs).
    pub per_condition: Vec<f64>,
    /// Study perspective, one value per run (averaged over conditions).
    pub per_run: Vec<f64>,
    pub mean: f64,
    pub min_condition: f64,
    pub min_run: f64,
    /// Share of `per_condition` values flagged as boxplot outliers (either side).
    pub outlier_share_condition: f64,
    /// Share of `per_run` values flagged as boxplot outliers (either side).
    pub outlier_share_run: f64,
    pub box_condition: BoxplotStats,
    pub box_run: BoxplotStats,
}

impl Marginals {
    /// Builds marginals from a row-major `conditions × runs` grid.
    pub fn from_grid(values: &[f64], conditions: usize, runs: usize) -> Result<Self> {
        if conditions == 0 || runs == 0 || values.len() != conditions * runs {
            return Err(Error::Domain(format!(
                "grid of {} values does not match {conditions} x {runs}",
                values.len()
            )));
        }
        let per_condition: Vec<f64> =
            values.chunks(runs).map(|row| row.iter().sum::<f64>() / runs as f64).collect();
        let per_run: Vec<f64> = (0..runs)
            .map(|i| (0..conditions).map(|x| values[x * runs + i]).sum::<f64>() / conditions as f64)
            .collect();
        Self::from_perspectives(per_condition, per_run)
    }

    /// Rebuilds the summary statistics from the two marginal vectors.
    pub fn from_perspectives(per_condition: Vec<f64>, per_run: Vec<f64>) -> Result<Self> {
        let (conditions, runs) = (per_condition.len(), per_run.len());
        if conditions == 0 || runs == 0 {
            return Err(Error::Domain("marginals need at least one condition and one run".into()));
        }
        let mean = per_condition.iter().sum::<f64>() / conditions as f64;
        let box_condition = boxplot_stats(&per_condition)?;
        let box_run = boxplot_stats(&per_run)?;
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Marginals {
            min_condition: min(&per_condition),
            min_run: min(&per_run),
            outlier_share_condition: box_condition.outliers.len() as f64 / conditions as f64,
            outlier_share_run: box_run.outliers.len() as f64 / runs as f64,
            per_condition,
            per_run,
            mean,
            box_condition,
            box_run,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorMetrics {
    pub estimator: EstimatorId,
    pub coverage: Marginals,
    pub outlier: Marginals,
    pub width: Marginals,
}

/// Summary row: `Ĉ, Ĉ_x^o, Ĉ_x^m, Ĉ_i^o, Ĉ_i^m, Ô, Ŵ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub estimator: EstimatorId,
    pub coverage: f64,
    pub coverage_condition_outliers: f64,
    pub coverage_condition_min: f64,
    pub coverage_run_outliers: f64,
    pub coverage_run_min: f64,
    pub outlier_ratio: f64,
    pub width: f64,
}

impl EstimatorMetrics {
    pub fn row(&self) -> TableRow {
        TableRow {
            estimator: self.estimator,
            coverage: self.coverage.mean,
            coverage_condition_outliers: self.coverage.outlier_share_condition,
            coverage_condition_min: self.coverage.min_condition,
            coverage_run_outliers: self.coverage.outlier_share_run,
            coverage_run_min: self.coverage.min_run,
            outlier_ratio: self.outlier.mean,
            width: self.width.mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub spec: ScenarioSpec,
    pub means: Vec<f64>,
    pub estimators: Vec<EstimatorMetrics>,
}

impl MetricsReport {
    pub fn rows(&self) -> Vec<TableRow> {
        self.estimators.iter().map(EstimatorMetrics::row).collect()
    }

    pub fn get(&self, id: EstimatorId) -> Option<&EstimatorMetrics> {
        self.estimators.iter().find(|e| e.estimator == id)
    }
}

pub fn aggregate(result: &StudyResult) -> Result<MetricsReport> {
    let (m, r) = (result.conditions(), result.runs());
    let estimators = result
        .estimators
        .iter()
        .map(|e| {
            let grid = |f: fn(&CellRecord) -> f64| -> Vec<f64> { e.cells.iter().map(f).collect() };
            Ok(EstimatorMetrics {
                estimator: e.estimator,
                coverage: Marginals::from_grid(&grid(|c| f64::from(u8::from(c.covered))), m, r)?,
                outlier: Marginals::from_grid(&grid(|c| f64::from(u8::from(c.outlier))), m, r)?,
                width: Marginals::from_grid(&grid(|c| c.width), m, r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport { spec: result.spec, means: result.means.clone(), estimators })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub subjects: u32,
    pub estimator: EstimatorId,
    pub coverage: f64,
    pub width: f64,
    pub outlier_ratio: f64,
}

/// Repeats the study for each subject count and reports `(Ĉ, Ŵ, Ô)`.
pub fn sweep_subjects(
    spec: &ScenarioSpec,
    subjects: &[u32],
    estimators: &[EstimatorId],
    conf: ConfidenceSpec,
    resamples: usize,
) -> Result<Vec<SweepPoint>> {
    if subjects.is_empty() {
        return Err(Error::Domain("subject sweep needs at least one n".into()));
    }
    if let Some(n) = subjects.iter().find(|&&n| n < 2) {
        return Err(Error::Domain(format!("subject counts must be >= 2 (got {n})")));
    }
    let mut points = Vec::with_capacity(subjects.len() * estimators.len());
    for &n in subjects {
        let report = aggregate(&run_study(&spec.with_subjects(n), estimators, conf, resamples)?)?;
        points.extend(report.estimators.iter().map(|e| SweepPoint {
            subjects: n,
            estimator: e.estimator,
            coverage: e.coverage.mean,
            width: e.width.mean,
            outlier_ratio: e.outlier.mean,
        }));
    }
    Ok(points)
}
