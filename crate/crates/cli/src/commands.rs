use std::path::Path;

use mosci_core::simharness::{aggregate, run_study, sweep_subjects};
use mosci_core::sos::{recommend_sampled, sos_fit, ConditionMoments};
use mosci_core::{estimate, RngStream};

use crate::config::RunConfig;
use crate::ratings::read_ratings;
use crate::report::{
    CiReport, ConditionReport, ConditionSummary, IntervalEntry, RecommendReport, SimulateReport, SweepReport,
    CI_SCHEMA, RECOMMEND_SCHEMA, SIMULATE_SCHEMA, SWEEP_SCHEMA,
};
use crate::{CliError, Result};

/// Intervals for every condition of a ratings file. The bootstrap of
/// condition `x` (0-based, file order) draws from stream `(seed, x, 0)`, lane 1.
pub fn cmd_ci(ratings: &Path, config: &RunConfig) -> Result<CiReport> {
    let scale = config.scale()?;
    let conf = config.conf()?;
    let conditions = read_ratings(ratings, scale)?;
    let mut out = Vec::with_capacity(conditions.len());
    for (x, c) in conditions.iter().enumerate() {
        let sample = c.sample(scale)?;
        let rng = RngStream::new(config.seed, x as u32, 0).lane(1);
        let intervals = config
            .estimators
            .iter()
            .map(|&id| match estimate(id, &sample, conf, config.bootstrap_resamples, rng) {
                Ok(ci) => IntervalEntry {
                    estimator: id,
                    lower: Some(ci.lower),
                    upper: Some(ci.upper),
                    width: Some(ci.width()),
                    outlier: Some(ci.exceeds(scale)),
                    error: None,
                },
                Err(e) => IntervalEntry {
                    estimator: id,
                    lower: None,
                    upper: None,
                    width: None,
                    outlier: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        out.push(ConditionReport { condition_id: c.id.clone(), n: sample.n(), mos: sample.mos(), intervals });
    }
    Ok(CiReport { schema: CI_SCHEMA.into(), config: config.clone(), conditions: out })
}

pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateReport> {
    let spec = config.scenario_spec()?;
    let study = run_study(&spec, &config.estimators, config.conf()?, config.bootstrap_resamples)?;
    let metrics = aggregate(&study)?;
    Ok(SimulateReport {
        schema: SIMULATE_SCHEMA.into(),
        config: config.clone(),
        table: metrics.rows(),
        metrics,
    })
}

/// Fits the SOS parameter to the per-condition MOS and unbiased variance.
pub fn cmd_recommend(ratings: &Path, config: &RunConfig) -> Result<RecommendReport> {
    let scale = config.scale()?;
    let conditions = read_ratings(ratings, scale)?;
    if conditions.len() < 2 {
        return Err(CliError::Input(format!(
            "the SOS fit needs at least 2 conditions (found {})",
            conditions.len()
        )));
    }
    let mut summaries = Vec::with_capacity(conditions.len());
    for c in &conditions {
        let sample = c.sample(scale)?;
        let stats = sample
            .sample_stats()
            .map_err(|_| CliError::Input(format!("condition '{}' needs at least 2 ratings", c.id)))?;
        summaries.push(ConditionSummary {
            condition_id: c.id.clone(),
            n: sample.n(),
            mos: stats.mean,
            variance: stats.sd * stats.sd,
        });
    }
    let moments: Vec<ConditionMoments> =
        summaries.iter().map(|s| ConditionMoments { mos: s.mos, variance: s.variance }).collect();
    let sizes: Vec<u64> = summaries.iter().map(|s| s.n).collect();
    let fit = sos_fit(&moments, scale)?;
    let recommendation = recommend_sampled(&fit, &sizes, scale, config.alpha)?;
    Ok(RecommendReport {
        schema: RECOMMEND_SCHEMA.into(),
        config: config.clone(),
        conditions: summaries,
        fit,
        recommendation,
    })
}

pub fn cmd_sweep(config: &RunConfig) -> Result<SweepReport> {
    let n_list = config.n_list.as_deref().unwrap_or_default();
    if n_list.is_empty() {
        return Err(CliError::Config("sweep needs a non-empty list of subject counts".into()));
    }
    if let Some(n) = n_list.iter().find(|&&n| n < 2) {
        return Err(CliError::Config(format!("subject counts must be >= 2 (got {n})")));
    }
    let points = sweep_subjects(
        &config.scenario_spec()?,
        n_list,
        &config.estimators,
        config.conf()?,
        config.bootstrap_resamples,
    )?;
    Ok(SweepReport { schema: SWEEP_SCHEMA.into(), config: config.clone(), points })
}
