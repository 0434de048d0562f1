//! SOS-parameter fitting and estimator recommendation.
//!
//! The SOS hypothesis links the standard deviation of opinion scores to the
//! MOS through one parameter `a`:
//! `SOS(μ)² = a · (-μ² + (k + 1) μ - k)`.
//! The shifted binomial `Bino(k - 1, p) + 1` satisfies it with `a = 1/(k - 1)`.

use serde::{Deserialize, Serialize};

use crate::model::{EstimatorId, Scale};
use crate::numerics::regularized_gamma_q;
use crate::{Error, Result};

/// Below this `a`, narrow estimators are acceptable.
pub const LOW_VARIANCE_THRESHOLD: f64 = 0.1;

/// `-μ² + (k + 1) μ - k = (μ - 1)(k - μ)`.
pub fn sos_shape(mu: f64, scale: Scale) -> f64 {
    (mu - scale.low()) * (scale.high() - mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionMoments {
    pub mos: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosEstimate {
    pub a: f64,
    pub conditions: Vec<ConditionMoments>,
    /// Conditions that entered the fit (MOS strictly inside the scale).
    pub used: usize,
    /// Root-mean-square deviation between observed and fitted SOS.
    pub residual: f64,
}

/// Fits `a` by least squares on the standard deviations,
/// `min_a Σ (S_x - √(a v(μ_x)))²`, which has the closed form
/// `a = (Σ S_x √v_x / Σ v_x)²`. Conditions at the scale edges (`v = 0`)
/// carry no information about `a` and are skipped.
pub fn sos_fit(conditions: &[ConditionMoments], scale: Scale) -> Result<SosEstimate> {
    if conditions.is_empty() {
        return Err(Error::Domain("SOS fit needs at least one condition".into()));
    }
    for c in conditions {
        if !(scale.low()..=scale.high()).contains(&c.mos) {
            return Err(Error::Domain(format!("MOS {} outside the rating scale", c.mos)));
        }
        if c.variance.is_nan() || c.variance < 0.0 {
            return Err(Error::Domain(format!("negative variance {}", c.variance)));
        }
    }
    let usable: Vec<(f64, f64)> = conditions
        .iter()
        .map(|c| (c.variance.sqrt(), sos_shape(c.mos, scale)))
        .filter(|&(_, v)| v > 1e-12)
        .collect();
    if usable.is_empty() {
        return Err(Error::Degenerate(
            "every condition sits on a scale edge; the SOS parameter is undefined".into(),
        ));
    }
    let cross: f64 = usable.iter().map(|(s, v)| s * v.sqrt()).sum();
    let norm: f64 = usable.iter().map(|(_, v)| v).sum();
    let root = cross / norm;
    let a = root * root;
    let sq: f64 = usable.iter().map(|(s, v)| (s - root * v.sqrt()).powi(2)).sum();
    Ok(SosEstimate {
        a,
        conditions: conditions.to_vec(),
        used: usable.len(),
        residual: (sq / usable.len() as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Binomial-proportion estimators are exact and recommended.
    BinomialExact,
    /// Low rating diversity: narrower estimators are acceptable.
    NarrowOk,
    /// More diversity than a binomial allows; check the study.
    CheckDesign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub verdict: Verdict,
    pub rationale: String,
    pub estimators: Vec<EstimatorId>,
    /// Estimators that remain valid but are known to over-cover here.
    pub conservative: Vec<EstimatorId>,
}

const BINOMIAL_TRIO: [EstimatorId; 3] = [EstimatorId::Cp, EstimatorId::Wilson, EstimatorId::Jeffreys];

pub fn recommend(a: f64, scale: Scale, subjects: u64) -> Result<Recommendation> {
    if a.is_nan() || a < 0.0 {
        return Err(Error::Domain(format!("SOS parameter must be >= 0 (got {a})")));
    }
    let binomial_a = 1.0 / f64::from(scale.k0());
    let more_subjects = format!(
        "With n = {subjects} subjects, adding subjects is the most effective way to narrow the intervals."
    );
    // Relative slack so a fit that reproduces 1/(k-1) up to rounding stays binomial.
    let rec = if a > binomial_a * (1.0 + 1e-9) {
        Recommendation {
            verdict: Verdict::CheckDesign,
            rationale: format!(
                "a = {a:.4} exceeds the binomial value 1/(k-1) = {binomial_a:.4}; rating diversity is \
                 larger than any binomial rating distribution, which points to hidden influence factors. \
                 Check the results and the test design. The binomial estimators are the least affected. {more_subjects}"
            ),
            estimators: BINOMIAL_TRIO.to_vec(),
            conservative: Vec::new(),
        }
    } else if a < LOW_VARIANCE_THRESHOLD {
        Recommendation {
            verdict: Verdict::NarrowOk,
            rationale: format!(
                "a = {a:.4} < {LOW_VARIANCE_THRESHOLD}: low rating diversity. Bootstrap or standard \
                 intervals give narrower widths at some cost in coverage; the binomial estimators stay \
                 exact but conservative. {more_subjects}"
            ),
            estimators: vec![EstimatorId::Boot, EstimatorId::Norm, EstimatorId::Stud],
            conservative: BINOMIAL_TRIO.to_vec(),
        }
    } else {
        Recommendation {
            verdict: Verdict::BinomialExact,
            rationale: format!(
                "a = {a:.4} lies within [{LOW_VARIANCE_THRESHOLD}, {binomial_a:.4}]: Clopper-Pearson, \
                 Wilson and Jeffreys are conservative but exact and never leave the rating scale. {more_subjects}"
            ),
            estimators: BINOMIAL_TRIO.to_vec(),
            conservative: Vec::new(),
        }
    };
    Ok(rec)
}

/// One-sided p-value for "rating diversity exceeds the binomial".
///
/// Under the shifted binomial `σ_x² = v(μ_x) / (k - 1)` and
/// `(n_x - 1) S_x² / σ_x²` is roughly χ²(n_x - 1). `v(μ_x)` is estimated from
/// the sample MOS after removing the bias `Var(MOS) = σ_x² / n_x`; the
/// statistics of all conditions strictly inside the scale are pooled.
pub fn binomial_excess_p_value(conditions: &[ConditionMoments], sizes: &[u64], scale: Scale) -> Result<f64> {
    if conditions.len() != sizes.len() {
        return Err(Error::Domain("one sample size per condition is required".into()));
    }
    let a0 = 1.0 / f64::from(scale.k0());
    let (mut stat, mut df) = (0.0, 0.0);
    for (c, &n) in conditions.iter().zip(sizes) {
        let v = sos_shape(c.mos, scale);
        if n < 2 || v <= 1e-12 {
            continue;
        }
        let n = n as f64;
        let sigma2 = a0 * v / (1.0 - a0 / n);
        stat += (n - 1.0) * c.variance / sigma2;
        df += n - 1.0;
    }
    if df == 0.0 {
        return Err(Error::Degenerate(
            "no condition with two or more ratings strictly inside the scale".into(),
        ));
    }
    Ok(regularized_gamma_q(df / 2.0, stat / 2.0))
}

/// Recommendation for a fit on observed data: `check_design` is only
/// returned when the excess over `1/(k-1)` is significant at level `alpha`.
pub fn recommend_sampled(
    fit: &SosEstimate,
    sizes: &[u64],
    scale: Scale,
    alpha: f64,
) -> Result<Recommendation> {
    let subjects = sizes.iter().copied().min().unwrap_or(0);
    let binomial_a = 1.0 / f64::from(scale.k0());
    if fit.a <= binomial_a {
        return recommend(fit.a, scale, subjects);
    }
    let p = binomial_excess_p_value(&fit.conditions, sizes, scale)?;
    if p < alpha {
        let mut rec = recommend(fit.a, scale, subjects)?;
        rec.rationale = format!("{} Excess over the binomial is significant (p = {p:.3}).", rec.rationale);
        return Ok(rec);
    }
    let mut rec = recommend(binomial_a, scale, subjects)?;
    rec.rationale = format!(
        "a = {:.4} is above 1/(k-1) = {binomial_a:.4} only within sampling error (p = {p:.3}), so the data \
         are consistent with binomial ratings. Clopper-Pearson, Wilson and Jeffreys are conservative but exact \
         and never leave the rating scale. With n = {subjects} subjects, adding subjects is the most effective \
         way to narrow the intervals.",
        fit.a
    );
    Ok(rec)
}
