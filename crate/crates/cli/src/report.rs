//! Report documents and their JSON / CSV renderings.
//!
//! Every document carries a versioned schema tag and the resolved
//! [`RunConfig`]. CSV files put both into a leading `#` comment line.

use std::path::{Path, PathBuf};

use mosci_core::simharness::{EstimatorMetrics, Marginals, MetricsReport, SweepPoint, TableRow};
use mosci_core::sos::{Recommendation, SosEstimate};
use mosci_core::EstimatorId;
use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, RunConfig};
use crate::{CliError, Result};

pub const CI_SCHEMA: &str = "mosci.ci/1";
pub const SIMULATE_SCHEMA: &str = "mosci.simulate/1";
pub const MARGINALS_SCHEMA: &str = "mosci.simulate.marginals/1";
pub const RECOMMEND_SCHEMA: &str = "mosci.recommend/1";
pub const SWEEP_SCHEMA: &str = "mosci.sweep/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEntry {
    pub estimator: EstimatorId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outlier: Option<bool>,
    /// Set when the estimator is undefined for this sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_id: String,
    pub n: u64,
    pub mos: f64,
    pub intervals: Vec<IntervalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiReport {
    pub schema: String,
    pub config: RunConfig,
    pub conditions: Vec<ConditionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub schema: String,
    pub config: RunConfig,
    pub table: Vec<TableRow>,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition_id: String,
    pub n: u64,
    pub mos: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendReport {
    pub schema: String,
    pub config: RunConfig,
    pub conditions: Vec<ConditionSummary>,
    pub fit: SosEstimate,
    pub recommendation: Recommendation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: String,
    pub config: RunConfig,
    pub points: Vec<SweepPoint>,
}

/// One output document. `suffix` names a companion file written next to
/// the main output (`report.csv` → `report.<suffix>.csv`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub suffix: Option<&'static str>,
    pub text: String,
}

pub trait Render {
    fn render(&self, format: OutputFormat) -> Result<Vec<Document>>;
}

fn json<T: Serialize>(value: &T) -> Result<Vec<Document>> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    Ok(vec![Document { suffix: None, text }])
}

fn comment_line(schema: &str, config: &RunConfig) -> Result<String> {
    let cfg = serde_json::to_string(config).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(format!("# {schema} {cfg}\n"))
}

fn csv_text(schema: &str, config: &RunConfig, header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(comment_line(schema, config)?.into_bytes());
    let io = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl Render for CiReport {
    fn render(&self, format: OutputFormat) -> Result<Vec<Document>> {
        match format {
            OutputFormat::Json => json(self),
            OutputFormat::Csv => {
                let rows = self
                    .conditions
                    .iter()
                    .flat_map(|c| {
                        c.intervals.iter().map(move |e| {
                            vec![
                                c.condition_id.clone(),
                                c.n.to_string(),
                                c.mos.to_string(),
                                e.estimator.to_string(),
                                opt(e.lower),
                                opt(e.upper),
                                opt(e.width),
                                opt(e.outlier),
                                e.error.clone().unwrap_or_default(),
                            ]
                        })
                    })
                    .collect();
                let header =
                    ["condition_id", "n", "mos", "estimator", "lower", "upper", "width", "outlier", "error"];
                Ok(vec![Document { suffix: None, text: csv_text(CI_SCHEMA, &self.config, &header, rows)? }])
            }
        }
    }
}

pub const TABLE_HEADER: [&str; 8] = ["estimator", "C", "Cx_o", "Cx_m", "Ci_o", "Ci_m", "O", "W"];
pub const MARGINALS_HEADER: [&str; 5] = ["record", "estimator", "metric", "index", "value"];

const METRICS: [&str; 3] = ["coverage", "outlier", "width"];

fn metric<'a>(e: &'a EstimatorMetrics, name: &str) -> &'a Marginals {
    match name {
        "coverage" => &e.coverage,
        "outlier" => &e.outlier,
        _ => &e.width,
    }
}

impl Render for SimulateReport {
    fn render(&self, format: OutputFormat) -> Result<Vec<Document>> {
        match format {
            OutputFormat::Json => json(self),
            OutputFormat::Csv => {
                let table = self
                    .table
                    .iter()
                    .map(|r| {
                        vec![
                            r.estimator.to_string(),
                            r.coverage.to_string(),
                            r.coverage_condition_outliers.to_string(),
                            r.coverage_condition_min.to_string(),
                            r.coverage_run_outliers.to_string(),
                            r.coverage_run_min.to_string(),
                            r.outlier_ratio.to_string(),
                            r.width.to_string(),
                        ]
                    })
                    .collect();
                let mut long = Vec::new();
                for (x, mu) in self.metrics.means.iter().enumerate() {
                    long.push(vec![
                        "mean".into(),
                        String::new(),
                        String::new(),
                        x.to_string(),
                        mu.to_string(),
                    ]);
                }
                for e in &self.metrics.estimators {
                    for name in METRICS {
                        let m = metric(e, name);
                        for (record, values) in [("condition", &m.per_condition), ("run", &m.per_run)] {
                            for (i, v) in values.iter().enumerate() {
                                long.push(vec![
                                    record.into(),
                                    e.estimator.to_string(),
                                    name.into(),
                                    i.to_string(),
                                    v.to_string(),
                                ]);
                            }
                        }
                    }
                }
                Ok(vec![
                    Document {
                        suffix: None,
                        text: csv_text(SIMULATE_SCHEMA, &self.config, &TABLE_HEADER, table)?,
                    },
                    Document {
                        suffix: Some("marginals"),
                        text: csv_text(MARGINALS_SCHEMA, &self.config, &MARGINALS_HEADER, long)?,
                    },
                ])
            }
        }
    }
}

impl Render for RecommendReport {
    fn render(&self, format: OutputFormat) -> Result<Vec<Document>> {
        match format {
            OutputFormat::Json => json(self),
            OutputFormat::Csv => {
                let ids = |v: &[EstimatorId]| v.iter().map(|e| e.as_str()).collect::<Vec<_>>().join(";");
                let r = &self.recommendation;
                let row = vec![
                    self.fit.a.to_string(),
                    self.fit.used.to_string(),
                    self.fit.residual.to_string(),
                    serde_json::to_value(r.verdict)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        .unwrap_or_default(),
                    ids(&r.estimators),
                    ids(&r.conservative),
                    r.rationale.clone(),
                ];
                let header = ["a", "used", "residual", "verdict", "estimators", "conservative", "rationale"];
                Ok(vec![Document {
                    suffix: None,
                    text: csv_text(RECOMMEND_SCHEMA, &self.config, &header, vec![row])?,
                }])
            }
        }
    }
}

impl Render for SweepReport {
    fn render(&self, format: OutputFormat) -> Result<Vec<Document>> {
        match format {
            OutputFormat::Json => json(self),
            OutputFormat::Csv => {
                let rows = self
                    .points
                    .iter()
                    .map(|p| {
                        vec![
                            p.estimator.to_string(),
                            p.subjects.to_string(),
                            p.coverage.to_string(),
                            p.width.to_string(),
                            p.outlier_ratio.to_string(),
                        ]
                    })
                    .collect();
                Ok(vec![Document {
                    suffix: None,
                    text: csv_text(SWEEP_SCHEMA, &self.config, &["estimator", "n", "C", "W", "O"], rows)?,
                }])
            }
        }
    }
}

/// Path of a companion document.
pub fn companion_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{suffix}"),
    };
    out.with_file_name(name)
}

/// Writes the documents under `out`, or the main document to stdout.
/// Returns the paths written.
pub fn write_documents(docs: &[Document], out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let Some(out) = out else {
        use std::io::Write;
        let mut stdout = std::io::stdout().lock();
        for d in docs.iter().filter(|d| d.suffix.is_none()) {
            stdout
                .write_all(d.text.as_bytes())
                .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })?;
        }
        return Ok(Vec::new());
    };
    let mut written = Vec::with_capacity(docs.len());
    for d in docs {
        let path = match d.suffix {
            Some(s) => companion_path(out, s),
            None => out.to_path_buf(),
        };
        std::fs::write(&path, &d.text).map_err(|source| CliError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}

/// Splits the `# schema {config}` line off a CSV document.
fn split_comment<'a>(text: &'a str, schema: &str) -> Result<(RunConfig, &'a str)> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let payload = first
        .strip_prefix("# ")
        .and_then(|s| s.strip_prefix(schema))
        .ok_or_else(|| CliError::Input(format!("missing '# {schema}' line")))?;
    let config =
        serde_json::from_str(payload.trim()).map_err(|e| CliError::Input(format!("embedded config: {e}")))?;
    Ok((config, rest))
}

/// Rebuilds the metrics report from the long-format marginals CSV.
pub fn parse_marginals_csv(text: &str) -> Result<(RunConfig, MetricsReport)> {
    let (config, body) = split_comment(text, MARGINALS_SCHEMA)?;
    let bad = |line: usize, m: String| CliError::Input(format!("marginals line {}: {m}", line + 2));
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().map_err(|e| CliError::Input(e.to_string()))?.clone();
    if header.iter().ne(MARGINALS_HEADER.iter().copied()) {
        return Err(CliError::Input("unexpected marginals header".into()));
    }

    let mut means = Vec::new();
    // (estimator, metric index) -> (per_condition, per_run)
    let mut order: Vec<EstimatorId> = Vec::new();
    let mut data: Vec<[(Vec<f64>, Vec<f64>); 3]> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let index: usize = rec[3].parse().map_err(|_| bad(line, format!("bad index '{}'", &rec[3])))?;
        let value: f64 = rec[4].parse().map_err(|_| bad(line, format!("bad value '{}'", &rec[4])))?;
        let push = |v: &mut Vec<f64>| {
            if v.len() != index {
                return Err(bad(line, format!("index {index} out of sequence")));
            }
            v.push(value);
            Ok(())
        };
        if &rec[0] == "mean" {
            push(&mut means)?;
            continue;
        }
        let id: EstimatorId = rec[1].parse().map_err(|e: mosci_core::Error| bad(line, e.to_string()))?;
        let slot = match order.iter().position(|&e| e == id) {
            Some(s) => s,
            None => {
                order.push(id);
                data.push(Default::default());
                order.len() - 1
            }
        };
        let m = METRICS
            .iter()
            .position(|&n| n == &rec[2])
            .ok_or_else(|| bad(line, format!("unknown metric '{}'", &rec[2])))?;
        match &rec[0] {
            "condition" => push(&mut data[slot][m].0)?,
            "run" => push(&mut data[slot][m].1)?,
            other => return Err(bad(line, format!("unknown record '{other}'"))),
        }
    }

    let estimators = order
        .into_iter()
        .zip(data)
        .map(|(estimator, [c, o, w])| {
            Ok(EstimatorMetrics {
                estimator,
                coverage: Marginals::from_perspectives(c.0, c.1)?,
                outlier: Marginals::from_perspectives(o.0, o.1)?,
                width: Marginals::from_perspectives(w.0, w.1)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = config.scenario_spec()?;
    Ok((config, MetricsReport { spec, means, estimators }))
}
