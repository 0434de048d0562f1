use std::time::Instant;

use mosci_core::simharness::{aggregate, run_study, ScenarioKind, ScenarioSpec};
use mosci_core::{ConfidenceSpec, EstimatorId, Scale};

fn main() {
    let kind: ScenarioKind = std::env::args().nth(1).as_deref().unwrap_or("binomial").parse().unwrap();
    let seed: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let spec = ScenarioSpec::new(kind, Scale::acr5()).with_seed(seed);
    let start = Instant::now();
    let result = run_study(&spec, &EstimatorId::ALL, ConfidenceSpec::default(), 1000).unwrap();
    let report = aggregate(&result).unwrap();
    println!("{kind} (seed {seed}) in {:.1?}", start.elapsed());
    println!(
        "{:8} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5}",
        "", "C", "Cx_o", "Cx_m", "Ci_o", "Ci_m", "O", "W"
    );
    for r in report.rows() {
        println!(
            "{:8} {:5.2} {:5.2} {:5.2} {:5.2} {:5.2} {:5.2} {:5.2}",
            r.estimator.label(),
            r.coverage,
            r.coverage_condition_outliers,
            r.coverage_condition_min,
            r.coverage_run_outliers,
            r.coverage_run_min,
            r.outlier_ratio,
            r.width
        );
    }
}
