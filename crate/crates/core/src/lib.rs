//! Confidence intervals for Mean Opinion Scores on bounded discrete rating
//! scales, and a Monte-Carlo harness that measures their coverage, outlier
//! ratio and width.

pub mod bootstrap;
pub mod estimators;
pub mod model;
pub mod numerics;
pub mod simharness;
pub mod sos;

pub use bootstrap::{bca_ci, BootstrapSpec};
pub use estimators::{estimate, ConfidenceSpec};
pub use model::{EstimatorId, Interval, RatingSample, Scale};
pub use numerics::RngStream;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate computation: {0}")]
    Degenerate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
