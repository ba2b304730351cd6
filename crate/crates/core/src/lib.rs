//! Fitting discrete citation-count models per subject and year, comparing
//! them with Vuong's test, and tracking how fitted parameters move over time.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod dataset;
pub mod distributions;
pub mod error;
pub mod fitting;
pub mod model_selection;
pub mod stability;
pub mod synthetic;

pub use dataset::{summarize, CountDataset, SummaryStats};
pub use distributions::{
    DiscreteDistribution, DiscretisedLognormalParams, HookedPowerLawParams, ModelId, ModelParams, NormalLogParams,
    Support, TruncationPolicy,
};
pub use error::{Error, Result};
pub use fitting::{fit, FitOptions, FitResult};
pub use model_selection::{vuong_test, ComparisonResult, Winner};
pub use stability::{spearman, ParameterPanel, StabilityReport};
pub use synthetic::{sample, SampleSpec};
