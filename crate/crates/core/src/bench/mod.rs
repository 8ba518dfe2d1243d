//! Data ingestion, synthetic benchmarks, metrics and experiment drivers.

pub mod dataset;
pub mod diagnostics;
pub mod experiment;
pub mod friedman;
pub mod metrics;

pub use dataset::{ingest_csv, ingest_with_schema, Dataset, LabelColumn};
pub use diagnostics::{dimension_usage, partial_dependence, PdpCurve};
pub use experiment::{budget_sweep, cv_evaluate, EvalReport, SweepRow, DEFAULT_BUDGETS};
pub use friedman::{friedman_f, friedman_generate};
pub use metrics::{rmae, RmaeVariant};
