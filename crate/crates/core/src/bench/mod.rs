//! Synthetic data, metrics and timed query runs.

pub mod generator;
pub mod metrics;
pub mod querygen;
pub mod run;
pub mod suite;

pub use generator::{default_phenomena, generate, GeneratorConfig, GroundTruth, PhenomenonSpec};
pub use querygen::{random_query, QueryDomain};
pub use metrics::{compute_metrics, pct_savings, MetricsReport, Timings};
pub use run::{bench, BenchOptions, BenchReport, CacheMode};
pub use suite::{load_suite, shipped_suite, NamedQuery};
