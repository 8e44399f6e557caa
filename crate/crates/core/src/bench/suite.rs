//! The shipped query suite and loading of `.rq` directories.

use std::fs;
use std::path::{Path, PathBuf};

use crate::sparql::{parse_query, Query, SparqlError};

#[derive(Debug, Clone)]
pub struct NamedQuery {
    pub name: String,
    pub text: String,
    pub query: Query,
}

pub const SHIPPED_SUITE: [(&str, &str); 12] = [
    ("q01_values_by_procedure", include_str!("../../fixtures/queries/q01_values_by_procedure.rq")),
    ("q02_rainfall_timeline", include_str!("../../fixtures/queries/q02_rainfall_timeline.rq")),
    ("q03_values_above_threshold", include_str!("../../fixtures/queries/q03_values_above_threshold.rq")),
    ("q04_two_sensors", include_str!("../../fixtures/queries/q04_two_sensors.rq")),
    ("q05_units", include_str!("../../fixtures/queries/q05_units.rq")),
    ("q06_measurements_in_cm", include_str!("../../fixtures/queries/q06_measurements_in_cm.rq")),
    ("q07_observed_properties", include_str!("../../fixtures/queries/q07_observed_properties.rq")),
    ("q08_top_temperatures", include_str!("../../fixtures/queries/q08_top_temperatures.rq")),
    ("q09_unit_or_low_value", include_str!("../../fixtures/queries/q09_unit_or_low_value.rq")),
    ("q10_precipitation_times", include_str!("../../fixtures/queries/q10_precipitation_times.rq")),
    ("q11_fixed_value", include_str!("../../fixtures/queries/q11_fixed_value.rq")),
    ("q12_shared_values", include_str!("../../fixtures/queries/q12_shared_values.rq")),
];

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{name}: {source}")]
    Parse { name: String, source: SparqlError },
}

pub fn named(name: &str, text: &str) -> Result<NamedQuery, SuiteError> {
    let query = parse_query(text).map_err(|source| SuiteError::Parse { name: name.to_string(), source })?;
    Ok(NamedQuery {
        name: name.to_string(),
        text: text.to_string(),
        query,
    })
}

pub fn shipped_suite() -> Vec<NamedQuery> {
    SHIPPED_SUITE
        .iter()
        .map(|(n, t)| named(n, t).expect("shipped queries parse"))
        .collect()
}

/// Every `*.rq` file of `dir`, sorted by file name.
pub fn load_suite(dir: &Path) -> Result<Vec<NamedQuery>, SuiteError> {
    let io = |source| SuiteError::Io { path: dir.to_path_buf(), source };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "rq"));
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|source| SuiteError::Io { path: p.clone(), source })?;
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("query");
            named(name, &text)
        })
        .collect()
}
