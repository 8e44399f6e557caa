//! CSV serialization of table sets with a JSON schema sidecar.
//!
//! Cells hold N-Triples terms; `\N` marks null.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::rdf::parse_term;

use super::build::TableSet;
use super::relation::{Relation, Row};
use super::TabularError;

pub const NULL_TOKEN: &str = "\\N";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaSidecar {
    pub name: String,
    pub attributes: Vec<String>,
    pub key: Vec<String>,
    pub null_token: String,
    pub rows: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("schema sidecar {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("cell {cell:?} in {path}: {message}")]
    Cell { path: PathBuf, cell: String, message: String },
    #[error(transparent)]
    Table(#[from] TabularError),
}

/// File stem for a relation: `<tableset>__<relation>` with every character
/// outside `[A-Za-z0-9-]` replaced by `_`.
pub fn file_stem(tableset: &str, relation: &str) -> String {
    let clean: String = relation
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    format!("{tableset}__{clean}")
}

/// Rows ordered by key attributes, then by the full row.
pub fn sorted_rows(rel: &Relation) -> Vec<&Row> {
    let key: Vec<usize> = rel.key().iter().map(|k| rel.index_of(k).expect("declared key")).collect();
    let mut rows: Vec<&Row> = rel.rows().iter().collect();
    rows.sort_by(|a, b| rel.values(a, &key).cmp(&rel.values(b, &key)).then_with(|| a.cmp(b)));
    rows
}

/// Writes one CSV and one `.schema.json` per relation; returns the CSV paths.
pub fn write_table_set(ts: &TableSet, dir: &Path) -> Result<Vec<PathBuf>, CsvError> {
    fs::create_dir_all(dir).map_err(|source| CsvError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for rel in ts.relations.values() {
        let stem = file_stem(ts.kind.label(), rel.name());
        let path = dir.join(format!("{stem}.csv"));
        let csv_err = |source| CsvError::Csv { path: path.clone(), source };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(rel.schema()).map_err(csv_err)?;
        for row in sorted_rows(rel) {
            let cells = row.iter().map(|c| c.as_ref().map_or_else(|| NULL_TOKEN.to_string(), ToString::to_string));
            w.write_record(cells).map_err(csv_err)?;
        }
        w.flush().map_err(|source| CsvError::Io { path: path.clone(), source })?;
        let sidecar = SchemaSidecar {
            name: rel.name().to_string(),
            attributes: rel.schema().to_vec(),
            key: rel.key().to_vec(),
            null_token: NULL_TOKEN.to_string(),
            rows: rel.len(),
        };
        let side_path = dir.join(format!("{stem}.schema.json"));
        let json = serde_json::to_string_pretty(&sidecar).map_err(|source| CsvError::Json { path: side_path.clone(), source })?;
        fs::write(&side_path, json).map_err(|source| CsvError::Io { path: side_path, source })?;
        written.push(path);
    }
    Ok(written)
}

/// Reads a relation back from a CSV file and its sidecar.
pub fn read_relation(csv_path: &Path) -> Result<Relation, CsvError> {
    let side_path = csv_path.with_extension("schema.json");
    let text = fs::read_to_string(&side_path).map_err(|source| CsvError::Io { path: side_path.clone(), source })?;
    let side: SchemaSidecar = serde_json::from_str(&text).map_err(|source| CsvError::Json { path: side_path, source })?;
    let mut rel = Relation::with_owned(side.name, side.attributes, side.key)?;
    let csv_err = |source| CsvError::Csv { path: csv_path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(csv_path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != rel.schema() {
        return Err(CsvError::Cell {
            path: csv_path.to_path_buf(),
            cell: header.join(","),
            message: "header differs from sidecar schema".into(),
        });
    }
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        let mut row = Vec::with_capacity(record.len());
        for cell in record.iter() {
            if cell == side.null_token {
                row.push(None);
            } else {
                let t = parse_term(cell).map_err(|e| CsvError::Cell {
                    path: csv_path.to_path_buf(),
                    cell: cell.to_string(),
                    message: e.to_string(),
                })?;
                row.push(Some(t));
            }
        }
        rel.insert(row)?;
    }
    Ok(rel)
}
