//! Loss-less join and functional dependency checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::build::{TableSet, COMPACT_MEASUREMENT, COMPACT_OBSERVATION, OBSERVATION, UNIVERSAL, UNIVERSAL_SCHEMA};
use super::relation::{join_all, Relation, Row};
use super::TabularError;

fn render(row: &Row) -> String {
    let cells: Vec<String> = row
        .iter()
        .map(|c| c.as_ref().map_or_else(|| "NULL".to_string(), ToString::to_string))
        .collect();
    format!("({})", cells.join(", "))
}

const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct RelationDiff {
    pub relation: String,
    /// Rows of the original relation that the join does not produce.
    pub missing: Vec<String>,
    /// Rows the join produces that the original relation lacks.
    pub spurious: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct LosslessReport {
    pub relations_checked: usize,
    pub differences: Vec<RelationDiff>,
    pub errors: Vec<String>,
}

impl LosslessReport {
    pub fn holds(&self) -> bool {
        self.differences.is_empty() && self.errors.is_empty()
    }
}

fn diff(name: &str, expected: &Relation, actual: &Relation) -> Option<RelationDiff> {
    if expected.rows() == actual.rows() {
        return None;
    }
    let list = |a: &Relation, b: &Relation| a.rows().difference(b.rows()).take(MAX_LISTED).map(render).collect();
    Some(RelationDiff {
        relation: name.to_string(),
        missing: list(expected, actual),
        spurious: list(actual, expected),
    })
}

/// Projects the join of the factorized relations onto the universal
/// attributes and compares it with the universal relation as sets.
pub fn verify_lossless(universal: &TableSet, factorized: &TableSet) -> LosslessReport {
    let mut report = LosslessReport::default();
    let run = || -> Result<Option<RelationDiff>, TabularError> {
        let u = universal.get(UNIVERSAL)?;
        let joined = join_all(&[factorized.get(OBSERVATION)?, factorized.get(COMPACT_OBSERVATION)?, factorized.get(COMPACT_MEASUREMENT)?])
            .expect("three relations");
        let projected = joined.project(&UNIVERSAL_SCHEMA)?;
        Ok(diff(UNIVERSAL, u, &projected))
    };
    report.relations_checked = 1;
    match run() {
        Ok(d) => report.differences.extend(d),
        Err(e) => report.errors.push(e.to_string()),
    }
    report
}

/// Reconstructs every class-template relation from the factorized CT
/// relations: `<C> CT` as `<C> Mapping` joined with `F-<C> CT`, all
/// other relations by name. Each `Factorized <C> Measurement` link must
/// equal the surrogate image of `<C> Measurement`, and a factorized
/// relation that none of these steps reads is reported as an error.
pub fn verify_lossless_ct(ct: &TableSet, fct: &TableSet) -> LosslessReport {
    let mut report = LosslessReport::default();
    let mut read: BTreeSet<&str> = BTreeSet::new();
    for (name, rel) in &ct.relations {
        report.relations_checked += 1;
        let local = name.strip_suffix(" CT");
        let compact = local.and_then(|l| {
            Some((fct.relations.get_key_value(&format!("{l} Mapping"))?, fct.relations.get_key_value(&format!("F-{l} CT"))?))
        });
        let rebuilt = match compact {
            Some(((mn, mapping), (fn_, f))) => {
                read.extend([mn.as_str(), fn_.as_str()]);
                let attrs: Vec<&str> = rel.schema().iter().map(String::as_str).collect();
                super::relation::natural_join(mapping, f).project(&attrs)
            }
            None => fct.relations.get_key_value(name).map_or_else(
                || Err(TabularError::UnknownRelation(name.clone())),
                |(n, r)| {
                    read.insert(n);
                    Ok(r.clone())
                },
            ),
        };
        match rebuilt {
            Ok(r) if r.schema() != rel.schema() => report.errors.push(format!("{name}: schema {:?} rebuilt as {:?}", rel.schema(), r.schema())),
            Ok(r) => report.differences.extend(diff(name, rel, &r)),
            Err(e) => report.errors.push(format!("{name}: {e}")),
        }
    }
    let measurement_mapping = fct
        .relations
        .iter()
        .find(|(n, r)| n.ends_with(" Mapping") && r.has_attribute("MMID"));
    for (name, rel) in &fct.relations {
        let Some(local) = name.strip_prefix("Factorized ").and_then(|n| n.strip_suffix(" Measurement")) else {
            continue;
        };
        report.relations_checked += 1;
        read.insert(name);
        let derived = (|| -> Result<Relation, TabularError> {
            let (_, mm) = measurement_mapping.ok_or_else(|| TabularError::UnknownRelation("measurement mapping".into()))?;
            let obs_mapping = fct.get(&format!("{local} Mapping"))?;
            let links = ct.get(&format!("{local} Measurement"))?;
            join_all(&[obs_mapping, links, mm]).expect("three relations").project(&["ObsMID", "MMID"])
        })();
        match derived {
            Ok(d) => report.differences.extend(diff(name, &d, rel)),
            Err(e) => report.errors.push(format!("{name}: {e}")),
        }
    }
    for name in fct.relations.keys() {
        if !read.contains(name.as_str()) {
            report.errors.push(format!("{name}: not covered by any reconstruction"));
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct FunctionalDependency {
    pub lhs: Vec<String>,
    pub rhs: Vec<String>,
}

impl FunctionalDependency {
    pub fn new(lhs: &[&str], rhs: &[&str]) -> Self {
        FunctionalDependency {
            lhs: lhs.iter().map(|s| s.to_string()).collect(),
            rhs: rhs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for FunctionalDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs.join(","), self.rhs.join(","))
    }
}

/// Dependencies the factorized relations are designed around.
pub fn factorized_fds() -> Vec<FunctionalDependency> {
    vec![
        FunctionalDependency::new(&["ObsMID"], &["Type", "Procedure", "Property", "MMID"]),
        FunctionalDependency::new(&["MMID"], &["Value", "Unit"]),
        FunctionalDependency::new(&["ObsID"], &["SamplingTime", "Timestamp", "MID", "ObsMID"]),
    ]
}

/// Dependencies expected of the universal relation.
pub fn universal_fds() -> Vec<FunctionalDependency> {
    vec![
        FunctionalDependency::new(&["ObsID"], &UNIVERSAL_SCHEMA[1..]),
        FunctionalDependency::new(&["MID"], &["Value", "Unit"]),
        FunctionalDependency::new(&["SamplingTime"], &["Timestamp"]),
    ]
}

/// Key dependencies declared by the relations of a table set: each key
/// determines the remaining attributes.
pub fn declared_fds(ts: &TableSet) -> Vec<FunctionalDependency> {
    let mut out = BTreeSet::new();
    for r in ts.relations.values() {
        let rest: Vec<&str> = r.schema().iter().filter(|a| !r.key().contains(a)).map(String::as_str).collect();
        if !r.key().is_empty() && !rest.is_empty() {
            let key: Vec<&str> = r.key().iter().map(String::as_str).collect();
            out.insert(FunctionalDependency::new(&key, &rest));
        }
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FdCheck {
    pub fd: String,
    /// `None` when no relation contains all attributes of the dependency.
    pub relation: Option<String>,
    pub holds: bool,
    /// The left side is a superkey, or every right-side attribute outside
    /// the left side belongs to the declared key.
    pub third_normal_form: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct FdReport {
    pub checks: Vec<FdCheck>,
}

impl FdReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn all_third_normal_form(&self) -> bool {
        self.checks.iter().all(|c| c.third_normal_form)
    }
}

/// Checks each dependency on every relation that contains its attributes.
pub fn check_fds(ts: &TableSet, fds: &[FunctionalDependency]) -> FdReport {
    let mut report = FdReport::default();
    for fd in fds {
        let attrs: Vec<&String> = fd.lhs.iter().chain(&fd.rhs).collect();
        let targets: Vec<&Relation> = ts
            .relations
            .values()
            .filter(|r| attrs.iter().all(|a| r.has_attribute(a)))
            .collect();
        if targets.is_empty() {
            report.checks.push(FdCheck {
                fd: fd.to_string(),
                relation: None,
                holds: false,
                third_normal_form: false,
                violations: vec![format!("no relation contains {}", fd)],
            });
            continue;
        }
        for r in targets {
            let li: Vec<usize> = fd.lhs.iter().map(|a| r.index_of(a).expect("checked")).collect();
            let ri: Vec<usize> = fd.rhs.iter().map(|a| r.index_of(a).expect("checked")).collect();
            let mut seen: BTreeMap<Row, Row> = BTreeMap::new();
            let mut violations = Vec::new();
            for row in r.rows() {
                let l = r.values(row, &li);
                let rv = r.values(row, &ri);
                match seen.get(&l) {
                    Some(prev) if prev != &rv => {
                        if violations.len() < MAX_LISTED {
                            violations.push(format!("{} maps to both {} and {}", render(&l), render(prev), render(&rv)));
                        }
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(l, rv);
                    }
                }
            }
            let superkey = r.key().iter().all(|k| fd.lhs.contains(k));
            let prime = fd.rhs.iter().filter(|a| !fd.lhs.contains(a)).all(|a| r.key().contains(a));
            report.checks.push(FdCheck {
                fd: fd.to_string(),
                relation: Some(r.name().to_string()),
                holds: violations.is_empty(),
                third_normal_form: superkey || prime,
                violations,
            });
        }
    }
    report
}
