//! Relational layouts of sensor graphs and checks over them.

pub mod build;
pub mod checks;
pub mod csv_export;
pub mod plans;
pub mod relation;

pub use build::{
    build_ct_tables, build_factorized_ct_tables, build_factorized_tables, build_universal, TableSet, TableSetKind,
};
pub use checks::{
    check_fds, declared_fds, factorized_fds, universal_fds, verify_lossless, verify_lossless_ct, FdReport,
    FunctionalDependency, LosslessReport,
};
pub use csv_export::{read_relation, write_table_set, CsvError};
pub use plans::{values_by_procedure, Plan};
pub use relation::{join_all, natural_join, Cell, Relation, Row};

#[derive(Debug, thiserror::Error)]
pub enum TabularError {
    #[error("attribute {0} appears twice")]
    DuplicateAttribute(String),
    #[error("relation {relation} has no attribute {attribute}")]
    UnknownAttribute { relation: String, attribute: String },
    #[error("relation {relation} expects {expected} cells, got {found}")]
    Arity { relation: String, expected: usize, found: usize },
    #[error("relations {0} and {1} have different schemas")]
    SchemaMismatch(String, String),
    #[error("no relation named {0}")]
    UnknownRelation(String),
    #[error("referential integrity: {0}")]
    ReferentialIntegrity(String),
}

#[cfg(test)]
mod tests {
    use super::build::{COMPACT_MEASUREMENT, COMPACT_OBSERVATION, OBSERVATION, UNIVERSAL};
    use super::*;
    use crate::factorize::{factorize, FactorizationState};
    use crate::fixtures::{ex, sensor_example};
    use crate::ssn::Vocabulary;

    fn layouts() -> (TableSet, TableSet, TableSet, TableSet) {
        let v = Vocabulary::default();
        let g = sensor_example();
        let f = factorize(&g, &FactorizationState::default(), &v).unwrap();
        (
            build_universal(&g, &v),
            build_factorized_tables(f.graph(), f.mapping(), &v).unwrap(),
            build_ct_tables(&g, &v),
            build_factorized_ct_tables(f.graph(), f.mapping(), &v).unwrap(),
        )
    }

    #[test]
    fn sensor_example_row_counts() {
        let (u, f, ct, fct) = layouts();
        assert_eq!(u.get(UNIVERSAL).unwrap().len(), 6);
        assert_eq!(f.get(OBSERVATION).unwrap().len(), 6);
        assert_eq!(f.get(COMPACT_OBSERVATION).unwrap().len(), 2);
        assert_eq!(f.get(COMPACT_MEASUREMENT).unwrap().len(), 2);
        let names: Vec<&String> = ct.relations.keys().collect();
        assert_eq!(names.iter().filter(|n| n.ends_with(" CT")).count(), 4, "{names:?}");
        assert_eq!(ct.relations.len(), 8, "{names:?}");
        assert!(fct.relations.contains_key("F-MeasureData CT"), "{:?}", fct.relations.keys());
        assert!(fct.relations.contains_key("MeasureData Mapping"));
    }

    #[test]
    fn sensor_example_is_lossless() {
        let (u, f, ct, fct) = layouts();
        let r = verify_lossless(&u, &f);
        assert!(r.holds(), "{r:?}");
        let r = verify_lossless_ct(&ct, &fct);
        assert!(r.holds(), "{r:?}");
        assert_eq!(r.relations_checked, ct.relations.len() + 2);
    }

    #[test]
    fn factorized_links_and_stray_relations_are_checked() {
        let (_, _, ct, fct) = layouts();
        let mut t = fct.clone();
        let rel = t.get_mut("Factorized RainfallObs Measurement").unwrap();
        let mut row = rel.rows().iter().next().unwrap().clone();
        rel.remove(&row);
        row[1] = Some(ex("elsewhere"));
        rel.insert(row).unwrap();
        let r = verify_lossless_ct(&ct, &t);
        assert_eq!(r.differences.len(), 1, "{r:?}");
        assert_eq!(r.differences[0].relation, "Factorized RainfallObs Measurement");

        let mut t = fct.clone();
        t.relations.insert("Stray".into(), Relation::new("Stray", &["X"], &["X"]).unwrap());
        let r = verify_lossless_ct(&ct, &t);
        assert!(r.errors.iter().any(|e| e.starts_with("Stray")), "{r:?}");
    }

    #[test]
    fn dependencies_hold_and_are_3nf() {
        let (u, f, _, fct) = layouts();
        let r = check_fds(&f, &factorized_fds());
        assert!(r.all_hold() && r.all_third_normal_form(), "{r:?}");
        let r = check_fds(&u, &universal_fds());
        assert!(r.all_hold(), "{r:?}");
        assert!(!r.all_third_normal_form(), "universal relation has transitive dependencies");
        let r = check_fds(&fct, &declared_fds(&fct));
        assert!(r.all_hold() && r.all_third_normal_form(), "{r:?}");
    }

    #[test]
    fn mutations_are_detected() {
        let (u, mut f, ct, mut fct) = layouts();
        let cm = f.get_mut(COMPACT_MEASUREMENT).unwrap();
        let row = cm.rows().iter().next().unwrap().clone();
        cm.remove(&row);
        let mut changed = row.clone();
        changed[1] = Some(ex("other"));
        cm.insert(changed.clone()).unwrap();
        let r = verify_lossless(&u, &f);
        assert!(!r.holds());
        assert!(!r.differences[0].missing.is_empty() && !r.differences[0].spurious.is_empty());
        cm_extra(&mut f, row);
        let fd = check_fds(&f, &factorized_fds());
        assert!(!fd.all_hold());

        let name = fct.relations.keys().find(|n| n.starts_with("F-") && n.ends_with(" CT")).unwrap().clone();
        let rel = fct.get_mut(&name).unwrap();
        let row = rel.rows().iter().next().unwrap().clone();
        rel.remove(&row);
        assert!(!verify_lossless_ct(&ct, &fct).holds());

        fct.relations.remove(&name);
        assert!(!verify_lossless_ct(&ct, &fct).errors.is_empty());
        let missing = check_fds(&f, &[FunctionalDependency::new(&["Nope"], &["Value"])]);
        assert!(missing.checks[0].relation.is_none() && !missing.all_hold());
    }

    fn cm_extra(f: &mut TableSet, row: Row) {
        f.get_mut(COMPACT_MEASUREMENT).unwrap().insert(row).unwrap();
    }
}
