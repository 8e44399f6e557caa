//! Select-project-join plans over table sets, and the values-by-procedure
//! plan written for each layout.

use std::fmt;

use crate::rdf::Term;

use super::build::{TableSet, TableSetKind, COMPACT_MEASUREMENT, COMPACT_OBSERVATION, UNIVERSAL};
use super::relation::{natural_join, Relation};
use super::TabularError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Plan {
    Scan(String),
    Select { input: Box<Plan>, attribute: String, value: Term },
    Project { input: Box<Plan>, attributes: Vec<String> },
    Join(Box<Plan>, Box<Plan>),
    Union(Box<Plan>, Box<Plan>),
    /// Relation with the given schema and no rows.
    Empty(Vec<String>),
}

impl Plan {
    pub fn scan(name: &str) -> Plan {
        Plan::Scan(name.to_string())
    }

    pub fn select(self, attribute: &str, value: &Term) -> Plan {
        Plan::Select {
            input: Box::new(self),
            attribute: attribute.to_string(),
            value: value.clone(),
        }
    }

    pub fn project(self, attributes: &[&str]) -> Plan {
        Plan::Project {
            input: Box::new(self),
            attributes: attributes.iter().map(|a| a.to_string()).collect(),
        }
    }

    pub fn join(self, other: Plan) -> Plan {
        Plan::Join(Box::new(self), Box::new(other))
    }

    pub fn union(self, other: Plan) -> Plan {
        Plan::Union(Box::new(self), Box::new(other))
    }

    pub fn eval(&self, ts: &TableSet) -> Result<Relation, TabularError> {
        match self {
            Plan::Scan(name) => Ok(ts.get(name)?.clone()),
            Plan::Select { input, attribute, value } => input.eval(ts)?.select_eq(attribute, value),
            Plan::Project { input, attributes } => {
                let attrs: Vec<&str> = attributes.iter().map(String::as_str).collect();
                input.eval(ts)?.project(&attrs)
            }
            Plan::Join(a, b) => Ok(natural_join(&a.eval(ts)?, &b.eval(ts)?)),
            Plan::Union(a, b) => a.eval(ts)?.union(&b.eval(ts)?),
            Plan::Empty(schema) => {
                let attrs: Vec<&str> = schema.iter().map(String::as_str).collect();
                Relation::new("empty", &attrs, &attrs)
            }
        }
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Plan::Scan(name) => write!(f, "[{name}]"),
            Plan::Select { input, attribute, value } => write!(f, "select[{attribute} = {value}]({input})"),
            Plan::Project { input, attributes } => write!(f, "project[{}]({input})", attributes.join(", ")),
            Plan::Join(a, b) => write!(f, "({a} JOIN {b})"),
            Plan::Union(a, b) => write!(f, "({a} UNION {b})"),
            Plan::Empty(schema) => write!(f, "empty[{}]", schema.join(", ")),
        }
    }
}

const OUTPUT: [&str; 2] = ["Value", "Unit"];

/// Class-template names in `ts` whose relation carries a procedure column.
fn procedure_classes<'a>(ts: &'a TableSet, prefix: &str) -> Vec<&'a str> {
    ts.relations
        .iter()
        .filter(|(_, r)| r.has_attribute("Procedure"))
        .filter_map(|(n, _)| n.strip_prefix(prefix)?.strip_suffix(" CT"))
        .collect()
}

fn union_all(parts: Vec<Plan>) -> Plan {
    parts
        .into_iter()
        .reduce(Plan::union)
        .unwrap_or_else(|| Plan::Empty(OUTPUT.iter().map(|s| s.to_string()).collect()))
}

/// Distinct (Value, Unit) pairs of observations made by `procedure`,
/// written against the relations of `ts`'s layout.
pub fn values_by_procedure(ts: &TableSet, procedure: &Term) -> Plan {
    match ts.kind {
        TableSetKind::Universal => Plan::scan(UNIVERSAL).select("Procedure", procedure).project(&OUTPUT),
        TableSetKind::Factorized => Plan::scan(COMPACT_OBSERVATION)
            .select("Procedure", procedure)
            .join(Plan::scan(COMPACT_MEASUREMENT))
            .project(&OUTPUT),
        TableSetKind::Ct => union_all(
            procedure_classes(ts, "")
                .into_iter()
                .filter(|c| ts.relations.contains_key(&format!("{c} Measurement")))
                .map(|c| {
                    Plan::scan(&format!("{c} CT"))
                        .select("Procedure", procedure)
                        .join(Plan::scan(&format!("{c} Measurement")))
                        .join(Plan::scan("MeasureData CT"))
                        .project(&OUTPUT)
                })
                .collect(),
        ),
        TableSetKind::FactorizedCt => union_all(
            procedure_classes(ts, "F-")
                .into_iter()
                .map(|c| {
                    Plan::scan(&format!("F-{c} CT"))
                        .select("Procedure", procedure)
                        .join(Plan::scan(&format!("Factorized {c} Measurement")))
                        .join(Plan::scan("F-MeasureData CT"))
                        .project(&OUTPUT)
                })
                .collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorize::{factorize, FactorizationState};
    use crate::fixtures::{ex, sensor_example};
    use crate::rdf::Literal;
    use crate::ssn::Vocabulary;
    use crate::tabular::build::*;

    #[test]
    fn values_by_procedure_agree_across_layouts() {
        let v = Vocabulary::default();
        let g = sensor_example();
        let f = factorize(&g, &FactorizationState::default(), &v).unwrap();
        let sets = [
            build_universal(&g, &v),
            build_factorized_tables(f.graph(), f.mapping(), &v).unwrap(),
            build_ct_tables(&g, &v),
            build_factorized_ct_tables(f.graph(), f.mapping(), &v).unwrap(),
        ];
        let procedures: Vec<Term> = sets[0].get(UNIVERSAL).unwrap().iter().map(|r| r.get("Procedure").unwrap().clone()).collect();
        for p in procedures.iter().chain([&ex("noSuchSensor")]) {
            let answers: Vec<Relation> = sets.iter().map(|ts| values_by_procedure(ts, p).eval(ts).unwrap()).collect();
            for (ts, a) in sets.iter().zip(&answers) {
                assert_eq!(a.schema(), OUTPUT, "{:?}", ts.kind);
                assert_eq!(a.rows(), answers[0].rows(), "{:?} for {p}", ts.kind);
            }
        }
        let first = &procedures[0];
        assert_eq!(values_by_procedure(&sets[0], first).eval(&sets[0]).unwrap().len(), 2);
    }

    #[test]
    fn plan_errors_and_display() {
        let ts = build_universal(&crate::rdf::Graph::new(), &Vocabulary::default());
        let lit = Term::Literal(Literal::plain("x"));
        assert!(Plan::scan("missing").eval(&ts).is_err());
        assert!(Plan::scan(UNIVERSAL).select("Nope", &lit).eval(&ts).is_err());
        let p = values_by_procedure(&ts, &lit);
        assert!(p.eval(&ts).unwrap().is_empty());
        assert!(p.to_string().starts_with("project[Value, Unit](select[Procedure"));
    }
}
