//! Small example graphs and queries over the default vocabulary.

use crate::rdf::{parse_ntriples_str, Graph};

/// Six observations: three rainfall readings of 20.0 cm and three
/// temperature readings of 24.8 °F, all by procedure `LGVI1`.
pub const SENSOR_EXAMPLE_NT: &str = include_str!("../fixtures/sensor_example.nt");

/// Factorized form of [`SENSOR_EXAMPLE_NT`] with surrogates named
/// `obsM1`/`mM1` (rainfall) and `obsM2`/`mM2` (temperature).
pub const SENSOR_EXAMPLE_FACTORIZED_NT: &str = include_str!("../fixtures/sensor_example_factorized.nt");

/// Values and units measured by `LGVI1`.
pub const VALUES_BY_PROCEDURE_RQ: &str = include_str!("../fixtures/values_by_procedure.rq");

/// [`VALUES_BY_PROCEDURE_RQ`] rewritten for the factorized graph.
pub const VALUES_BY_PROCEDURE_REWRITTEN_RQ: &str = include_str!("../fixtures/values_by_procedure_rewritten.rq");

pub fn sensor_example() -> Graph {
    parse_ntriples_str(SENSOR_EXAMPLE_NT).expect("fixture parses")
}

pub fn sensor_example_factorized() -> Graph {
    parse_ntriples_str(SENSOR_EXAMPLE_FACTORIZED_NT).expect("fixture parses")
}

/// Local IRI under the fixture prefix.
pub fn ex(local: &str) -> crate::rdf::Term {
    crate::rdf::Term::Iri(format!("{}{local}", crate::ssn::FIXTURE_PREFIX))
}
