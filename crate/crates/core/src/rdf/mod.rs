//! RDF data model, N-Triples I/O, triple-pattern matching and graph statistics.

mod graph;
pub mod ntriples;
mod pattern;
mod stats;
mod term;

pub use graph::{Graph, TermId};
pub use ntriples::{
    parse_ntriples, parse_ntriples_str, parse_term, serialize_ntriples, to_ntriples_string,
};
pub use pattern::{Binding, PatternTerm, TriplePattern};
pub use stats::{avg_neighbors, stats, GraphStats};
pub use term::{parse_decimal, Literal, Term, Triple, RDF_TYPE, XSD};
