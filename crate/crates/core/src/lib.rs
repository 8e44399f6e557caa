//! Compact (factorized) representations of SSN sensor RDF graphs.
//!
//! The crate covers the whole pipeline: loading N-Triples, recognising
//! observation and measurement molecules, collapsing repeated
//! measurement descriptions into surrogate entities, rewriting SPARQL
//! queries so they return the same answers over the compact graph, and
//! exporting universal, factorized and class-template tables whose
//! loss-less join and functional dependencies can be checked.

pub mod bench;
pub mod error;
pub mod factorize;
pub mod fixtures;
pub mod rdf;
pub mod rewrite;
pub mod sparql;
pub mod ssn;
pub mod tabular;

pub use error::RdfError;
