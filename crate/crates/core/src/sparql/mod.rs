//! SELECT-subset SPARQL: parsing, serialization and set-semantics evaluation.

pub mod ast;
mod eval;
mod parser;
mod results;

use std::time::Duration;

use thiserror::Error;

pub use ast::{
    Bgp, CmpOp, FilterExpr, GraphPattern, Operand, OrderKey, Projection, Query, Selection,
};
pub use eval::{evaluate, evaluate_until, Evaluator};
pub use parser::parse_query;
pub use results::{compare_terms, SolutionSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SparqlError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("evaluation exceeded {0:?}")]
    Timeout(Duration),
}
