use std::collections::BTreeMap;
use std::fmt;

use super::term::{Term, Triple};

/// A variable assignment produced by pattern matching.
pub type Binding = BTreeMap<String, Term>;

/// One position of a triple pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternTerm {
    Const(Term),
    Var(String),
}

impl PatternTerm {
    pub fn var(name: impl Into<String>) -> Self {
        PatternTerm::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&Term> {
        match self {
            PatternTerm::Const(t) => Some(t),
            PatternTerm::Var(_) => None,
        }
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Const(t)
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Const(t) => write!(f, "{t}"),
            PatternTerm::Var(v) => write!(f, "?{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.positions().into_iter().filter_map(PatternTerm::as_var)
    }

    /// Substitutes bound variables; returns a triple when the result is ground and well-formed.
    pub fn instantiate(&self, binding: &Binding) -> Option<Triple> {
        let ground = |pt: &PatternTerm| match pt {
            PatternTerm::Const(t) => Some(t.clone()),
            PatternTerm::Var(v) => binding.get(v).cloned(),
        };
        Triple::new(
            ground(&self.subject)?,
            ground(&self.predicate)?,
            ground(&self.object)?,
        )
        .ok()
    }

    /// Renames variables through `f`; constants are untouched.
    pub fn map_vars(&self, f: impl Fn(&str) -> PatternTerm) -> TriplePattern {
        let m = |pt: &PatternTerm| match pt {
            PatternTerm::Var(v) => f(v),
            c => c.clone(),
        };
        TriplePattern::new(m(&self.subject), m(&self.predicate), m(&self.object))
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}
