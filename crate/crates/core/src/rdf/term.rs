//! RDF terms and triples.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RdfError;

pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";

/// A literal value. Equality is purely lexical: `"20.0"` and `"20.00"` differ.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Option<String>,
    pub language: Option<String>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: None,
            language: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: Some(datatype.into()),
            language: None,
        }
    }

    pub fn lang(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: None,
            language: Some(language.into().to_ascii_lowercase()),
        }
    }

    /// Numeric reading of the lexical form, if it is a decimal/double literal.
    pub fn as_number(&self) -> Option<f64> {
        parse_decimal(&self.lexical)
    }
}

/// Parses `[+-]? digits [. digits] [e[+-]digits]`; rejects `inf`, `NaN` and friends.
pub fn parse_decimal(s: &str) -> Option<f64> {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != b.len() {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// An RDF term: IRI, blank node or literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(Literal),
}

impl Term {
    /// Builds an IRI term, checking that it is absolute and whitespace-free.
    pub fn iri(value: impl Into<String>) -> Result<Term, RdfError> {
        let value = value.into();
        if is_valid_iri(&value) {
            Ok(Term::Iri(value))
        } else {
            Err(RdfError::InvalidIri(value))
        }
    }

    pub fn blank(label: impl Into<String>) -> Result<Term, RdfError> {
        let label = label.into();
        if !label.is_empty() && label.chars().all(is_blank_label_char) {
            Ok(Term::Blank(label))
        } else {
            Err(RdfError::InvalidBlank(label))
        }
    }

    pub fn literal(lit: Literal) -> Term {
        Term::Literal(lit)
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    /// Plain-text value for tabular output: IRI string, blank label or lexical form.
    pub fn value_str(&self) -> &str {
        match self {
            Term::Iri(s) => s,
            Term::Blank(s) => s,
            Term::Literal(l) => &l.lexical,
        }
    }

    /// Last path segment of an IRI (after `#` or `/`), or the whole value.
    pub fn local_name(&self) -> &str {
        let v = self.value_str();
        match self {
            Term::Iri(_) => v
                .rsplit(['#', '/', ':'])
                .next()
                .filter(|s| !s.is_empty())
                .unwrap_or(v),
            _ => v,
        }
    }
}

pub(crate) fn is_valid_iri(value: &str) -> bool {
    if value.is_empty() || value.chars().any(|c| c.is_whitespace()) {
        return false;
    }
    // scheme ":" ...
    let Some((scheme, _)) = value.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

pub(crate) fn is_blank_label_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.')
}

impl fmt::Display for Term {
    /// N-Triples rendering.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => {
                f.write_str("<")?;
                for c in iri.chars() {
                    match c {
                        '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' => {
                            write!(f, "\\u{:04X}", c as u32)?
                        }
                        c if (c as u32) <= 0x20 => write!(f, "\\u{:04X}", c as u32)?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str(">")
            }
            Term::Blank(label) => write!(f, "_:{label}"),
            Term::Literal(lit) => {
                f.write_str("\"")?;
                for c in lit.lexical.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if let Some(lang) = &lit.language {
                    write!(f, "@{lang}")
                } else if let Some(dt) = &lit.datatype {
                    write!(f, "^^{}", Term::Iri(dt.clone()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// An RDF triple `(s p o)` with `s` an IRI or blank node and `p` an IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    subject: Term,
    predicate: Term,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Triple, RdfError> {
        if subject.is_literal() {
            return Err(RdfError::LiteralSubject);
        }
        if !predicate.is_iri() {
            return Err(RdfError::NonIriPredicate(predicate.to_string()));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Term {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }

    pub fn into_parts(self) -> (Term, Term, Term) {
        (self.subject, self.predicate, self.object)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}
