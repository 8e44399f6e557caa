//! N-Triples reader and writer.
//!
//! The reader is line-oriented and accepts the W3C grammar: IRIs with
//! `\u`/`\U` escapes, blank nodes, literals with string escapes, language
//! tags and datatypes, and `#` comments. The writer emits one triple per
//! line in canonical order (lexicographic on the rendered subject,
//! predicate and object).

use std::io::{BufRead, Write};

use super::graph::Graph;
use super::term::{is_blank_label_char, Literal, Term, Triple, RDF_LANG_STRING};
use crate::error::RdfError;

/// Parses an N-Triples document. Duplicate lines collapse to one triple.
pub fn parse_ntriples<R: BufRead>(mut input: R) -> Result<Graph, RdfError> {
    let mut graph = Graph::new();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&buf).map_err(|_| RdfError::Utf8 { line: line_no })?;
        if let Some(triple) = parse_line(line, line_no)? {
            graph.insert(triple);
        }
    }
    Ok(graph)
}

pub fn parse_ntriples_str(input: &str) -> Result<Graph, RdfError> {
    parse_ntriples(input.as_bytes())
}

/// Parses one line; `Ok(None)` for blank and comment-only lines.
pub fn parse_line(line: &str, line_no: usize) -> Result<Option<Triple>, RdfError> {
    let mut cur = Cursor {
        chars: line.trim_end_matches(['\n', '\r']).chars().collect(),
        pos: 0,
        line: line_no,
    };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let subject_col = cur.column();
    let subject = cur.term()?;
    if subject.is_literal() {
        return Err(cur.error_at(subject_col, "literal is not allowed in subject position"));
    }
    cur.skip_ws();
    let predicate_col = cur.column();
    let predicate = cur.term()?;
    if !predicate.is_iri() {
        return Err(cur.error_at(predicate_col, "predicate must be an IRI"));
    }
    cur.skip_ws();
    let object = cur.term()?;
    cur.skip_ws();
    if cur.peek() != Some('.') {
        return Err(cur.error("expected '.' after object"));
    }
    cur.pos += 1;
    cur.skip_ws();
    if !(cur.at_end() || cur.peek() == Some('#')) {
        return Err(cur.error("unexpected content after '.'"));
    }
    Triple::new(subject, predicate, object)
        .map(Some)
        .map_err(|e| cur.error_at(subject_col, &e.to_string()))
}

/// Parses a single term in N-Triples syntax, e.g. `<http://ex/a>` or `"1"^^<...>`.
pub fn parse_term(text: &str) -> Result<Term, RdfError> {
    let mut cur = Cursor {
        chars: text.trim().chars().collect(),
        pos: 0,
        line: 1,
    };
    let term = cur.term()?;
    if !cur.at_end() {
        return Err(cur.error("unexpected content after term"));
    }
    Ok(term)
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> RdfError {
        self.error_at(self.column(), message)
    }

    fn error_at(&self, column: usize, message: &str) -> RdfError {
        RdfError::Syntax {
            line: self.line,
            column,
            message: message.to_string(),
        }
    }

    fn term(&mut self) -> Result<Term, RdfError> {
        match self.peek() {
            Some('<') => self.iri().map(Term::Iri),
            Some('_') => self.blank(),
            Some('"') => self.literal(),
            Some(c) => Err(self.error(&format!("unexpected character {c:?}"))),
            None => Err(self.error("unexpected end of line")),
        }
    }

    fn iri(&mut self) -> Result<String, RdfError> {
        let start = self.column();
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error_at(start, "unterminated IRI")),
                Some('>') => break,
                Some('\\') => out.push(self.uchar()?),
                Some(c) if matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') || c <= ' ' => {
                    return Err(self.error(&format!("invalid character {c:?} in IRI")))
                }
                Some(c) => out.push(c),
            }
        }
        if !super::term::is_valid_iri(&out) {
            return Err(self.error_at(start, &format!("IRI <{out}> is not absolute")));
        }
        Ok(out)
    }

    fn uchar(&mut self) -> Result<char, RdfError> {
        let len = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.error("invalid escape in IRI")),
        };
        self.hex_char(len)
    }

    fn hex_char(&mut self, len: usize) -> Result<char, RdfError> {
        if self.pos + len > self.chars.len() {
            return Err(self.error("truncated unicode escape"));
        }
        let hex: String = self.chars[self.pos..self.pos + len].iter().collect();
        self.pos += len;
        u32::from_str_radix(&hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.error(&format!("invalid unicode escape {hex}")))
    }

    fn blank(&mut self) -> Result<Term, RdfError> {
        self.pos += 1;
        if self.bump() != Some(':') {
            return Err(self.error("expected ':' in blank node label"));
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if is_blank_label_char(c)) {
            self.pos += 1;
        }
        // a trailing '.' terminates the statement, it is not part of the label
        while self.pos > start && self.chars[self.pos - 1] == '.' {
            self.pos -= 1;
        }
        if self.pos == start {
            return Err(self.error("empty blank node label"));
        }
        let label: String = self.chars[start..self.pos].iter().collect();
        Ok(Term::Blank(label))
    }

    fn literal(&mut self) -> Result<Term, RdfError> {
        let start = self.column();
        self.pos += 1;
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error_at(start, "unterminated literal")),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex_char(4)?,
                        Some('U') => self.hex_char(8)?,
                        _ => return Err(self.error("invalid string escape")),
                    };
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
            }
        }
        match self.peek() {
            Some('@') => {
                self.pos += 1;
                let begin = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.pos += 1;
                }
                let tag: String = self.chars[begin..self.pos].iter().collect();
                if tag.is_empty() || !tag.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    return Err(self.error("invalid language tag"));
                }
                Ok(Term::Literal(Literal::lang(lexical, tag)))
            }
            Some('^') => {
                self.pos += 1;
                if self.bump() != Some('^') || self.peek() != Some('<') {
                    return Err(self.error("expected '^^<datatype>'"));
                }
                let dt = self.iri()?;
                if dt == RDF_LANG_STRING {
                    return Err(self.error("rdf:langString requires a language tag"));
                }
                Ok(Term::Literal(Literal::typed(lexical, dt)))
            }
            _ => Ok(Term::Literal(Literal::plain(lexical))),
        }
    }
}

/// Rendered `(subject, predicate, object)` strings in canonical order.
pub fn canonical_lines(graph: &Graph) -> Vec<String> {
    let mut rows: Vec<(String, String, String)> = graph
        .iter()
        .map(|t| {
            (
                t.subject().to_string(),
                t.predicate().to_string(),
                t.object().to_string(),
            )
        })
        .collect();
    rows.sort();
    rows.into_iter()
        .map(|(s, p, o)| format!("{s} {p} {o} ."))
        .collect()
}

/// Writes the graph as N-Triples, one `\n`-terminated line per triple.
/// An empty graph produces no output.
pub fn serialize_ntriples<W: Write>(graph: &Graph, mut out: W) -> Result<(), RdfError> {
    for line in canonical_lines(graph) {
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_ntriples_string(graph: &Graph) -> String {
    let mut buf = Vec::new();
    serialize_ntriples(graph, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("rendered terms are UTF-8")
}
