//! Tokenizer and recursive-descent parser for the SELECT subset.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{
    Bgp, CmpOp, FilterExpr, GraphPattern, Operand, OrderKey, Projection, Query, Selection,
};
use super::SparqlError;
use crate::rdf::{Literal, PatternTerm, Term, TriplePattern, RDF_TYPE, XSD};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Iri(String),
    PName(String, String),
    Var(String),
    Str(String),
    LangTag(String),
    Number(String, &'static str),
    Word(String),
    Blank,
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

const PUNCT: &[&str] = &[
    "^^", "&&", "||", "!=", "<=", ">=", "{", "}", "(", ")", ".", ";", ",", "*", "=", "<", ">", "!",
    "/", "|", "^", "+", "[", "]",
];

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> SparqlError {
        SparqlError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek(0) {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// `<...>` is an IRI when it closes before any whitespace; otherwise `<` is an operator.
    fn try_iri(&self) -> Option<usize> {
        let mut i = self.pos + 1;
        while let Some(&c) = self.chars.get(i) {
            match c {
                '>' => return Some(i),
                c if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return None
                }
                _ => i += 1,
            }
        }
        None
    }

    fn name_chars(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_alphanumeric()
                || c == '_'
                || c == '-'
                || (c == '.'
                    && self
                        .peek(1)
                        .is_some_and(|n| n.is_alphanumeric() || n == '_'))
            {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn string(&mut self, quote: char, line: usize, column: usize) -> Result<String, SparqlError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(self.err(line, column, "unterminated string literal"))
                }
                Some(c) if c == quote => return Ok(s),
                Some('\\') => {
                    let e = self
                        .bump()
                        .ok_or_else(|| self.err(line, column, "unterminated escape"))?;
                    match e {
                        't' => s.push('\t'),
                        'n' => s.push('\n'),
                        'r' => s.push('\r'),
                        'b' => s.push('\u{8}'),
                        'f' => s.push('\u{c}'),
                        '"' | '\'' | '\\' => s.push(e),
                        'u' | 'U' => {
                            let n = if e == 'u' { 4 } else { 8 };
                            let hex: String = (0..n).filter_map(|_| self.bump()).collect();
                            let c = u32::from_str_radix(&hex, 16)
                                .ok()
                                .and_then(char::from_u32)
                                .ok_or_else(|| {
                                    self.err(self.line, self.col, format!("bad escape \\{e}{hex}"))
                                })?;
                            s.push(c);
                        }
                        other => {
                            return Err(self.err(
                                self.line,
                                self.col,
                                format!("unknown escape \\{other}"),
                            ))
                        }
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn next(&mut self) -> Result<Token, SparqlError> {
        self.skip_ws();
        let (line, column) = (self.line, self.col);
        let tok = |tok| Ok(Token { tok, line, column });
        let Some(c) = self.peek(0) else {
            return tok(Tok::Eof);
        };
        match c {
            '<' => {
                if let Some(end) = self.try_iri() {
                    let iri: String = self.chars[self.pos + 1..end].iter().collect();
                    while self.pos <= end {
                        self.bump();
                    }
                    return tok(Tok::Iri(iri));
                }
            }
            '?' | '$' => {
                self.bump();
                let name = self.name_chars();
                if name.is_empty() || name.contains('.') || name.contains('-') {
                    return Err(self.err(line, column, "malformed variable name"));
                }
                return tok(Tok::Var(name));
            }
            '"' | '\'' => {
                let s = self.string(c, line, column)?;
                return tok(Tok::Str(s));
            }
            '@' => {
                self.bump();
                let tag = self.name_chars();
                if tag.is_empty() {
                    return Err(self.err(line, column, "empty language tag"));
                }
                return tok(Tok::LangTag(tag));
            }
            '_' if self.peek(1) == Some(':') => {
                self.bump();
                self.bump();
                self.name_chars();
                return tok(Tok::Blank);
            }
            c if c.is_ascii_digit()
                || ((c == '-' || c == '+' || c == '.')
                    && self.peek(1).is_some_and(|d| d.is_ascii_digit())) =>
            {
                let mut s = String::new();
                s.push(c);
                self.bump();
                let mut kind = if c == '.' { "decimal" } else { "integer" };
                while let Some(d) = self.peek(0) {
                    if d.is_ascii_digit() {
                        s.push(d);
                    } else if d == '.'
                        && kind == "integer"
                        && self.peek(1).is_some_and(|n| n.is_ascii_digit())
                    {
                        kind = "decimal";
                        s.push(d);
                    } else if (d == 'e' || d == 'E') && kind != "double" {
                        kind = "double";
                        s.push(d);
                        if let Some(sign @ ('+' | '-')) = self.peek(1) {
                            self.bump();
                            s.push(sign);
                        }
                    } else {
                        break;
                    }
                    self.bump();
                }
                return tok(Tok::Number(s, kind));
            }
            c if c.is_alphabetic() || c == ':' => {
                let prefix = if c == ':' {
                    String::new()
                } else {
                    self.name_chars()
                };
                if self.peek(0) == Some(':') {
                    self.bump();
                    let local = self.name_chars();
                    return tok(Tok::PName(prefix, local));
                }
                return tok(Tok::Word(prefix));
            }
            _ => {}
        }
        for p in PUNCT {
            if p.chars()
                .enumerate()
                .all(|(i, pc)| self.peek(i) == Some(pc))
            {
                for _ in 0..p.len() {
                    self.bump();
                }
                return tok(Tok::Punct(p));
            }
        }
        Err(self.err(line, column, format!("unexpected character {c:?}")))
    }
}

/// Parses a query of the supported subset; prefixed names are resolved.
pub fn parse_query(text: &str) -> Result<Query, SparqlError> {
    let mut lexer = Lexer::new(text);
    let mut tokens = Vec::new();
    loop {
        let t = lexer.next()?;
        let eof = t.tok == Tok::Eof;
        tokens.push(t);
        if eof {
            break;
        }
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        prefixes: BTreeMap::new(),
        prefix_order: Vec::new(),
        base: None,
    };
    p.query()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    prefixes: BTreeMap<String, String>,
    prefix_order: Vec<(String, String)>,
    base: Option<String>,
}

const UNSUPPORTED_GROUP_KEYWORDS: &[&str] =
    &["OPTIONAL", "MINUS", "BIND", "VALUES", "SERVICE", "GRAPH"];
const UNSUPPORTED_FORMS: &[&str] = &["ASK", "CONSTRUCT", "DESCRIBE"];
const AGGREGATES: &[&str] = &[
    "COUNT",
    "SUM",
    "MIN",
    "MAX",
    "AVG",
    "SAMPLE",
    "GROUP_CONCAT",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> SparqlError {
        let t = &self.tokens[self.pos];
        SparqlError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn is_word(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.is_word(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), SparqlError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{p}', found {}", describe(self.peek()))))
        }
    }

    fn expect_var(&mut self) -> Result<String, SparqlError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.advance();
                Ok(v)
            }
            other => Err(self.err(format!("expected variable, found {}", describe(&other)))),
        }
    }

    fn check_unsupported_word(&self) -> Result<(), SparqlError> {
        if let Tok::Word(w) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED_GROUP_KEYWORDS.contains(&upper.as_str())
                || UNSUPPORTED_FORMS.contains(&upper.as_str())
                || matches!(
                    upper.as_str(),
                    "FROM" | "STREAM" | "GROUP" | "HAVING" | "OFFSET"
                )
            {
                let name = if upper == "GROUP" {
                    "GROUP BY".to_string()
                } else {
                    upper
                };
                return Err(SparqlError::Unsupported(name));
            }
        }
        Ok(())
    }

    fn query(&mut self) -> Result<Query, SparqlError> {
        loop {
            if self.eat_word("PREFIX") {
                let (prefix, local) = match self.advance() {
                    Tok::PName(p, l) => (p, l),
                    other => {
                        return Err(
                            self.err(format!("expected prefix name, found {}", describe(&other)))
                        )
                    }
                };
                if !local.is_empty() {
                    return Err(self.err("prefix declaration must end with ':'"));
                }
                let ns = match self.advance() {
                    Tok::Iri(i) => self.resolve_iri(&i)?,
                    other => {
                        return Err(self.err(format!("expected IRI, found {}", describe(&other))))
                    }
                };
                self.prefixes.insert(prefix.clone(), ns.clone());
                self.prefix_order.retain(|(p, _)| p != &prefix);
                self.prefix_order.push((prefix, ns));
            } else if self.eat_word("BASE") {
                match self.advance() {
                    Tok::Iri(i) => self.base = Some(self.resolve_iri(&i)?),
                    other => {
                        return Err(self.err(format!("expected IRI, found {}", describe(&other))))
                    }
                }
            } else {
                break;
            }
        }
        self.check_unsupported_word()?;
        if !self.eat_word("SELECT") {
            return Err(self.err(format!("expected SELECT, found {}", describe(self.peek()))));
        }
        let mut distinct = false;
        if self.eat_word("DISTINCT") {
            distinct = true;
        } else {
            self.eat_word("REDUCED");
        }
        let select = self.selection()?;
        self.check_unsupported_word()?;
        self.eat_word("WHERE");
        let pattern = self.group()?;
        let mut order_by = Vec::new();
        let mut limit = None;
        loop {
            self.check_unsupported_word()?;
            if self.eat_word("ORDER") {
                if !self.eat_word("BY") {
                    return Err(self.err("expected BY after ORDER"));
                }
                order_by = self.order_keys()?;
            } else if self.eat_word("LIMIT") {
                match self.advance() {
                    Tok::Number(n, "integer") if !n.starts_with(['-', '+']) => {
                        limit = Some(n.parse().map_err(|_| self.err("LIMIT out of range"))?)
                    }
                    other => {
                        return Err(self.err(format!(
                            "expected integer after LIMIT, found {}",
                            describe(&other)
                        )))
                    }
                }
            } else {
                break;
            }
        }
        if *self.peek() != Tok::Eof {
            return Err(self.err(format!("unexpected {}", describe(self.peek()))));
        }
        let q = Query {
            prefixes: self.prefix_order.clone(),
            select,
            distinct,
            pattern,
            order_by,
            limit,
        };
        if matches!(q.select, Selection::Star) && q.pattern.variables().is_empty() {
            return Err(SparqlError::Unsupported("SELECT * over a pattern without variables (ASK form)".into()));
        }
        validate(&q).map_err(|m| self.err(m))?;
        Ok(q)
    }

    fn selection(&mut self) -> Result<Selection, SparqlError> {
        if self.eat_punct("*") {
            return Ok(Selection::Star);
        }
        let mut out = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Var(v) => {
                    self.advance();
                    out.push(Projection::plain(v));
                }
                Tok::Punct("(") => {
                    self.advance();
                    if let Tok::Word(w) = self.peek() {
                        let upper = w.to_ascii_uppercase();
                        if AGGREGATES.contains(&upper.as_str()) {
                            return Err(SparqlError::Unsupported(format!("aggregate {upper}")));
                        }
                        return Err(SparqlError::Unsupported("expressions in SELECT".into()));
                    }
                    let var = self.expect_var()?;
                    if !self.eat_word("AS") {
                        return Err(SparqlError::Unsupported("expressions in SELECT".into()));
                    }
                    let alias = self.expect_var()?;
                    self.expect_punct(")")?;
                    out.push(Projection {
                        var,
                        alias: Some(alias),
                    });
                }
                _ => break,
            }
        }
        if out.is_empty() {
            return Err(self.err(format!(
                "expected projection, found {}",
                describe(self.peek())
            )));
        }
        Ok(Selection::Vars(out))
    }

    fn order_keys(&mut self) -> Result<Vec<OrderKey>, SparqlError> {
        let mut keys = Vec::new();
        loop {
            let descending = if self.is_word("ASC") || self.is_word("DESC") {
                let d = self.is_word("DESC");
                self.advance();
                self.expect_punct("(")?;
                let var = self.expect_var()?;
                self.expect_punct(")")?;
                keys.push(OrderKey { var, descending: d });
                continue;
            } else {
                false
            };
            match self.peek().clone() {
                Tok::Var(var) => {
                    self.advance();
                    keys.push(OrderKey { var, descending });
                }
                Tok::Punct("(") => {
                    return Err(SparqlError::Unsupported("expressions in ORDER BY".into()))
                }
                _ => break,
            }
        }
        if keys.is_empty() {
            return Err(self.err("expected ORDER BY condition"));
        }
        Ok(keys)
    }

    fn group(&mut self) -> Result<GraphPattern, SparqlError> {
        self.expect_punct("{")?;
        if self.is_punct("{") {
            let mut pattern = self.group()?;
            while self.eat_word("UNION") {
                let right = self.group()?;
                pattern = GraphPattern::Union(Box::new(pattern), Box::new(right));
            }
            self.eat_punct(".");
            self.check_unsupported_word()?;
            if !self.is_punct("}") {
                return Err(SparqlError::Unsupported(
                    "mixing nested groups with triple patterns or filters".into(),
                ));
            }
            self.advance();
            return Ok(pattern);
        }
        let mut bgp = Bgp::default();
        loop {
            self.check_unsupported_word()?;
            if self.eat_punct("}") {
                break;
            }
            if self.is_punct("{") {
                return Err(SparqlError::Unsupported(
                    "mixing nested groups with triple patterns or filters".into(),
                ));
            }
            if self.eat_word("FILTER") {
                bgp.filters.push(self.filter()?);
                self.eat_punct(".");
                continue;
            }
            self.triples_same_subject(&mut bgp.patterns)?;
            if !self.eat_punct(".") && !self.is_punct("}") && !self.is_word("FILTER") {
                self.check_unsupported_word()?;
                return Err(self.err(format!(
                    "expected '.' or '}}', found {}",
                    describe(self.peek())
                )));
            }
        }
        let mut seen = BTreeSet::new();
        bgp.patterns.retain(|p| seen.insert(p.clone()));
        Ok(GraphPattern::Bgp(bgp))
    }

    fn triples_same_subject(&mut self, out: &mut Vec<TriplePattern>) -> Result<(), SparqlError> {
        let subject = self.pattern_term("subject")?;
        if matches!(&subject, PatternTerm::Const(Term::Literal(_))) {
            return Err(self.err("literal in subject position"));
        }
        loop {
            let predicate = if self.is_word("a") {
                self.advance();
                PatternTerm::Const(Term::Iri(RDF_TYPE.to_string()))
            } else {
                if self.is_punct("^") {
                    return Err(SparqlError::Unsupported("property paths".into()));
                }
                let p = self.pattern_term("predicate")?;
                if let PatternTerm::Const(Term::Literal(_)) = p {
                    return Err(self.err("literal in predicate position"));
                }
                p
            };
            if ["/", "|", "*", "+", "^"].iter().any(|p| self.is_punct(p)) {
                return Err(SparqlError::Unsupported("property paths".into()));
            }
            loop {
                let object = self.pattern_term("object")?;
                out.push(TriplePattern::new(
                    subject.clone(),
                    predicate.clone(),
                    object,
                ));
                if !self.eat_punct(",") {
                    break;
                }
            }
            if !self.eat_punct(";") {
                break;
            }
            while self.eat_punct(";") {}
            if self.is_punct(".") || self.is_punct("}") {
                break;
            }
        }
        Ok(())
    }

    fn pattern_term(&mut self, role: &str) -> Result<PatternTerm, SparqlError> {
        match self.peek() {
            Tok::Var(v) => {
                let v = v.clone();
                self.advance();
                Ok(PatternTerm::Var(v))
            }
            Tok::Blank | Tok::Punct("[") => {
                Err(SparqlError::Unsupported("blank nodes in patterns".into()))
            }
            Tok::Punct("(") => Err(SparqlError::Unsupported("RDF collections".into())),
            _ => Ok(PatternTerm::Const(self.constant(role)?)),
        }
    }

    fn constant(&mut self, role: &str) -> Result<Term, SparqlError> {
        let start = self.pos;
        match self.advance() {
            Tok::Iri(i) => Ok(Term::Iri(self.resolve_iri(&i)?)),
            Tok::PName(p, l) => self.expand(&p, &l),
            Tok::Str(s) => match self.peek().clone() {
                Tok::LangTag(tag) => {
                    self.advance();
                    Ok(Term::Literal(Literal::lang(s, tag.to_ascii_lowercase())))
                }
                Tok::Punct("^^") => {
                    self.advance();
                    let dt = match self.advance() {
                        Tok::Iri(i) => self.resolve_iri(&i)?,
                        Tok::PName(p, l) => self.expand(&p, &l)?.value_str().to_string(),
                        other => {
                            return Err(self
                                .err(format!("expected datatype IRI, found {}", describe(&other))))
                        }
                    };
                    Ok(Term::Literal(Literal::typed(s, dt)))
                }
                _ => Ok(Term::Literal(Literal::plain(s))),
            },
            Tok::Number(n, kind) => Ok(Term::Literal(Literal::typed(n, format!("{XSD}{kind}")))),
            Tok::Word(w) if w == "true" || w == "false" => {
                Ok(Term::Literal(Literal::typed(w, format!("{XSD}boolean"))))
            }
            other => {
                self.pos = start;
                Err(self.err(format!("expected {role}, found {}", describe(&other))))
            }
        }
    }

    fn resolve_iri(&self, iri: &str) -> Result<String, SparqlError> {
        let full = if crate::rdf::Term::iri(iri).is_ok() {
            iri.to_string()
        } else if let Some(base) = &self.base {
            format!("{base}{iri}")
        } else {
            return Err(self.err(format!("relative IRI <{iri}> without BASE")));
        };
        Term::iri(full.clone()).map_err(|e| self.err(e.to_string()))?;
        Ok(full)
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<Term, SparqlError> {
        let ns = self
            .prefixes
            .get(prefix)
            .ok_or_else(|| self.err(format!("undeclared prefix '{prefix}:'")))?;
        Term::iri(format!("{ns}{local}")).map_err(|e| self.err(e.to_string()))
    }

    fn filter(&mut self) -> Result<FilterExpr, SparqlError> {
        if let Tok::Word(w) = self.peek() {
            return Err(SparqlError::Unsupported(format!(
                "FILTER function {}",
                w.to_ascii_uppercase()
            )));
        }
        self.expect_punct("(")?;
        let e = self.or_expr()?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn or_expr(&mut self) -> Result<FilterExpr, SparqlError> {
        let mut e = self.and_expr()?;
        while self.eat_punct("||") {
            let r = self.and_expr()?;
            e = FilterExpr::Or(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<FilterExpr, SparqlError> {
        let mut e = self.unary()?;
        while self.eat_punct("&&") {
            let r = self.unary()?;
            e = FilterExpr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<FilterExpr, SparqlError> {
        if self.eat_punct("!") {
            return Ok(FilterExpr::Not(Box::new(self.unary()?)));
        }
        if self.eat_punct("(") {
            let e = self.or_expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        let a = self.operand()?;
        let start = self.pos;
        let op = match self.advance() {
            Tok::Punct("=") => CmpOp::Eq,
            Tok::Punct("!=") => CmpOp::Ne,
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct(">=") => CmpOp::Ge,
            other => {
                self.pos = start;
                return Err(self.err(format!(
                    "expected comparison operator, found {}",
                    describe(&other)
                )));
            }
        };
        let b = self.operand()?;
        Ok(FilterExpr::Compare(op, a, b))
    }

    fn operand(&mut self) -> Result<Operand, SparqlError> {
        if let Tok::Var(v) = self.peek() {
            let v = v.clone();
            self.advance();
            return Ok(Operand::Var(v));
        }
        if let (Tok::Word(w), Tok::Punct("(")) = (self.peek(), self.peek_at(1)) {
            return Err(SparqlError::Unsupported(format!(
                "FILTER function {}",
                w.to_ascii_uppercase()
            )));
        }
        Ok(Operand::Const(self.constant("operand")?))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Iri(i) => format!("<{i}>"),
        Tok::PName(p, l) => format!("{p}:{l}"),
        Tok::Var(v) => format!("?{v}"),
        Tok::Str(s) => format!("{s:?}"),
        Tok::LangTag(t) => format!("@{t}"),
        Tok::Number(n, _) => n.clone(),
        Tok::Word(w) => format!("'{w}'"),
        Tok::Blank => "blank node".into(),
        Tok::Punct(p) => format!("'{p}'"),
        Tok::Eof => "end of input".into(),
    }
}

fn validate(q: &Query) -> Result<(), String> {
    let vars: BTreeSet<String> = q.pattern.variables().into_iter().collect();
    let mut outputs = BTreeSet::new();
    if let Selection::Vars(ps) = &q.select {
        for p in ps {
            if !vars.contains(&p.var) {
                return Err(format!(
                    "selected variable ?{} does not occur in the pattern",
                    p.var
                ));
            }
            if !outputs.insert(p.output_name().to_string()) {
                return Err(format!("?{} projected twice", p.output_name()));
            }
        }
    }
    for k in &q.order_by {
        if !vars.contains(&k.var) && !outputs.contains(&k.var) {
            return Err(format!(
                "ORDER BY variable ?{} does not occur in the query",
                k.var
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unsupported(q: &str) -> String {
        match parse_query(q) {
            Err(SparqlError::Unsupported(name)) => name,
            other => panic!("expected unsupported-feature error, got {other:?}"),
        }
    }

    #[test]
    fn single_pattern() {
        let q = parse_query("SELECT ?v WHERE { ?m <http://ex/value> ?v }").unwrap();
        assert_eq!(q.pattern.triple_pattern_count(), 1);
        assert_eq!(q.output_names(), ["v"]);
    }

    #[test]
    fn prefixes_and_abbreviations() {
        let q = parse_query(
            "PREFIX : <http://ex/> SELECT * { ?o a :T ; :p ?x , ?y . ?x :q \"s\"@EN, 3, 2.5, 1e3, true, 'a'^^:dt }",
        )
        .unwrap();
        let GraphPattern::Bgp(b) = &q.pattern else {
            panic!()
        };
        assert_eq!(b.patterns.len(), 9);
        assert_eq!(
            b.patterns[0].predicate,
            PatternTerm::Const(Term::Iri(RDF_TYPE.into()))
        );
        assert_eq!(
            b.patterns[3].object,
            PatternTerm::Const(Term::Literal(Literal::lang("s", "en")))
        );
        assert_eq!(
            b.patterns[5].object,
            PatternTerm::Const(Term::Literal(Literal::typed(
                "2.5",
                format!("{XSD}decimal")
            )))
        );
        assert_eq!(q.output_names(), ["o", "x", "y"]);
    }

    #[test]
    fn duplicate_patterns_collapse() {
        let q = parse_query("SELECT ?s { ?s <http://ex/p> ?o . ?s <http://ex/p> ?o }").unwrap();
        assert_eq!(q.pattern.triple_pattern_count(), 1);
    }

    #[test]
    fn unions_filters_modifiers() {
        let q = parse_query(
            "SELECT DISTINCT ?s (?o AS ?out) WHERE { { ?s <http://ex/p> ?o FILTER (?o > 3 && !(?o = 7)) } UNION { ?s <http://ex/q> ?o } UNION { ?s <http://ex/r> ?o } } ORDER BY DESC(?o) ?s LIMIT 5",
        )
        .unwrap();
        assert!(q.distinct);
        assert_eq!(q.pattern.union_count(), 2);
        assert_eq!(q.limit, Some(5));
        assert_eq!(q.order_by.len(), 2);
        assert!(q.order_by[0].descending && !q.order_by[1].descending);
        assert_eq!(q.output_names(), ["s", "out"]);
        assert_eq!(q.pattern.bgps()[0].filters.len(), 1);
    }

    #[test]
    fn nested_group_is_flattened() {
        let a = parse_query("SELECT ?s { { ?s <http://ex/p> ?o } }").unwrap();
        let b = parse_query("SELECT ?s { ?s <http://ex/p> ?o }").unwrap();
        assert_eq!(a.pattern, b.pattern);
    }

    #[test]
    fn unsupported_constructs_are_named() {
        assert!(unsupported("SELECT * { <http://ex/a> <http://ex/p> <http://ex/b> }").contains("ASK"));
        assert_eq!(
            unsupported("SELECT ?s { ?s <http://ex/p> ?o OPTIONAL { ?s <http://ex/q> ?x } }"),
            "OPTIONAL"
        );
        assert_eq!(
            unsupported("SELECT ?s { ?s <http://ex/p> ?o } GROUP BY ?s"),
            "GROUP BY"
        );
        assert_eq!(unsupported("ASK { ?s <http://ex/p> ?o }"), "ASK");
        assert_eq!(
            unsupported("CONSTRUCT { ?s <http://ex/p> ?o } WHERE { ?s <http://ex/p> ?o }"),
            "CONSTRUCT"
        );
        assert_eq!(
            unsupported("SELECT (COUNT(?s) AS ?n) { ?s <http://ex/p> ?o }"),
            "aggregate COUNT"
        );
        assert_eq!(
            unsupported("SELECT ?s { ?s <http://ex/p>/<http://ex/q> ?o }"),
            "property paths"
        );
        assert_eq!(
            unsupported("SELECT ?s { ?s <http://ex/p> _:b }"),
            "blank nodes in patterns"
        );
        assert_eq!(
            unsupported("SELECT ?s FROM <http://ex/g> { ?s <http://ex/p> ?o }"),
            "FROM"
        );
        assert_eq!(
            unsupported("SELECT ?s { ?s <http://ex/p> ?o FILTER regex(?o, \"x\") }"),
            "FILTER function REGEX"
        );
        assert_eq!(
            unsupported("SELECT ?s { ?s <http://ex/p> ?o . BIND(1 AS ?x) }"),
            "BIND"
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_query("SELECT ?s\nWHERE { ?s <http://ex/p> }") {
            Err(SparqlError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_query("SELECT ?x { ?s <http://ex/p> ?o }").is_err());
        assert!(parse_query("SELECT ?s { ?s nope:p ?o }").is_err());
        assert!(parse_query("SELECT ?s { \"lit\" <http://ex/p> ?o }").is_err());
    }

    #[test]
    fn serialization_round_trips() {
        for text in [
            "PREFIX : <http://ex/> SELECT ?s (?o AS ?x) { ?s :p ?o ; a :C FILTER (?o >= \"1.5\" || ?o != :z) } ORDER BY ?s DESC(?o) LIMIT 3",
            "SELECT * { { ?s <http://ex/p> ?o } UNION { { ?s <http://ex/q> ?o } UNION { ?s <http://ex/r> \"a\\tb\\\"c\" } } }",
            "SELECT DISTINCT ?s { { ?s <http://ex/p> ?o } UNION { } UNION { ?s <http://ex/q> 3 } }",
        ] {
            let q = parse_query(text).unwrap();
            let again = parse_query(&q.to_string()).unwrap();
            assert_eq!(q, again, "{}", q);
        }
    }
}
